// Wire types for the incident service API. The dashboard renders only what
// the server says: no categories or locations are computed client-side.

export interface IncidentScores {
  stage1: number;
  stage2: Record<string, number>;
}

export interface Incident {
  id: string;
  source_id: string;
  category: string;
  lat: number | null;
  lon: number | null;
  geo_source: string | null;
  place_name: string | null;
  out_of_area: boolean;
  sanitized_text: string;
  raw_text: string;
  detected_at: string;
  scores: IncidentScores;
}

export interface Contact {
  category: string;
  name: string;
  phone: string;
  description: string;
}

export interface Preferences {
  user_id: string;
  notifications_enabled: boolean;
  categories: string[];
  bbox: number[] | null;
}

export interface WordcloudRecord {
  term: string;
  weight: number;
}

export interface StreamPayload {
  incident: Incident;
  contacts: Contact[];
}

export function hasLocation(incident: Incident): boolean {
  return incident.lat !== null && incident.lon !== null;
}
