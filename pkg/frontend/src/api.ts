// Thin typed client over the incident service endpoints.

import { Contact, Incident, Preferences, WordcloudRecord } from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
  ) {
    super(message);
  }
}

async function asJson<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      // keep statusText
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export interface IncidentQuery {
  since?: string;
  category?: string;
  bbox?: string;
  limit?: number;
}

export class ApiClient {
  constructor(private readonly base: string = "") {}

  private url(path: string, params?: Record<string, string>): string {
    const query = params ? new URLSearchParams(params).toString() : "";
    return this.base + path + (query ? `?${query}` : "");
  }

  async incidents(query: IncidentQuery = {}): Promise<Incident[]> {
    const params: Record<string, string> = {};
    if (query.since) params.since = query.since;
    if (query.category) params.category = query.category;
    if (query.bbox) params.bbox = query.bbox;
    if (query.limit) params.limit = String(query.limit);
    return asJson(await fetch(this.url("/api/incidents", params)));
  }

  async incident(id: string): Promise<Incident> {
    return asJson(await fetch(this.url(`/api/incidents/${id}`)));
  }

  async contacts(category: string): Promise<Contact[]> {
    return asJson(await fetch(this.url("/api/contacts", { category })));
  }

  /** Directory fallback when one category lookup 404s (stale cache). */
  async allContacts(categories: string[]): Promise<Contact[]> {
    const out: Contact[] = [];
    for (const category of categories) {
      try {
        out.push(...(await this.contacts(category)));
      } catch (error) {
        if (!(error instanceof ApiError && error.status === 404)) throw error;
      }
    }
    return out;
  }

  async getPreferences(user: string): Promise<Preferences> {
    return asJson(await fetch(this.url(`/api/preferences/${user}`)));
  }

  async putPreferences(
    user: string,
    prefs: Partial<Pick<Preferences, "notifications_enabled" | "categories" | "bbox">>,
  ): Promise<Preferences> {
    return asJson(
      await fetch(this.url(`/api/preferences/${user}`), {
        method: "PUT",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(prefs),
      }),
    );
  }

  async wordcloud(): Promise<WordcloudRecord[]> {
    const payload = await asJson<{ records: WordcloudRecord[] }>(
      await fetch(this.url("/api/wordcloud")),
    );
    return payload.records;
  }

  async health(): Promise<{ status: string; categories: string[] }> {
    return asJson(await fetch(this.url("/healthz")));
  }
}
