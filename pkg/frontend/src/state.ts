// Pure dashboard state: everything the UI shows derives from here, which is
// what the unit tests exercise (no DOM involved).

import { Incident, StreamPayload, hasLocation } from "./types.js";

export interface ToastSpec {
  incidentId: string;
  category: string;
  text: string;
}

export interface AppState {
  incidents: Map<string, Incident>;
  order: string[]; // ids, oldest first
  activeFilters: Set<string>; // empty set = show all categories
  live: boolean;
  buffered: StreamPayload[]; // events held while paused
  missedEvents: number; // reported by gap markers
  selectedId: string | null;
  notificationsEnabled: boolean;
  connected: boolean;
}

export function initialState(): AppState {
  return {
    incidents: new Map(),
    order: [],
    activeFilters: new Set(),
    live: true,
    buffered: [],
    missedEvents: 0,
    selectedId: null,
    notificationsEnabled: true,
    connected: false,
  };
}

function insert(state: AppState, incident: Incident): void {
  if (!state.incidents.has(incident.id)) {
    state.order.push(incident.id);
  }
  state.incidents.set(incident.id, incident);
}

/** Bulk load from GET /api/incidents (newest first on the wire). */
export function loadIncidents(state: AppState, incidents: Incident[]): AppState {
  for (const incident of [...incidents].reverse()) {
    insert(state, incident);
  }
  return state;
}

/**
 * One live stream event. Returns the toast to show, if any: toasts appear
 * only when live and notifications are enabled; paused mode buffers the
 * whole event for later.
 */
export function applyStreamEvent(
  state: AppState,
  payload: StreamPayload,
): ToastSpec | null {
  if (!state.live) {
    state.buffered.push(payload);
    return null;
  }
  insert(state, payload.incident);
  if (!state.notificationsEnabled) {
    return null;
  }
  return {
    incidentId: payload.incident.id,
    category: payload.incident.category,
    text: payload.incident.sanitized_text,
  };
}

export function applyGap(state: AppState, dropped: number): AppState {
  state.missedEvents += dropped;
  return state;
}

export function pause(state: AppState): AppState {
  state.live = false;
  return state;
}

/** Resume live mode, folding in everything buffered while paused. */
export function resume(state: AppState): AppState {
  state.live = true;
  for (const payload of state.buffered) {
    insert(state, payload.incident);
  }
  state.buffered = [];
  return state;
}

export function toggleFilter(state: AppState, category: string): AppState {
  if (state.activeFilters.has(category)) {
    state.activeFilters.delete(category);
  } else {
    state.activeFilters.add(category);
  }
  return state;
}

export function matchesFilters(state: AppState, incident: Incident): boolean {
  return state.activeFilters.size === 0 || state.activeFilters.has(incident.category);
}

/** All visible incidents, newest first (drives the list panel). */
export function visibleIncidents(state: AppState): Incident[] {
  const out: Incident[] = [];
  for (let i = state.order.length - 1; i >= 0; i--) {
    const incident = state.incidents.get(state.order[i]);
    if (incident && matchesFilters(state, incident)) {
      out.push(incident);
    }
  }
  return out;
}

/** Geo-located visible incidents (drives the marker layer). Marker count
 * always equals the number of geo incidents matching the active filters. */
export function markerIncidents(state: AppState): Incident[] {
  return visibleIncidents(state).filter(hasLocation);
}

export function select(state: AppState, id: string | null): AppState {
  state.selectedId = id;
  return state;
}

export function selectedIncident(state: AppState): Incident | null {
  return state.selectedId ? state.incidents.get(state.selectedId) ?? null : null;
}
