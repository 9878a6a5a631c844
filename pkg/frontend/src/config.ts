// Dashboard-local settings. The tile provider is configurable (any slippy
// XYZ template); the default view centers on the monitored city box.

const TILE_KEY = "cityalert.tileUrl";
const VIEW_KEY = "cityalert.view";

export const DEFAULT_TILE_URL = "https://tile.openstreetmap.org/{z}/{x}/{y}.png";

// center of the default monitored bounding box (18.89, 72.77, 19.28, 73.03)
export const DEFAULT_CENTER = { lat: 19.085, lon: 72.9 };
export const DEFAULT_ZOOM = 11;

export interface ViewState {
  lat: number;
  lon: number;
  zoom: number;
}

function storage(): Storage | null {
  try {
    return typeof localStorage === "undefined" ? null : localStorage;
  } catch {
    return null;
  }
}

export function tileUrlTemplate(): string {
  return storage()?.getItem(TILE_KEY) ?? DEFAULT_TILE_URL;
}

export function loadView(): ViewState {
  const raw = storage()?.getItem(VIEW_KEY);
  if (raw) {
    try {
      const parsed = JSON.parse(raw);
      if (
        typeof parsed.lat === "number" &&
        typeof parsed.lon === "number" &&
        typeof parsed.zoom === "number"
      ) {
        return parsed;
      }
    } catch {
      // fall through to defaults
    }
  }
  return { ...DEFAULT_CENTER, zoom: DEFAULT_ZOOM };
}

export function saveView(view: ViewState): void {
  storage()?.setItem(VIEW_KEY, JSON.stringify(view));
}

export function dashboardUser(): string {
  const key = "cityalert.user";
  const saved = storage()?.getItem(key);
  if (saved) return saved;
  const name = "operator";
  storage()?.setItem(key, name);
  return name;
}
