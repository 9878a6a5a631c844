// Web Mercator tile math for the slippy map.

export const TILE_SIZE = 256;

export function lonToWorldX(lon: number, zoom: number): number {
  return ((lon + 180) / 360) * Math.pow(2, zoom);
}

export function latToWorldY(lat: number, zoom: number): number {
  const rad = (lat * Math.PI) / 180;
  const merc = Math.log(Math.tan(rad) + 1 / Math.cos(rad));
  return ((1 - merc / Math.PI) / 2) * Math.pow(2, zoom);
}

export function worldXToLon(x: number, zoom: number): number {
  return (x / Math.pow(2, zoom)) * 360 - 180;
}

export function worldYToLat(y: number, zoom: number): number {
  const n = Math.PI - (2 * Math.PI * y) / Math.pow(2, zoom);
  return (180 / Math.PI) * Math.atan(0.5 * (Math.exp(n) - Math.exp(-n)));
}

export function tileUrl(template: string, z: number, x: number, y: number): string {
  const tiles = Math.pow(2, z);
  const wrapped = ((x % tiles) + tiles) % tiles; // wrap across the antimeridian
  return template
    .replace("{z}", String(z))
    .replace("{x}", String(wrapped))
    .replace("{y}", String(y));
}

export interface PixelPoint {
  x: number;
  y: number;
}

/** Screen position of (lat, lon) for a viewport centered on `center`. */
export function project(
  lat: number,
  lon: number,
  center: { lat: number; lon: number },
  zoom: number,
  width: number,
  height: number,
): PixelPoint {
  const cx = lonToWorldX(center.lon, zoom) * TILE_SIZE;
  const cy = latToWorldY(center.lat, zoom) * TILE_SIZE;
  return {
    x: lonToWorldX(lon, zoom) * TILE_SIZE - cx + width / 2,
    y: latToWorldY(lat, zoom) * TILE_SIZE - cy + height / 2,
  };
}

/** Inverse of `project`: geographic position of a screen point. */
export function unproject(
  x: number,
  y: number,
  center: { lat: number; lon: number },
  zoom: number,
  width: number,
  height: number,
): { lat: number; lon: number } {
  const cx = lonToWorldX(center.lon, zoom) * TILE_SIZE;
  const cy = latToWorldY(center.lat, zoom) * TILE_SIZE;
  return {
    lon: worldXToLon((cx + x - width / 2) / TILE_SIZE, zoom),
    lat: worldYToLat((cy + y - height / 2) / TILE_SIZE, zoom),
  };
}
