// Minimal slippy map: a grid of XYZ tiles plus absolutely positioned
// category markers. No mapping library, works against any tile template.

import { ViewState, saveView, tileUrlTemplate } from "./config.js";
import { TILE_SIZE, project, tileUrl, unproject } from "./mercator.js";
import { Incident } from "./types.js";

export const CATEGORY_GLYPHS: Record<string, string> = {
  fire: "\u{1F525}",
  accident: "\u{1F697}",
  earthquake: "\u{26A0}\u{FE0F}",
  cyclone: "\u{1F32A}\u{FE0F}",
  theft: "\u{1F9E4}",
  "drunk-driving": "\u{1F6A8}",
};

export function glyphFor(category: string): string {
  return CATEGORY_GLYPHS[category] ?? "\u{1F4CD}";
}

const MIN_ZOOM = 3;
const MAX_ZOOM = 18;

export class SlippyMap {
  private view: ViewState;
  private markers: Incident[] = [];
  private readonly tileLayer: HTMLDivElement;
  private readonly markerLayer: HTMLDivElement;
  private dragging: { x: number; y: number } | null = null;

  constructor(
    private readonly container: HTMLElement,
    view: ViewState,
    private readonly onSelect: (incident: Incident) => void,
  ) {
    this.view = view;
    this.container.classList.add("slippy-map");
    this.tileLayer = document.createElement("div");
    this.tileLayer.className = "tile-layer";
    this.markerLayer = document.createElement("div");
    this.markerLayer.className = "marker-layer";
    this.container.append(this.tileLayer, this.markerLayer);
    this.bindControls();
    this.bindDrag();
    new ResizeObserver(() => this.render()).observe(this.container);
  }

  get zoom(): number {
    return this.view.zoom;
  }

  setMarkers(incidents: Incident[]): void {
    this.markers = incidents;
    this.renderMarkers();
  }

  centerOn(lat: number, lon: number): void {
    this.view = { ...this.view, lat, lon };
    this.persistAndRender();
  }

  zoomBy(delta: number): void {
    const zoom = Math.min(MAX_ZOOM, Math.max(MIN_ZOOM, this.view.zoom + delta));
    this.view = { ...this.view, zoom };
    this.persistAndRender();
  }

  private persistAndRender(): void {
    saveView(this.view);
    this.render();
  }

  private bindControls(): void {
    const controls = document.createElement("div");
    controls.className = "map-controls";
    for (const [label, delta] of [
      ["+", 1],
      ["−", -1],
    ] as const) {
      const button = document.createElement("button");
      button.textContent = label;
      button.addEventListener("click", () => this.zoomBy(delta));
      controls.append(button);
    }
    this.container.append(controls);
  }

  private bindDrag(): void {
    this.container.addEventListener("pointerdown", (event) => {
      this.dragging = { x: event.clientX, y: event.clientY };
      this.container.setPointerCapture(event.pointerId);
    });
    this.container.addEventListener("pointermove", (event) => {
      if (!this.dragging) return;
      const { width, height } = this.container.getBoundingClientRect();
      const dx = event.clientX - this.dragging.x;
      const dy = event.clientY - this.dragging.y;
      this.dragging = { x: event.clientX, y: event.clientY };
      const moved = unproject(
        width / 2 - dx,
        height / 2 - dy,
        this.view,
        this.view.zoom,
        width,
        height,
      );
      this.view = { ...this.view, lat: moved.lat, lon: moved.lon };
      this.render();
    });
    this.container.addEventListener("pointerup", () => {
      this.dragging = null;
      saveView(this.view);
    });
  }

  render(): void {
    const { width, height } = this.container.getBoundingClientRect();
    if (width === 0 || height === 0) return;
    const zoom = Math.round(this.view.zoom);
    const template = tileUrlTemplate();
    this.tileLayer.textContent = "";
    const tiles = Math.pow(2, zoom);
    // screen position of the world's top-left corner (tile 0,0)
    const worldOrigin = project(85.0511, -180, this.view, zoom, width, height);
    const startX = Math.floor(-worldOrigin.x / TILE_SIZE);
    const startY = Math.floor(-worldOrigin.y / TILE_SIZE);
    const columns = Math.ceil(width / TILE_SIZE) + 1;
    const rows = Math.ceil(height / TILE_SIZE) + 1;
    for (let tx = startX; tx <= startX + columns; tx++) {
      for (let ty = Math.max(0, startY); ty <= Math.min(tiles - 1, startY + rows); ty++) {
        const img = document.createElement("img");
        img.className = "tile";
        img.alt = "";
        img.src = tileUrl(template, zoom, tx, ty);
        img.style.left = `${worldOrigin.x + tx * TILE_SIZE}px`;
        img.style.top = `${worldOrigin.y + ty * TILE_SIZE}px`;
        img.addEventListener("error", () => img.classList.add("tile-missing"));
        this.tileLayer.append(img);
      }
    }
    this.renderMarkers();
  }

  private renderMarkers(): void {
    const { width, height } = this.container.getBoundingClientRect();
    this.markerLayer.textContent = "";
    for (const incident of this.markers) {
      if (incident.lat === null || incident.lon === null) continue;
      const point = project(
        incident.lat,
        incident.lon,
        this.view,
        Math.round(this.view.zoom),
        width,
        height,
      );
      if (point.x < -40 || point.y < -40 || point.x > width + 40 || point.y > height + 40) {
        continue;
      }
      const marker = document.createElement("button");
      marker.className = `marker marker-${incident.category}`;
      if (incident.out_of_area) marker.classList.add("marker-out-of-area");
      marker.style.left = `${point.x}px`;
      marker.style.top = `${point.y}px`;
      marker.textContent = glyphFor(incident.category);
      marker.title = `${incident.category}: ${incident.sanitized_text}`;
      marker.addEventListener("click", (event) => {
        event.stopPropagation();
        this.onSelect(incident);
      });
      this.markerLayer.append(marker);
    }
  }
}
