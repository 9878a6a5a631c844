// Live incident subscription over server-sent events. The browser's
// EventSource reconnects on its own and resends Last-Event-ID, so missed
// events replay from the server log after a drop.

import { StreamPayload } from "./types.js";

export interface StreamFilters {
  category?: string;
  bbox?: string;
  user?: string;
}

export function buildStreamUrl(base: string, filters: StreamFilters = {}): string {
  const params = new URLSearchParams();
  if (filters.category) params.set("category", filters.category);
  if (filters.bbox) params.set("bbox", filters.bbox);
  if (filters.user) params.set("user", filters.user);
  const query = params.toString();
  return `${base}/api/stream${query ? `?${query}` : ""}`;
}

export function parseStreamPayload(raw: string): StreamPayload {
  const parsed = JSON.parse(raw);
  if (!parsed || typeof parsed !== "object" || !parsed.incident) {
    throw new Error("malformed stream payload");
  }
  return parsed as StreamPayload;
}

export function parseGapPayload(raw: string): number {
  const parsed = JSON.parse(raw);
  const dropped = Number(parsed?.dropped);
  if (!Number.isFinite(dropped) || dropped < 1) {
    throw new Error("malformed gap payload");
  }
  return dropped;
}

export interface StreamHandlers {
  onIncident(payload: StreamPayload): void;
  onGap(dropped: number): void;
  onStatus(connected: boolean): void;
}

export class LiveStream {
  private source: EventSource | null = null;

  constructor(
    private readonly base: string,
    private readonly handlers: StreamHandlers,
    private readonly filters: StreamFilters = {},
  ) {}

  connect(): void {
    this.close();
    const source = new EventSource(buildStreamUrl(this.base, this.filters));
    source.onopen = () => this.handlers.onStatus(true);
    source.onerror = () => this.handlers.onStatus(false);
    source.addEventListener("incident", (event) => {
      this.handlers.onIncident(parseStreamPayload((event as MessageEvent).data));
    });
    source.addEventListener("gap", (event) => {
      this.handlers.onGap(parseGapPayload((event as MessageEvent).data));
    });
    this.source = source;
  }

  close(): void {
    this.source?.close();
    this.source = null;
  }
}
