import type { MirrorEvent } from "./types.js";

export type EventSourceFactory = (url: string) => EventSource;

// Server-sent events subscription with automatic reconnection. Events are
// delivered in seq order per connection; a reconnect starts a fresh
// sequence, so the handler treats seq as per-connection only.
export class EventStreamClient {
  private source: EventSource | null = null;
  private closed = false;
  private retryMs = 1000;

  constructor(
    private url: string,
    private onEvent: (event: MirrorEvent) => void,
    private onDrop?: () => void,
    private factory: EventSourceFactory = (u) => new EventSource(u),
  ) {}

  connect(): void {
    if (this.closed) return;
    this.source = this.factory(this.url);
    this.source.onmessage = (msg) => {
      this.retryMs = 1000;
      try {
        this.onEvent(JSON.parse(msg.data) as MirrorEvent);
      } catch {
        // malformed frame: skip it rather than killing the stream
      }
    };
    this.source.onerror = () => {
      this.source?.close();
      this.source = null;
      this.onDrop?.();
      if (!this.closed) {
        const wait = this.retryMs;
        this.retryMs = Math.min(this.retryMs * 2, 15000);
        setTimeout(() => this.connect(), wait);
      }
    };
  }

  close(): void {
    this.closed = true;
    this.source?.close();
    this.source = null;
  }
}
