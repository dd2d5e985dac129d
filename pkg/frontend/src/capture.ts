// Webcam capture loop with 429 backpressure.
//
// The loop never sends faster than the configured frame rate, and a 429
// from the server doubles the wait (capped) until a frame gets through
// again. Timer and sender are injectable so the pacing is testable with
// fake clocks.

export interface CaptureOptions {
  /** Server frame budget; the base interval is 1000 / maxFrameRate ms. */
  maxFrameRate: number;
  /** Sends one frame, resolving to the HTTP status code. */
  send: () => Promise<number>;
  /** Backoff ceiling, default 30x the base interval. */
  maxIntervalMs?: number;
  setTimeoutFn?: (fn: () => void, ms: number) => ReturnType<typeof setTimeout>;
  clearTimeoutFn?: (id: ReturnType<typeof setTimeout>) => void;
}

export class CaptureLoop {
  readonly baseIntervalMs: number;
  private readonly maxIntervalMs: number;
  private readonly setT: NonNullable<CaptureOptions["setTimeoutFn"]>;
  private readonly clearT: NonNullable<CaptureOptions["clearTimeoutFn"]>;
  intervalMs: number;
  sent = 0;
  shed = 0;
  private timer: ReturnType<typeof setTimeout> | null = null;
  private running = false;

  constructor(private opts: CaptureOptions) {
    if (opts.maxFrameRate < 1) throw new Error("maxFrameRate must be >= 1");
    this.baseIntervalMs = 1000 / opts.maxFrameRate;
    this.maxIntervalMs = opts.maxIntervalMs ?? this.baseIntervalMs * 30;
    this.intervalMs = this.baseIntervalMs;
    this.setT = opts.setTimeoutFn ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearT = opts.clearTimeoutFn ?? ((id) => clearTimeout(id));
  }

  start(): void {
    if (this.running) return;
    this.running = true;
    this.schedule();
  }

  stop(): void {
    this.running = false;
    if (this.timer !== null) {
      this.clearT(this.timer);
      this.timer = null;
    }
  }

  private schedule(): void {
    if (!this.running) return;
    this.timer = this.setT(() => {
      void this.fire();
    }, this.intervalMs);
  }

  private async fire(): Promise<void> {
    let status = 0;
    try {
      status = await this.opts.send();
    } catch {
      status = 0; // network error: treat like shedding, back off
    }
    if (status === 429 || status === 0) {
      this.shed += 1;
      this.intervalMs = Math.min(this.intervalMs * 2, this.maxIntervalMs);
    } else {
      this.sent += 1;
      this.intervalMs = this.baseIntervalMs;
    }
    this.schedule();
  }
}

/** Draws the current video frame onto a canvas at the processing size and
 * returns it as a PNG blob (the server downscales anyway; sending the
 * processing resolution keeps uploads small). */
export async function grabFrame(
  video: HTMLVideoElement,
  width: number,
  height: number,
): Promise<Blob | null> {
  if (!video.videoWidth || !video.videoHeight) return null;
  const canvas = document.createElement("canvas");
  canvas.width = width;
  canvas.height = height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return null;
  ctx.drawImage(video, 0, 0, width, height);
  return new Promise((resolve) =>
    canvas.toBlob((blob) => resolve(blob), "image/png"),
  );
}
