import type { CommandResponse, FrameResponse, StateDoc } from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

// Thin client over the mirrord routes; the fetch implementation is
// injectable so the gating tests can forge server answers.
export class ApiClient {
  constructor(
    private baseUrl: string = "",
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async getState(): Promise<StateDoc> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/state`);
    if (!resp.ok) throw new Error(`state fetch failed: ${resp.status}`);
    return (await resp.json()) as StateDoc;
  }

  async getFeatures(role: string): Promise<string[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/features?role=${role}`);
    if (!resp.ok) throw new Error(`features fetch failed: ${resp.status}`);
    const doc = (await resp.json()) as { features: string[] };
    return doc.features;
  }

  /** Posts one frame; resolves to the HTTP status plus the body when 200. */
  async postFrame(
    blob: Blob | ArrayBuffer,
    contentType: string,
  ): Promise<{ status: number; body?: FrameResponse }> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/frame`, {
      method: "POST",
      headers: { "Content-Type": contentType },
      body: blob as BodyInit,
    });
    if (resp.status !== 200) return { status: resp.status };
    return { status: 200, body: (await resp.json()) as FrameResponse };
  }

  async postCommand(text: string): Promise<CommandResponse> {
    const resp = await this.fetchFn(`${this.baseUrl}/api/command`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ text }),
    });
    return (await resp.json()) as CommandResponse;
  }
}
