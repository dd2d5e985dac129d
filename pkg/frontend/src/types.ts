// Wire types for the mirrord HTTP API. The dashboard consumes exactly
// these routes and nothing else.

export interface ProviderSnapshot {
  provider_id: string;
  payload: Record<string, unknown>;
  fetched_at: number;
  ttl: number;
  stale: boolean;
}

export interface SessionInfo {
  state: string;
  user_id: string | null;
  since: string | null;
}

export interface StateDoc {
  session: SessionInfo;
  role: "general" | "authenticated";
  user_id: string | null;
  connectivity: boolean;
  allowed_features: string[];
  providers: Record<string, ProviderSnapshot>;
  pending_alarms: { id: number; time: string; user: string }[];
}

export interface MirrorEvent {
  seq: number;
  kind:
    | "StateChanged"
    | "ProviderUpdated"
    | "CommandOutcome"
    | "AlarmFired"
    | "Denied";
  body: Record<string, unknown>;
  at: string;
}

export interface CommandResponse {
  outcome: "executed" | "denied" | "no_match" | "error";
  intent?: string;
  feature?: string;
  speech_text?: string;
  ui_patch?: Record<string, unknown>;
  reason?: string;
}

export interface FrameResponse {
  faces_found: number;
  outcome: "NoFace" | "Unknown" | "Identified";
  user_id?: string;
}
