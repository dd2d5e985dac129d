import type { MirrorEvent, ProviderSnapshot, StateDoc } from "./types.js";

// Widget ids and the feature each one needs. A widget whose feature is not
// in the server-provided allowed list is never rendered, no matter what
// overrides or events say.
export const WIDGET_FEATURES: Record<string, string> = {
  clock: "time",
  weather: "weather",
  calendar: "calendar",
  alarms: "alarm",
  news: "news_update",
  covid: "covid_update",
  youtube: "youtube",
  music: "music",
  traffic: "traffic_update",
  gmail: "gmail",
  stock: "stock_market",
  todo: "todo_list",
  notifications: "phone_notification",
  channels: "youtube_channel",
};

export const GENERAL_WIDGETS = Object.keys(WIDGET_FEATURES).filter((w) =>
  [
    "time", "weather", "calendar", "alarm", "news_update",
    "covid_update", "youtube", "music", "traffic_update",
  ].includes(WIDGET_FEATURES[w]),
);

// Playback panels stay hidden until something plays
const HIDDEN_BY_DEFAULT = new Set(["youtube", "music", "channels"]);

export interface WidgetView {
  id: string;
  visible: boolean;
  stale: boolean;
  data: ProviderSnapshot | null;
}

const FEATURE_PROVIDERS: Record<string, string> = {
  weather: "weather",
  news_update: "news",
  covid_update: "covid",
  traffic_update: "traffic",
  calendar: "calendar",
  stock_market: "stock",
  gmail: "email",
  phone_notification: "phone",
};

/**
 * Pure view model: the rendered dashboard is a function of the latest
 * server state document plus widget show/hide overrides. Events alone
 * never widen visibility; they only schedule a state refetch, so a forged
 * client-side event cannot reveal a gated panel.
 */
export class WidgetModel {
  private allowed = new Set<string>();
  private overrides = new Map<string, boolean>();
  private snapshots: Record<string, ProviderSnapshot> = {};
  role: StateDoc["role"] = "general";
  sessionState = "boot";
  userId: string | null = null;
  connectivity = false;

  /** The only way visibility widens: a document the server produced. */
  setFromStateDoc(doc: StateDoc): void {
    this.allowed = new Set(doc.allowed_features);
    this.snapshots = doc.providers ?? {};
    this.role = doc.role;
    this.sessionState = doc.session.state;
    this.userId = doc.user_id;
    this.connectivity = doc.connectivity;
  }

  applyOverride(widget: string, visible: boolean): void {
    if (widget in WIDGET_FEATURES) this.overrides.set(widget, visible);
  }

  clearOverrides(): void {
    this.overrides.clear();
  }

  featureAllowed(feature: string): boolean {
    return this.allowed.has(feature);
  }

  isVisible(widget: string): boolean {
    const feature = WIDGET_FEATURES[widget];
    if (!feature || !this.allowed.has(feature)) return false;
    const override = this.overrides.get(widget);
    if (override !== undefined) return override;
    return !HIDDEN_BY_DEFAULT.has(widget);
  }

  view(widget: string): WidgetView {
    const feature = WIDGET_FEATURES[widget];
    const snap = this.snapshots[FEATURE_PROVIDERS[feature] ?? ""] ?? null;
    return {
      id: widget,
      visible: this.isVisible(widget),
      stale: snap?.stale ?? false,
      data: snap,
    };
  }

  visibleWidgets(): string[] {
    return Object.keys(WIDGET_FEATURES).filter((w) => this.isVisible(w));
  }
}

export type RefetchFn = () => Promise<StateDoc>;

/**
 * Applies the event stream to the model. State-affecting events trigger a
 * refetch of /api/state; only the fetched document changes gating.
 */
export class DashboardController {
  constructor(
    private model: WidgetModel,
    private refetch: RefetchFn,
  ) {}

  async handleEvent(event: MirrorEvent): Promise<void> {
    switch (event.kind) {
      case "StateChanged":
      case "ProviderUpdated": {
        const doc = await this.refetch();
        if (event.kind === "StateChanged") this.model.clearOverrides();
        this.model.setFromStateDoc(doc);
        return;
      }
      case "CommandOutcome": {
        const patch = event.body.ui_patch as
          | { widget?: { name: string; visible: boolean } }
          | undefined;
        if (patch?.widget) {
          this.model.applyOverride(patch.widget.name, patch.widget.visible);
        }
        if (patch && "play" in patch) {
          const play = (patch as { play: { kind: string } }).play;
          this.model.applyOverride(play.kind === "music" ? "music" : "youtube", true);
        }
        return;
      }
      default:
        return; // AlarmFired / Denied render as toasts, no gating impact
    }
  }
}
