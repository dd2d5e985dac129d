import type { ProviderSnapshot, StateDoc } from "./types.js";
import { WIDGET_FEATURES, WidgetModel } from "./widgets.js";

// Full re-render on every change: the DOM is a function of the model, so
// replaying the same state document and events reproduces the same view.

interface ScheduleData {
  todos: { id: number; text: string }[];
  planned: { id: number; text: string; at: string }[];
}

export interface ViewState {
  schedule: ScheduleData | null;
  playback: { kind: string; query: string } | null;
  pendingAlarms: StateDoc["pending_alarms"];
}

export function emptyViewState(): ViewState {
  return { schedule: null, playback: null, pendingAlarms: [] };
}

function el(tag: string, cls?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

function staleBadge(parent: HTMLElement, snap: ProviderSnapshot | null): void {
  if (snap?.stale) parent.appendChild(el("span", "badge stale", "cached"));
}

type Renderer = (body: HTMLElement, snap: ProviderSnapshot | null,
                 view: ViewState) => void;

const RENDERERS: Record<string, Renderer> = {
  clock(body) {
    const now = new Date();
    body.appendChild(el("div", "clock-time",
      now.toLocaleTimeString([], { hour: "2-digit", minute: "2-digit" })));
    body.appendChild(el("div", "clock-date", now.toDateString()));
  },
  weather(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as { temp_c?: number; condition?: string; humidity?: number };
    body.appendChild(el("div", "big", `${p.temp_c}°C`));
    body.appendChild(el("div", undefined, `${p.condition}, humidity ${p.humidity}%`));
  },
  calendar(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as {
      events?: { title: string; at: string }[]; holidays?: string[];
    };
    for (const ev of p.events ?? []) {
      body.appendChild(el("div", "row", `${ev.at}  ${ev.title}`));
    }
    for (const h of p.holidays ?? []) body.appendChild(el("div", "row muted", h));
  },
  alarms(body, _snap, view) {
    if (!view.pendingAlarms.length) {
      return void body.appendChild(el("p", "muted", "no alarms set"));
    }
    for (const a of view.pendingAlarms) {
      body.appendChild(el("div", "row", `⏰ ${a.time} (#${a.id})`));
    }
  },
  news(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as { headlines?: { title: string; source: string }[] };
    for (const h of (p.headlines ?? []).slice(0, 5)) {
      body.appendChild(el("div", "row", `${h.title} — ${h.source}`));
    }
  },
  covid(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as {
      region?: string; confirmed?: number; recovered?: number; deaths?: number;
    };
    body.appendChild(el("div", undefined,
      `${p.region}: ${p.confirmed} confirmed, ${p.recovered} recovered, ${p.deaths} deaths`));
  },
  traffic(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as { route?: string; delay_minutes?: number; status?: string };
    body.appendChild(el("div", undefined,
      `${p.route}: ${p.status} (+${p.delay_minutes} min)`));
  },
  gmail(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as { unread?: number; subjects?: string[] };
    body.appendChild(el("div", "big", `${p.unread} unread`));
    for (const s of p.subjects ?? []) body.appendChild(el("div", "row", s));
  },
  stock(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as {
      quotes?: { symbol: string; price: number; change: number }[];
    };
    for (const q of p.quotes ?? []) {
      const sign = q.change >= 0 ? "+" : "";
      body.appendChild(el("div", "row", `${q.symbol} ${q.price} (${sign}${q.change})`));
    }
  },
  todo(body, _snap, view) {
    if (!view.schedule) {
      return void body.appendChild(el("p", "muted", 'say "what is my daily schedule"'));
    }
    for (const t of view.schedule.todos) {
      body.appendChild(el("div", "row", `☐ ${t.text} (#${t.id})`));
    }
    for (const s of view.schedule.planned) {
      body.appendChild(el("div", "row", `${s.at}  ${s.text}`));
    }
  },
  notifications(body, snap) {
    if (!snap) return void body.appendChild(el("p", "muted", "waiting for data"));
    const p = snap.payload as { notifications?: { app: string; text: string }[] };
    for (const n of p.notifications ?? []) {
      body.appendChild(el("div", "row", `[${n.app}] ${n.text}`));
    }
  },
  youtube(body, _snap, view) {
    if (view.playback?.kind === "youtube") {
      body.appendChild(el("div", "playback", `▶ playing: ${view.playback.query}`));
    } else {
      body.appendChild(el("p", "muted", "nothing playing"));
    }
  },
  music(body, _snap, view) {
    if (view.playback?.kind === "music") {
      body.appendChild(el("div", "playback", `♪ ${view.playback.query}`));
    } else {
      body.appendChild(el("p", "muted", "nothing playing"));
    }
  },
  channels(body) {
    body.appendChild(el("p", "muted", "your channels"));
  },
};

const TITLES: Record<string, string> = {
  clock: "Time", weather: "Weather", calendar: "Calendar", alarms: "Alarms",
  news: "News", covid: "COVID-19", traffic: "Traffic", gmail: "Gmail",
  stock: "Stocks", todo: "To-do & Schedule", notifications: "Notifications",
  youtube: "YouTube", music: "Music", channels: "Channels",
};

export function renderDashboard(
  root: HTMLElement,
  model: WidgetModel,
  view: ViewState,
): void {
  root.replaceChildren();
  for (const widget of Object.keys(WIDGET_FEATURES)) {
    if (!model.isVisible(widget)) continue;
    const card = el("section", `widget widget-${widget}`);
    card.dataset.widget = widget;
    const head = el("header");
    head.appendChild(el("h2", undefined, TITLES[widget] ?? widget));
    const snap = model.view(widget).data;
    staleBadge(head, snap);
    card.appendChild(head);
    const body = el("div", "widget-body");
    RENDERERS[widget]?.(body, snap, view);
    card.appendChild(body);
    root.appendChild(card);
  }
}

export function renderStatus(
  banner: HTMLElement,
  model: WidgetModel,
  streamUp: boolean,
): void {
  if (!streamUp || !model.connectivity) {
    banner.textContent = !streamUp
      ? "connection to mirror lost, retrying"
      : "mirror is offline, waiting for the internet";
    banner.classList.remove("hidden");
  } else {
    banner.classList.add("hidden");
  }
}

export function toast(container: HTMLElement, text: string, kind = "info"): void {
  const node = el("div", `toast ${kind}`, text);
  container.appendChild(node);
  setTimeout(() => node.remove(), 6000);
}
