import { ApiClient } from "./api.js";
import { CaptureLoop, grabFrame } from "./capture.js";
import { emptyViewState, renderDashboard, renderStatus, toast } from "./render.js";
import { captureTranscript, speak, speechCaptureSupported } from "./speech.js";
import { EventStreamClient } from "./stream.js";
import type { CommandResponse, MirrorEvent } from "./types.js";
import { DashboardController, WidgetModel } from "./widgets.js";

const api = new ApiClient("");
const model = new WidgetModel();
const controller = new DashboardController(model, () => api.getState());
const view = emptyViewState();
let streamUp = false;

const grid = document.getElementById("grid") as HTMLElement;
const banner = document.getElementById("banner") as HTMLElement;
const toasts = document.getElementById("toasts") as HTMLElement;
const who = document.getElementById("who") as HTMLElement;
const commandInput = document.getElementById("command") as HTMLInputElement;
const micButton = document.getElementById("mic") as HTMLButtonElement;
const uploadInput = document.getElementById("upload") as HTMLInputElement;

// capture pacing: the body tag may carry data-frame-rate; default well
// under the server's 50/s budget since recognition samples at ~5/s anyway
const frameRate = Number(document.body.dataset.frameRate ?? "5");

function redraw(): void {
  renderDashboard(grid, model, view);
  renderStatus(banner, model, streamUp);
  who.textContent =
    model.role === "authenticated"
      ? `signed in: ${model.userId}`
      : "general mirror — look at the camera to sign in";
}

function showOutcome(resp: CommandResponse): void {
  if (resp.outcome === "executed") {
    if (resp.ui_patch?.schedule) {
      view.schedule = resp.ui_patch.schedule as typeof view.schedule;
    }
    if (resp.ui_patch?.play) {
      view.playback = resp.ui_patch.play as typeof view.playback;
    }
    if (resp.speech_text) {
      toast(toasts, resp.speech_text, "ok");
      speak(resp.speech_text);
    }
  } else if (resp.outcome === "denied") {
    const text = `"${resp.feature}" needs sign-in: step in front of the mirror`;
    toast(toasts, text, "denied");
    speak(text);
  } else if (resp.outcome === "no_match") {
    toast(toasts, "sorry, I did not understand that", "denied");
  } else {
    toast(toasts, resp.reason ?? "command failed", "denied");
  }
  redraw();
}

async function handleEvent(event: MirrorEvent): Promise<void> {
  await controller.handleEvent(event);
  if (event.kind === "CommandOutcome") {
    const patch = event.body.ui_patch as Record<string, unknown> | undefined;
    if (patch?.schedule) view.schedule = patch.schedule as typeof view.schedule;
    if (patch?.play) view.playback = patch.play as typeof view.playback;
  } else if (event.kind === "AlarmFired") {
    const text = `alarm: it is ${String(event.body.time)}`;
    toast(toasts, text, "alarm");
    speak(text);
  } else if (event.kind === "Denied") {
    toast(toasts, `"${String(event.body.feature)}" needs sign-in`, "denied");
  } else if (event.kind === "StateChanged") {
    view.schedule = null; // per-user data never bleeds across sessions
  }
  redraw();
}

async function refreshState(): Promise<void> {
  try {
    const doc = await api.getState();
    model.setFromStateDoc(doc);
    view.pendingAlarms = doc.pending_alarms;
  } catch {
    streamUp = false;
  }
  redraw();
}

async function startCapture(): Promise<void> {
  const videoEl = document.getElementById("camera") as HTMLVideoElement;
  let sendFrame: () => Promise<number>;
  try {
    const media = await navigator.mediaDevices.getUserMedia({ video: true });
    videoEl.srcObject = media;
    await videoEl.play();
    sendFrame = async () => {
      const blob = await grabFrame(videoEl, 480, 360);
      if (!blob) return 0;
      const { status } = await api.postFrame(blob, "image/png");
      return status;
    };
  } catch {
    // no camera permission: offer the manual upload control instead
    uploadInput.classList.remove("hidden");
    uploadInput.addEventListener("change", async () => {
      const file = uploadInput.files?.[0];
      if (!file) return;
      const type = file.name.endsWith(".pgm")
        ? "image/x-portable-graymap" : "image/png";
      const { body } = await api.postFrame(await file.arrayBuffer(), type);
      if (body) toast(toasts, `frame: ${body.outcome}`, "info");
    });
    return;
  }
  new CaptureLoop({ maxFrameRate: frameRate, send: sendFrame }).start();
}

async function submitCommand(text: string): Promise<void> {
  const cleaned = text.trim().toLowerCase();
  if (!cleaned) return;
  showOutcome(await api.postCommand(cleaned));
}

commandInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter") {
    void submitCommand(commandInput.value);
    commandInput.value = "";
  }
});

if (speechCaptureSupported()) {
  micButton.classList.remove("hidden");
  micButton.addEventListener("click", async () => {
    micButton.classList.add("listening");
    const transcript = await captureTranscript();
    micButton.classList.remove("listening");
    if (transcript) {
      commandInput.value = transcript;
      void submitCommand(transcript);
      commandInput.value = "";
    }
  });
}

new EventStreamClient(
  "/api/stream",
  (event) => void handleEvent(event),
  () => {
    streamUp = false;
    redraw();
  },
).connect();
streamUp = true;

void refreshState();
setInterval(() => void refreshState(), 30000); // belt-and-braces resync
void startCapture();
