// Optional browser speech: capture produces plain text transcripts for the
// command API (the server never sees audio), synthesis reads outcomes out
// loud. Both degrade silently where unsupported.

// the speech-recognition API is non-standard, so the DOM lib has no types
interface RecognitionResultEvent {
  results: { [index: number]: { [index: number]: { transcript: string } } };
}

interface Recognition {
  lang: string;
  continuous: boolean;
  interimResults: boolean;
  onresult: ((ev: RecognitionResultEvent) => void) | null;
  onerror: (() => void) | null;
  onend: (() => void) | null;
  start(): void;
}

type RecognitionCtor = new () => Recognition;

function recognitionCtor(): RecognitionCtor | null {
  const w = window as unknown as Record<string, unknown>;
  return (
    (w.SpeechRecognition as RecognitionCtor | undefined) ??
    (w.webkitSpeechRecognition as RecognitionCtor | undefined) ??
    null
  );
}

export function speechCaptureSupported(): boolean {
  return typeof window !== "undefined" && recognitionCtor() !== null;
}

/** One-shot capture; resolves with the transcript or null. */
export function captureTranscript(lang = "en-US"): Promise<string | null> {
  const Ctor = recognitionCtor();
  if (!Ctor) return Promise.resolve(null);
  return new Promise((resolve) => {
    const rec = new Ctor();
    rec.lang = lang;
    rec.continuous = false;
    rec.interimResults = false;
    rec.onresult = (ev) => {
      const text = ev.results[0]?.[0]?.transcript ?? null;
      resolve(text ? text.toLowerCase().trim() : null);
    };
    rec.onerror = () => resolve(null);
    rec.onend = () => resolve(null);
    rec.start();
  });
}

export function speak(text: string): void {
  if (typeof window === "undefined" || !("speechSynthesis" in window)) return;
  window.speechSynthesis.speak(new SpeechSynthesisUtterance(text));
}
