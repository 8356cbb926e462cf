import { ApiClient, restoreOrCreateSession, type StorageLike } from "./api.js";
import type { AnswerPayload, TraceStep, UiMessage } from "./types.js";
import { ChatView } from "./ui.js";

export interface EventSourceLike {
  addEventListener(type: string, listener: (event: MessageEvent) => void): void;
  close(): void;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface AppOptions {
  client: ApiClient;
  storage: StorageLike;
  /** Omit to disable the live step display (e.g. no EventSource support). */
  eventSourceFactory?: EventSourceFactory;
}

function userMessage(text: string): UiMessage {
  return { role: "user", text, citations: [], chart: null, pending: false };
}

function assistantMessage(payload: AnswerPayload): UiMessage {
  return {
    role: "assistant",
    text: payload.answer_text,
    citations: payload.citations,
    chart: payload.chart,
    pending: false,
  };
}

/** Wires the chat view, the input form, and the API client together. */
export class App {
  readonly view: ChatView;
  private readonly client: ApiClient;
  private readonly storage: StorageLike;
  private readonly eventSourceFactory?: EventSourceFactory;
  private readonly input: HTMLInputElement;
  private readonly button: HTMLButtonElement;
  private sessionId: string | null = null;
  private inFlight = false;

  constructor(root: HTMLElement, options: AppOptions) {
    this.client = options.client;
    this.storage = options.storage;
    this.eventSourceFactory = options.eventSourceFactory;
    const doc = root.ownerDocument;

    this.view = new ChatView(root);
    const form = doc.createElement("form");
    form.className = "composer";
    this.input = doc.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "Ask about the town budget…";
    this.input.disabled = true;
    this.button = doc.createElement("button");
    this.button.type = "submit";
    this.button.textContent = "Send";
    this.button.disabled = true;
    form.append(this.input, this.button);
    root.appendChild(form);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.send();
    });
  }

  /** Start (or resume) the session; the input stays disabled on failure. */
  async init(): Promise<void> {
    try {
      const { sessionId, transcript } = await restoreOrCreateSession(this.client, this.storage);
      this.sessionId = sessionId;
      if (transcript) {
        for (const m of transcript.messages) {
          this.view.addMessage({
            role: m.role,
            text: m.content,
            citations: [],
            chart: null,
            pending: false,
          });
        }
      }
      this.view.hideBanner();
      this.setBusy(false);
    } catch {
      this.view.showBanner("Cannot reach the budget service.", () => void this.init());
    }
  }

  private setBusy(busy: boolean): void {
    this.inFlight = busy;
    this.input.disabled = busy || this.sessionId === null;
    this.button.disabled = busy || this.sessionId === null;
  }

  async send(): Promise<void> {
    const text = this.input.value.trim();
    if (!text || this.inFlight || this.sessionId === null) {
      return; // empty input never reaches the server
    }
    this.input.value = "";
    this.setBusy(true);
    this.view.addMessage(userMessage(text));
    this.view.addMessage({ role: "assistant", text: "", citations: [], chart: null, pending: true });
    try {
      const payload = await this.client.sendMessage(this.sessionId, text);
      const element = this.view.completePending(assistantMessage(payload));
      this.showTrace(payload.trace_id, element);
    } catch {
      this.view.dropPending();
      this.view.showBanner("The service could not answer. Try again.");
    } finally {
      this.setBusy(false);
    }
  }

  /** Stream the answer's thought/action steps into its trace section. */
  private showTrace(traceId: string, element: HTMLElement): void {
    if (!this.eventSourceFactory) return;
    const steps = this.view.attachTrace(element);
    const source = this.eventSourceFactory(this.client.traceEventsUrl(traceId));
    source.addEventListener("step", (event) => {
      const step = JSON.parse(event.data) as TraceStep;
      if (step.kind !== "observation") {
        this.view.appendTraceStep(steps, step);
      }
    });
    source.addEventListener("done", () => source.close());
  }
}
