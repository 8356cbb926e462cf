import { renderChart } from "./chart.js";
import type { TraceStep, UiMessage } from "./types.js";

/**
 * DOM view of the conversation: message bubbles, citation links that open
 * the exact source page, charts, a pending indicator, an expandable list of
 * the steps behind an answer, and an error banner with a retry hook.
 */
export class ChatView {
  private readonly doc: Document;
  private readonly list: HTMLElement;
  private readonly banner: HTMLElement;
  private pendingElement: HTMLElement | null = null;

  constructor(root: HTMLElement) {
    this.doc = root.ownerDocument;
    this.banner = this.doc.createElement("div");
    this.banner.className = "banner";
    this.banner.hidden = true;
    this.list = this.doc.createElement("div");
    this.list.className = "messages";
    root.append(this.banner, this.list);
  }

  addMessage(message: UiMessage): HTMLElement {
    const element = this.doc.createElement("div");
    element.className = `message ${message.role}${message.pending ? " pending" : ""}`;

    const text = this.doc.createElement("p");
    text.className = "text";
    text.textContent = message.pending ? "thinking…" : message.text;
    element.appendChild(text);

    if (message.pending) {
      this.pendingElement = element;
    }
    if (message.citations.length) {
      element.appendChild(this.renderCitations(message));
    }
    if (message.chart) {
      const holder = this.doc.createElement("figure");
      holder.className = "chart-holder";
      holder.appendChild(renderChart(message.chart, this.doc));
      element.appendChild(holder);
    }

    this.list.appendChild(element);
    return element;
  }

  private renderCitations(message: UiMessage): HTMLElement {
    const wrap = this.doc.createElement("div");
    wrap.className = "citations";
    const heading = this.doc.createElement("span");
    heading.className = "citations-heading";
    heading.textContent = "Sources:";
    wrap.appendChild(heading);
    for (const citation of message.citations) {
      const link = this.doc.createElement("a");
      link.className = "citation";
      // the engine builds the page-exact URL; use it verbatim
      link.href = citation.url;
      link.target = "_blank";
      link.rel = "noopener";
      link.textContent = `${citation.title}, p.${citation.page} (FY${citation.fiscal_year})`;
      wrap.appendChild(link);
    }
    return wrap;
  }

  /** Replace the pending bubble with the real answer. */
  completePending(message: UiMessage): HTMLElement {
    if (this.pendingElement) {
      this.pendingElement.remove();
      this.pendingElement = null;
    }
    return this.addMessage({ ...message, pending: false });
  }

  dropPending(): void {
    if (this.pendingElement) {
      this.pendingElement.remove();
      this.pendingElement = null;
    }
  }

  /** Add a collapsed "how this was answered" section to a message bubble. */
  attachTrace(message: HTMLElement): HTMLElement {
    const details = this.doc.createElement("details");
    details.className = "trace";
    const summary = this.doc.createElement("summary");
    summary.textContent = "How this was answered";
    const steps = this.doc.createElement("ul");
    steps.className = "trace-steps";
    details.append(summary, steps);
    message.appendChild(details);
    return steps;
  }

  appendTraceStep(steps: HTMLElement, step: TraceStep): void {
    const item = this.doc.createElement("li");
    item.className = `step step-${step.kind}`;
    item.textContent =
      step.kind === "action" ? `used ${step.tool_name ?? "a tool"}` : step.content;
    steps.appendChild(item);
  }

  showBanner(text: string, onRetry?: () => void): void {
    this.banner.replaceChildren();
    this.banner.hidden = false;
    const label = this.doc.createElement("span");
    label.textContent = text;
    this.banner.appendChild(label);
    if (onRetry) {
      const button = this.doc.createElement("button");
      button.className = "retry";
      button.textContent = "Retry";
      button.addEventListener("click", onRetry);
      this.banner.appendChild(button);
    }
  }

  hideBanner(): void {
    this.banner.hidden = true;
    this.banner.replaceChildren();
  }
}
