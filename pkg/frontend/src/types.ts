/** JSON shapes of the chat API. */

export interface Citation {
  doc_id: string;
  title: string;
  source_url: string;
  page: number;
  fiscal_year: number;
  /** Ready-to-open link to the exact page; built by the engine, never recomputed here. */
  url: string;
}

export interface ChartPoint {
  label: string;
  value: number;
}

export interface ChartSpec {
  kind: "pie" | "bar" | "line";
  title: string;
  series: ChartPoint[];
  unit: string;
}

export interface AnswerPayload {
  answer_text: string;
  citations: Citation[];
  chart: ChartSpec | null;
  trace_id: string;
}

export interface TranscriptMessage {
  role: "user" | "assistant";
  content: string;
}

export interface Transcript {
  session_id: string;
  created_at: number;
  messages: TranscriptMessage[];
}

export interface TraceStep {
  kind: "thought" | "action" | "observation";
  content: string;
  tool_name?: string;
}

export interface UiMessage {
  role: "user" | "assistant";
  text: string;
  citations: Citation[];
  chart: ChartSpec | null;
  pending: boolean;
}
