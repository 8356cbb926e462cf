import { vi } from "vitest";
import type { AnswerPayload, Citation, Transcript } from "../src/types.js";
import type { StorageLike } from "../src/api.js";

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

export function memoryStorage(initial: Record<string, string> = {}): StorageLike {
  const store = new Map(Object.entries(initial));
  return {
    getItem: (key) => store.get(key) ?? null,
    setItem: (key, value) => void store.set(key, value),
    removeItem: (key) => void store.delete(key),
  };
}

export function citation(page: number, year = 2024): Citation {
  return {
    doc_id: `deskton-fy${year}`,
    title: `Town of Deskton FY${year} Operating Budget`,
    source_url: `https://deskton.example.gov/budget/fy${year}.pdf`,
    page,
    fiscal_year: year,
    url: `https://deskton.example.gov/budget/fy${year}.pdf#page=${page}`,
  };
}

export function answerPayload(overrides: Partial<AnswerPayload> = {}): AnswerPayload {
  return {
    answer_text: "The FY2023 actual school spending was $59,250,000.",
    citations: [citation(3, 2024), citation(3, 2023)],
    chart: null,
    trace_id: "trace-1",
    ...overrides,
  };
}

export function transcript(messages: Transcript["messages"]): Transcript {
  return { session_id: "restored", created_at: 0, messages };
}

/** fetch stub driven by a {method url -> response factory} table. */
export function routedFetch(routes: Record<string, (init?: RequestInit) => Response>) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const impl = vi.fn(async (url: string, init?: RequestInit) => {
    calls.push({ url, init });
    const key = `${init?.method ?? "GET"} ${url}`;
    const route = routes[key];
    if (!route) {
      throw new Error(`unrouted request: ${key}`);
    }
    return route(init);
  });
  return { impl, calls };
}
