import { ApiClient } from "./api.js";
import { App } from "./app.js";

declare global {
  interface Window {
    GRASP_API_BASE?: string;
  }
}

function apiBase(): string {
  const meta = document.querySelector<HTMLMetaElement>('meta[name="grasp-api-base"]');
  return window.GRASP_API_BASE ?? meta?.content ?? "";
}

function start(): void {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app element");
  }
  const app = new App(root, {
    client: new ApiClient(apiBase()),
    storage: window.localStorage,
    eventSourceFactory:
      typeof EventSource === "undefined" ? undefined : (url) => new EventSource(url),
  });
  void app.init();
}

if (document.readyState === "loading") {
  document.addEventListener("DOMContentLoaded", start);
} else {
  start();
}
