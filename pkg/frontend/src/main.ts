// Entry point: resolve the API base and mount the app. The base can be
// overridden with ?api=<url> so the static page can point at any server.

import { ApiClient } from "./api.js";
import { mountApp } from "./ui.js";

const DEFAULT_BASE = "http://127.0.0.1:8823";

export function resolveApiBase(search: string): string {
  const params = new URLSearchParams(search);
  const override = params.get("api");
  return override ? override.replace(/\/+$/, "") : DEFAULT_BASE;
}

const root = document.getElementById("app");
if (root) {
  const base = resolveApiBase(window.location.search);
  mountApp(root, new ApiClient(base));
}
