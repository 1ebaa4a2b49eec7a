// Browser bootstrap: mount the chat app against the configured service URL.

import { ServerClient } from "./api.js";
import { createApp } from "./app.js";
import { pyodideRuntime } from "./pyodideRuntime.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("server") ?? "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (root === null) {
  throw new Error("missing #app element");
}
createApp(root, {
  client: new ServerClient(baseUrl),
  runtime: () => pyodideRuntime(params.get("pyodide") ?? undefined),
});
