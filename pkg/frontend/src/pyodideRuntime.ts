// Lazy Pyodide loader. The interpreter is fetched on first use only, so the
// initial page stays light; server mode never pays this cost.

import type { PythonRuntime } from "./localExec.js";

type LoadPyodide = (options?: { indexURL?: string }) => Promise<{
  runPythonAsync(code: string, options?: { globals?: unknown }): Promise<unknown>;
  toPy(value: unknown): unknown;
  globals: { get(name: string): unknown };
}>;

declare global {
  // Present when the page pulled pyodide.js in via a script tag.
  var loadPyodide: LoadPyodide | undefined;
}

const DEFAULT_CDN = "https://cdn.jsdelivr.net/pyodide/v0.26.4/full/";

let cached: Promise<PythonRuntime> | null = null;

function injectScript(url: string): Promise<LoadPyodide> {
  return new Promise((resolve, reject) => {
    const script = document.createElement("script");
    script.src = url;
    script.onload = () => {
      if (typeof globalThis.loadPyodide === "function") {
        resolve(globalThis.loadPyodide);
      } else {
        reject(new Error("pyodide script loaded but loadPyodide is missing"));
      }
    };
    script.onerror = () => reject(new Error(`failed to load ${url}`));
    document.head.appendChild(script);
  });
}

async function resolveLoader(indexURL?: string): Promise<LoadPyodide> {
  if (typeof globalThis.loadPyodide === "function") {
    return globalThis.loadPyodide;
  }
  // In a plain browser page, pull the interpreter in via a script tag on
  // first use; under node (tests) resolve the installed package instead.
  if (typeof document !== "undefined" && typeof process === "undefined") {
    return injectScript(`${indexURL ?? DEFAULT_CDN}pyodide.js`);
  }
  const mod = (await import("pyodide")) as unknown as { loadPyodide: LoadPyodide };
  return mod.loadPyodide;
}

export function pyodideRuntime(indexURL?: string): Promise<PythonRuntime> {
  if (cached === null) {
    cached = (async () => {
      const load = await resolveLoader(indexURL);
      const inBrowser = typeof document !== "undefined" && typeof process === "undefined";
      const resolvedIndex = indexURL ?? (inBrowser ? DEFAULT_CDN : undefined);
      const pyodide = await load(resolvedIndex ? { indexURL: resolvedIndex } : undefined);
      return {
        async runJson(program: string): Promise<string> {
          // A fresh globals dict per run keeps snippets isolated from each other.
          const globals = pyodide.toPy({});
          const result = await pyodide.runPythonAsync(program, { globals });
          return String(result);
        },
      };
    })();
    cached.catch(() => {
      cached = null; // allow a retry after a failed load
    });
  }
  return cached;
}
