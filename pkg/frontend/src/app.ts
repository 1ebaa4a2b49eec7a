// Chat application: input box, mode toggle, async submissions matched by id.

import type { AskResponse, ServerClient } from "./api.js";
import { executeInBrowser, type PythonRuntime } from "./localExec.js";
import {
  renderTranscript,
  Transcript,
  type AnswerView,
  type ExecutionMode,
  type SystemEntry,
} from "./transcript.js";
import { renderValue } from "./values.js";

export interface AppConfig {
  client: ServerClient;
  /** Lazy Python runtime for browser-mode execution. */
  runtime?: () => Promise<PythonRuntime>;
  wallMs?: number;
  document?: Document;
}

export interface ChatApp {
  submitQuestion(text: string): Promise<SystemEntry>;
  setMode(mode: ExecutionMode): void;
  readonly transcript: Transcript;
  readonly root: HTMLElement;
}

function answerViewFromAsk(response: AskResponse): AnswerView {
  const answer = response.answer;
  return {
    code: answer.code,
    status: answer.status,
    valueExact: answer.value_exact ?? undefined,
    valueDecimal: answer.value_decimal ?? undefined,
    explanation: answer.explanation ?? undefined,
  };
}

export function createApp(root: HTMLElement, config: AppConfig): ChatApp {
  const doc = config.document ?? root.ownerDocument;
  const transcript = new Transcript();
  let mode: ExecutionMode = "server";

  root.innerHTML = "";
  const transcriptHost = doc.createElement("div");
  transcriptHost.className = "transcript-host";
  const form = doc.createElement("form");
  form.className = "composer";
  const input = doc.createElement("input");
  input.type = "text";
  input.placeholder = "Ask a numerical question (LaTeX welcome)";
  const send = doc.createElement("button");
  send.type = "submit";
  send.textContent = "Send";
  send.disabled = true;
  const modeSelect = doc.createElement("select");
  for (const value of ["server", "browser"] as const) {
    const option = doc.createElement("option");
    option.value = value;
    option.textContent = value === "server" ? "Run on server" : "Run in browser";
    modeSelect.appendChild(option);
  }
  form.append(input, modeSelect, send);
  root.append(transcriptHost, form);

  function refresh(): void {
    transcriptHost.innerHTML = "";
    transcriptHost.appendChild(renderTranscript(transcript.entries, doc));
  }

  input.addEventListener("input", () => {
    send.disabled = input.value.trim() === "";
  });
  modeSelect.addEventListener("change", () => {
    mode = modeSelect.value as ExecutionMode;
  });

  async function browserAnswer(response: AskResponse): Promise<AnswerView> {
    const fromServer = answerViewFromAsk(response);
    // The server already produced a value (built-in dialect) or there is no
    // runnable code; nothing to execute locally.
    if (fromServer.status === "ok" || !fromServer.code || config.runtime === undefined) {
      return fromServer;
    }
    const runtime = await config.runtime();
    const outcome = await executeInBrowser(fromServer.code, "py3", "result", runtime, config.wallMs);
    if (outcome.status === "ok" && outcome.value !== null) {
      const rendered = renderValue(outcome.value);
      return {
        code: fromServer.code,
        status: "ok",
        valueExact: rendered.exact,
        valueDecimal: rendered.decimal,
      };
    }
    if (outcome.status === "no_result") {
      return { code: fromServer.code, status: "no_result", valueExact: "NULL" };
    }
    return {
      code: fromServer.code,
      status: outcome.status,
      explanation: outcome.stderr || `browser execution ${outcome.status}`,
    };
  }

  async function submitQuestion(text: string): Promise<SystemEntry> {
    const question = text.trim();
    if (question === "") {
      throw new Error("question must be non-empty");
    }
    const requestId = transcript.allocateId();
    const requestMode = mode;
    transcript.append({
      id: requestId,
      role: "user",
      text: question,
      mode: requestMode,
      timestamp: Date.now(),
    });
    refresh();

    const entry: SystemEntry = {
      id: transcript.allocateId(),
      role: "system",
      requestId,
      mode: requestMode,
      timestamp: Date.now(),
    };
    try {
      const response = await config.client.ask(question);
      entry.answer =
        requestMode === "browser" ? await browserAnswer(response) : answerViewFromAsk(response);
    } catch (error) {
      entry.error = error instanceof Error ? error.message : String(error);
    }
    transcript.append(entry);
    refresh();
    return entry;
  }

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const text = input.value;
    if (text.trim() === "") return;
    input.value = "";
    send.disabled = true;
    // Input stays live while the request runs; answers append when they land.
    void submitQuestion(text);
  });

  refresh();
  return {
    submitQuestion,
    setMode(next: ExecutionMode) {
      mode = next;
      modeSelect.value = next;
    },
    transcript,
    root,
  };
}
