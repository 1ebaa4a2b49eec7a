// Append-only transcript model and its DOM rendering.

export type ExecutionMode = "server" | "browser";

export interface UserEntry {
  id: number;
  role: "user";
  text: string;
  mode: ExecutionMode;
  timestamp: number;
}

export interface AnswerView {
  code: string;
  status: string;
  valueExact?: string;
  valueDecimal?: string;
  explanation?: string;
}

export interface SystemEntry {
  id: number;
  role: "system";
  requestId: number;
  mode: ExecutionMode;
  timestamp: number;
  answer?: AnswerView;
  error?: string;
}

export type TranscriptEntry = UserEntry | SystemEntry;

/** Entries can only be appended; views get a read-only snapshot. */
export class Transcript {
  private items: TranscriptEntry[] = [];
  private nextId = 1;

  allocateId(): number {
    return this.nextId++;
  }

  append(entry: TranscriptEntry): void {
    this.items.push(entry);
  }

  get entries(): readonly TranscriptEntry[] {
    return this.items;
  }
}

function answerNode(doc: Document, answer: AnswerView): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "answer";
  if (answer.code) {
    const pre = doc.createElement("pre");
    pre.className = "code";
    const code = doc.createElement("code");
    code.textContent = answer.code;
    pre.appendChild(code);
    wrap.appendChild(pre);
  }
  const value = doc.createElement("div");
  value.className = "value";
  const parts: string[] = [];
  if (answer.valueExact !== undefined) parts.push(answer.valueExact);
  if (answer.valueDecimal !== undefined && answer.valueDecimal !== answer.valueExact) {
    parts.push(answer.valueExact !== undefined ? `(${answer.valueDecimal})` : answer.valueDecimal);
  }
  if (parts.length > 0) {
    value.textContent = `= ${parts.join(" ")}`;
    wrap.appendChild(value);
  }
  if (answer.explanation) {
    const note = doc.createElement("div");
    note.className = answer.status === "ok" ? "explanation" : "diagnostic";
    note.textContent = answer.explanation;
    wrap.appendChild(note);
  }
  return wrap;
}

/** Render entries into a container; code is monospaced, NULL shows verbatim. */
export function renderTranscript(entries: readonly TranscriptEntry[], doc: Document): HTMLElement {
  const root = doc.createElement("div");
  root.className = "transcript";
  for (const entry of entries) {
    const item = doc.createElement("div");
    item.className = `entry ${entry.role}`;
    item.dataset.entryId = String(entry.id);
    if (entry.role === "user") {
      const text = doc.createElement("div");
      text.className = "question";
      text.textContent = entry.text;
      item.appendChild(text);
    } else {
      item.dataset.requestId = String(entry.requestId);
      item.dataset.mode = entry.mode;
      if (entry.error !== undefined) {
        item.classList.add("error");
        const text = doc.createElement("div");
        text.className = "error-message";
        text.textContent = entry.error;
        item.appendChild(text);
      } else if (entry.answer) {
        if (entry.answer.status !== "ok" && entry.answer.status !== "no_result") {
          item.classList.add("failed");
        }
        item.appendChild(answerNode(doc, entry.answer));
      }
    }
    root.appendChild(item);
  }
  return root;
}
