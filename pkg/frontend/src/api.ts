// HTTP client for the question service.

import { asTaggedValue, type TaggedValue } from "./values.js";

export interface AnswerPayload {
  code: string;
  status: string;
  value_exact: string | null;
  value_decimal: string | null;
  explanation: string | null;
}

export interface AskResponse {
  answer: AnswerPayload;
  code: string;
  status: string;
  timing_ms: number;
}

export interface ExecuteOutcome {
  status: string;
  value: TaggedValue | null;
  stdout: string;
  stderr: string;
  duration_ms: number;
  worker_id: string;
}

export interface AskOptions {
  backend?: "deterministic" | "remote";
  limits?: { wall_ms?: number };
}

export class ServerError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(`server returned ${status}: ${detail}`);
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ServerClient {
  private fetchImpl: FetchLike;

  constructor(
    readonly baseUrl: string,
    fetchImpl?: FetchLike,
  ) {
    this.fetchImpl = fetchImpl ?? ((input, init) => globalThis.fetch(input, init));
  }

  private async post(path: string, body: unknown): Promise<unknown> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    const text = await response.text();
    if (!response.ok) {
      throw new ServerError(response.status, text.slice(0, 200));
    }
    return JSON.parse(text);
  }

  async health(): Promise<boolean> {
    try {
      const response = await this.fetchImpl(`${this.baseUrl}/healthz`);
      return response.ok;
    } catch {
      return false;
    }
  }

  async ask(question: string, options: AskOptions = {}): Promise<AskResponse> {
    const body: Record<string, unknown> = { question };
    if (options.backend) body.backend = options.backend;
    if (options.limits) body.limits = options.limits;
    return (await this.post("/v1/ask", body)) as AskResponse;
  }

  async execute(dialect: string, source: string, resultVar = "result"): Promise<ExecuteOutcome> {
    const raw = (await this.post("/v1/execute", {
      dialect,
      source,
      result_var: resultVar,
    })) as Record<string, unknown>;
    return {
      status: String(raw.status),
      value: raw.value == null ? null : asTaggedValue(raw.value),
      stdout: String(raw.stdout ?? ""),
      stderr: String(raw.stderr ?? ""),
      duration_ms: Number(raw.duration_ms ?? 0),
      worker_id: String(raw.worker_id ?? ""),
    };
  }
}
