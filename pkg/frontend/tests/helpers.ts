// Spawns the Python service (with the sandbox worker wired in) for e2e tests.

import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import type { TaggedValue } from "../src/values.js";

const HERE = dirname(fileURLToPath(import.meta.url));
export const REPO_ROOT = join(HERE, "..", "..");

export interface GoldenEntry {
  id: string;
  source: string;
  expected: TaggedValue;
}

export function loadGoldenCorpus(): GoldenEntry[] {
  const text = readFileSync(join(REPO_ROOT, "golden", "py3_values.jsonl"), "utf-8");
  return text
    .split("\n")
    .filter((line) => line.trim() !== "")
    .map((line) => JSON.parse(line) as GoldenEntry);
}

export interface RunningService {
  baseUrl: string;
  stop(): void;
}

export async function startService(extraArgs: string[] = []): Promise<RunningService> {
  const port = 8300 + Math.floor(Math.random() * 1500);
  const child: ChildProcess = spawn(
    "python3",
    [
      "-m",
      "computegpt.cli",
      "serve",
      "--port",
      String(port),
      "--worker-cmd",
      "python3 -m computegpt_worker",
      ...extraArgs,
    ],
    { cwd: REPO_ROOT, stdio: ["ignore", "pipe", "pipe"] },
  );
  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 20000;
  let lastError = "";
  child.stderr?.on("data", (chunk: Buffer) => {
    lastError += chunk.toString();
  });
  while (Date.now() < deadline) {
    try {
      const response = await fetch(`${baseUrl}/healthz`);
      if (response.ok) {
        return {
          baseUrl,
          stop() {
            child.kill("SIGKILL");
          },
        };
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 150));
  }
  child.kill("SIGKILL");
  throw new Error(`service did not come up on ${baseUrl}: ${lastError.slice(-400)}`);
}
