import { spawn, type ChildProcess } from "node:child_process";
import { once } from "node:events";
import path from "node:path";
import { fileURLToPath } from "node:url";

const HERE = path.dirname(fileURLToPath(import.meta.url));
export const MODELS_DIR = path.resolve(HERE, "../../fixtures/models");
export const DIST_DIR = path.resolve(HERE, "../dist");

export interface LiveEngine {
  proc: ChildProcess;
  baseUrl: string;
  stderr: string[];
  stdout: string[];
  /** resolves with the exit code once the process ends */
  exited: Promise<number | null>;
}

export interface StartOptions {
  /** run the engine under SCHED_RR so host load cannot preempt it */
  realtime?: boolean;
}

/** Launch the engine CLI on an ephemeral port and wait for the API. */
export async function startEngine(
  extraArgs: string[] = [],
  model = "tiny-embedded",
  opts: StartOptions = {},
): Promise<LiveEngine> {
  const args = [
    "run",
    "--source",
    "synthetic",
    "--model",
    path.join(MODELS_DIR, `${model}.json`),
    "--headless",
    "--clock-rate",
    "20",
    "--listen",
    "127.0.0.1:0",
    ...extraArgs,
  ];
  // chrt execs the engine in place, so signals and the pid are unaffected
  const argv = opts.realtime
    ? ["chrt", "-r", "50", "edge-tagger", ...args]
    : ["edge-tagger", ...args];
  const proc = spawn(argv[0], argv.slice(1), {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const stderr: string[] = [];
  const stdout: string[] = [];
  proc.stdout!.setEncoding("utf-8");
  proc.stderr!.setEncoding("utf-8");
  proc.stdout!.on("data", (text: string) => stdout.push(text));

  const exited = new Promise<number | null>((resolve) => {
    proc.on("exit", (code) => resolve(code));
  });

  const baseUrl = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(
      () => reject(new Error(`engine did not listen:\n${stderr.join("")}`)),
      30_000,
    );
    proc.stderr!.on("data", (text: string) => {
      stderr.push(text);
      const match = stderr.join("").match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve(match[1]);
      }
    });
    proc.on("exit", () => {
      clearTimeout(timer);
      reject(new Error(`engine exited early:\n${stderr.join("")}`));
    });
  });
  return { proc, baseUrl, stderr, stdout, exited };
}

export async function stopEngine(engine: LiveEngine): Promise<void> {
  if (engine.proc.exitCode === null) {
    engine.proc.kill("SIGTERM");
    await Promise.race([engine.exited, once(engine.proc, "exit")]);
  }
}

export async function waitFor(
  check: () => boolean | Promise<boolean>,
  timeoutMs = 20_000,
  label = "condition",
): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    if (await check()) return;
    await new Promise((resolve) => setTimeout(resolve, 50));
  }
  throw new Error(`timed out waiting for ${label}`);
}
