import { spawn, ChildProcess } from "node:child_process";

export interface LocalServer {
  port: number;
  stop(): Promise<void>;
}

/**
 * Start a local simulation server (`python -m waresim.cli serve`) on an
 * ephemeral port and resolve once it announces the bound port. Intended
 * for tests; production deployments run the server themselves.
 */
export function spawnLocalServer(
  options: { python?: string; configPath?: string; timeoutMs?: number } = {},
): Promise<LocalServer> {
  const python = options.python ?? "python3";
  const args = ["-m", "waresim.cli", "serve", "--bind", "127.0.0.1:0"];
  if (options.configPath) args.push("--config", options.configPath);
  const timeoutMs = options.timeoutMs ?? 15000;

  return new Promise((resolve, reject) => {
    const child: ChildProcess = spawn(python, args, {
      stdio: ["ignore", "pipe", "pipe"],
    });
    let stdout = "";
    let stderr = "";
    let settled = false;

    const timer = setTimeout(() => {
      if (!settled) {
        settled = true;
        child.kill();
        reject(new Error(`server did not announce a port: ${stderr || stdout}`));
      }
    }, timeoutMs);

    child.stdout!.setEncoding("utf8");
    child.stdout!.on("data", (chunk: string) => {
      stdout += chunk;
      const match = stdout.match(/listening on [^:]+:(\d+)/);
      if (match && !settled) {
        settled = true;
        clearTimeout(timer);
        resolve({
          port: Number(match[1]),
          stop: () =>
            new Promise<void>((done) => {
              child.once("exit", () => done());
              child.kill();
            }),
        });
      }
    });
    child.stderr!.setEncoding("utf8");
    child.stderr!.on("data", (chunk: string) => {
      stderr += chunk;
    });
    child.once("error", (err) => {
      if (!settled) {
        settled = true;
        clearTimeout(timer);
        reject(err);
      }
    });
    child.once("exit", (code) => {
      if (!settled) {
        settled = true;
        clearTimeout(timer);
        reject(new Error(`server exited early (code ${code}): ${stderr}`));
      }
    });
  });
}
