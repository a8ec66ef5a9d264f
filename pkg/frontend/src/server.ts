// Helper for owning a bridge server as a child process.  The simulator CLI
// announces "bridge listening on HOST:PORT" on stderr once the socket is
// bound; everything after that is ours to connect to.

import { ChildProcess, spawn } from "node:child_process";

export interface SpawnedServer {
  host: string;
  port: number;
  process: ChildProcess;
  stop: () => Promise<void>;
}

export interface SpawnOptions {
  /** Python interpreter to launch, default "python3". */
  python?: string;
  /** Seconds to wait for the listening banner, default 20. */
  timeout?: number;
}

export function spawnBridgeServer(
  scenarioPath: string,
  options: SpawnOptions = {},
): Promise<SpawnedServer> {
  const python = options.python ?? "python3";
  const timeoutMs = (options.timeout ?? 20) * 1000;
  const child = spawn(python, ["-m", "parallelroads.cli", "serve", scenarioPath, "--port", "0"], {
    stdio: ["ignore", "ignore", "pipe"],
  });

  return new Promise((resolve, reject) => {
    let stderr = "";
    const timer = setTimeout(() => {
      child.kill();
      reject(new Error(`bridge server did not come up in ${timeoutMs / 1000}s: ${stderr}`));
    }, timeoutMs);

    child.stderr!.on("data", (chunk: Buffer) => {
      stderr += chunk.toString();
      const match = stderr.match(/bridge listening on ([\d.]+):(\d+)/);
      if (match) {
        clearTimeout(timer);
        const host = match[1];
        const port = Number(match[2]);
        resolve({
          host,
          port,
          process: child,
          stop: () =>
            new Promise<void>((done) => {
              if (child.exitCode !== null) {
                done();
                return;
              }
              child.once("exit", () => done());
              child.kill("SIGINT");
              // SIGINT lands in serve_forever's KeyboardInterrupt handler;
              // fall back to SIGKILL if the process lingers.
              setTimeout(() => {
                if (child.exitCode === null) child.kill("SIGKILL");
              }, 3000).unref();
            }),
        });
      }
    });

    child.once("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`bridge server exited with code ${code} before listening: ${stderr}`));
    });
  });
}
