// TCP client for the parallelroads bridge: one JSON object per line in each
// direction.  Requests are answered in order, so a FIFO of pending promises
// is all the correlation we need.

import net from "node:net";
import readline from "node:readline";

export interface SpecReply {
  obs_len: number;
  action_len: number;
  episode_len: number;
}

export interface StepReply {
  obs: number[];
  cost: number;
  proxy_cost: number;
  done: boolean;
  latencies: number[];
}

/** An {"error": ...} reply from the server, or a transport-level failure. */
export class BridgeError extends Error {
  constructor(
    readonly code: string,
    detail?: unknown,
  ) {
    super(detail === undefined ? code : `${code}: ${JSON.stringify(detail)}`);
    this.name = "BridgeError";
  }
}

interface Pending {
  resolve: (reply: Record<string, unknown>) => void;
  reject: (err: Error) => void;
}

/** Throw unless `action` is a finite probability vector. */
export function assertSimplex(action: number[], tolerance = 1e-9): void {
  let sum = 0;
  for (const a of action) {
    if (!Number.isFinite(a) || a < 0) {
      throw new BridgeError("bad_action", `component ${a} is not a probability`);
    }
    sum += a;
  }
  if (Math.abs(sum - 1) > tolerance) {
    throw new BridgeError("bad_action", `components sum to ${sum}, not 1`);
  }
}

export class BridgeClient {
  private readonly pending: Pending[] = [];
  private closed = false;

  private constructor(private readonly socket: net.Socket) {
    const lines = readline.createInterface({ input: socket, crlfDelay: Infinity });
    lines.on("line", (line) => this.onLine(line));
    socket.on("error", (err) => this.failAll(new BridgeError("transport", err.message)));
    socket.on("close", () => {
      this.closed = true;
      this.failAll(new BridgeError("transport", "connection closed"));
    });
  }

  static connect(host: string, port: number): Promise<BridgeClient> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => {
        socket.off("error", reject);
        resolve(new BridgeClient(socket));
      });
      socket.setNoDelay(true);
      socket.once("error", reject);
    });
  }

  private onLine(line: string): void {
    const waiter = this.pending.shift();
    if (!waiter) return; // unsolicited line; nothing sensible to do with it
    let reply: unknown;
    try {
      reply = JSON.parse(line);
    } catch {
      waiter.reject(new BridgeError("bad_reply", line.slice(0, 120)));
      return;
    }
    if (typeof reply !== "object" || reply === null || Array.isArray(reply)) {
      waiter.reject(new BridgeError("bad_reply", "reply is not an object"));
      return;
    }
    const record = reply as Record<string, unknown>;
    if (typeof record.error === "string") {
      waiter.reject(new BridgeError(record.error, record.detail));
      return;
    }
    waiter.resolve(record);
  }

  private failAll(err: Error): void {
    while (this.pending.length > 0) {
      this.pending.shift()!.reject(err);
    }
  }

  private request(payload: Record<string, unknown>): Promise<Record<string, unknown>> {
    if (this.closed) {
      return Promise.reject(new BridgeError("transport", "client already closed"));
    }
    return new Promise((resolve, reject) => {
      this.pending.push({ resolve, reject });
      this.socket.write(JSON.stringify(payload) + "\n");
    });
  }

  async spec(): Promise<SpecReply> {
    const reply = await this.request({ cmd: "spec" });
    return reply as unknown as SpecReply;
  }

  /** Start an episode; returns the initial observation. */
  async reset(seed?: number): Promise<number[]> {
    const payload: Record<string, unknown> = { cmd: "reset" };
    if (seed !== undefined) payload.seed = seed;
    const reply = await this.request(payload);
    return reply.obs as number[];
  }

  async step(action: number[]): Promise<StepReply> {
    assertSimplex(action);
    const reply = await this.request({ cmd: "step", action });
    return reply as unknown as StepReply;
  }

  /** Polite shutdown: tell the server, then drop the socket. */
  async close(): Promise<void> {
    if (this.closed) return;
    try {
      await this.request({ cmd: "close" });
    } catch {
      // tearing down anyway; a lost goodbye is not an error
    } finally {
      this.destroy();
    }
  }

  destroy(): void {
    this.closed = true;
    this.socket.destroy();
    this.failAll(new BridgeError("transport", "client destroyed"));
  }
}
