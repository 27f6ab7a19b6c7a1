import * as net from "node:net";

/**
 * Line-framed JSON over a TCP socket: one request object per line out, one
 * response object per line back. Requests are answered strictly in order,
 * so responses are matched to callers FIFO.
 */
export class NdjsonConnection {
  private socket: net.Socket;
  private buffer = "";
  private waiters: Array<{
    resolve: (value: unknown) => void;
    reject: (err: Error) => void;
  }> = [];
  private closed = false;

  private constructor(socket: net.Socket) {
    this.socket = socket;
    socket.setEncoding("utf8");
    socket.on("data", (chunk: string) => this.onData(chunk));
    socket.on("error", (err) => this.failAll(err));
    socket.on("close", () =>
      this.failAll(new Error("connection closed by server")),
    );
  }

  static connect(host: string, port: number): Promise<NdjsonConnection> {
    return new Promise((resolve, reject) => {
      const socket = net.createConnection({ host, port });
      socket.once("connect", () => {
        socket.removeListener("error", reject);
        resolve(new NdjsonConnection(socket));
      });
      socket.once("error", reject);
    });
  }

  private onData(chunk: string): void {
    this.buffer += chunk;
    let index: number;
    while ((index = this.buffer.indexOf("\n")) >= 0) {
      const line = this.buffer.slice(0, index).trim();
      this.buffer = this.buffer.slice(index + 1);
      if (!line) continue;
      const waiter = this.waiters.shift();
      if (!waiter) continue; // unsolicited line; protocol never sends these
      try {
        waiter.resolve(JSON.parse(line));
      } catch (err) {
        waiter.reject(err as Error);
      }
    }
  }

  private failAll(err: Error): void {
    if (this.closed) return;
    this.closed = true;
    for (const waiter of this.waiters.splice(0)) waiter.reject(err);
  }

  request(payload: unknown): Promise<unknown> {
    if (this.closed) {
      return Promise.reject(new Error("connection is closed"));
    }
    return new Promise((resolve, reject) => {
      this.waiters.push({ resolve, reject });
      this.socket.write(JSON.stringify(payload) + "\n");
    });
  }

  close(): void {
    this.closed = true;
    this.socket.destroy();
  }
}
