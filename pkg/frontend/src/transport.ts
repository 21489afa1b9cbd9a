// Transports carrying protocol frames: WebSocket in the browser, raw TCP
// under node (used by the test suite against a local engine).

import { LineSplitter, Message, decodeMessage, encodeMessage } from "./protocol.js";

export interface Transport {
  send(msg: Message): void;
  onMessage(handler: (msg: Message) => void): void;
  onClose(handler: () => void): void;
  close(): void;
  readonly connected: boolean;
}

export class WebSocketTransport implements Transport {
  private handlers: ((msg: Message) => void)[] = [];
  private closeHandlers: (() => void)[] = [];
  private ws: WebSocket;
  connected = false;

  constructor(url: string, onOpen?: () => void) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      this.connected = true;
      onOpen?.();
    };
    this.ws.onmessage = (ev) => {
      try {
        const msg = decodeMessage(String(ev.data));
        this.handlers.forEach((h) => h(msg));
      } catch {
        // tolerate junk; the server reports decode errors via diagnostics
      }
    };
    this.ws.onclose = () => {
      this.connected = false;
      this.closeHandlers.forEach((h) => h());
    };
  }

  send(msg: Message): void {
    if (this.ws.readyState === WebSocket.OPEN) {
      this.ws.send(encodeMessage(msg).trimEnd());
    }
  }

  onMessage(handler: (msg: Message) => void): void {
    this.handlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.ws.close();
  }
}

/** Node-only NDJSON-over-TCP transport (tests, headless tooling). */
export class TcpTransport implements Transport {
  private handlers: ((msg: Message) => void)[] = [];
  private closeHandlers: (() => void)[] = [];
  private splitter = new LineSplitter();
  private socket: import("net").Socket | null = null;
  connected = false;

  static async connect(host: string, port: number): Promise<TcpTransport> {
    const net = await import("net");
    const transport = new TcpTransport();
    await new Promise<void>((resolve, reject) => {
      const socket = net.createConnection({ host, port }, () => {
        transport.connected = true;
        resolve();
      });
      socket.setNoDelay(true);
      socket.on("error", reject);
      socket.on("data", (chunk: Buffer) => {
        for (const line of transport.splitter.push(chunk.toString("utf-8"))) {
          try {
            const msg = decodeMessage(line);
            transport.handlers.forEach((h) => h(msg));
          } catch {
            // ignore undecodable lines
          }
        }
      });
      socket.on("close", () => {
        transport.connected = false;
        transport.closeHandlers.forEach((h) => h());
      });
      transport.socket = socket;
    });
    return transport;
  }

  send(msg: Message): void {
    this.socket?.write(encodeMessage(msg));
  }

  onMessage(handler: (msg: Message) => void): void {
    this.handlers.push(handler);
  }

  onClose(handler: () => void): void {
    this.closeHandlers.push(handler);
  }

  close(): void {
    this.socket?.destroy();
    this.connected = false;
  }
}
