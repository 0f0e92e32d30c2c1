/** WebSocket audio stream client with reconnect-and-notice behavior. */

import type { ServerMessage } from "./types.js";

export interface StreamCallbacks {
  onFrame(samples: Float32Array): void;
  onMessage(msg: ServerMessage): void;
  onStatus(status: StreamStatus): void;
}

export type StreamStatus = "connecting" | "open" | "closed" | "reconnecting";

const RECONNECT_DELAY_MS = 1000;

export class AudioStream {
  private ws: WebSocket | null = null;
  private wantOpen = false;
  private readonly url: string;
  private readonly cb: StreamCallbacks;

  constructor(url: string, cb: StreamCallbacks) {
    this.url = url;
    this.cb = cb;
  }

  start(): void {
    this.wantOpen = true;
    this.connect("connecting");
  }

  stop(): void {
    this.wantOpen = false;
    if (this.ws) {
      this.ws.close();
      this.ws = null;
    }
    this.cb.onStatus("closed");
  }

  get isOpen(): boolean {
    return this.ws !== null && this.ws.readyState === WebSocket.OPEN;
  }

  /** Send one clamped parameter update; silently dropped when closed. */
  sendSet(name: string, value: number): void {
    if (!this.isOpen) return;
    this.ws!.send(JSON.stringify({ type: "set", name, value }));
  }

  private connect(status: StreamStatus): void {
    this.cb.onStatus(status);
    const ws = new WebSocket(this.url);
    ws.binaryType = "arraybuffer";
    this.ws = ws;
    ws.onopen = () => this.cb.onStatus("open");
    ws.onmessage = (ev: MessageEvent) => {
      if (ev.data instanceof ArrayBuffer) {
        this.cb.onFrame(new Float32Array(ev.data));
      } else if (typeof ev.data === "string") {
        try {
          this.cb.onMessage(JSON.parse(ev.data) as ServerMessage);
        } catch {
          // ignore unparseable text frames
        }
      }
    };
    ws.onclose = () => {
      if (this.ws !== ws) return;
      this.ws = null;
      if (this.wantOpen) {
        this.cb.onStatus("reconnecting");
        setTimeout(() => {
          if (this.wantOpen) this.connect("reconnecting");
        }, RECONNECT_DELAY_MS);
      } else {
        this.cb.onStatus("closed");
      }
    };
  }
}
