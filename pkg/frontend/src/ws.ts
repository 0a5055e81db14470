/** Layout frame stream with reconnect-and-backoff. Frames are handed to the
 * consumer whole, one per animation tick. */

import { LayoutFrame } from "./types.js";

export interface WebSocketLike {
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: ((ev: unknown) => void) | null;
  onerror: ((ev: unknown) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export class LayoutStream {
  private socket: WebSocketLike | null = null;
  private backoffMs = 250;
  private stopped = false;

  constructor(
    private url: string,
    private factory: WebSocketFactory,
    private onFrame: (frame: LayoutFrame) => void,
    private onDone: () => void = () => {},
  ) {}

  start(): void {
    this.stopped = false;
    this.connect();
  }

  private connect(): void {
    if (this.stopped) return;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onmessage = (ev) => {
      this.backoffMs = 250;
      const frame = JSON.parse(ev.data);
      if (frame.converged === true && frame.nodes === undefined) {
        this.stopped = true;
        this.onDone();
        socket.close();
        return;
      }
      this.onFrame(frame as LayoutFrame);
    };
    socket.onclose = () => this.scheduleReconnect();
    socket.onerror = () => socket.close();
  }

  private scheduleReconnect(): void {
    if (this.stopped) return;
    const wait = this.backoffMs;
    this.backoffMs = Math.min(this.backoffMs * 2, 8000);
    setTimeout(() => this.connect(), wait);
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }
}
