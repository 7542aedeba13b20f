// Scripted transport standing in for a WebSocket during tests.

import { Envelope } from "../src/protocol.js";
import { Transport } from "../src/net.js";

export class FakeTransport implements Transport {
  sent: Envelope[] = [];
  closed = false;
  onmessage: ((data: string) => void) | null = null;
  onopen: (() => void) | null = null;
  onclose: (() => void) | null = null;

  send(data: string): void {
    this.sent.push(JSON.parse(data) as Envelope);
  }

  close(): void {
    this.closed = true;
    this.onclose?.();
  }

  open(): void {
    this.onopen?.();
  }

  deliver(msg: Partial<Envelope>): void {
    this.onmessage?.(
      JSON.stringify({
        type: "error",
        session_id: "s1",
        seq: 0,
        payload: {},
        ...msg,
      }),
    );
  }

  dropConnection(): void {
    this.onclose?.();
  }
}

export function trialStart(overrides: Record<string, unknown> = {}): Partial<Envelope> {
  return {
    type: "trial_start",
    payload: {
      trial_index: 0,
      trial_count: 4,
      layout_id: "alpha",
      robot_tag: "red",
      resumed: false,
      layout: {
        domain: { x_min: 0, y_min: 0, x_max: 20, y_max: 20 },
        velocity: 1,
        human_start: { x: 2, y: 2 },
        robot_start: { x: 18, y: 18 },
        tasks: [
          { id: 0, x: 5, y: 5, kind: "one_agent" },
          { id: 1, x: 15, y: 5, kind: "joint" },
        ],
      },
      ...overrides,
    },
  };
}

export function stateTick(overrides: Record<string, unknown> = {}): Partial<Envelope> {
  return {
    type: "state_tick",
    payload: {
      tick: 1,
      human: { x: 2, y: 2, waiting: false },
      robot: { x: 18, y: 18, waiting: false },
      remaining: [0, 1],
      timer: 0,
      ...overrides,
    },
  };
}
