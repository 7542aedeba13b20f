// Session client: owns the socket, feeds the view, and guards inputs so
// exactly one message leaves per prompt. The transport is injected, which
// lets tests drive the client with a scripted fake.

import { Envelope, makeEnvelope, parseEnvelope } from "./protocol.js";
import { ClientViewState } from "./view.js";

export interface Transport {
  send(data: string): void;
  close(): void;
  onmessage: ((data: string) => void) | null;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
}

export type TransportFactory = (url: string) => Transport;

export class SessionClient {
  readonly view = new ClientViewState();
  sessionId = "";
  private transport: Transport | null = null;
  private reconnectDelay = 500;
  private closedByUser = false;

  constructor(
    private url: string,
    private makeTransport: TransportFactory,
    private now: () => number = () => Date.now(),
    private schedule: (fn: () => void, ms: number) => void = (fn, ms) =>
      void setTimeout(fn, ms),
  ) {}

  connect(): void {
    this.closedByUser = false;
    const t = this.makeTransport(this.url);
    this.transport = t;
    t.onopen = () => {
      this.view.connected = true;
      // resuming with a known session id picks up the server's world,
      // including its timer; a fresh client starts a new session
      this.send(makeEnvelope("hello", this.sessionId, {}));
    };
    t.onmessage = (data) => this.handle(data);
    t.onclose = () => {
      this.view.connected = false;
      this.transport = null;
      if (!this.closedByUser) {
        this.schedule(() => this.connect(), this.reconnectDelay);
      }
    };
  }

  close(): void {
    this.closedByUser = true;
    this.transport?.close();
  }

  private send(msg: Envelope): void {
    this.transport?.send(JSON.stringify(msg));
  }

  private handle(data: string): void {
    const msg = parseEnvelope(data);
    if (!msg) return;
    if (msg.session_id) {
      this.sessionId = msg.session_id;
    }
    this.view.apply(msg, this.now());
  }

  /**
   * Click on a task. Sends at most one goal_choice per prompt: the input
   * locks until the server acknowledges with the next message.
   */
  submitGoal(taskId: number): boolean {
    if (!this.view.selectable) return false;
    if (!this.view.lastTick?.remaining.includes(taskId)) return false;
    this.view.currentGoal = taskId;
    this.view.awaitingAck = true;
    this.send(makeEnvelope("goal_choice", this.sessionId, { task_id: taskId }));
    return true;
  }

  /** Answer the between-blocks preference prompt, once. */
  submitPreference(robotTag: string): boolean {
    if (!this.view.preferenceOptions || this.view.preferenceSent) return false;
    if (!this.view.preferenceOptions.includes(robotTag)) return false;
    this.view.preferenceSent = true;
    this.send(
      makeEnvelope("preference_choice", this.sessionId, { robot_tag: robotTag }),
    );
    return true;
  }
}
