// Client-side mirror of the server's last state. The server is the only
// authority: the timer and world state always come from its messages, and
// the view merely buffers the previous tick for smooth interpolation.

import {
  Envelope,
  LayoutDef,
  StateTickPayload,
  TrialStartPayload,
} from "./protocol.js";

export interface CaptureFlash {
  taskId: number;
  until: number; // ms timestamp
}

export class ClientViewState {
  layout: LayoutDef | null = null;
  layoutId = "";
  robotTag = "";
  trialIndex = -1;
  trialCount = 0;

  prevTick: StateTickPayload | null = null;
  lastTick: StateTickPayload | null = null;
  lastTickAt = 0; // ms timestamp of lastTick arrival

  currentGoal: number | null = null;
  awaitingAck = false;

  preferenceOptions: string[] | null = null;
  preferenceSent = false;

  trialComplete = false;
  sessionComplete = false;
  lastCompletionTime: number | null = null;

  replanFlashUntil = 0;
  captureFlashes: CaptureFlash[] = [];

  connected = false;

  /** Timer to display; never counted client-side. */
  get timer(): number {
    return this.lastTick ? this.lastTick.timer : 0;
  }

  /** A goal click is wanted: tasks remain and none of ours is in play. */
  get selectable(): boolean {
    if (!this.lastTick || this.awaitingAck || this.trialComplete) return false;
    const remaining = this.lastTick.remaining;
    if (remaining.length === 0) return false;
    return this.currentGoal === null || !remaining.includes(this.currentGoal);
  }

  apply(msg: Envelope, now: number): void {
    switch (msg.type) {
      case "trial_start": {
        const p = msg.payload as unknown as TrialStartPayload;
        this.layout = p.layout;
        this.layoutId = p.layout_id;
        this.robotTag = p.robot_tag;
        this.trialIndex = p.trial_index;
        this.trialCount = p.trial_count;
        if (!p.resumed) {
          this.currentGoal = null;
        }
        this.prevTick = null;
        this.lastTick = null;
        this.trialComplete = false;
        this.preferenceOptions = null;
        this.preferenceSent = false;
        this.awaitingAck = false;
        break;
      }
      case "state_tick": {
        const p = msg.payload as unknown as StateTickPayload;
        this.prevTick = this.lastTick;
        this.lastTick = p;
        this.lastTickAt = now;
        this.awaitingAck = false;
        break;
      }
      case "capture": {
        const taskId = msg.payload.task_id as number;
        this.captureFlashes.push({ taskId, until: now + 600 });
        break;
      }
      case "replan_notice": {
        this.replanFlashUntil = now + 600;
        break;
      }
      case "trial_end": {
        if (msg.payload.session_complete) {
          this.sessionComplete = true;
        } else {
          this.trialComplete = true;
          this.lastCompletionTime = msg.payload.completion_time as number;
        }
        this.currentGoal = null;
        this.awaitingAck = false;
        break;
      }
      case "preference_prompt": {
        this.preferenceOptions = (msg.payload.options as string[]) ?? [];
        this.preferenceSent = false;
        break;
      }
      case "error": {
        // an invalid click was rejected; unlock so the player can retry
        this.awaitingAck = false;
        this.currentGoal = null;
        break;
      }
      default:
        break;
    }
    this.captureFlashes = this.captureFlashes.filter((f) => f.until > now);
  }

  /** Interpolated agent positions for rendering between server ticks. */
  interpolated(now: number, tickMs: number): {
    human: { x: number; y: number };
    robot: { x: number; y: number };
  } | null {
    if (!this.lastTick) return null;
    const cur = this.lastTick;
    if (!this.prevTick || tickMs <= 0) {
      return { human: { ...cur.human }, robot: { ...cur.robot } };
    }
    const f = Math.min(1, Math.max(0, (now - this.lastTickAt) / tickMs));
    const prev = this.prevTick;
    const lerp = (a: number, b: number) => a + (b - a) * f;
    return {
      human: { x: lerp(prev.human.x, cur.human.x), y: lerp(prev.human.y, cur.human.y) },
      robot: { x: lerp(prev.robot.x, cur.robot.x), y: lerp(prev.robot.y, cur.robot.y) },
    };
  }
}
