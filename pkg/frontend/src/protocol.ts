// Wire protocol spoken with the session server. Message envelopes carry
// {type, session_id, seq, payload}; payload shapes per message type below.

export type MessageType =
  | "hello"
  | "trial_start"
  | "goal_choice"
  | "state_tick"
  | "capture"
  | "replan_notice"
  | "trial_end"
  | "preference_prompt"
  | "preference_choice"
  | "error";

export interface Envelope {
  type: MessageType;
  session_id: string;
  seq: number;
  payload: Record<string, unknown>;
}

export interface AgentView {
  x: number;
  y: number;
  waiting: boolean;
}

export interface StateTickPayload {
  tick: number;
  human: AgentView;
  robot: AgentView;
  remaining: number[];
  timer: number;
}

export interface TaskDef {
  id: number;
  x: number;
  y: number;
  kind: "one_agent" | "joint";
}

export interface LayoutDef {
  domain: { x_min: number; y_min: number; x_max: number; y_max: number };
  velocity: number;
  human_start: { x: number; y: number };
  robot_start: { x: number; y: number };
  tasks: TaskDef[];
}

export interface TrialStartPayload {
  trial_index: number;
  trial_count: number;
  layout_id: string;
  layout: LayoutDef;
  robot_tag: string;
  resumed: boolean;
}

const MESSAGE_TYPES: ReadonlySet<string> = new Set([
  "hello", "trial_start", "goal_choice", "state_tick", "capture",
  "replan_notice", "trial_end", "preference_prompt", "preference_choice",
  "error",
]);

export function parseEnvelope(raw: string): Envelope | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const rec = data as Record<string, unknown>;
  if (typeof rec.type !== "string" || !MESSAGE_TYPES.has(rec.type)) return null;
  return {
    type: rec.type as MessageType,
    session_id: typeof rec.session_id === "string" ? rec.session_id : "",
    seq: typeof rec.seq === "number" ? rec.seq : 0,
    payload:
      typeof rec.payload === "object" && rec.payload !== null
        ? (rec.payload as Record<string, unknown>)
        : {},
  };
}

export function makeEnvelope(
  type: MessageType,
  sessionId: string,
  payload: Record<string, unknown>,
): Envelope {
  return { type, session_id: sessionId, seq: 0, payload };
}
