import { describe, expect, it } from "vitest";

import { drawFrame, fitCamera, taskAt, toScreen } from "../src/render.js";
import { ClientViewState } from "../src/view.js";
import { stateTick, trialStart } from "./fakes.js";

function env(partial: ReturnType<typeof stateTick>) {
  return {
    type: partial.type!,
    session_id: "s1",
    seq: 0,
    payload: partial.payload!,
  } as any;
}

class FakeContext {
  canvas = { width: 720, height: 720 };
  fillStyle = "";
  strokeStyle = "";
  lineWidth = 1;
  font = "";
  calls: Array<[string, unknown[]]> = [];
  arcs: Array<{ x: number; y: number; r: number; fill: string }> = [];
  texts: string[] = [];
  private pending: { x: number; y: number; r: number } | null = null;

  clearRect(...args: unknown[]) { this.calls.push(["clearRect", args]); }
  beginPath() { this.pending = null; }
  arc(x: number, y: number, r: number) { this.pending = { x, y, r }; }
  fill() {
    if (this.pending) this.arcs.push({ ...this.pending, fill: String(this.fillStyle) });
  }
  stroke() { this.calls.push(["stroke", []]); }
  fillText(text: string) { this.texts.push(text); }
}

function makeView(tick = stateTick()) {
  const view = new ClientViewState();
  view.apply(env(trialStart()), 0);
  view.apply(env(tick), 0);
  return view;
}

describe("renderer", () => {
  it("draws every remaining task with kind-distinct dot counts", () => {
    const view = makeView();
    const ctx = new FakeContext();
    const cam = fitCamera(view.layout!, 720, 720);
    drawFrame(ctx as any, view, cam, 0, 50);
    // task bodies: one orange, one cyan; dots: 1 + 2; avatars: 2
    const bodies = ctx.arcs.filter((a) => a.fill === "#e8923a" || a.fill === "#3ab6c9");
    expect(bodies).toHaveLength(2);
    const dots = ctx.arcs.filter((a) => a.fill === "#222");
    expect(dots).toHaveLength(3);
    expect(ctx.texts.some((t) => t.startsWith("time"))).toBe(true);
  });

  it("skips captured tasks", () => {
    const view = makeView(stateTick({ remaining: [1] }));
    const ctx = new FakeContext();
    drawFrame(ctx as any, view, fitCamera(view.layout!, 720, 720), 0, 50);
    const bodies = ctx.arcs.filter((a) => a.fill === "#e8923a" || a.fill === "#3ab6c9");
    expect(bodies).toHaveLength(1);
    expect(bodies[0].fill).toBe("#3ab6c9");
  });

  it("halos a joint task an agent is waiting at", () => {
    const view = makeView(stateTick({
      human: { x: 15, y: 5, waiting: true },
      remaining: [1],
    }));
    const ctx = new FakeContext();
    drawFrame(ctx as any, view, fitCamera(view.layout!, 720, 720), 0, 50);
    expect(ctx.arcs.some((a) => a.fill.startsWith("rgba(255, 235"))).toBe(true);
  });

  it("click hit-testing respects the remaining set", () => {
    const view = makeView(stateTick({ remaining: [1] }));
    const cam = fitCamera(view.layout!, 720, 720);
    const [x0, y0] = toScreen(cam, 5, 5);
    const [x1, y1] = toScreen(cam, 15, 5);
    expect(taskAt(view.layout!, cam, x0, y0, [1])).toBeNull();
    expect(taskAt(view.layout!, cam, x1, y1, [1])?.id).toBe(1);
    expect(taskAt(view.layout!, cam, 5, 5, [1])).toBeNull(); // empty space
  });
});
