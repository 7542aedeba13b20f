// Canvas renderer. One-agent tasks are orange circles with a single dot,
// joint tasks cyan circles with two dots; a halo marks a task where an
// agent is waiting for help. No physics here: positions come interpolated
// from the view buffer.

import { LayoutDef, TaskDef } from "./protocol.js";
import { ClientViewState } from "./view.js";

export const COLORS: Record<string, string> = {
  one_agent: "#e8923a",
  joint: "#3ab6c9",
  human: "#4a6cd4",
  red: "#d44a4a",
  blue: "#4a8ad4",
  yellow: "#d4c44a",
  green: "#56b96a",
};

export interface Camera {
  scale: number;
  offsetX: number;
  offsetY: number;
}

export function fitCamera(layout: LayoutDef, width: number, height: number): Camera {
  const dom = layout.domain;
  const w = dom.x_max - dom.x_min;
  const h = dom.y_max - dom.y_min;
  const scale = Math.min(width / w, height / h) * 0.92;
  return {
    scale,
    offsetX: (width - w * scale) / 2 - dom.x_min * scale,
    offsetY: (height - h * scale) / 2 - dom.y_min * scale,
  };
}

export function toScreen(cam: Camera, x: number, y: number): [number, number] {
  return [x * cam.scale + cam.offsetX, y * cam.scale + cam.offsetY];
}

export function taskAt(
  layout: LayoutDef,
  cam: Camera,
  px: number,
  py: number,
  remaining: number[],
): TaskDef | null {
  for (const task of layout.tasks) {
    if (!remaining.includes(task.id)) continue;
    const [sx, sy] = toScreen(cam, task.x, task.y);
    const r = 0.55 * cam.scale;
    if ((px - sx) ** 2 + (py - sy) ** 2 <= r * r) return task;
  }
  return null;
}

function circle(ctx: CanvasRenderingContext2D, x: number, y: number, r: number,
                fill: string): void {
  ctx.beginPath();
  ctx.arc(x, y, r, 0, Math.PI * 2);
  ctx.fillStyle = fill;
  ctx.fill();
}

export function drawFrame(
  ctx: CanvasRenderingContext2D,
  view: ClientViewState,
  cam: Camera,
  now: number,
  tickMs: number,
): void {
  const layout = view.layout;
  const tick = view.lastTick;
  ctx.clearRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  if (!layout || !tick) return;

  const waitingAt: number[] = [];
  if (tick.human.waiting || tick.robot.waiting) {
    // the waiting agent stands on the joint task it is holding
    for (const task of layout.tasks) {
      if (!tick.remaining.includes(task.id) || task.kind !== "joint") continue;
      for (const agent of [tick.human, tick.robot]) {
        const d = (agent.x - task.x) ** 2 + (agent.y - task.y) ** 2;
        if (agent.waiting && d < 1.0) waitingAt.push(task.id);
      }
    }
  }

  for (const task of layout.tasks) {
    if (!tick.remaining.includes(task.id)) continue;
    const [sx, sy] = toScreen(cam, task.x, task.y);
    const r = 0.45 * cam.scale;
    if (waitingAt.includes(task.id)) {
      circle(ctx, sx, sy, r * 1.5, "rgba(255, 235, 120, 0.55)");
    }
    circle(ctx, sx, sy, r, COLORS[task.kind]);
    ctx.fillStyle = "#222";
    if (task.kind === "one_agent") {
      circle(ctx, sx, sy, r * 0.18, "#222");
    } else {
      circle(ctx, sx - r * 0.3, sy, r * 0.18, "#222");
      circle(ctx, sx + r * 0.3, sy, r * 0.18, "#222");
    }
  }

  const pos = view.interpolated(now, tickMs);
  if (pos) {
    const [hx, hy] = toScreen(cam, pos.human.x, pos.human.y);
    const [rx, ry] = toScreen(cam, pos.robot.x, pos.robot.y);
    circle(ctx, hx, hy, 0.3 * cam.scale, COLORS.human);
    circle(ctx, rx, ry, 0.3 * cam.scale, COLORS[view.robotTag] ?? "#999");
    if (view.replanFlashUntil > now) {
      ctx.beginPath();
      ctx.arc(rx, ry, 0.5 * cam.scale, 0, Math.PI * 2);
      ctx.strokeStyle = "#fff";
      ctx.lineWidth = 2;
      ctx.stroke();
    }
  }

  ctx.fillStyle = "#eee";
  ctx.font = "16px monospace";
  ctx.fillText(`time ${view.timer}`, 12, 22);
  ctx.fillText(
    `trial ${view.trialIndex + 1}/${view.trialCount}  robot: ${view.robotTag}`,
    12, 42,
  );
  if (view.selectable) {
    ctx.fillText("click a task", 12, 62);
  }
}
