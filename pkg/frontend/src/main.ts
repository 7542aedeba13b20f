// Entry point: wires the session client to a canvas. The server address
// comes from the `server` query parameter, e.g. ?server=ws://host:8000/ws

import { SessionClient, Transport } from "./net.js";
import { drawFrame, fitCamera, taskAt } from "./render.js";

const TICK_MS = 50; // matches the server's default 20 ticks per second

function webSocketTransport(url: string): Transport {
  const ws = new WebSocket(url);
  const t: Transport = {
    send: (data) => ws.send(data),
    close: () => ws.close(),
    onmessage: null,
    onopen: null,
    onclose: null,
  };
  ws.onmessage = (ev) => t.onmessage?.(String(ev.data));
  ws.onopen = () => t.onopen?.();
  ws.onclose = () => t.onclose?.();
  return t;
}

export function start(): void {
  const params = new URLSearchParams(window.location.search);
  const url = params.get("server") ?? "ws://127.0.0.1:8000/ws";

  const canvas = document.getElementById("arena") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d")!;
  const banner = document.getElementById("banner")!;
  const prefs = document.getElementById("prefs")!;

  const client = new SessionClient(url, webSocketTransport);
  client.connect();

  canvas.addEventListener("click", (ev) => {
    const view = client.view;
    if (!view.layout || !view.lastTick) return;
    const cam = fitCamera(view.layout, canvas.width, canvas.height);
    const rect = canvas.getBoundingClientRect();
    const task = taskAt(view.layout, cam, ev.clientX - rect.left,
                        ev.clientY - rect.top, view.lastTick.remaining);
    if (task) client.submitGoal(task.id);
  });

  function renderPrefs(): void {
    const options = client.view.preferenceOptions;
    prefs.innerHTML = "";
    if (!options || client.view.preferenceSent) return;
    const label = document.createElement("span");
    label.textContent = "Which robot did you prefer? ";
    prefs.appendChild(label);
    for (const tag of options) {
      const btn = document.createElement("button");
      btn.textContent = tag;
      btn.onclick = () => {
        client.submitPreference(tag);
        renderPrefs();
      };
      prefs.appendChild(btn);
    }
  }

  function frame(): void {
    const view = client.view;
    if (view.layout) {
      const cam = fitCamera(view.layout, canvas.width, canvas.height);
      drawFrame(ctx, view, cam, Date.now(), TICK_MS);
    }
    banner.textContent = view.connected
      ? (view.sessionComplete ? "session complete, thanks!" : "")
      : "connection lost, reconnecting...";
    renderPrefs();
    requestAnimationFrame(frame);
  }
  requestAnimationFrame(frame);
}

if (typeof window !== "undefined" && document.getElementById("arena")) {
  start();
}
