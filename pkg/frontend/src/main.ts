// Console wiring: websocket lifecycle, lockstep drive loop, DOM updates.

import { AxisInput } from "./input.js";
import { CoverageChart } from "./chart.js";
import { PointCloudRenderer } from "./render.js";
import { SessionView } from "./session.js";
import {
  actionMessage,
  helloMessage,
  parseServerFrame,
  resetMessage,
  saveMessage,
} from "./protocol.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const session = new SessionView();
const input = new AxisInput();
const renderer = new PointCloudRenderer(el<HTMLCanvasElement>("cloud"));
const chart = new CoverageChart(el<HTMLCanvasElement>("chart"));

const banner = el<HTMLDivElement>("banner");
const coverageLabel = el<HTMLSpanElement>("coverage");
const rewardLabel = el<HTMLSpanElement>("reward");
const stepLabel = el<HTMLSpanElement>("step");
const savedLabel = el<HTMLSpanElement>("saved");
const resetBtn = el<HTMLButtonElement>("reset");
const saveBtn = el<HTMLButtonElement>("save");
const csvBtn = el<HTMLButtonElement>("csv");
const seedField = el<HTMLInputElement>("seed");

let socket: WebSocket | null = null;
let lastCapsule: number[] | undefined;
let lastMagnet: number[] | undefined;
let maxTime = 150;
const STEP_MS = 100; // pace the lockstep at the simulator's 0.1 s per step
let lastActionAt = 0;

function showBanner(text: string, kind: "error" | "info"): void {
  banner.textContent = text;
  banner.className = `banner ${kind}`;
  banner.style.display = "block";
}

function hideBanner(): void {
  banner.style.display = "none";
}

function redraw(): void {
  renderer.draw(session.positions, session.visited, lastCapsule, lastMagnet);
  chart.draw(session.history, maxTime);
  coverageLabel.textContent = `${session.coverage.toFixed(2)}%`;
  rewardLabel.textContent = session.reward.toFixed(4);
  stepLabel.textContent = `${session.step} (${session.simTime.toFixed(1)} s)`;
  saveBtn.disabled = !session.canSave();
  csvBtn.disabled = session.history.length === 0;
}

function sendAction(): void {
  if (!socket || !session.canSendAction()) return;
  session.setAxes(input.ax, input.az);
  socket.send(actionMessage(session.axes[0], session.axes[1]));
  session.noteActionSent();
  lastActionAt = performance.now();
}

function scheduleNextAction(): void {
  const wait = Math.max(0, STEP_MS - (performance.now() - lastActionAt));
  setTimeout(sendAction, wait);
}

function serverUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("server")
    ?? `ws://${window.location.hostname || "127.0.0.1"}:8765`;
}

function connect(): void {
  const url = serverUrl();
  showBanner(`connecting to ${url} ...`, "info");
  socket = new WebSocket(url);
  socket.onopen = () => socket?.send(helloMessage());
  socket.onclose = () => {
    showBanner("connection lost - reload to reconnect", "error");
    session.phase = "idle";
  };
  socket.onerror = () => showBanner(`cannot reach ${url}`, "error");
  socket.onmessage = (event) => {
    let frame;
    try {
      frame = parseServerFrame(String(event.data));
    } catch (err) {
      showBanner(String(err), "error");
      return;
    }
    switch (frame.t) {
      case "init":
        session.ingestInit(frame);
        renderer.fitTo(session.positions);
        hideBanner();
        showBanner(`connected: ${frame.vertice_count} vertices - press Start`,
                   "info");
        redraw();
        break;
      case "state": {
        lastCapsule = frame.capsule.pos;
        lastMagnet = frame.magnet.pos;
        session.ingestState(frame);
        if (session.phase === "ended") {
          const cause = session.violationEnded
            ? "boundary violation (reward -0.1)" : "step limit reached";
          showBanner(`episode over: ${cause} - save or restart`, "info");
        } else {
          hideBanner();
          scheduleNextAction(); // lockstep: one action per state frame
        }
        redraw();
        break;
      }
      case "saved":
        session.ingestSaved(frame);
        savedLabel.textContent = `record ${frame.id} -> ${frame.path}`;
        break;
      case "error":
        showBanner(`server: ${frame.msg}`, "error");
        break;
    }
  };
}

resetBtn.addEventListener("click", () => {
  if (!socket || socket.readyState !== WebSocket.OPEN) return;
  session.noteReset();
  savedLabel.textContent = "";
  socket.send(resetMessage(Number(seedField.value) || 0));
});

saveBtn.addEventListener("click", () => {
  if (socket && session.canSave()) socket.send(saveMessage());
});

csvBtn.addEventListener("click", () => {
  const blob = new Blob([session.coverageCsv()], { type: "text/csv" });
  const a = document.createElement("a");
  a.href = URL.createObjectURL(blob);
  a.download = "coverage.csv";
  a.click();
  URL.revokeObjectURL(a.href);
});

input.attachKeyboard(window);
input.attachJoystick(el<HTMLDivElement>("pad"), el<HTMLDivElement>("knob"));
renderer.attachOrbitControls();
setInterval(redraw, 250); // keep orbit interaction fresh between frames
connect();
