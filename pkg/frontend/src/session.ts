// Client-side session state. The server is authoritative: coverage shown
// to the operator is always the server's coverage field, never recomputed
// here; the client only keeps the visited set for recoloring points.

import {
  InitFrame,
  SavedFrame,
  StateFrame,
  clampAxis,
} from "./protocol.js";

export type Phase = "idle" | "ready" | "running" | "ended";

export interface ChartPoint {
  simTime: number;
  coverage: number;
}

export class SessionView {
  phase: Phase = "idle";
  vertexCount = 0;
  positions: Float32Array = new Float32Array(0);
  visited: Uint8Array = new Uint8Array(0);
  visitedCount = 0;
  recoloredTotal = 0; // running sum of |new_vertices| over received frames
  coverage = 0;       // server-authoritative percentage
  reward = 0;
  step = 0;
  simTime = 0;
  terminated = false;
  truncated = false;
  violationEnded = false;
  history: ChartPoint[] = [];
  axes: [number, number] = [0, 0];
  awaitingState = false; // lockstep: one in-flight action at most
  lastSaved: SavedFrame | null = null;

  ingestInit(frame: InitFrame): void {
    this.vertexCount = frame.vertice_count;
    this.positions = new Float32Array(frame.vertices.length * 3);
    frame.vertices.forEach((v, i) => {
      this.positions[3 * i] = v[0];
      this.positions[3 * i + 1] = v[1];
      this.positions[3 * i + 2] = v[2];
    });
    this.visited = new Uint8Array(frame.vertices.length);
    this.visitedCount = 0;
    this.recoloredTotal = 0;
    this.coverage = 0;
    this.history = [];
    this.phase = "ready";
  }

  noteReset(): void {
    this.visited.fill(0);
    this.visitedCount = 0;
    this.recoloredTotal = 0;
    this.coverage = 0;
    this.reward = 0;
    this.step = 0;
    this.simTime = 0;
    this.terminated = false;
    this.truncated = false;
    this.violationEnded = false;
    this.history = [];
    this.lastSaved = null;
    this.awaitingState = true; // reset is answered by a state frame
  }

  /** Returns the vertex ids recolored by this frame. */
  ingestState(frame: StateFrame): number[] {
    this.awaitingState = false;
    this.step = frame.step;
    this.simTime = frame.sim_time;
    this.coverage = frame.coverage; // display is server-authoritative
    this.reward = frame.reward;
    const fresh: number[] = [];
    for (const id of frame.new_vertices) {
      if (id >= 0 && id < this.visited.length && !this.visited[id]) {
        this.visited[id] = 1;
        this.visitedCount += 1;
        fresh.push(id);
      }
    }
    this.recoloredTotal += frame.new_vertices.length;
    if (frame.step > 0 || this.history.length === 0) {
      this.history.push({ simTime: frame.sim_time, coverage: frame.coverage });
    }
    this.terminated = frame.terminated;
    this.truncated = frame.truncated;
    if (frame.terminated) this.violationEnded = true;
    if (frame.terminated || frame.truncated) {
      this.phase = "ended";
    } else {
      this.phase = "running";
    }
    return fresh;
  }

  ingestSaved(frame: SavedFrame): void {
    this.lastSaved = frame;
  }

  setAxes(ax: number, az: number): void {
    this.axes = [clampAxis(ax), clampAxis(az)];
  }

  /** Lockstep gate: one action per received state frame. */
  canSendAction(): boolean {
    return this.phase === "running" && !this.awaitingState;
  }

  noteActionSent(): void {
    this.awaitingState = true;
  }

  canSave(): boolean {
    return this.step > 0;
  }

  coverageCsv(): string {
    const lines = ["sim_time,coverage"];
    for (const p of this.history) {
      lines.push(`${p.simTime},${p.coverage}`);
    }
    return lines.join("\n") + "\n";
  }
}
