// Wire protocol v1: UTF-8 JSON frames over one websocket.
// Unknown fields are ignored; unknown frame types surface as parse errors
// so the UI can show a banner without dropping the session.

export const PROTO_VERSION = 1;

export interface InitFrame {
  t: "init";
  proto: number;
  vertices: number[][];
  vertice_count: number;
}

export interface BodyState {
  pos: number[];
  quat?: number[];
  ypr?: number[];
  vel?: number[];
}

export interface StateFrame {
  t: "state";
  step: number;
  sim_time: number;
  capsule: BodyState;
  magnet: BodyState;
  coverage: number;
  new_vertices: number[];
  reward: number;
  terminated: boolean;
  truncated: boolean;
}

export interface SavedFrame {
  t: "saved";
  path: string;
  id: string;
}

export interface ErrorFrame {
  t: "error";
  msg: string;
}

export type ServerFrame = InitFrame | StateFrame | SavedFrame | ErrorFrame;

export function helloMessage(): string {
  return JSON.stringify({ t: "hello", proto: PROTO_VERSION });
}

export function resetMessage(seed: number): string {
  return JSON.stringify({ t: "reset", seed: Math.floor(seed) >>> 0 });
}

export function actionMessage(ax: number, az: number): string {
  return JSON.stringify({ t: "action", ax: clampAxis(ax), az: clampAxis(az) });
}

export function saveMessage(): string {
  return JSON.stringify({ t: "save" });
}

export function clampAxis(v: number): number {
  if (!Number.isFinite(v)) return 0;
  return Math.max(-1, Math.min(1, v));
}

function isNumberArray(v: unknown, len?: number): v is number[] {
  return Array.isArray(v) && (len === undefined || v.length === len) &&
    v.every((x) => typeof x === "number" && Number.isFinite(x));
}

export function parseServerFrame(raw: string): ServerFrame {
  let data: any;
  try {
    data = JSON.parse(raw);
  } catch {
    throw new Error("malformed JSON from server");
  }
  switch (data?.t) {
    case "init": {
      if (typeof data.vertice_count !== "number" || !Array.isArray(data.vertices)) {
        throw new Error("bad init frame");
      }
      return data as InitFrame;
    }
    case "state": {
      if (typeof data.step !== "number" || typeof data.coverage !== "number" ||
          !isNumberArray(data.capsule?.pos, 3) || !isNumberArray(data.magnet?.pos, 3) ||
          !Array.isArray(data.new_vertices)) {
        throw new Error("bad state frame");
      }
      return data as StateFrame;
    }
    case "saved": {
      if (typeof data.path !== "string") throw new Error("bad saved frame");
      return data as SavedFrame;
    }
    case "error": {
      return { t: "error", msg: String(data.msg ?? "unknown server error") };
    }
    default:
      throw new Error(`unknown frame type ${String(data?.t)}`);
  }
}
