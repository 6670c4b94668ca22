import { describe, expect, it } from "vitest";

import {
  PROTO_VERSION,
  actionMessage,
  clampAxis,
  helloMessage,
  parseServerFrame,
  resetMessage,
} from "../src/protocol.js";

describe("client messages", () => {
  it("hello carries the protocol version", () => {
    expect(JSON.parse(helloMessage())).toEqual({ t: "hello", proto: PROTO_VERSION });
  });

  it("reset carries an unsigned integer seed", () => {
    expect(JSON.parse(resetMessage(42.9))).toEqual({ t: "reset", seed: 42 });
  });

  it("action axes are clamped to [-1, 1]", () => {
    const msg = JSON.parse(actionMessage(3.5, -7));
    expect(msg).toEqual({ t: "action", ax: 1, az: -1 });
    expect(clampAxis(Number.NaN)).toBe(0);
    expect(clampAxis(0.25)).toBe(0.25);
  });
});

describe("server frame parsing", () => {
  it("accepts a valid init frame", () => {
    const frame = parseServerFrame(JSON.stringify({
      t: "init", proto: 1, vertices: [[0, 0, 0], [1, 0, 0]], vertice_count: 2,
    }));
    expect(frame.t).toBe("init");
  });

  it("accepts a valid state frame and ignores unknown fields", () => {
    const frame = parseServerFrame(JSON.stringify({
      t: "state", step: 3, sim_time: 0.3,
      capsule: { pos: [0, 0, 0], quat: [1, 0, 0, 0] },
      magnet: { pos: [0, 0.2, 0], ypr: [0, 0, 0] },
      coverage: 12.5, new_vertices: [1, 2], reward: 0.05,
      terminated: false, truncated: false,
      extra_field_from_the_future: true,
    }));
    expect(frame.t).toBe("state");
    if (frame.t === "state") expect(frame.coverage).toBe(12.5);
  });

  it("rejects malformed JSON", () => {
    expect(() => parseServerFrame("{nope")).toThrow(/malformed/);
  });

  it("rejects unknown frame types", () => {
    expect(() => parseServerFrame(JSON.stringify({ t: "warp" })))
      .toThrow(/unknown frame type/);
  });

  it("rejects structurally broken state frames", () => {
    expect(() => parseServerFrame(JSON.stringify({
      t: "state", step: 1, coverage: "high",
    }))).toThrow(/bad state frame/);
  });
});
