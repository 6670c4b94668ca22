"""Teleoperation server: one lockstep simulation session per websocket.

Protocol v1, UTF-8 JSON frames. Client sends hello/reset/action/save;
the server answers with init (point cloud, once), one state frame per
reset or action, saved (record path) after save, and error frames for
malformed input. Sessions that stepped at least once are flushed to an
episode record on disconnect, so manual runs survive browser crashes.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

import numpy as np
import websockets

from ..env import CoverageEnv, EnvConfig, SharedGeometry
from ..env.records import EpisodeRecord, StepRow, write_record
from ..physics import quat_to_ypr

PROTO_VERSION = 1


def state_frame(env: CoverageEnv, step_result=None) -> dict:
    info = step_result.info if step_result is not None else None
    return {
        "t": "state",
        "step": env.step_count,
        "sim_time": env.sim_time,
        "capsule": {
            "pos": env.capsule.position.tolist(),
            "quat": env.capsule.orientation.tolist(),
            "vel": env.capsule.linear_velocity.tolist(),
        },
        "magnet": {
            "pos": env.magnet.position.tolist(),
            "ypr": quat_to_ypr(env.magnet.orientation).tolist(),
        },
        "coverage": env.tracker.current_coverage,
        "new_vertices": ([] if info is None
                         else np.asarray(info["new_vertices"]).tolist()),
        "reward": 0.0 if step_result is None else step_result.reward,
        "terminated": False if step_result is None else step_result.terminated,
        "truncated": False if step_result is None else step_result.truncated,
    }


class Session:
    """Simulation state and recording for one connected client."""

    def __init__(self, session_id: int, env_config: EnvConfig,
                 geometry: SharedGeometry, records_dir: Path):
        self.id = session_id
        self.env = CoverageEnv(env_config, geometry=geometry)
        self.records_dir = records_dir
        self.seed = env_config.episode.seed
        self.rows: list[StepRow] = []
        self.termination = "truncated"
        self.active = False
        self.saved_count = 0

    def reset(self, seed: int):
        self.seed = int(seed)
        self.env.reset(self.seed)
        self.rows = []
        self.termination = "truncated"
        self.active = True
        return state_frame(self.env)

    def action(self, ax: float, az: float) -> dict:
        action = np.array([float(ax), float(az)])
        result = self.env.step(action)
        self.rows.append(StepRow(
            step=self.env.step_count,
            sim_time=self.env.sim_time,
            action=np.clip(action, -1.0, 1.0).tolist(),
            reward=result.reward,
            coverage=result.info["current_coverage"],
            violation=result.info["violation"],
        ))
        if result.terminated:
            self.termination = result.info["violation"]
            self.active = False
        elif result.truncated:
            self.active = False
        return state_frame(self.env, result)

    def record(self) -> EpisodeRecord:
        rec = EpisodeRecord(seed=self.seed,
                            env_config=self.env.config.to_dict(),
                            steps=list(self.rows),
                            termination=self.termination)
        if self.rows:
            rec.sim_time = self.rows[-1].sim_time
            rec.final_coverage = self.rows[-1].coverage
        return rec

    def save(self) -> Path:
        self.records_dir.mkdir(parents=True, exist_ok=True)
        self.saved_count += 1
        path = self.records_dir / f"session_{self.id:04d}_{self.saved_count:02d}.jsonl"
        write_record(self.record(), path,
                     summary_path=path.with_suffix(".summary.json"))
        return path


class TeleopServer:
    def __init__(self, env_config: EnvConfig, records_dir: Path):
        self.geometry = SharedGeometry.build(env_config.phantom)
        self.env_config = env_config
        self.records_dir = records_dir
        self.next_session_id = 1
        self.init_frame = json.dumps({
            "t": "init",
            "proto": PROTO_VERSION,
            "vertices": np.round(self.geometry.mesh.vertices, 6).tolist(),
            "vertice_count": self.geometry.mesh.vertex_count,
        })

    async def handle(self, ws):
        session = Session(self.next_session_id, self.env_config, self.geometry,
                          self.records_dir)
        self.next_session_id += 1
        greeted = False

        async def send_error(msg: str):
            await ws.send(json.dumps({"t": "error", "msg": msg}))

        try:
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except (json.JSONDecodeError, UnicodeDecodeError):
                    await send_error("malformed JSON frame")
                    continue
                kind = msg.get("t")
                if kind == "hello":
                    if msg.get("proto") != PROTO_VERSION:
                        await send_error(
                            f"protocol mismatch: server speaks {PROTO_VERSION}")
                        continue
                    greeted = True
                    await ws.send(self.init_frame)
                elif not greeted:
                    await send_error("expected hello first")
                elif kind == "reset":
                    frame = session.reset(int(msg.get("seed", 0)))
                    await ws.send(json.dumps(frame))
                elif kind == "action":
                    if not session.active:
                        await send_error("no active episode; send reset")
                        continue
                    try:
                        ax, az = float(msg["ax"]), float(msg["az"])
                    except (KeyError, TypeError, ValueError):
                        await send_error("action needs numeric ax, az")
                        continue
                    await ws.send(json.dumps(session.action(ax, az)))
                elif kind == "save":
                    if not session.rows:
                        await send_error("nothing to save yet")
                        continue
                    path = session.save()
                    await ws.send(json.dumps({
                        "t": "saved", "path": str(path),
                        "id": f"{session.id:04d}_{session.saved_count:02d}"}))
                else:
                    await send_error(f"unknown message type {kind!r}")
        finally:
            # flush unsaved progress so manual arms survive disconnects
            if session.rows and session.saved_count == 0:
                session.save()


def run_server(host: str, port: int, env_config: EnvConfig,
               records_dir: Path) -> int:
    server = TeleopServer(env_config, records_dir)

    async def main():
        async with websockets.serve(server.handle, host, port, max_size=None):
            print(f"teleop server on ws://{host}:{port} "
                  f"(phantom: {env_config.phantom.kind}, "
                  f"records: {records_dir})", flush=True)
            await asyncio.Future()

    try:
        asyncio.run(main())
    except KeyboardInterrupt:
        print("server stopped")
    except OSError as err:
        print(f"cannot bind {host}:{port}: {err}", flush=True)
        return 1
    return 0
