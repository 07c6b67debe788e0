"""Live-control service: one simulation per session, steered over a socket.

Commands are validated on arrival (malformed payloads are protocol
errors), queued, and applied atomically at the next tick boundary; the
ack names the tick at which the command took effect.  Snapshots go out
after every tick (configurable), filtered by the session's channel
subscriptions.  State-changing commands are appended to a record log so
a steered session can be replayed bit-exactly from seed plus log.
"""

from __future__ import annotations

import asyncio
import json
import logging
import time
from pathlib import Path
from typing import Any, Optional

from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from kebalab.experiments import ScenarioConfig, build_simulation
from kebalab.persistence import read_save, write_save
from kebalab.sim import Simulation
from kebalab.world import LOCOMOTION_MODES, PHENOMENON_KINDS

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
DEFAULT_CHANNELS = frozenset({"phenomena", "animats", "koncepts", "traces"})

COMMAND_OPS = (
    "spawn_phenomenon", "delete_phenomenon", "set_locomotion", "set_noise",
    "pause", "resume", "step", "set_speed", "save", "load", "subscribe",
)


class CommandRejected(Exception):
    """Structurally valid command targeting something that does not exist."""


def validate_command(command: Any) -> Optional[str]:
    """Structural validation before enqueue; returns a reason when malformed."""
    if not isinstance(command, dict):
        return "command must be an object"
    op = command.get("op")
    if op not in COMMAND_OPS:
        return f"unknown op {op!r}"
    if op == "spawn_phenomenon":
        if command.get("kind") not in PHENOMENON_KINDS:
            return f"spawn kind must be one of {PHENOMENON_KINDS}"
        position = command.get("position")
        if position is not None and (
                not isinstance(position, (list, tuple)) or len(position) != 2
                or not all(isinstance(x, (int, float)) for x in position)):
            return "position must be [x, y] or null for random"
    elif op == "delete_phenomenon":
        if not isinstance(command.get("phenomenon_id"), int):
            return "phenomenon_id must be an integer"
    elif op == "set_locomotion":
        if not isinstance(command.get("animat_id"), int):
            return "animat_id must be an integer"
        if command.get("mode") not in LOCOMOTION_MODES:
            return f"mode must be one of {LOCOMOTION_MODES}"
    elif op == "set_noise":
        amplitude = command.get("amplitude")
        if not isinstance(amplitude, (int, float)) or not 0.0 <= amplitude <= 1.0:
            return "amplitude must be a number in [0, 1]"
    elif op == "step":
        ticks = command.get("ticks", 1)
        if not isinstance(ticks, int) or ticks < 1 or ticks > 100_000:
            return "ticks must be an integer in [1, 100000]"
    elif op == "set_speed":
        tps = command.get("ticks_per_second")
        if not isinstance(tps, (int, float)) or tps <= 0:
            return "ticks_per_second must be positive"
    elif op in ("save", "load"):
        if not isinstance(command.get("path"), str) or not command["path"]:
            return "path must be a non-empty string"
    elif op == "subscribe":
        channels = command.get("channels")
        if not isinstance(channels, list):
            return "channels must be a list"
        for channel in channels:
            if channel in DEFAULT_CHANNELS:
                continue
            if isinstance(channel, str) and channel.startswith("hierarchy:"):
                suffix = channel.split(":", 1)[1]
                if suffix.isdigit():
                    continue
            return f"unknown channel {channel!r}"
    return None


class LabSession:
    """Synchronous session engine; the socket layer is a thin wrapper."""

    def __init__(self, sim: Simulation, record_path: Optional[str | Path] = None,
                 start_paused: bool = False, snapshot_every: int = 1):
        self.sim = sim
        self.paused = start_paused
        self.ticks_per_second = 20.0
        self.snapshot_every = max(1, snapshot_every)
        self.channels: set[str] = set(DEFAULT_CHANNELS)
        self.pending: list[tuple[Any, dict]] = []
        self._announced_dead: set[int] = set()
        self._last_traces: list[dict] = []
        self._record_path = Path(record_path) if record_path else None
        if self._record_path:
            self._record_path.parent.mkdir(parents=True, exist_ok=True)
            self._record_path.write_text(json.dumps({
                "record_version": 1,
                "scenario": sim.scenario,
            }) + "\n")

    # -- command intake --------------------------------------------------------

    def submit(self, msg_id: Any, command: dict) -> Optional[dict]:
        """Queue a command; returns a protocol-error message when malformed."""
        reason = validate_command(command)
        if reason is not None:
            return {"type": "error", "id": msg_id, "reason": reason}
        self.pending.append((msg_id, command))
        return None

    # -- boundary processing -----------------------------------------------------

    def process_boundary(self) -> tuple[list[dict], list[dict]]:
        """Apply all queued commands at the current tick boundary.

        Returns (acks, snapshots); snapshots come from explicit step
        commands executed while paused.
        """
        acks: list[dict] = []
        snapshots: list[dict] = []
        queued, self.pending = self.pending, []
        for msg_id, command in queued:
            try:
                detail = self._apply(command, snapshots)
                acks.append({"type": "ack", "id": msg_id, "ok": True,
                             "tick": self.sim.tick, "detail": detail})
                self._record(command)
            except CommandRejected as exc:
                acks.append({"type": "ack", "id": msg_id, "ok": False,
                             "tick": self.sim.tick, "reason": str(exc)})
        return acks, snapshots

    def _apply(self, command: dict, snapshots: list[dict]) -> dict:
        op = command["op"]
        world = self.sim.world
        if op == "spawn_phenomenon":
            position = command.get("position")
            self.sim.schedule_spawn(
                self.sim.tick, command["kind"],
                None if position is None else (float(position[0]), float(position[1])),
                command.get("size"))
            return {"effective_tick": self.sim.tick}
        if op == "delete_phenomenon":
            if not world.remove(command["phenomenon_id"]):
                raise CommandRejected(f"unknown phenomenon id {command['phenomenon_id']}")
            return {}
        if op == "set_locomotion":
            body = world.find_animat(command["animat_id"])
            if body is None:
                raise CommandRejected(f"unknown animat id {command['animat_id']}")
            body.locomotion = command["mode"]
            return {}
        if op == "set_noise":
            world.params.noise_amplitude = float(command["amplitude"])
            return {}
        if op == "pause":
            self.paused = True
            return {}
        if op == "resume":
            self.paused = False
            return {}
        if op == "step":
            ticks = command.get("ticks", 1)
            for _ in range(ticks):
                snapshot = self.advance_tick()
                if snapshot is not None:
                    snapshots.append(snapshot)
            return {"ticks_run": ticks}
        if op == "set_speed":
            self.ticks_per_second = float(command["ticks_per_second"])
            return {}
        if op == "save":
            target = write_save(self.sim, command["path"])
            return {"path": str(target)}
        if op == "load":
            try:
                self.sim = read_save(command["path"])
            except Exception as exc:
                raise CommandRejected(f"load failed: {exc}") from None
            self._announced_dead.clear()
            self._last_traces = []
            return {"tick": self.sim.tick}
        if op == "subscribe":
            self.channels = set(command["channels"])
            return {"channels": sorted(self.channels)}
        raise CommandRejected(f"unhandled op {op!r}")  # unreachable after validation

    def _record(self, command: dict) -> None:
        # timing ops do not shape the trajectory; replay re-applies the rest
        if self._record_path is None:
            return
        if command["op"] in ("pause", "resume", "step", "set_speed", "subscribe", "save"):
            return
        with self._record_path.open("a") as handle:
            handle.write(json.dumps({"tick": self.sim.tick, "command": command}) + "\n")

    # -- ticking -------------------------------------------------------------

    def advance_tick(self) -> Optional[dict]:
        traces = self.sim.run_tick()
        self._last_traces = [json.loads(t.to_json_line()) for t in traces]
        if self.sim.tick % self.snapshot_every == 0:
            return self.snapshot()
        return None

    # -- snapshots -------------------------------------------------------------

    def snapshot(self) -> dict:
        """Read-only view of the post-tick state, filtered by subscriptions."""
        sim = self.sim
        message: dict[str, Any] = {
            "type": "snapshot",
            "schema_version": PROTOCOL_VERSION,
            "tick": sim.tick,
            "paused": self.paused,
            "noise_amplitude": sim.world.params.noise_amplitude,
            "world_size": [sim.world.params.width, sim.world.params.height],
            "emitted_at": time.time(),
        }
        if "phenomena" in self.channels:
            message["phenomena"] = [
                {"id": ph.id, "kind": ph.kind,
                 "position": [ph.position[0], ph.position[1]],
                 "size": ph.size, "age": ph.age,
                 "rgb": [ph.qualia.redness, ph.qualia.greenness, ph.qualia.blueness]}
                for ph in sim.world.phenomena
            ]
        if "animats" in self.channels:
            animats = []
            for body in sim.world.animats:
                alive = body.physiology.alive
                if not alive:
                    if body.id in self._announced_dead:
                        continue  # listed dead exactly once, then dropped
                    self._announced_dead.add(body.id)
                animats.append({
                    "id": body.id,
                    "position": [body.position[0], body.position[1]],
                    "heading": body.heading,
                    "locomotion": body.locomotion,
                    "current_action": body.current_action,
                    "perception_radius": body.perception_radius,
                    "size": body.size,
                    "alive": alive,
                    "physiology": {
                        "energy": body.physiology.energy,
                        "hunger": body.physiology.hunger,
                        "thirst": body.physiology.thirst,
                    },
                })
            message["animats"] = animats
        if "koncepts" in self.channels:
            message["koncepts"] = {
                str(animat_id): {
                    "per_level": {str(k): v
                                  for k, v in controller.hierarchy.koncept_counts().items()},
                    "total_created": controller.hierarchy.total_created(),
                    "creation_refusals": controller.hierarchy.creation_refusals,
                }
                for animat_id, controller in sorted(sim.controllers.items())
                if controller.kind == "keba"
            }
        if "traces" in self.channels:
            message["traces"] = self._last_traces
        dumps = {}
        for channel in self.channels:
            if channel.startswith("hierarchy:"):
                animat_id = int(channel.split(":", 1)[1])
                controller = sim.controllers.get(animat_id)
                if controller is not None and controller.kind == "keba":
                    dumps[str(animat_id)] = controller.hierarchy.export_state()
        if dumps:
            message["hierarchies"] = dumps
        return message

    def hello(self) -> dict:
        return {
            "type": "hello",
            "schema_version": PROTOCOL_VERSION,
            "tick": self.sim.tick,
            "paused": self.paused,
            "ticks_per_second": self.ticks_per_second,
            "channels": sorted(self.channels),
            "animat_ids": [body.id for body in self.sim.world.animats],
        }


# ---------------------------------------------------------------------------
# command-log replay
# ---------------------------------------------------------------------------

def replay_command_log(record_path: str | Path, until_tick: int) -> Simulation:
    """Rebuild the scenario and re-apply the recorded commands at their
    boundaries; with the same seed this reproduces the steered trajectory."""
    lines = Path(record_path).read_text().splitlines()
    header = json.loads(lines[0])
    if header.get("record_version") != 1:
        raise ValueError(f"unsupported record version {header.get('record_version')!r}")
    config = ScenarioConfig.from_dict(header["scenario"])
    session = LabSession(build_simulation(config), start_paused=True)
    by_tick: dict[int, list[dict]] = {}
    for line in lines[1:]:
        entry = json.loads(line)
        by_tick.setdefault(entry["tick"], []).append(entry["command"])
    while session.sim.tick < until_tick:
        for command in by_tick.get(session.sim.tick, []):
            session.submit(None, command)
        acks, _ = session.process_boundary()
        for ack in acks:
            if not ack["ok"]:
                raise ValueError(f"replayed command rejected: {ack['reason']}")
        session.advance_tick()
    return session.sim


# ---------------------------------------------------------------------------
# socket layer
# ---------------------------------------------------------------------------

def create_app(scenario: ScenarioConfig, record_path: Optional[str] = None,
               start_paused: bool = False, snapshot_every: int = 1) -> FastAPI:
    """FastAPI app serving one fresh session per websocket connection."""
    app = FastAPI(title="kebalab", version=str(PROTOCOL_VERSION))

    @app.get("/health")
    def health():
        return {"ok": True, "schema_version": PROTOCOL_VERSION}

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        session = LabSession(build_simulation(scenario), record_path=record_path,
                             start_paused=start_paused, snapshot_every=snapshot_every)
        await websocket.send_json(session.hello())
        stop = asyncio.Event()

        async def receiver():
            try:
                while True:
                    raw = await websocket.receive_json()
                    if raw.get("type") != "command":
                        await websocket.send_json({
                            "type": "error", "id": raw.get("id"),
                            "reason": "expected a command message"})
                        continue
                    error = session.submit(raw.get("id"), raw.get("command"))
                    if error is not None:
                        await websocket.send_json(error)
            except WebSocketDisconnect:
                stop.set()
            except Exception:
                stop.set()

        async def ticker():
            try:
                while not stop.is_set():
                    acks, snapshots = session.process_boundary()
                    for message in acks + snapshots:
                        await websocket.send_json(message)
                    if session.paused:
                        await asyncio.sleep(0.02)
                        continue
                    snapshot = session.advance_tick()
                    if snapshot is not None:
                        await websocket.send_json(snapshot)
                    await asyncio.sleep(1.0 / session.ticks_per_second)
            except (WebSocketDisconnect, RuntimeError):
                stop.set()

        receive_task = asyncio.create_task(receiver())
        tick_task = asyncio.create_task(ticker())
        await stop.wait()
        for task in (receive_task, tick_task):
            task.cancel()
        log.info("session closed at tick %d", session.sim.tick)

    return app


def serve(scenario: ScenarioConfig, host: str = "127.0.0.1", port: int = 8765,
          record_path: Optional[str] = None, start_paused: bool = False) -> None:
    import uvicorn

    app = create_app(scenario, record_path=record_path, start_paused=start_paused)
    uvicorn.run(app, host=host, port=port, log_level="warning")
