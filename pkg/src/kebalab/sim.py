"""Simulation orchestrator: one world, its animats, and the named RNG streams.

Per-tick order is fixed: the world steps first (aging, transitions,
spawns, locomotion), then each animat runs its perception/action/learning
cycle in ascending id order.  Commands from a live session and scheduled
scenario spawns both enter through the tick boundary, so a seed plus a
command log fully determines a trajectory.
"""

from __future__ import annotations

from random import Random
from typing import Optional

from kebalab.agent import Controller, TickTrace, tick_animat
from kebalab.world import WorldState, step_world


def stream_name_world() -> str:
    return "world"


def stream_name_noise() -> str:
    return "noise"


def stream_name_links(animat_id: int) -> str:
    return f"links:{animat_id}"


def stream_name_actions(animat_id: int) -> str:
    return f"actions:{animat_id}"


def make_stream(seed, name: str) -> Random:
    """Named deterministic stream; string seeding hashes via SHA-512, so the
    mapping is stable across processes and platforms."""
    return Random(f"{seed}/{name}")


class Simulation:
    """Single-threaded owner of one running scenario."""

    def __init__(self, world: WorldState, controllers: dict[int, Controller],
                 rngs: dict[str, Random], scenario: Optional[dict] = None,
                 spawn_schedule: Optional[dict[int, list[dict]]] = None,
                 tick: int = 0):
        missing = {body.id for body in world.animats} - set(controllers)
        if missing:
            raise ValueError(f"animats without controllers: {sorted(missing)}")
        for name in ("world", "noise"):
            if name not in rngs:
                raise ValueError(f"missing rng stream {name!r}")
        self.world = world
        self.controllers = controllers
        self.rngs = rngs
        self.scenario = scenario or {}
        self.spawn_schedule = spawn_schedule or {}
        self.tick = tick

    def schedule_spawn(self, tick: int, kind: str,
                       position: Optional[tuple[float, float]] = None,
                       size: Optional[float] = None) -> None:
        self.spawn_schedule.setdefault(tick, []).append(
            {"kind": kind, "position": position, "size": size}
        )

    def run_tick(self) -> list[TickTrace]:
        scheduled = self.spawn_schedule.pop(self.tick, [])
        step_world(self.world, self.rngs["world"], scheduled)
        traces = []
        for body in self.world.animats:  # kept sorted by id
            traces.append(tick_animat(
                self.world, body, self.controllers[body.id],
                self.rngs["noise"], self.tick,
            ))
        self.tick += 1
        return traces

    def run(self, ticks: int, stop_when_all_dead: bool = True) -> list[list[TickTrace]]:
        history = []
        for _ in range(ticks):
            history.append(self.run_tick())
            if stop_when_all_dead and not self.any_alive():
                break
        return history

    def any_alive(self) -> bool:
        return any(body.physiology.alive for body in self.world.animats)
