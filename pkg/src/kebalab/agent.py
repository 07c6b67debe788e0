"""Per-animat controllers: koncept-driven, random, or inert.

One controller per animat, no shared state between animats.  The tick
order is fixed and part of the determinism contract: perceive, then the
controller picks an action (for koncept animats this runs the full
hierarchy update first), then the action is applied, then physiology,
then reinforcement from the action's stimulus.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from random import Random
from typing import Optional

from kebalab.core import ACTION_NONE, ACTIONS, Hierarchy, KebaParams, StimulusSignal
from kebalab.world import AnimatBody, WorldState, apply_action, perceive, physiology_step

CONTROLLER_KINDS = ("keba", "random", "none")


@dataclass
class Controller:
    kind: str
    hierarchy: Optional[Hierarchy] = None
    rng: Optional[Random] = None  # random kind: the policy; keba: exploration

    def __post_init__(self):
        if self.kind not in CONTROLLER_KINDS:
            raise ValueError(f"unknown controller kind {self.kind!r}")
        if self.kind == "keba" and self.hierarchy is None:
            raise ValueError("keba controller requires a hierarchy")
        if self.kind == "keba" and self.rng is None and self.hierarchy.params.exploration_rate > 0:
            raise ValueError("keba controller with exploration requires an rng stream")
        if self.kind == "random" and self.rng is None:
            raise ValueError("random controller requires an rng stream")


def make_controller(kind: str, keba_params: Optional[KebaParams] = None,
                    link_rng: Optional[Random] = None,
                    action_rng: Optional[Random] = None,
                    noise_amplitude: float = 0.0) -> Controller:
    if kind == "keba":
        params = (keba_params or KebaParams()).resolved(noise_amplitude)
        return Controller(kind, hierarchy=Hierarchy(params, link_rng or Random(0)),
                          rng=action_rng or Random(0))
    if kind == "random":
        return Controller(kind, rng=action_rng or Random(0))
    return Controller(kind)


@dataclass
class TickTrace:
    """One animat-tick record, serializable as a JSON line."""

    tick: int
    animat_id: int
    action: str
    stimulus_sign: str
    stimulus_magnitude: float
    alive: bool
    koncept_counts: Optional[dict[int, int]] = None

    def to_json_line(self) -> str:
        payload = {
            "tick": self.tick,
            "animat_id": self.animat_id,
            "action": self.action,
            "stimulus_sign": self.stimulus_sign,
            "stimulus_magnitude": self.stimulus_magnitude,
            "alive": self.alive,
        }
        if self.koncept_counts is not None:
            payload["koncept_counts"] = {str(k): v for k, v in self.koncept_counts.items()}
        return json.dumps(payload)


def tick_animat(world: WorldState, body: AnimatBody, controller: Controller,
                noise_rng: Random, tick: int) -> TickTrace:
    """Run one animat through the full perception/action/learning cycle."""
    if not body.physiology.alive:
        return TickTrace(tick, body.id, ACTION_NONE, "none", 0.0, alive=False,
                         koncept_counts=_counts(controller))

    sensor = perceive(world, body, noise_rng)
    if controller.kind == "keba":
        controller.hierarchy.observe(sensor)
        action, _ = controller.hierarchy.select_action()
        # the step-function links can lock the whole vote onto inaction
        # after one punished context; only an off-policy try can emit the
        # rewarding stimulus that unlocks it
        rate = controller.hierarchy.params.exploration_rate
        if rate > 0 and controller.rng.random() < rate:
            action = controller.rng.choice(ACTIONS)
    elif controller.kind == "random":
        action = controller.rng.choice(ACTIONS)
    else:
        action = ACTION_NONE

    body.current_action = action
    stimulus = apply_action(world, body, action)
    physiology_step(body, world.params)
    if controller.kind == "keba" and stimulus.sign != "none":
        controller.hierarchy.reinforce(action, stimulus)

    return TickTrace(
        tick=tick,
        animat_id=body.id,
        action=action,
        stimulus_sign=stimulus.sign,
        stimulus_magnitude=stimulus.magnitude,
        alive=body.physiology.alive,
        koncept_counts=_counts(controller),
    )


def _counts(controller: Controller) -> Optional[dict[int, int]]:
    if controller.kind == "keba":
        return controller.hierarchy.koncept_counts()
    return None
