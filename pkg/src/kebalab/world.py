"""Toroidal environment: phenomena, qualia, animat bodies, physiology.

Phenomena follow one acyclic lifecycle: lightning -> rain -> food ->
removed (once eaten away).  Rocks are permanent.  Animats are perceivable
by each other like any phenomenon, via a shared qualia entry.

Every mutation goes through the per-tick pipeline; nothing here draws
randomness except through the injected streams, so identical seeds give
identical trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from random import Random
from typing import Iterable, Optional, Sequence

from kebalab.core import ACTION_DRINK, ACTION_EAT, ACTION_NONE, ACTIONS, StimulusSignal

QUALIA_CHANNELS: tuple[str, ...] = (
    "redness", "greenness", "blueness",
    "odour_plus", "odour_minus", "loudness",
    "flavour_plus", "flavour_minus", "hardness",
)
N_DISTAL = 6   # first six channels carry across the perception radius
N_QUALIA = 9   # last three require touch

PHENOMENON_KINDS = ("food", "rock", "lightning", "rain")
LOCOMOTION_MODES = ("wander", "circular", "static")


@dataclass(frozen=True)
class Qualia:
    redness: float = 0.0
    greenness: float = 0.0
    blueness: float = 0.0
    odour_plus: float = 0.0
    odour_minus: float = 0.0
    loudness: float = 0.0
    flavour_plus: float = 0.0
    flavour_minus: float = 0.0
    hardness: float = 0.0

    def as_tuple(self) -> tuple[float, ...]:
        return (
            self.redness, self.greenness, self.blueness,
            self.odour_plus, self.odour_minus, self.loudness,
            self.flavour_plus, self.flavour_minus, self.hardness,
        )

    def __post_init__(self):
        for name, value in zip(QUALIA_CHANNELS, self.as_tuple()):
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"qualia {name}={value} outside [0, 1]")


def default_qualia_table() -> dict[str, Qualia]:
    """Per-kind qualia; overridable from scenario config."""
    return {
        "food": Qualia(greenness=0.8, odour_plus=0.9, flavour_plus=0.9, hardness=0.2),
        "rock": Qualia(redness=0.5, greenness=0.5, blueness=0.5, hardness=1.0),
        "rain": Qualia(blueness=0.9, loudness=0.4),
        "lightning": Qualia(redness=1.0, greenness=1.0, blueness=1.0, loudness=1.0),
        "animat": Qualia(redness=0.6, odour_plus=0.2, flavour_plus=0.6, hardness=0.4),
    }


def default_size_table() -> dict[str, float]:
    return {"food": 1.0, "rock": 1.2, "rain": 2.5, "lightning": 1.0}


@dataclass
class Phenomenon:
    id: int
    kind: str
    position: tuple[float, float]
    size: float
    age: int = 0
    qualia: Qualia = field(default_factory=Qualia)


@dataclass
class Physiology:
    energy: float = 1.0
    hunger: float = 0.0
    thirst: float = 0.0
    alive: bool = True


@dataclass
class AnimatBody:
    id: int
    position: tuple[float, float]
    heading: float = 0.0
    locomotion: str = "wander"
    physiology: Physiology = field(default_factory=Physiology)
    perception_radius: float = 10.0
    size: float = 1.0
    current_action: str = ACTION_NONE


@dataclass
class WorldParams:
    width: float = 100.0
    height: float = 100.0
    noise_amplitude: float = 0.0
    hunger_rate: float = 1.0 / 1000.0
    thirst_rate: float = 1.0 / 1000.0
    high_threshold: float = 0.5
    low_threshold: float = 0.2
    energy_drain_per_high: float = 1.0 / 8000.0
    energy_gain: float = 1.0 / 8000.0
    eat_relief: float = 0.1
    drink_relief: float = 0.1
    penalty: float = 0.05
    food_shrink: float = 0.1
    predation_drain: float = 0.05
    lightning_ttl: int = 10
    rain_ttl: int = 50
    spawn_rate: float = 0.01
    wander_sigma: float = 0.3
    circle_turn: float = 0.1
    speed: float = 0.5
    qualia_table: dict[str, Qualia] = field(default_factory=default_qualia_table)
    size_table: dict[str, float] = field(default_factory=default_size_table)

    def validate(self) -> None:
        problems = []
        if self.width <= 0 or self.height <= 0:
            problems.append("world dimensions must be positive")
        if not 0.0 <= self.noise_amplitude <= 1.0:
            problems.append("noise_amplitude must be in [0, 1]")
        if not 0.0 < self.low_threshold < self.high_threshold < 1.0:
            problems.append("need 0 < low_threshold < high_threshold < 1")
        for name in ("hunger_rate", "thirst_rate", "energy_drain_per_high",
                     "energy_gain", "eat_relief", "drink_relief", "penalty",
                     "food_shrink", "predation_drain", "spawn_rate"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if self.lightning_ttl != 10 or self.rain_ttl != 50:
            problems.append("lightning_ttl and rain_ttl are fixed at 10 and 50")
        if problems:
            raise ValueError("invalid WorldParams: " + "; ".join(problems))

    @property
    def dims(self) -> tuple[float, float]:
        return (self.width, self.height)


class WorldState:
    """All phenomena and animat bodies; single owner per simulation."""

    def __init__(self, params: WorldParams):
        params.validate()
        self.params = params
        self.phenomena: list[Phenomenon] = []
        self.animats: list[AnimatBody] = []
        self.next_phenomenon_id = 0

    def spawn(self, kind: str, position: tuple[float, float],
              size: Optional[float] = None) -> Phenomenon:
        if kind not in PHENOMENON_KINDS:
            raise ValueError(f"unknown phenomenon kind {kind!r}")
        phenomenon = Phenomenon(
            id=self.next_phenomenon_id,
            kind=kind,
            position=wrap_position(position, self.params.dims),
            size=size if size is not None else self.params.size_table[kind],
            qualia=self.params.qualia_table[kind],
        )
        self.next_phenomenon_id += 1
        self.phenomena.append(phenomenon)
        return phenomenon

    def remove(self, phenomenon_id: int) -> bool:
        for i, ph in enumerate(self.phenomena):
            if ph.id == phenomenon_id:
                del self.phenomena[i]
                return True
        return False

    def find_phenomenon(self, phenomenon_id: int) -> Optional[Phenomenon]:
        for ph in self.phenomena:
            if ph.id == phenomenon_id:
                return ph
        return None

    def find_animat(self, animat_id: int) -> Optional[AnimatBody]:
        for body in self.animats:
            if body.id == animat_id:
                return body
        return None

    def add_animat(self, body: AnimatBody) -> AnimatBody:
        if self.find_animat(body.id) is not None:
            raise ValueError(f"duplicate animat id {body.id}")
        self.animats.append(body)
        self.animats.sort(key=lambda b: b.id)
        return body


# ---------------------------------------------------------------------------
# geometry
# ---------------------------------------------------------------------------

def wrap_position(position: Sequence[float], dims: tuple[float, float]) -> tuple[float, float]:
    return (position[0] % dims[0], position[1] % dims[1])


def toroidal_distance(p: Sequence[float], q: Sequence[float],
                      dims: tuple[float, float]) -> float:
    dx = abs(p[0] - q[0])
    dy = abs(p[1] - q[1])
    dx = min(dx, dims[0] - dx)
    dy = min(dy, dims[1] - dy)
    return math.hypot(dx, dy)


# ---------------------------------------------------------------------------
# per-tick world update
# ---------------------------------------------------------------------------

def step_world(world: WorldState, rng: Random,
               scheduled_spawns: Iterable[dict] = ()) -> None:
    """One world tick: age, transition, cull, spawn, and move.

    Fixed internal order keeps trajectories reproducible: aging and kind
    transitions first, then removal of eaten food, then scheduled spawns
    (a spawn entering at tick t has age 0 through tick t), then the random
    lightning spawner, then locomotion.
    """
    p = world.params
    for ph in world.phenomena:
        ph.age += 1
        if ph.kind == "lightning" and ph.age >= p.lightning_ttl:
            ph.kind = "rain"
            ph.age = 0
            ph.qualia = p.qualia_table["rain"]
        elif ph.kind == "rain" and ph.age >= p.rain_ttl:
            ph.kind = "food"
            ph.age = 0
            ph.qualia = p.qualia_table["food"]
    world.phenomena = [ph for ph in world.phenomena
                       if not (ph.kind == "food" and ph.size <= 0.0)]

    for spec in scheduled_spawns:
        position = spec.get("position")
        if position is None:
            position = (rng.uniform(0.0, p.width), rng.uniform(0.0, p.height))
        world.spawn(spec["kind"], tuple(position), spec.get("size"))

    if p.spawn_rate > 0.0 and rng.random() < p.spawn_rate:
        world.spawn("lightning", (rng.uniform(0.0, p.width), rng.uniform(0.0, p.height)))

    for body in world.animats:
        if not body.physiology.alive:
            continue
        if body.locomotion == "wander":
            body.heading = (body.heading + rng.uniform(-p.wander_sigma, p.wander_sigma)) % math.tau
        elif body.locomotion == "circular":
            body.heading = (body.heading + p.circle_turn) % math.tau
        elif body.locomotion == "static":
            continue
        else:
            raise ValueError(f"unknown locomotion {body.locomotion!r}")
        body.position = wrap_position(
            (body.position[0] + p.speed * math.cos(body.heading),
             body.position[1] + p.speed * math.sin(body.heading)),
            p.dims,
        )


# ---------------------------------------------------------------------------
# sensing
# ---------------------------------------------------------------------------

def _perceivables(world: WorldState, animat: AnimatBody):
    """Phenomena plus every other living animat (seen with animat qualia)."""
    animat_qualia = world.params.qualia_table["animat"]
    for ph in world.phenomena:
        yield ph.position, ph.size, ph.qualia
    for other in world.animats:
        if other.id != animat.id and other.physiology.alive:
            yield other.position, other.size, animat_qualia


def perceive(world: WorldState, animat: AnimatBody, rng: Random) -> list[float]:
    """15-channel sensor vector with additive uniform noise, clamped to [0,1].

    Channels 0-5: per-channel max over phenomena inside the perception
    radius, attenuated linearly with distance.  Channels 6-8: per-channel
    max over touched phenomena, unattenuated.  Channels 9-11: energy,
    hunger, thirst.  Channels 12-14: one-hot of the current action.
    """
    p = world.params
    radius = animat.perception_radius
    out = [0.0] * 15
    for position, size, qualia in _perceivables(world, animat):
        d = toroidal_distance(animat.position, position, p.dims)
        q = qualia.as_tuple()
        if d < radius:
            attenuation = 1.0 - d / radius
            for i in range(N_DISTAL):
                value = q[i] * attenuation
                if value > out[i]:
                    out[i] = value
        if d <= animat.size + size:
            for i in range(N_DISTAL, N_QUALIA):
                if q[i] > out[i]:
                    out[i] = q[i]
    out[9] = animat.physiology.energy
    out[10] = animat.physiology.hunger
    out[11] = animat.physiology.thirst
    out[12 + ACTIONS.index(animat.current_action)] = 1.0
    amp = p.noise_amplitude
    for i in range(15):
        out[i] = min(1.0, max(0.0, out[i] + rng.uniform(-amp, amp)))
    return out


# ---------------------------------------------------------------------------
# acting
# ---------------------------------------------------------------------------

def _touched(world: WorldState, animat: AnimatBody):
    touched_phenomena = [
        ph for ph in world.phenomena
        if toroidal_distance(animat.position, ph.position, world.params.dims)
        <= animat.size + ph.size
    ]
    touched_animats = [
        other for other in world.animats
        if other.id != animat.id and other.physiology.alive
        and toroidal_distance(animat.position, other.position, world.params.dims)
        <= animat.size + other.size
    ]
    return touched_phenomena, touched_animats


def apply_action(world: WorldState, animat: AnimatBody, action: str) -> StimulusSignal:
    """Execute eat/drink against whatever the animat is touching.

    Appropriate pairings (eat+food, eat+animat, drink+rain) relieve the
    drive and return a positive stimulus; acting on only inappropriate
    phenomena penalizes the drive; acting on nothing is free.  Among
    touched candidates the lowest id wins (food before prey for eating).
    """
    p = world.params
    phys = animat.physiology
    if action == ACTION_NONE:
        return StimulusSignal()
    touched_phenomena, touched_animats = _touched(world, animat)

    if action == ACTION_EAT:
        foods = [ph for ph in touched_phenomena if ph.kind == "food"]
        if foods:
            meal = min(foods, key=lambda ph: ph.id)
            phys.hunger = max(0.0, phys.hunger - p.eat_relief)
            meal.size -= p.food_shrink
            return StimulusSignal("positive", p.eat_relief)
        if touched_animats:
            prey = min(touched_animats, key=lambda b: b.id)
            phys.hunger = max(0.0, phys.hunger - p.eat_relief)
            prey.physiology.energy = max(0.0, prey.physiology.energy - p.predation_drain)
            if prey.physiology.energy == 0.0:
                prey.physiology.alive = False
            return StimulusSignal("positive", p.eat_relief)
        if touched_phenomena:
            phys.hunger = min(1.0, phys.hunger + p.penalty)
            return StimulusSignal("negative", p.penalty)
        return StimulusSignal()

    if action == ACTION_DRINK:
        if any(ph.kind == "rain" for ph in touched_phenomena):
            phys.thirst = max(0.0, phys.thirst - p.drink_relief)
            return StimulusSignal("positive", p.drink_relief)
        if touched_phenomena or touched_animats:
            phys.thirst = min(1.0, phys.thirst + p.penalty)
            return StimulusSignal("negative", p.penalty)
        return StimulusSignal()

    raise ValueError(f"unknown action {action!r}")


def physiology_step(animat: AnimatBody, params: WorldParams) -> None:
    """Linear drive ramps, threshold-driven energy drain/recovery, death."""
    phys = animat.physiology
    phys.hunger = min(1.0, phys.hunger + params.hunger_rate)
    phys.thirst = min(1.0, phys.thirst + params.thirst_rate)
    over = (phys.hunger > params.high_threshold) + (phys.thirst > params.high_threshold)
    phys.energy -= over * params.energy_drain_per_high
    if phys.hunger < params.low_threshold and phys.thirst < params.low_threshold:
        phys.energy += params.energy_gain
    phys.energy = min(1.0, max(0.0, phys.energy))
    if phys.energy == 0.0:
        phys.alive = False
