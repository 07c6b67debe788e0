"""Koncept hierarchy engine.

A koncept is a fuzzy open ball over the activations of the koncepts one
level below it.  Level 0 holds the fifteen protokoncepts (nine sensor
channels, three internal variables, three action indicators); higher
levels are created on the fly whenever a stable, active configuration
falls outside every existing ball.  Each koncept carries a value v
(instantaneous membership), an activation a (history-weighted value),
a stability s (inverse measure of recent activation change), and one
reinforcement link per action.

All randomness is drawn from a single injected stream so that two
hierarchies built with the same parameters, seed, and input sequence are
identical field for field.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from random import Random
from typing import Optional, Sequence

log = logging.getLogger(__name__)

# Fixed action set; index order is the deterministic tie-break order.
ACTIONS: tuple[str, ...] = ("eat", "drink", "none")
ACTION_EAT, ACTION_DRINK, ACTION_NONE = ACTIONS

# Protokoncept slots: 9 qualia channels, then energy/hunger/thirst,
# then a one-hot of the current action.
PROTO_DIM = 15

SIGN_POSITIVE = "positive"
SIGN_NEGATIVE = "negative"
SIGN_NONE = "none"

# Derivation of the radius-adaptation floor from the sensor-noise amplitude.
# Distances are 15-dimensional norms, so per-channel noise of amplitude A
# shows up as a jitter norm near A (EMA smoothing roughly cancels the
# sqrt(15) fan-in); the 1.5 factor keeps the tail of that jitter below the
# floor.  The absolute minimum covers the center-chase lag behind the
# slowly ramping internal drives (about ramp_rate/center_rate) in noiseless
# worlds, where steady drift would otherwise grind the radii down.
NOISE_FLOOR_SCALE = 1.5
NOISE_FLOOR_MIN = 0.065

HIERARCHY_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class StimulusSignal:
    """Outcome of an action: satisfaction, punishment, or nothing."""

    sign: str = SIGN_NONE
    magnitude: float = 0.0

    def __post_init__(self) -> None:
        if self.sign not in (SIGN_POSITIVE, SIGN_NEGATIVE, SIGN_NONE):
            raise ValueError(f"unknown stimulus sign {self.sign!r}")
        if self.magnitude < 0:
            raise ValueError("stimulus magnitude must be >= 0")
        if self.sign == SIGN_NONE and self.magnitude != 0.0:
            raise ValueError("sign=none implies magnitude=0")


@dataclass
class KebaParams:
    """Engine constants.

    activation_potential and persistence weight the previous activation in
    the history update; the weight grows as activation_potential**level, so
    higher levels decay slower.  stability_speed is the per-tick recovery
    rate of s.  center_rate and radius_rate size the plasticity steps.
    noise_floor gates radius adaptation; None means "derive from the
    scenario's sensor-noise amplitude" (floored at NOISE_FLOOR_MIN).
    exploration_rate is the per-tick chance the controller overrides the
    vote with a uniform random action: the step-function links make the
    first punished context endorse inaction everywhere, and inaction emits
    no stimuli, so without occasional exploration nothing can ever unlock
    that state.
    """

    activation_potential: float = 2.0
    persistence: float = 3.0
    stability_speed: float = 0.05
    center_rate: float = 0.02
    radius_rate: float = 0.005
    initial_r1: float = 0.05
    initial_r2: float = 0.12
    radius_max: float = 0.3
    noise_floor: Optional[float] = None
    max_levels: int = 3
    max_koncepts_per_level: int = 512
    active_threshold: float = 0.05
    exploration_rate: float = 0.1

    def validate(self) -> None:
        problems = []
        if self.activation_potential <= 0:
            problems.append("activation_potential must be > 0")
        if self.persistence <= 0:
            problems.append("persistence must be > 0")
        if not 0.0 <= self.stability_speed <= 1.0:
            problems.append("stability_speed must be in [0, 1]")
        if not 0.0 < self.center_rate <= 1.0:
            problems.append("center_rate must be in (0, 1]")
        if self.radius_rate <= 0:
            problems.append("radius_rate must be > 0")
        if self.initial_r1 <= 0 or self.initial_r1 >= self.initial_r2:
            problems.append("need 0 < initial_r1 < initial_r2")
        if self.radius_max <= self.initial_r2:
            problems.append("radius_max must exceed initial_r2")
        if self.noise_floor is not None and not 0.0 <= self.noise_floor <= 1.0:
            problems.append("noise_floor must be in [0, 1]")
        if self.max_levels < 0:
            problems.append("max_levels must be >= 0")
        if self.max_koncepts_per_level < 1:
            problems.append("max_koncepts_per_level must be >= 1")
        if not 0.0 <= self.exploration_rate <= 1.0:
            problems.append("exploration_rate must be in [0, 1]")
        if problems:
            raise ValueError("invalid KebaParams: " + "; ".join(problems))

    def resolved(self, noise_amplitude: float = 0.0) -> "KebaParams":
        """Copy with noise_floor pinned for a given sensor-noise amplitude."""
        if self.noise_floor is not None:
            return self
        floor = max(NOISE_FLOOR_SCALE * float(noise_amplitude), NOISE_FLOOR_MIN)
        return replace(self, noise_floor=min(1.0, floor))


@dataclass
class Koncept:
    """One node of the hierarchy.

    Level-0 koncepts have no parents, center, or radii; their v is written
    directly from the sensor vector.  For level n > 0 the center is indexed
    by `parents` (ids at level n-1, ascending) and 0 < r1 < r2 always holds.
    """

    id: int
    level: int
    parents: tuple[int, ...] = ()
    center: Optional[list[float]] = None
    r1: Optional[float] = None
    r2: Optional[float] = None
    v: float = 0.0
    a: float = 0.0
    a_prev: float = 0.0
    s: float = 0.0
    links: dict[str, float] = field(default_factory=dict)


@dataclass
class PropagationReport:
    """What one level-to-level update did."""

    gate_passed: bool
    matched: tuple[int, ...] = ()
    created: Optional[int] = None


# ---------------------------------------------------------------------------
# Elementary operations
# ---------------------------------------------------------------------------

def membership(d: float, r1: float, r2: float) -> float:
    """Linear fuzzy membership of a point at distance d from a ball center.

    1 inside r1, 0 outside r2, linear ramp between.  Continuous in d.
    """
    if r1 >= r2:
        raise ValueError(f"invalid radii: r1={r1} must be < r2={r2}")
    if d < 0:
        raise ValueError("distance must be >= 0")
    if d <= r1:
        return 1.0
    if d >= r2:
        return 0.0
    return 1.0 - (d - r1) / (r2 - r1)


def update_activation(v: float, a_prev: float, level: int, params: KebaParams) -> float:
    """History-weighted activation: convex mix of v and the previous a.

    The previous activation is weighted by activation_potential**level *
    persistence, so koncepts on higher levels hold on to their history
    longer (slower decay).
    """
    w = params.activation_potential ** level * params.persistence
    return (v + w * a_prev) / (1.0 + w)


# Accumulated rounding in s must not keep it a hair under 1.0 forever: the
# propagation gate tests s == 1 exactly.
_STABILITY_SNAP = 1e-12


def update_stability(s_prev: float, a_t: float, a_prev: float, stability_speed: float) -> float:
    """Stability recovers by stability_speed and pays for activation change."""
    s = s_prev + stability_speed - abs(a_t - a_prev)
    if s > 1.0 - _STABILITY_SNAP:
        return 1.0
    return max(0.0, s)


def euclidean(xs: Sequence[float], ys: Sequence[float]) -> float:
    if len(xs) != len(ys):
        raise ValueError(f"dimension mismatch: {len(xs)} vs {len(ys)}")
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(xs, ys)))


def init_links(level: int, parents: Sequence[Koncept], rng: Random) -> dict[str, float]:
    """Fresh action links: medium random values, averaged with the parents'
    links above level zero."""
    links: dict[str, float] = {}
    for action in ACTIONS:
        draw = rng.uniform(0.4, 0.6)
        if level == 0:
            links[action] = draw
        else:
            mean = sum(p.links[action] for p in parents) / len(parents)
            links[action] = (mean + draw) / 2.0
    return links


def adapt_center(koncept: Koncept, parent_acts: Sequence[float], params: KebaParams) -> None:
    """Pull the center toward the current parent activations, scaled by v.

    v=0 leaves the center untouched, so callers may skip those koncepts.
    """
    if koncept.level == 0:
        raise ValueError("protokoncepts have no center")
    step = params.center_rate * koncept.v
    if step == 0.0:
        return
    center = koncept.center
    assert center is not None
    for i, target in enumerate(parent_acts):
        center[i] += step * (target - center[i])


def adapt_radii(koncept: Koncept, d: float, params: KebaParams) -> None:
    """Nudge one radius depending on where d falls inside the ball, then
    re-clamp so 0 < r1 < r2 <= radius_max.

    Caller is responsible for the gates (v > 0 and d above the noise floor).
    The ceiling matters: under a continuously moving input the two growth
    bands fire far more often than the shrink bands, and without a bound a
    single ball inflates until it absorbs the whole activation space.
    """
    r1, r2 = koncept.r1, koncept.r2
    assert r1 is not None and r2 is not None
    z = params.radius_rate
    if d <= r1 / 2.0:
        r1 -= z
    elif d <= r1:
        r2 -= z
    elif d <= (r1 + r2) / 2.0:
        r1 += z
    elif d <= r2:
        r2 += z
    # A single step can collapse or invert the ball; restore the invariant.
    r1 = min(max(r1, z), params.radius_max - z)
    r2 = min(max(r2, r1 + z), params.radius_max)
    koncept.r1, koncept.r2 = r1, r2


# ---------------------------------------------------------------------------
# Hierarchy
# ---------------------------------------------------------------------------

class Hierarchy:
    """Single-owner koncept hierarchy over a 15-channel input stream.

    Not thread-safe; one simulation ticks one instance at a time.
    """

    def __init__(self, params: KebaParams, rng: Random, proto_dim: int = PROTO_DIM):
        params.validate()
        if params.noise_floor is None:
            raise ValueError("noise_floor must be resolved before building a hierarchy")
        self.params = params
        self.rng = rng
        self.proto_dim = proto_dim
        self._next_id = 0
        self.levels: list[list[Koncept]] = [[]]
        self.creation_refusals = 0
        self.last_sensor: Optional[list[float]] = None
        for _ in range(proto_dim):
            self.levels[0].append(self._make_koncept(level=0, parents=()))

    # -- construction helpers ------------------------------------------------

    def _make_koncept(
        self,
        level: int,
        parents: Sequence[Koncept],
        center: Optional[list[float]] = None,
        v: float = 0.0,
    ) -> Koncept:
        kid = self._next_id
        self._next_id += 1
        return Koncept(
            id=kid,
            level=level,
            parents=tuple(p.id for p in parents),
            center=center,
            r1=self.params.initial_r1 if level > 0 else None,
            r2=self.params.initial_r2 if level > 0 else None,
            v=v,
            links=init_links(level, parents, self.rng),
        )

    # -- per-tick pipeline ---------------------------------------------------

    def observe(self, sensor: Sequence[float]) -> list[PropagationReport]:
        """Full update for one tick: ingest, propagate bottom-up, adapt."""
        self.ingest(sensor)
        reports = []
        n = 0
        while n < len(self.levels) and n + 1 <= self.params.max_levels:
            reports.append(self.propagate_level(n))
            n += 1
        self.plasticity_pass()
        return reports

    def ingest(self, sensor: Sequence[float]) -> None:
        """Write the (already noisy, clamped) sensor vector into level 0."""
        if len(sensor) != self.proto_dim:
            raise ValueError(f"expected {self.proto_dim} channels, got {len(sensor)}")
        self.last_sensor = [float(x) for x in sensor]
        kappa = self.params.stability_speed
        for koncept, value in zip(self.levels[0], self.last_sensor):
            a_prev = koncept.a
            koncept.v = value
            koncept.a = update_activation(value, a_prev, 0, self.params)
            koncept.s = update_stability(koncept.s, koncept.a, a_prev, kappa)
            koncept.a_prev = a_prev

    def propagate_level(self, n: int) -> PropagationReport:
        """Update level n+1 from the activations of level n.

        The update only runs when every level-n koncept is fully stable and
        at least two are active; otherwise level n+1 is frozen untouched.
        Creates at most one koncept, and only when no existing ball contains
        the current activation point.
        """
        if n >= len(self.levels):
            raise ValueError(f"level {n} does not exist")
        if n + 1 > self.params.max_levels:
            raise ValueError(f"level {n + 1} exceeds max_levels={self.params.max_levels}")
        current = self.levels[n]
        threshold = self.params.active_threshold
        active = [k for k in current if k.a > threshold]
        if len(active) < 2 or any(k.s != 1.0 for k in current):
            return PropagationReport(gate_passed=False)

        acts = {k.id: k.a for k in current}
        upper = self.levels[n + 1] if n + 1 < len(self.levels) else []
        matched = []
        created = None
        for kon in upper:
            d = euclidean([acts[p] for p in kon.parents], kon.center)
            kon.v = membership(d, kon.r1, kon.r2)
            if kon.v > 0.0:
                matched.append(kon.id)
        if not matched:
            if len(upper) >= self.params.max_koncepts_per_level:
                self.creation_refusals += 1
                log.info(
                    "koncept creation refused at level %d: capacity %d reached",
                    n + 1, self.params.max_koncepts_per_level,
                )
            else:
                fresh = self._make_koncept(
                    level=n + 1,
                    parents=active,
                    center=[k.a for k in active],
                    v=1.0,
                )
                if n + 1 == len(self.levels):
                    self.levels.append([])
                    upper = self.levels[n + 1]
                upper.append(fresh)
                created = fresh.id
        for kon in upper:
            a_prev = kon.a
            kon.a = update_activation(kon.v, a_prev, kon.level, self.params)
            kon.s = update_stability(kon.s, kon.a, a_prev, self.params.stability_speed)
            kon.a_prev = a_prev
        return PropagationReport(gate_passed=True, matched=tuple(matched), created=created)

    def plasticity_pass(self) -> None:
        """Center and radius adaptation, run once per tick after propagation.

        Centers move for every koncept (a v=0 koncept moves by exactly zero,
        so those are skipped).  Radii adapt only for koncepts that contain
        the current point (v > 0) and only when the distance to the center
        exceeds the noise floor.
        """
        floor = self.params.noise_floor
        for level_idx in range(1, len(self.levels)):
            acts = {k.id: k.a for k in self.levels[level_idx - 1]}
            for kon in self.levels[level_idx]:
                if kon.v <= 0.0:
                    continue
                parent_acts = [acts[p] for p in kon.parents]
                adapt_center(kon, parent_acts, self.params)
                d = euclidean(parent_acts, kon.center)
                if d > floor:
                    adapt_radii(kon, d, self.params)

    # -- action interface ----------------------------------------------------

    def select_action(self) -> tuple[str, dict[str, float]]:
        """Weighted vote over every koncept with v > 0.

        Each contributes v * link * (level+1)^2 per action; ties resolve to
        the lowest action index, and an all-zero vote means no action.
        """
        scores = {action: 0.0 for action in ACTIONS}
        for level_idx, level in enumerate(self.levels):
            weight = float((level_idx + 1) ** 2)
            for kon in level:
                if kon.v > 0.0:
                    for action in ACTIONS:
                        scores[action] += kon.v * kon.links[action] * weight
        if all(value == 0.0 for value in scores.values()):
            return ACTION_NONE, scores
        best = ACTIONS[0]
        for action in ACTIONS[1:]:
            if scores[action] > scores[best]:
                best = action
        return best, scores

    def reinforce(self, actual_action: str, stimulus: StimulusSignal) -> None:
        """Step-function link update on every active koncept.

        For each active koncept the link with the greatest value is set to 1
        when it agrees with the outcome (it named the rewarded action, or it
        named an alternative to a punished one) and to 0 otherwise.
        """
        if stimulus.sign == SIGN_NONE:
            raise ValueError("reinforce requires a positive or negative stimulus")
        if actual_action not in ACTIONS:
            raise ValueError(f"unknown action {actual_action!r}")
        threshold = self.params.active_threshold
        rewarded = stimulus.sign == SIGN_POSITIVE
        for level in self.levels:
            for kon in level:
                if kon.a <= threshold:
                    continue
                greatest = ACTIONS[0]
                for action in ACTIONS[1:]:
                    if kon.links[action] > kon.links[greatest]:
                        greatest = action
                kon.links[greatest] = 1.0 if (greatest == actual_action) == rewarded else 0.0

    # -- introspection ---------------------------------------------------------

    def koncept_counts(self) -> dict[int, int]:
        return {idx: len(level) for idx, level in enumerate(self.levels)}

    def total_created(self) -> int:
        """Koncepts above level 0 (protokoncepts are fixed)."""
        return sum(len(level) for level in self.levels[1:])

    def find(self, koncept_id: int) -> Koncept:
        for level in self.levels:
            for kon in level:
                if kon.id == koncept_id:
                    return kon
        raise KeyError(koncept_id)

    # -- snapshot export -------------------------------------------------------

    def export_state(self) -> dict:
        """Versioned JSON-ready tree of the full hierarchy."""
        return {
            "schema_version": HIERARCHY_SCHEMA_VERSION,
            "params": {
                "activation_potential": self.params.activation_potential,
                "persistence": self.params.persistence,
                "stability_speed": self.params.stability_speed,
                "center_rate": self.params.center_rate,
                "radius_rate": self.params.radius_rate,
                "initial_r1": self.params.initial_r1,
                "initial_r2": self.params.initial_r2,
                "radius_max": self.params.radius_max,
                "noise_floor": self.params.noise_floor,
                "max_levels": self.params.max_levels,
                "max_koncepts_per_level": self.params.max_koncepts_per_level,
                "active_threshold": self.params.active_threshold,
                "exploration_rate": self.params.exploration_rate,
            },
            "next_koncept_id": self._next_id,
            "creation_refusals": self.creation_refusals,
            "levels": [
                [
                    {
                        "id": kon.id,
                        "level": kon.level,
                        "parents": list(kon.parents),
                        "center": None if kon.center is None else list(kon.center),
                        "r1": kon.r1,
                        "r2": kon.r2,
                        "v": kon.v,
                        "a": kon.a,
                        "a_prev": kon.a_prev,
                        "s": kon.s,
                        "links": dict(kon.links),
                    }
                    for kon in level
                ]
                for level in self.levels
            ],
        }

    @classmethod
    def from_state(cls, state: dict, rng: Random) -> "Hierarchy":
        """Rebuild a hierarchy from export_state output.

        Validation of field types/invariants is the persistence layer's job;
        this constructor trusts its input.
        """
        params = KebaParams(**state["params"])
        hierarchy = cls.__new__(cls)
        hierarchy.params = params
        hierarchy.rng = rng
        hierarchy.proto_dim = len(state["levels"][0])
        hierarchy._next_id = state["next_koncept_id"]
        hierarchy.creation_refusals = state.get("creation_refusals", 0)
        hierarchy.last_sensor = None
        hierarchy.levels = [
            [
                Koncept(
                    id=entry["id"],
                    level=entry["level"],
                    parents=tuple(entry["parents"]),
                    center=None if entry["center"] is None else list(entry["center"]),
                    r1=entry["r1"],
                    r2=entry["r2"],
                    v=entry["v"],
                    a=entry["a"],
                    a_prev=entry["a_prev"],
                    s=entry["s"],
                    links={action: entry["links"][action] for action in ACTIONS},
                )
                for entry in level
            ]
            for level in state["levels"]
        ]
        return hierarchy
