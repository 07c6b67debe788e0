"""Declarative scenario runner and the experiment battery.

A scenario document (same JSON conventions as the save format, plain
numbers welcome) fully determines a run: seed, ticks, world overrides,
animat specs, and a spawn schedule.  On top of single runs this module
provides the baseline comparison (koncept vs random vs inert controllers
in identically-seeded worlds), the sensor-noise sweep, and center-based
koncept similarity between two hierarchies.

Sweeps fan out over a process pool; each run is self-seeded, so results
do not depend on execution order.
"""

from __future__ import annotations

import json
import logging
import math
import os
import statistics
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional

from kebalab.agent import make_controller
from kebalab.core import Hierarchy, KebaParams
from kebalab.persistence import LoadError, decode_keba_params, decode_world_params
from kebalab.sim import Simulation, make_stream
from kebalab.world import LOCOMOTION_MODES, PHENOMENON_KINDS, AnimatBody, WorldState

log = logging.getLogger(__name__)

CONTROLLER_KINDS = ("keba", "random", "none")


# ---------------------------------------------------------------------------
# scenario configuration
# ---------------------------------------------------------------------------

@dataclass
class AnimatSpec:
    controller: str = "keba"
    locomotion: str = "wander"
    position: Optional[tuple[float, float]] = None  # None: drawn at build time
    heading: float = 0.0
    perception_radius: float = 10.0
    size: float = 1.0
    keba: dict = field(default_factory=dict)

    def validate(self, path: str) -> None:
        if self.controller not in CONTROLLER_KINDS:
            raise LoadError(f"{path}.controller", f"expected one of {CONTROLLER_KINDS}")
        if self.locomotion not in LOCOMOTION_MODES:
            raise LoadError(f"{path}.locomotion", f"expected one of {LOCOMOTION_MODES}")
        if self.perception_radius <= 0 or self.size <= 0:
            raise LoadError(path, "perception_radius and size must be positive")


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    seed: int = 0
    ticks: int = 1000
    world: dict = field(default_factory=dict)
    animats: list[AnimatSpec] = field(default_factory=lambda: [AnimatSpec()])
    spawn_events: list[dict] = field(default_factory=list)
    record_series: bool = True

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise LoadError("", "scenario document must be an object")
        known = {"name", "seed", "ticks", "world", "animats", "spawn_events",
                 "record_series"}
        for key in doc:
            if key not in known:
                log.warning("ignoring unknown scenario field %r", key)
        config = cls(
            name=doc.get("name", "scenario"),
            seed=doc.get("seed", 0),
            ticks=doc.get("ticks", 1000),
            world=doc.get("world", {}),
            record_series=doc.get("record_series", True),
        )
        if not isinstance(config.ticks, int) or config.ticks <= 0:
            raise LoadError("ticks", "must be a positive integer")
        if not isinstance(config.seed, int):
            raise LoadError("seed", "must be an integer")

        animats_doc = doc.get("animats", [{}])
        if not isinstance(animats_doc, list) or not animats_doc:
            raise LoadError("animats", "expected a non-empty list")
        config.animats = []
        for i, spec in enumerate(animats_doc):
            path = f"animats[{i}]"
            if not isinstance(spec, dict):
                raise LoadError(path, "expected an object")
            position = spec.get("position")
            config.animats.append(AnimatSpec(
                controller=spec.get("controller", "keba"),
                locomotion=spec.get("locomotion", "wander"),
                position=None if position is None else (float(position[0]), float(position[1])),
                heading=float(spec.get("heading", 0.0)),
                perception_radius=float(spec.get("perception_radius", 10.0)),
                size=float(spec.get("size", 1.0)),
                keba=spec.get("keba", {}),
            ))
            config.animats[-1].validate(path)

        config.spawn_events = []
        for i, event in enumerate(doc.get("spawn_events", [])):
            path = f"spawn_events[{i}]"
            if not isinstance(event, dict):
                raise LoadError(path, "expected an object")
            kind = event.get("kind")
            if kind not in PHENOMENON_KINDS:
                raise LoadError(f"{path}.kind", f"expected one of {PHENOMENON_KINDS}")
            tick = event.get("tick", 0)
            if not isinstance(tick, int) or tick < 0:
                raise LoadError(f"{path}.tick", "must be a non-negative integer")
            count = event.get("count", 1)
            if not isinstance(count, int) or count < 1:
                raise LoadError(f"{path}.count", "must be a positive integer")
            position = event.get("position")
            config.spawn_events.append({
                "tick": tick, "kind": kind, "count": count,
                "position": None if position is None else (float(position[0]), float(position[1])),
                "size": None if event.get("size") is None else float(event["size"]),
            })
        # raise early on bad world/keba overrides, before any ticks run
        decode_world_params(config.world, "world")
        for i, spec in enumerate(config.animats):
            decode_keba_params(spec.keba, f"animats[{i}].keba")
        return config

    @classmethod
    def from_path(cls, path: str | Path) -> "ScenarioConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise LoadError(str(path), f"not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["animats"] = [asdict(spec) for spec in self.animats]
        return doc

    def with_overrides(self, **changes) -> "ScenarioConfig":
        doc = self.to_dict()
        doc.update(changes)
        return ScenarioConfig.from_dict(doc)


def build_simulation(config: ScenarioConfig) -> Simulation:
    """Materialize a scenario: world, bodies, controllers, rng streams."""
    params = decode_world_params(config.world, "world")
    world = WorldState(params)
    rngs = {
        "world": make_stream(config.seed, "world"),
        "noise": make_stream(config.seed, "noise"),
    }
    placement = make_stream(config.seed, "placement")
    controllers = {}
    for animat_id, spec in enumerate(config.animats):
        position = spec.position
        if position is None:
            position = (placement.uniform(0.0, params.width),
                        placement.uniform(0.0, params.height))
        world.add_animat(AnimatBody(
            id=animat_id,
            position=position,
            heading=spec.heading,
            locomotion=spec.locomotion,
            perception_radius=spec.perception_radius,
            size=spec.size,
        ))
        rngs[f"links:{animat_id}"] = make_stream(config.seed, f"links:{animat_id}")
        rngs[f"actions:{animat_id}"] = make_stream(config.seed, f"actions:{animat_id}")
        controllers[animat_id] = make_controller(
            spec.controller,
            keba_params=decode_keba_params(spec.keba, "keba"),
            link_rng=rngs[f"links:{animat_id}"],
            action_rng=rngs[f"actions:{animat_id}"],
            noise_amplitude=params.noise_amplitude,
        )
    schedule: dict[int, list[dict]] = {}
    for event in config.spawn_events:
        for _ in range(event["count"]):
            schedule.setdefault(event["tick"], []).append(
                {"kind": event["kind"], "position": event["position"], "size": event["size"]})
    return Simulation(world, controllers, rngs,
                      scenario=config.to_dict(), spawn_schedule=schedule)


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass
class AnimatSummary:
    animat_id: int
    controller: str
    death_tick: Optional[int]
    survived: bool
    ticks_alive: int
    total_koncepts: int
    per_level_counts: dict[int, int]
    mean_hunger_last_quarter: float


@dataclass
class MetricsLog:
    scenario_name: str
    seed: int
    ticks_requested: int
    ticks_run: int
    series: list[dict]
    summaries: list[AnimatSummary]

    def to_dict(self) -> dict:
        return {
            "scenario_name": self.scenario_name,
            "seed": self.seed,
            "ticks_requested": self.ticks_requested,
            "ticks_run": self.ticks_run,
            "series": self.series,
            "summaries": [asdict(s) for s in self.summaries],
        }

    def to_bytes(self) -> bytes:
        """Canonical encoding; equal runs produce equal bytes."""
        return json.dumps(self.to_dict(), sort_keys=True).encode()

    def summary_for(self, animat_id: int) -> AnimatSummary:
        for summary in self.summaries:
            if summary.animat_id == animat_id:
                return summary
        raise KeyError(animat_id)


@dataclass
class RunResult:
    metrics: MetricsLog
    simulation: Simulation


def run_scenario(config: ScenarioConfig) -> RunResult:
    """Execute one scenario to its tick budget or until every animat dies."""
    sim = build_simulation(config)
    series: list[dict] = []
    hunger_history: dict[int, list[float]] = {body.id: [] for body in sim.world.animats}
    death_tick: dict[int, Optional[int]] = {body.id: None for body in sim.world.animats}

    for _ in range(config.ticks):
        traces = sim.run_tick()
        for trace, body in zip(traces, sim.world.animats):
            phys = body.physiology
            if phys.alive or death_tick[body.id] is None:
                hunger_history[body.id].append(phys.hunger)
            if not phys.alive and death_tick[body.id] is None:
                death_tick[body.id] = sim.tick  # first tick that ended with energy 0
            if config.record_series:
                row = {
                    "tick": trace.tick,
                    "animat_id": body.id,
                    "controller": sim.controllers[body.id].kind,
                    "energy": phys.energy,
                    "hunger": phys.hunger,
                    "thirst": phys.thirst,
                    "alive": phys.alive,
                    "action": trace.action,
                    "stimulus_sign": trace.stimulus_sign,
                }
                if trace.koncept_counts is not None:
                    row["koncept_counts"] = dict(trace.koncept_counts)
                series.append(row)
        if not sim.any_alive():
            break

    summaries = []
    for body in sim.world.animats:
        controller = sim.controllers[body.id]
        counts = (controller.hierarchy.koncept_counts()
                  if controller.kind == "keba" else {})
        created = (controller.hierarchy.total_created()
                   if controller.kind == "keba" else 0)
        hunger = hunger_history[body.id]
        quarter = hunger[-max(1, math.ceil(len(hunger) / 4)):] if hunger else [0.0]
        summaries.append(AnimatSummary(
            animat_id=body.id,
            controller=controller.kind,
            death_tick=death_tick[body.id],
            survived=body.physiology.alive,
            ticks_alive=death_tick[body.id] if death_tick[body.id] is not None else sim.tick,
            total_koncepts=created,
            per_level_counts=counts,
            mean_hunger_last_quarter=sum(quarter) / len(quarter),
        ))
    metrics = MetricsLog(
        scenario_name=config.name,
        seed=config.seed,
        ticks_requested=config.ticks,
        ticks_run=sim.tick,
        series=series,
        summaries=summaries,
    )
    return RunResult(metrics, sim)


def survival_ticks(summary: AnimatSummary, ticks: int) -> int:
    return summary.death_tick if summary.death_tick is not None else ticks


# ---------------------------------------------------------------------------
# baseline comparison and noise sweep
# ---------------------------------------------------------------------------

def _solo_config(base: ScenarioConfig, controller: str, seed: int,
                 noise: Optional[float] = None) -> dict:
    """One animat of the given kind in the base world, as a plain dict
    (picklable for the process pool)."""
    template = asdict(base.animats[0])
    template["controller"] = controller
    doc = base.to_dict()
    doc["seed"] = seed
    doc["animats"] = [template]
    doc["record_series"] = False
    doc["name"] = f"{base.name}/{controller}/seed{seed}"
    if noise is not None:
        doc["world"] = dict(doc["world"], noise_amplitude=noise)
    return doc


def _summary_worker(config_doc: dict) -> dict:
    config = ScenarioConfig.from_dict(config_doc)
    result = run_scenario(config)
    summary = result.metrics.summaries[0]
    return {
        "name": config.name,
        "seed": config.seed,
        "controller": summary.controller,
        "survival": survival_ticks(summary, config.ticks),
        "survived": summary.survived,
        "total_koncepts": summary.total_koncepts,
        "mean_hunger_last_quarter": summary.mean_hunger_last_quarter,
    }


def _run_all(config_docs: list[dict], jobs: int) -> list[dict]:
    if jobs <= 1:
        return [_summary_worker(doc) for doc in config_docs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_summary_worker, config_docs))


def compare_baselines(base: ScenarioConfig, seeds: int = 20, jobs: int = 0) -> dict:
    """Solo runs of keba/random/none controllers over identically-seeded
    worlds; returns per-controller survival lists and medians."""
    jobs = jobs or (os.cpu_count() or 1)
    docs = []
    for i in range(seeds):
        for controller in CONTROLLER_KINDS:
            docs.append(_solo_config(base, controller, base.seed + i))
    rows = _run_all(docs, jobs)
    by_controller: dict[str, list[dict]] = {kind: [] for kind in CONTROLLER_KINDS}
    for row in rows:
        by_controller[row["controller"]].append(row)
    for kind in by_controller:
        by_controller[kind].sort(key=lambda r: r["seed"])
    return {
        "seeds": seeds,
        "ticks": base.ticks,
        "runs": by_controller,
        "median_survival": {
            kind: statistics.median(r["survival"] for r in rows_k)
            for kind, rows_k in by_controller.items()
        },
        "mean_hunger_last_quarter": {
            kind: statistics.fmean(r["mean_hunger_last_quarter"] for r in rows_k)
            for kind, rows_k in by_controller.items()
        },
    }


def noise_sweep(base: ScenarioConfig, noise_levels: Iterable[float],
                seeds: int = 20, jobs: int = 0) -> list[dict]:
    """Koncept counts and survival per noise level, with a same-seed random
    baseline for comparison."""
    levels = list(noise_levels)
    if len(levels) < 3 or 0.0 not in levels:
        raise ValueError("noise sweep needs at least 3 levels including 0")
    jobs = jobs or (os.cpu_count() or 1)
    docs = []
    for noise in levels:
        for i in range(seeds):
            docs.append(_solo_config(base, "keba", base.seed + i, noise=noise))
            docs.append(_solo_config(base, "random", base.seed + i, noise=noise))
    rows = _run_all(docs, jobs)  # order mirrors docs
    table = []
    index = 0
    for noise in levels:
        keba_rows, random_rows = [], []
        for _ in range(seeds):
            keba_rows.append(rows[index]); index += 1
            random_rows.append(rows[index]); index += 1
        keba_counts = [r["total_koncepts"] for r in keba_rows]
        keba_survival = [r["survival"] for r in keba_rows]
        random_survival = [r["survival"] for r in random_rows]
        wins = sum(1 for k, r in zip(keba_survival, random_survival) if k > r)
        table.append({
            "noise": noise,
            "seeds": seeds,
            "mean_koncepts": statistics.fmean(keba_counts),
            "stdev_koncepts": statistics.pstdev(keba_counts),
            "median_keba_survival": statistics.median(keba_survival),
            "median_random_survival": statistics.median(random_survival),
            "keba_beats_random_fraction": wins / seeds,
        })
    return table


# ---------------------------------------------------------------------------
# koncept similarity between two hierarchies
# ---------------------------------------------------------------------------

def _match_level(koncepts_a, koncepts_b, parent_map: dict[int, int],
                 tol: float) -> list[tuple[int, int, float]]:
    """Greedy one-to-one matching of koncepts whose aligned centers are
    within tol.

    Centers are embedded over the union of (mapped) parent slots with zeros
    where a koncept lacks the parent: a parent is excluded at creation
    exactly when its activation sat below the active threshold, so zero is
    the faithful imputation.  A koncept is only comparable when every one
    of its parents has a counterpart in the other hierarchy's matching.
    """
    candidates = []
    for ka in koncepts_a:
        if any(parent not in parent_map for parent in ka.parents):
            continue
        center_a = {parent_map[p]: c for p, c in zip(ka.parents, ka.center)}
        for kb in koncepts_b:
            center_b = dict(zip(kb.parents, kb.center))
            slots = set(center_a) | set(center_b)
            d = math.sqrt(sum(
                (center_a.get(slot, 0.0) - center_b.get(slot, 0.0)) ** 2
                for slot in slots))
            if d <= tol:
                candidates.append((d, ka.id, kb.id))
    candidates.sort()
    used_a, used_b, matches = set(), set(), []
    for d, ida, idb in candidates:
        if ida in used_a or idb in used_b:
            continue
        used_a.add(ida)
        used_b.add(idb)
        matches.append((ida, idb, d))
    return matches


def koncept_similarity(hierarchy_a: Hierarchy, hierarchy_b: Hierarchy,
                       level: int, tol: float = 0.1) -> float:
    """Fraction of koncepts at a level that pair up across two hierarchies.

    Level 1 aligns canonically over the fixed protokoncept slots; deeper
    levels are only comparable through the matching of their parents, so a
    level-k score requires matchings at every level below it.
    """
    if level < 1:
        raise ValueError("similarity is defined for levels >= 1")
    if level >= len(hierarchy_a.levels) or level >= len(hierarchy_b.levels):
        log.warning("similarity level %d missing in one hierarchy; defined as 0", level)
        return 0.0
    parent_map = {kon.id: other.id for kon, other in
                  zip(hierarchy_a.levels[0], hierarchy_b.levels[0])}
    matches = []
    for current in range(1, level + 1):
        matches = _match_level(hierarchy_a.levels[current], hierarchy_b.levels[current],
                               parent_map, tol)
        parent_map = {ida: idb for ida, idb, _ in matches}
    denominator = max(len(hierarchy_a.levels[level]), len(hierarchy_b.levels[level]))
    if denominator == 0:
        return 0.0
    return len(matches) / denominator


def paired_similarity(base: ScenarioConfig, pairs: int = 10, levels=(1, 2),
                      jobs: int = 0) -> dict:
    """Mean similarity per level across paired runs: two koncept animats in
    the same world, compared after the run."""
    del jobs  # per-pair runs share a simulation; parallelism adds little here
    means: dict[int, list[float]] = {level: [] for level in levels}
    for i in range(pairs):
        doc = base.to_dict()
        doc["seed"] = base.seed + i
        template = asdict(base.animats[0])
        template["controller"] = "keba"
        template["position"] = None  # both placed by the seeded placement stream
        doc["animats"] = [dict(template), dict(template)]
        doc["record_series"] = False
        doc["name"] = f"{base.name}/pair{i}"
        result = run_scenario(ScenarioConfig.from_dict(doc))
        h0 = result.simulation.controllers[0].hierarchy
        h1 = result.simulation.controllers[1].hierarchy
        for level in levels:
            means[level].append(koncept_similarity(h0, h1, level))
    return {
        "pairs": pairs,
        "mean_similarity": {level: statistics.fmean(values)
                            for level, values in means.items()},
        "per_pair": means,
    }


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _atomic_write(path: Path, payload: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(payload)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise


def export_metrics(metrics: MetricsLog, out_dir: str | Path,
                   formats: Iterable[str] = ("csv", "json-lines")) -> list[Path]:
    """series.csv / series.jsonl plus summary.json, written atomically."""
    out_dir = Path(out_dir)
    written = []
    max_level = 0
    for row in metrics.series:
        counts = row.get("koncept_counts")
        if counts:
            max_level = max(max_level, max(counts))
    level_columns = [f"koncepts_l{level}" for level in range(1, max_level + 1)]
    base_columns = ["tick", "animat_id", "controller", "energy", "hunger",
                    "thirst", "alive", "action", "stimulus_sign"]

    for fmt in formats:
        if fmt == "csv":
            lines = [",".join(base_columns + level_columns)]
            for row in metrics.series:
                counts = row.get("koncept_counts") or {}
                cells = [str(row[c]) for c in base_columns]
                cells += [str(counts.get(level, 0))
                          for level in range(1, max_level + 1)]
                lines.append(",".join(cells))
            target = out_dir / "series.csv"
            _atomic_write(target, "\n".join(lines) + "\n")
            written.append(target)
        elif fmt == "json-lines":
            target = out_dir / "series.jsonl"
            _atomic_write(target, "".join(json.dumps(row) + "\n"
                                          for row in metrics.series))
            written.append(target)
        else:
            raise ValueError(f"unknown export format {fmt!r}")

    summary_target = out_dir / "summary.json"
    _atomic_write(summary_target, json.dumps({
        "scenario_name": metrics.scenario_name,
        "seed": metrics.seed,
        "ticks_requested": metrics.ticks_requested,
        "ticks_run": metrics.ticks_run,
        "summaries": [asdict(s) for s in metrics.summaries],
    }, indent=1))
    written.append(summary_target)
    return written
