"""Versioned save/load of complete simulation state.

Documents are human-readable JSON.  State floats are encoded as C99 hex
strings (float.hex) so a load/resume reproduces the exact bit patterns;
the decoder also accepts plain JSON numbers, which is what hand-written
scenario files use.  Writes go through a temp file and os.replace, so a
failed save never leaves a partial document behind.
"""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from pathlib import Path
from random import Random
from typing import Any, Optional

from kebalab import __version__
from kebalab.agent import Controller, make_controller
from kebalab.core import ACTIONS, Hierarchy, KebaParams
from kebalab.sim import Simulation
from kebalab.world import (
    LOCOMOTION_MODES,
    PHENOMENON_KINDS,
    AnimatBody,
    Phenomenon,
    Physiology,
    Qualia,
    WorldParams,
    WorldState,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SAVE_EXTENSION = ".kebasave.json"


class LoadError(Exception):
    """Malformed or unsupported document; message carries the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# float codec
# ---------------------------------------------------------------------------

def enc_float(value: float) -> str:
    if not math.isfinite(value):
        raise ValueError(f"state floats must be finite, got {value}")
    return float(value).hex()


def dec_float(raw: Any, path: str) -> float:
    if isinstance(raw, bool):
        raise LoadError(path, "expected a number, got a bool")
    if isinstance(raw, (int, float)):
        return float(raw)
    if isinstance(raw, str):
        try:
            return float.fromhex(raw)
        except ValueError:
            raise LoadError(path, f"not a hex float: {raw!r}") from None
    raise LoadError(path, f"expected a number or hex string, got {type(raw).__name__}")


def _get(doc: dict, key: str, path: str) -> Any:
    if not isinstance(doc, dict):
        raise LoadError(path, f"expected an object, got {type(doc).__name__}")
    if key not in doc:
        raise LoadError(f"{path}.{key}" if path else key, "missing required field")
    return doc[key]


def _num(doc: dict, key: str, path: str) -> float:
    return dec_float(_get(doc, key, path), f"{path}.{key}")


def _int(doc: dict, key: str, path: str) -> int:
    raw = _get(doc, key, path)
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise LoadError(f"{path}.{key}", f"expected an integer, got {raw!r}")
    return raw


def _bool(doc: dict, key: str, path: str) -> bool:
    raw = _get(doc, key, path)
    if not isinstance(raw, bool):
        raise LoadError(f"{path}.{key}", f"expected a bool, got {raw!r}")
    return raw


def _str(doc: dict, key: str, path: str, allowed: Optional[tuple] = None) -> str:
    raw = _get(doc, key, path)
    if not isinstance(raw, str):
        raise LoadError(f"{path}.{key}", f"expected a string, got {raw!r}")
    if allowed is not None and raw not in allowed:
        raise LoadError(f"{path}.{key}", f"expected one of {allowed}, got {raw!r}")
    return raw


def _list(doc: dict, key: str, path: str) -> list:
    raw = _get(doc, key, path)
    if not isinstance(raw, list):
        raise LoadError(f"{path}.{key}", f"expected a list, got {type(raw).__name__}")
    return raw


def _warn_unknown(doc: dict, known: set[str], path: str) -> None:
    for key in doc:
        if key not in known:
            log.warning("ignoring unknown field %s.%s", path, key)


def _pair(raw: Any, path: str) -> tuple[float, float]:
    if not isinstance(raw, list) or len(raw) != 2:
        raise LoadError(path, "expected a [x, y] pair")
    return (dec_float(raw[0], f"{path}[0]"), dec_float(raw[1], f"{path}[1]"))


# ---------------------------------------------------------------------------
# rng streams
# ---------------------------------------------------------------------------

def encode_rng(rng: Random) -> dict:
    version, internal, gauss = rng.getstate()
    return {
        "version": version,
        "state": list(internal),
        "gauss_next": None if gauss is None else enc_float(gauss),
    }

def decode_rng(doc: dict, path: str) -> Random:
    version = _int(doc, "version", path)
    state = _list(doc, "state", path)
    gauss_raw = _get(doc, "gauss_next", path)
    gauss = None if gauss_raw is None else dec_float(gauss_raw, f"{path}.gauss_next")
    rng = Random()
    try:
        rng.setstate((version, tuple(state), gauss))
    except (TypeError, ValueError) as exc:
        raise LoadError(path, f"invalid rng state: {exc}") from None
    return rng


# ---------------------------------------------------------------------------
# world
# ---------------------------------------------------------------------------

_WORLD_FLOAT_FIELDS = (
    "width", "height", "noise_amplitude", "hunger_rate", "thirst_rate",
    "high_threshold", "low_threshold", "energy_drain_per_high", "energy_gain",
    "eat_relief", "drink_relief", "penalty", "food_shrink", "predation_drain",
    "spawn_rate", "wander_sigma", "circle_turn", "speed",
)


def encode_world_params(params: WorldParams) -> dict:
    doc = {name: enc_float(getattr(params, name)) for name in _WORLD_FLOAT_FIELDS}
    doc["lightning_ttl"] = params.lightning_ttl
    doc["rain_ttl"] = params.rain_ttl
    doc["qualia_table"] = {
        kind: [enc_float(x) for x in qualia.as_tuple()]
        for kind, qualia in params.qualia_table.items()
    }
    doc["size_table"] = {kind: enc_float(x) for kind, x in params.size_table.items()}
    return doc


def decode_world_params(doc: dict, path: str) -> WorldParams:
    kwargs: dict[str, Any] = {
        name: _num(doc, name, path) for name in _WORLD_FLOAT_FIELDS if name in doc
    }
    if "lightning_ttl" in doc:
        kwargs["lightning_ttl"] = _int(doc, "lightning_ttl", path)
    if "rain_ttl" in doc:
        kwargs["rain_ttl"] = _int(doc, "rain_ttl", path)
    if "qualia_table" in doc:
        table = {}
        for kind, values in _get(doc, "qualia_table", path).items():
            if not isinstance(values, list) or len(values) != 9:
                raise LoadError(f"{path}.qualia_table.{kind}", "expected 9 channel values")
            table[kind] = Qualia(*(dec_float(x, f"{path}.qualia_table.{kind}[{i}]")
                                   for i, x in enumerate(values)))
        kwargs["qualia_table"] = table
    if "size_table" in doc:
        kwargs["size_table"] = {
            kind: dec_float(x, f"{path}.size_table.{kind}")
            for kind, x in _get(doc, "size_table", path).items()
        }
    known = set(_WORLD_FLOAT_FIELDS) | {"lightning_ttl", "rain_ttl", "qualia_table", "size_table"}
    _warn_unknown(doc, known, path)
    try:
        params = WorldParams(**kwargs)
        params.validate()
    except ValueError as exc:
        raise LoadError(path, str(exc)) from None
    return params


def encode_phenomenon(ph: Phenomenon) -> dict:
    return {
        "id": ph.id,
        "kind": ph.kind,
        "position": [enc_float(ph.position[0]), enc_float(ph.position[1])],
        "size": enc_float(ph.size),
        "age": ph.age,
        "qualia": [enc_float(x) for x in ph.qualia.as_tuple()],
    }


def decode_phenomenon(doc: dict, path: str) -> Phenomenon:
    qualia_raw = _list(doc, "qualia", path)
    if len(qualia_raw) != 9:
        raise LoadError(f"{path}.qualia", "expected 9 channel values")
    _warn_unknown(doc, {"id", "kind", "position", "size", "age", "qualia"}, path)
    return Phenomenon(
        id=_int(doc, "id", path),
        kind=_str(doc, "kind", path, PHENOMENON_KINDS),
        position=_pair(_get(doc, "position", path), f"{path}.position"),
        size=_num(doc, "size", path),
        age=_int(doc, "age", path),
        qualia=Qualia(*(dec_float(x, f"{path}.qualia[{i}]") for i, x in enumerate(qualia_raw))),
    )


def encode_body(body: AnimatBody) -> dict:
    return {
        "id": body.id,
        "position": [enc_float(body.position[0]), enc_float(body.position[1])],
        "heading": enc_float(body.heading),
        "locomotion": body.locomotion,
        "perception_radius": enc_float(body.perception_radius),
        "size": enc_float(body.size),
        "current_action": body.current_action,
        "physiology": {
            "energy": enc_float(body.physiology.energy),
            "hunger": enc_float(body.physiology.hunger),
            "thirst": enc_float(body.physiology.thirst),
            "alive": body.physiology.alive,
        },
    }


def decode_body(doc: dict, path: str) -> AnimatBody:
    phys_doc = _get(doc, "physiology", path)
    phys_path = f"{path}.physiology"
    physiology = Physiology(
        energy=_num(phys_doc, "energy", phys_path),
        hunger=_num(phys_doc, "hunger", phys_path),
        thirst=_num(phys_doc, "thirst", phys_path),
        alive=_bool(phys_doc, "alive", phys_path),
    )
    _warn_unknown(doc, {"id", "position", "heading", "locomotion", "perception_radius",
                        "size", "current_action", "physiology"}, path)
    return AnimatBody(
        id=_int(doc, "id", path),
        position=_pair(_get(doc, "position", path), f"{path}.position"),
        heading=_num(doc, "heading", path),
        locomotion=_str(doc, "locomotion", path, LOCOMOTION_MODES),
        physiology=physiology,
        perception_radius=_num(doc, "perception_radius", path),
        size=_num(doc, "size", path),
        current_action=_str(doc, "current_action", path, ACTIONS),
    )


# ---------------------------------------------------------------------------
# hierarchy
# ---------------------------------------------------------------------------

_KEBA_FLOAT_FIELDS = (
    "activation_potential", "persistence", "stability_speed", "center_rate",
    "radius_rate", "initial_r1", "initial_r2", "radius_max", "noise_floor",
    "active_threshold", "exploration_rate",
)


def encode_keba_params(params: KebaParams) -> dict:
    doc = {name: enc_float(getattr(params, name)) for name in _KEBA_FLOAT_FIELDS}
    doc["max_levels"] = params.max_levels
    doc["max_koncepts_per_level"] = params.max_koncepts_per_level
    return doc


def decode_keba_params(doc: dict, path: str) -> KebaParams:
    kwargs: dict[str, Any] = {}
    for name in _KEBA_FLOAT_FIELDS:
        if name in doc:
            raw = doc[name]
            if name == "noise_floor" and raw is None:
                kwargs[name] = None
            else:
                kwargs[name] = dec_float(raw, f"{path}.{name}")
    for name in ("max_levels", "max_koncepts_per_level"):
        if name in doc:
            kwargs[name] = _int(doc, name, path)
    _warn_unknown(doc, set(_KEBA_FLOAT_FIELDS) | {"max_levels", "max_koncepts_per_level"}, path)
    try:
        params = KebaParams(**kwargs)
        params.validate()
    except ValueError as exc:
        raise LoadError(path, str(exc)) from None
    return params


def encode_hierarchy(hierarchy: Hierarchy) -> dict:
    state = hierarchy.export_state()
    state["params"] = encode_keba_params(hierarchy.params)
    state["levels"] = [
        [
            {
                "id": entry["id"],
                "level": entry["level"],
                "parents": entry["parents"],
                "center": None if entry["center"] is None
                else [enc_float(x) for x in entry["center"]],
                "r1": None if entry["r1"] is None else enc_float(entry["r1"]),
                "r2": None if entry["r2"] is None else enc_float(entry["r2"]),
                "v": enc_float(entry["v"]),
                "a": enc_float(entry["a"]),
                "a_prev": enc_float(entry["a_prev"]),
                "s": enc_float(entry["s"]),
                "links": {action: enc_float(value)
                          for action, value in entry["links"].items()},
            }
            for entry in level
        ]
        for level in state["levels"]
    ]
    return state


def decode_hierarchy(doc: dict, path: str, rng: Random) -> Hierarchy:
    version = _int(doc, "schema_version", path)
    if version != 1:
        raise LoadError(f"{path}.schema_version", f"expected 1, found {version}")
    params = decode_keba_params(_get(doc, "params", path), f"{path}.params")
    if params.noise_floor is None:
        raise LoadError(f"{path}.params.noise_floor", "missing required field")
    levels_doc = _list(doc, "levels", path)
    if not levels_doc:
        raise LoadError(f"{path}.levels", "hierarchy must have a level 0")
    levels_state = []
    for level_idx, level_doc in enumerate(levels_doc):
        level_path = f"{path}.levels[{level_idx}]"
        if not isinstance(level_doc, list):
            raise LoadError(level_path, "expected a list of koncepts")
        level_state = []
        for kon_idx, entry in enumerate(level_doc):
            kon_path = f"{level_path}[{kon_idx}]"
            parents = _list(entry, "parents", kon_path)
            center_raw = _get(entry, "center", kon_path)
            r1_raw = _get(entry, "r1", kon_path)
            r2_raw = _get(entry, "r2", kon_path)
            if level_idx == 0:
                if parents or center_raw is not None or r1_raw is not None:
                    raise LoadError(kon_path, "level-0 koncepts carry no parents/center/radii")
                center, r1, r2 = None, None, None
            else:
                if len(parents) < 2:
                    raise LoadError(f"{kon_path}.parents", "need at least 2 parents")
                center = [dec_float(x, f"{kon_path}.center[{i}]")
                          for i, x in enumerate(center_raw)]
                if len(center) != len(parents):
                    raise LoadError(f"{kon_path}.center", "center/parents length mismatch")
                r1 = dec_float(r1_raw, f"{kon_path}.r1")
                r2 = dec_float(r2_raw, f"{kon_path}.r2")
                if not 0.0 < r1 < r2:
                    raise LoadError(kon_path, f"invariant violation: need 0 < r1 < r2, got {r1}, {r2}")
            links_doc = _get(entry, "links", kon_path)
            links = {}
            for action in ACTIONS:
                links[action] = dec_float(
                    _get(links_doc, action, f"{kon_path}.links"), f"{kon_path}.links.{action}")
            level_state.append({
                "id": _int(entry, "id", kon_path),
                "level": _int(entry, "level", kon_path),
                "parents": parents,
                "center": center,
                "r1": r1,
                "r2": r2,
                "v": _num(entry, "v", kon_path),
                "a": _num(entry, "a", kon_path),
                "a_prev": _num(entry, "a_prev", kon_path),
                "s": _num(entry, "s", kon_path),
                "links": links,
            })
        levels_state.append(level_state)
    # referenced parents must exist one level down
    for level_idx in range(1, len(levels_state)):
        below = {entry["id"] for entry in levels_state[level_idx - 1]}
        for entry in levels_state[level_idx]:
            for parent in entry["parents"]:
                if parent not in below:
                    raise LoadError(f"{path}.levels[{level_idx}]",
                                    f"koncept {entry['id']} references missing parent {parent}")
    state = {
        "params": {name: getattr(params, name) for name in _KEBA_FLOAT_FIELDS},
        "next_koncept_id": _int(doc, "next_koncept_id", path),
        "creation_refusals": doc.get("creation_refusals", 0),
        "levels": levels_state,
    }
    state["params"]["max_levels"] = params.max_levels
    state["params"]["max_koncepts_per_level"] = params.max_koncepts_per_level
    return Hierarchy.from_state(state, rng)


# ---------------------------------------------------------------------------
# whole simulation
# ---------------------------------------------------------------------------

def save_state(sim: Simulation) -> dict:
    """Complete, self-contained document for the paused simulation."""
    animats = []
    for body in sim.world.animats:
        controller = sim.controllers[body.id]
        entry: dict[str, Any] = {"body": encode_body(body), "controller": {"kind": controller.kind}}
        if controller.kind == "keba":
            entry["controller"]["hierarchy"] = encode_hierarchy(controller.hierarchy)
        animats.append(entry)
    return {
        "schema_version": SCHEMA_VERSION,
        "code_version": f"kebalab {__version__}",
        "tick": sim.tick,
        "rng": {name: encode_rng(rng) for name, rng in sorted(sim.rngs.items())},
        "world": {
            "params": encode_world_params(sim.world.params),
            "phenomena": [encode_phenomenon(ph) for ph in sim.world.phenomena],
            "next_phenomenon_id": sim.world.next_phenomenon_id,
        },
        "animats": animats,
        "spawn_schedule": [
            {"tick": tick, "kind": spec["kind"],
             "position": None if spec.get("position") is None
             else [enc_float(spec["position"][0]), enc_float(spec["position"][1])],
             "size": None if spec.get("size") is None else enc_float(spec["size"])}
            for tick in sorted(sim.spawn_schedule)
            for spec in sim.spawn_schedule[tick]
        ],
        "scenario": sim.scenario,
    }


def load_state(doc: Any) -> Simulation:
    if not isinstance(doc, dict):
        raise LoadError("", "document root must be an object")
    version = _int(doc, "schema_version", "")
    if version != SCHEMA_VERSION:
        raise LoadError("schema_version",
                        f"expected {SCHEMA_VERSION}, found {version}")
    tick = _int(doc, "tick", "")

    rng_doc = _get(doc, "rng", "")
    if not isinstance(rng_doc, dict) or not rng_doc:
        raise LoadError("rng", "missing rng stream states")
    rngs = {name: decode_rng(state, f"rng.{name}") for name, state in rng_doc.items()}
    for required in ("world", "noise"):
        if required not in rngs:
            raise LoadError("rng", f"missing required stream {required!r}")

    world_doc = _get(doc, "world", "")
    params = decode_world_params(_get(world_doc, "params", "world"), "world.params")
    world = WorldState(params)
    for i, ph_doc in enumerate(_list(world_doc, "phenomena", "world")):
        world.phenomena.append(decode_phenomenon(ph_doc, f"world.phenomena[{i}]"))
    world.next_phenomenon_id = _int(world_doc, "next_phenomenon_id", "world")

    controllers: dict[int, Controller] = {}
    for i, entry in enumerate(_list(doc, "animats", "")):
        body = decode_body(_get(entry, "body", f"animats[{i}]"), f"animats[{i}].body")
        world.add_animat(body)
        ctrl_doc = _get(entry, "controller", f"animats[{i}]")
        kind = _str(ctrl_doc, "kind", f"animats[{i}].controller", ("keba", "random", "none"))
        if kind == "keba":
            link_rng = rngs.get(f"links:{body.id}")
            if link_rng is None:
                raise LoadError("rng", f"missing required stream 'links:{body.id}'")
            hierarchy = decode_hierarchy(
                _get(ctrl_doc, "hierarchy", f"animats[{i}].controller"),
                f"animats[{i}].controller.hierarchy", link_rng)
            action_rng = rngs.get(f"actions:{body.id}")
            if action_rng is None and hierarchy.params.exploration_rate > 0:
                raise LoadError("rng", f"missing required stream 'actions:{body.id}'")
            controllers[body.id] = Controller("keba", hierarchy=hierarchy, rng=action_rng)
        elif kind == "random":
            action_rng = rngs.get(f"actions:{body.id}")
            if action_rng is None:
                raise LoadError("rng", f"missing required stream 'actions:{body.id}'")
            controllers[body.id] = Controller("random", rng=action_rng)
        else:
            controllers[body.id] = Controller("none")

    schedule: dict[int, list[dict]] = {}
    for i, spec in enumerate(doc.get("spawn_schedule", [])):
        spec_path = f"spawn_schedule[{i}]"
        position = _get(spec, "position", spec_path)
        schedule.setdefault(_int(spec, "tick", spec_path), []).append({
            "kind": _str(spec, "kind", spec_path, PHENOMENON_KINDS),
            "position": None if position is None else _pair(position, f"{spec_path}.position"),
            "size": None if spec.get("size") is None
            else dec_float(spec["size"], f"{spec_path}.size"),
        })

    _warn_unknown(doc, {"schema_version", "code_version", "tick", "rng", "world",
                        "animats", "spawn_schedule", "scenario"}, "")
    return Simulation(
        world=world,
        controllers=controllers,
        rngs=rngs,
        scenario=doc.get("scenario") or {},
        spawn_schedule=schedule,
        tick=tick,
    )


def write_save(sim: Simulation, path: str | Path) -> Path:
    """Serialize and atomically replace the target file."""
    path = Path(path)
    doc = save_state(sim)
    payload = json.dumps(doc, indent=1)
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
    return path


def read_save(path: str | Path) -> Simulation:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise LoadError(str(path), f"not valid JSON: {exc}") from None
    return load_state(doc)
