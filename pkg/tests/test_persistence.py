"""Save/load round-trip and resume-exactness tests."""

import json

import pytest

from kebalab.agent import make_controller
from kebalab.core import KebaParams
from kebalab.persistence import (
    LoadError,
    dec_float,
    enc_float,
    load_state,
    read_save,
    save_state,
    write_save,
)
from kebalab.sim import Simulation, make_stream
from kebalab.world import AnimatBody, WorldParams, WorldState


def build_sim(seed=11, noise=0.1) -> Simulation:
    params = WorldParams(noise_amplitude=noise, spawn_rate=0.02)
    world = WorldState(params)
    rngs = {"world": make_stream(seed, "world"), "noise": make_stream(seed, "noise")}
    controllers = {}
    specs = [("keba", "wander"), ("random", "circular"), ("none", "static")]
    for animat_id, (kind, locomotion) in enumerate(specs):
        world.add_animat(AnimatBody(
            id=animat_id, position=(20.0 * animat_id + 10, 40.0), locomotion=locomotion))
        rngs[f"links:{animat_id}"] = make_stream(seed, f"links:{animat_id}")
        rngs[f"actions:{animat_id}"] = make_stream(seed, f"actions:{animat_id}")
        controllers[animat_id] = make_controller(
            kind, keba_params=KebaParams(),
            link_rng=rngs[f"links:{animat_id}"],
            action_rng=rngs[f"actions:{animat_id}"],
            noise_amplitude=noise)
    sim = Simulation(world, controllers, rngs, scenario={"name": "roundtrip-test"})
    sim.schedule_spawn(5, "rock", (50.0, 50.0))
    sim.schedule_spawn(250, "lightning", None)
    return sim


class TestFloatCodec:
    def test_hex_roundtrip_is_bit_exact(self):
        for value in (0.1, 1 / 3, 1e-308, 123456.789, 0.0):
            assert dec_float(enc_float(value), "x") == value

    def test_plain_numbers_accepted(self):
        assert dec_float(0.25, "x") == 0.25
        assert dec_float(3, "x") == 3.0

    def test_garbage_rejected_with_path(self):
        with pytest.raises(LoadError) as err:
            dec_float("zz", "world.params.speed")
        assert "world.params.speed" in str(err.value)


class TestRoundTrip:
    def test_save_load_save_is_stable(self):
        sim = build_sim()
        sim.run(120, stop_when_all_dead=False)
        doc = save_state(sim)
        clone = load_state(doc)
        assert save_state(clone) == doc

    def test_resume_equals_uninterrupted_run(self):
        straight = build_sim()
        straight.run(200, stop_when_all_dead=False)

        interrupted = build_sim()
        interrupted.run(100, stop_when_all_dead=False)
        resumed = load_state(save_state(interrupted))
        resumed.run(100, stop_when_all_dead=False)

        assert save_state(resumed) == save_state(straight)

    def test_resume_traces_are_identical(self):
        straight = build_sim(seed=3)
        for _ in range(80):
            straight.run_tick()
        tail_a = [[t.to_json_line() for t in straight.run_tick()] for _ in range(40)]

        interrupted = build_sim(seed=3)
        for _ in range(80):
            interrupted.run_tick()
        resumed = load_state(save_state(interrupted))
        tail_b = [[t.to_json_line() for t in resumed.run_tick()] for _ in range(40)]
        assert tail_a == tail_b

    def test_file_roundtrip(self, tmp_path):
        sim = build_sim()
        sim.run(50, stop_when_all_dead=False)
        target = tmp_path / "session.kebasave.json"
        write_save(sim, target)
        assert save_state(read_save(target)) == save_state(sim)


class TestValidation:
    def _doc(self):
        sim = build_sim()
        sim.run(150, stop_when_all_dead=False)
        return save_state(sim)

    def test_missing_rng_rejected(self):
        doc = self._doc()
        del doc["rng"]["noise"]
        with pytest.raises(LoadError) as err:
            load_state(doc)
        assert "noise" in str(err.value)

    def test_version_mismatch_names_both_versions(self):
        doc = self._doc()
        doc["schema_version"] = 99
        with pytest.raises(LoadError) as err:
            load_state(doc)
        message = str(err.value)
        assert "99" in message and "1" in message

    def test_truncated_file_is_a_parse_error(self, tmp_path):
        target = tmp_path / "broken.kebasave.json"
        target.write_text(json.dumps(self._doc())[:200])
        with pytest.raises(LoadError) as err:
            read_save(target)
        assert "JSON" in str(err.value)

    def test_unknown_extra_fields_ignored_with_warning(self, caplog):
        doc = self._doc()
        doc["florbs"] = 12
        doc["world"]["params"]["glorp"] = 1
        with caplog.at_level("WARNING"):
            sim = load_state(doc)
        assert sim.tick == 150
        assert "florbs" in caplog.text
        assert "glorp" in caplog.text

    def test_inverted_radii_rejected(self):
        doc = self._doc()
        hierarchy = doc["animats"][0]["controller"]["hierarchy"]
        assert len(hierarchy["levels"]) > 1, "run long enough to create a koncept"
        kon = hierarchy["levels"][1][0]
        kon["r1"], kon["r2"] = kon["r2"], kon["r1"]
        with pytest.raises(LoadError) as err:
            load_state(doc)
        assert "r1" in str(err.value)

    def test_malformed_field_reports_path(self):
        doc = self._doc()
        doc["animats"][0]["body"]["physiology"]["energy"] = "not-a-number"
        with pytest.raises(LoadError) as err:
            load_state(doc)
        assert "animats[0].body.physiology.energy" in str(err.value)

    def test_missing_parent_reference_rejected(self):
        doc = self._doc()
        hierarchy = doc["animats"][0]["controller"]["hierarchy"]
        assert len(hierarchy["levels"]) > 1
        hierarchy["levels"][1][0]["parents"] = [9999, 9998]
        with pytest.raises(LoadError) as err:
            load_state(doc)
        assert "parent" in str(err.value)
