"""Controller and tick-pipeline tests."""

from random import Random

import pytest

from kebalab.agent import Controller, make_controller, tick_animat
from kebalab.core import ACTIONS, KebaParams
from kebalab.sim import Simulation, make_stream
from kebalab.world import AnimatBody, WorldParams, WorldState

import oracles


def build_sim(controller_kind="keba", seed=0, world_overrides=None,
              keba_overrides=None, position=(50.0, 50.0), locomotion="static"):
    params = WorldParams(**(world_overrides or {"spawn_rate": 0.0}))
    world = WorldState(params)
    body = AnimatBody(id=0, position=position, locomotion=locomotion)
    world.add_animat(body)
    controller = make_controller(
        controller_kind,
        keba_params=KebaParams(**(keba_overrides or {})),
        link_rng=make_stream(seed, "links:0"),
        action_rng=make_stream(seed, "actions:0"),
        noise_amplitude=params.noise_amplitude,
    )
    sim = Simulation(
        world=world,
        controllers={0: controller},
        rngs={"world": make_stream(seed, "world"), "noise": make_stream(seed, "noise")},
    )
    return sim, body, controller


class TestControllers:
    def test_none_controller_never_acts(self):
        sim, body, _ = build_sim("none")
        for traces in sim.run(50, stop_when_all_dead=False):
            assert traces[0].action == "none"

    def test_random_controller_is_reproducible(self):
        actions_a = [t[0].action for t in build_sim("random", seed=5)[0].run(100)]
        actions_b = [t[0].action for t in build_sim("random", seed=5)[0].run(100)]
        assert actions_a == actions_b
        assert len(set(actions_a)) > 1

    def test_controller_validation(self):
        with pytest.raises(ValueError):
            Controller("keba")
        with pytest.raises(ValueError):
            Controller("random")
        with pytest.raises(ValueError):
            Controller("telepathic")

    def test_dead_animat_is_a_noop(self):
        sim, body, _ = build_sim("random")
        body.physiology.alive = False
        trace = sim.run_tick()[0]
        assert trace.action == "none"
        assert not trace.alive
        assert body.position == (50.0, 50.0)


class TestKebaAnimat:
    def test_protokoncepts_mirror_last_perception(self):
        sim, _, controller = build_sim("keba")
        sim.world.spawn("food", (53.0, 50.0))
        for _ in range(20):
            sim.run_tick()
        hierarchy = controller.hierarchy
        assert hierarchy.last_sensor is not None
        for kon, value in zip(hierarchy.levels[0], hierarchy.last_sensor):
            assert kon.v == value

    def test_runs_with_max_levels_zero(self):
        sim, body, controller = build_sim("keba", keba_overrides={"max_levels": 0})
        for _ in range(100):
            sim.run_tick()
        assert len(controller.hierarchy.levels) == 1
        assert body.physiology.alive

    def test_koncept_count_never_decreases(self):
        sim, _, controller = build_sim(
            "keba", world_overrides={"spawn_rate": 0.05}, locomotion="wander")
        last = 0
        for _ in range(600):
            sim.run_tick()
            total = controller.hierarchy.total_created()
            assert total >= last
            last = total

    def test_positive_stimuli_lock_in_eating(self):
        # Premise of the hand-run toy oracle: the animat tries eating on
        # food contact and is rewarded.  Conclusion: food-context links
        # converge to eat and the behavior persists.
        expected = oracles.reinforce_toy_oracle()
        assert expected["f"]["eat"] == 1.0 and expected["r"]["eat"] == 1.0

        sim, body, controller = build_sim(
            "keba", seed=3, keba_overrides={"exploration_rate": 0.0})
        sim.world.spawn("food", (50.5, 50.0), size=1e9)
        body.physiology.hunger = 0.6
        # seed the first try (qualia protos slightly eat-leaning)
        for channel in (1, 3):
            controller.hierarchy.levels[0][channel].links["eat"] = 0.7
        actions = [sim.run_tick()[0].action for _ in range(120)]
        assert actions[-30:] == ["eat"] * 30
        assert body.physiology.hunger < 0.1
        # every koncept that currently contains the situation voted eat
        for level in controller.hierarchy.levels[1:]:
            for kon in level:
                if kon.v > 0.5:
                    assert kon.links["eat"] == 1.0

    def test_one_reward_unlocks_inaction(self):
        # The punished-mismatch clause can endorse "none", which produces no
        # further stimuli; a single rewarded eat must flip every active
        # none-voter back off and restore feeding.
        sim, body, controller = build_sim(
            "keba", seed=1, keba_overrides={"exploration_rate": 0.0})
        sim.world.spawn("food", (50.5, 50.0), size=1e9)
        body.physiology.hunger = 0.6
        actions = [sim.run_tick()[0].action for _ in range(300)]
        if actions[-10:] != ["none"] * 10:
            pytest.skip("seed 1 no longer locks into inaction")
        from kebalab.core import StimulusSignal
        controller.hierarchy.reinforce("eat", StimulusSignal("positive", 0.1))
        actions = [sim.run_tick()[0].action for _ in range(100)]
        assert actions[-30:] == ["eat"] * 30

    def test_parked_learning_usually_converges_under_noise(self):
        # A static context offers few fresh-koncept lotteries, so a minority
        # of seeds may stay locked on "none"; the majority must converge.
        converged = 0
        for seed in range(12):
            sim, body, _ = build_sim(
                "keba", seed=seed,
                world_overrides={"spawn_rate": 0.0, "noise_amplitude": 0.1})
            sim.world.spawn("food", (50.5, 50.0), size=1e9)
            body.physiology.hunger = 0.6
            actions = [sim.run_tick()[0].action for _ in range(600)]
            if actions[-50:].count("eat") >= 45:
                converged += 1
        assert converged >= 7


class TestSimulation:
    def test_trace_serialization_roundtrip(self):
        import json
        sim, _, _ = build_sim("keba")
        trace = sim.run_tick()[0]
        decoded = json.loads(trace.to_json_line())
        assert decoded["tick"] == 0
        assert decoded["action"] in ACTIONS
        assert "koncept_counts" in decoded

    def test_missing_controller_rejected(self):
        world = WorldState(WorldParams())
        world.add_animat(AnimatBody(id=0, position=(1.0, 1.0)))
        with pytest.raises(ValueError):
            Simulation(world, controllers={}, rngs={
                "world": Random(0), "noise": Random(0)})

    def test_animats_process_in_id_order(self):
        params = WorldParams(spawn_rate=0.0)
        world = WorldState(params)
        for animat_id in (2, 0, 1):
            world.add_animat(AnimatBody(id=animat_id, position=(10.0 * animat_id + 5, 50.0)))
        controllers = {i: make_controller("none") for i in range(3)}
        sim = Simulation(world, controllers,
                         rngs={"world": Random(0), "noise": Random(0)})
        traces = sim.run_tick()
        assert [t.animat_id for t in traces] == [0, 1, 2]

    def test_scheduled_spawns_fire_once(self):
        sim, _, _ = build_sim("none")
        sim.schedule_spawn(3, "rock", (10.0, 10.0))
        for _ in range(3):
            sim.run_tick()
            if sim.tick <= 3:
                assert len(sim.world.phenomena) == (1 if sim.tick > 3 else 0)
        sim.run_tick()
        assert len(sim.world.phenomena) == 1
        sim.run_tick()
        assert len(sim.world.phenomena) == 1
