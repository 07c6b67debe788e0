"""Grid calibration for the baseline experiment scenario.

Runs keba/random/none solo trios over a parameter grid and prints the
survival statistics the acceptance criteria care about.  Not part of the
shipped package; a desk tool for pinning scenarios/*.json.
"""

import itertools
import json
import statistics
import sys
from concurrent.futures import ProcessPoolExecutor

from kebalab.experiments import ScenarioConfig, run_scenario, survival_ticks


def run_one(args):
    grid_point, controller, seed = args
    spawn_rate, penalty, speed, rocks, width = grid_point
    config = ScenarioConfig.from_dict({
        "name": "cal", "seed": seed, "ticks": 20000, "record_series": False,
        "world": {"noise_amplitude": 0.1, "spawn_rate": spawn_rate,
                  "penalty": penalty, "speed": speed,
                  "width": width, "height": width},
        "animats": [{"controller": controller, "locomotion": "wander"}],
        "spawn_events": [{"tick": 0, "kind": "rock", "count": rocks}],
    })
    result = run_scenario(config)
    summary = result.metrics.summaries[0]
    return (grid_point, controller, seed,
            survival_ticks(summary, config.ticks), summary.total_koncepts)


def main():
    seeds = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    grid = list(itertools.product(
        (0.01, 0.02, 0.04),      # spawn_rate
        (0.15, 0.2),             # penalty
        (0.5,),                  # speed
        (15,),                   # rocks
        (100.0,),                # width
    ))
    tasks = [(point, kind, 1000 + s)
             for point in grid
             for kind in ("keba", "random", "none")
             for s in range(seeds)]
    with ProcessPoolExecutor() as pool:
        rows = list(pool.map(run_one, tasks, chunksize=4))

    by_point = {}
    for point, kind, seed, survival, koncepts in rows:
        by_point.setdefault(point, {}).setdefault(kind, []).append((survival, koncepts))
    report = []
    for point, kinds in sorted(by_point.items()):
        none_med = statistics.median(s for s, _ in kinds["none"])
        keba = sorted(s for s, _ in kinds["keba"])
        rand = sorted(s for s, _ in kinds["random"])
        keba_ok = sum(1 for s in keba if s > none_med) / len(keba)
        rand_ok = sum(1 for s in rand if s < none_med) / len(rand)
        entry = {
            "spawn_rate": point[0], "penalty": point[1], "speed": point[2],
            "rocks": point[3], "width": point[4],
            "none_median": none_med,
            "keba_median": statistics.median(keba),
            "random_median": statistics.median(rand),
            "keba_gt_none_frac": keba_ok,
            "random_lt_none_frac": rand_ok,
            "keba_survivals": keba,
            "random_survivals": rand,
            "mean_koncepts": statistics.fmean(k for _, k in kinds["keba"]),
        }
        report.append(entry)
        print(json.dumps(entry))


if __name__ == "__main__":
    main()
