"""Walk through a single parent interval on a tiny hierarchy.

Two leaves with one-file caches sit under a parent that can hold two of
six files. The script plays three intervals and prints, for the last one,
what each leaf saw, what it reported upstream and what everything cost.

    python3 demos/walkthrough_one_interval.py
"""
import numpy as np

from cachenet.sim import SimConfig, World

cfg = SimConfig(files=6, leaves=2, parent_capacity=2, leaf_capacity=(1,), slots=2, horizon=3,
                parent_policy='lfu', leaf_policy='window_pop', demand='static',
                popularity=(0.9, 0.1, 0.6, 0.05, 0.3, 0.2), intensity=12.0, seed=4)
world = World(cfg)
for _ in range(cfg.horizon):
    rec = world.run_interval()

np.set_printoptions(precision=2, suppress=True)
print(f'interval {rec.tau}: parent caches files {np.flatnonzero(rec.parent_action).tolist()}')
for n in range(cfg.leaves):
    print(f'  leaf {n}')
    for t, (a, r) in enumerate(zip(rec.leaf_actions[n], rec.requests[n])):
        print(f'    slot {t + 1}: requests {r}  leaf caches {np.flatnonzero(a).tolist()}')
print(f'parent state (weighted unserved demand reported by leaves): {rec.state}')
print(f'parent cost per file: {rec.cost}')
print(f'cost with every cache empty: {rec.nocache}')
print(f'total cost {rec.total_cost:.2f}, saved {rec.reduced_cost:.2f} against no caching')
