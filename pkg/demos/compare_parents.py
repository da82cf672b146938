"""Compare parent caching policies on the same drifting demand.

A small version of the ``fig7`` setup: every parent policy faces exactly
the same request realization, so differences in reduced cost are due to the
policy alone. The non-causal benchmark sees the interval's demand before
placing files and bounds what any interval-level policy can do.

    python3 demos/compare_parents.py [horizon]

The learner needs several hundred intervals before it overtakes the
per-request baselines, so short horizons show it behind them.
"""
import sys

from cachenet.sim import SimConfig, compare_policies
from cachenet.sim.experiment import FIG7, final_mean

horizon = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
cfg = SimConfig(**dict(FIG7, files=40, groups=2, parent_capacity=4, leaf_capacity=(2,), horizon=horizon,
                       cdf_samples=0))
log = compare_policies(cfg, ['optimal', 'hyper_dqn', 'lru', 'lfu', 'fifo'])
window = horizon // 4
print(f'mean reduced cost over the last {window} of {horizon} intervals')
for pol in sorted(log.policies, key=lambda p: -final_mean(log, p, window)):
    print(f'  {pol:10s} {final_mean(log, pol, window):8.2f}')
