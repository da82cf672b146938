"""Experiment drivers: single runs, seed-paired comparisons, sweeps and
the desk-scale presets.
"""
import os

import numpy as np

from ..core import SeededRng
from .config import ConfigError, SimConfig, _convert
from .metrics import MetricsLog, emit_cdf_csv, emit_csv, emit_trace_csv
from .world import CDF_PICK, World

__all__ = ['cdf_intervals', 'run_experiment', 'compare_policies', 'sweep', 'PRESETS', 'preset_configs',
           'run_preset', 'write_outputs', 'sync_peaks', 'first_below', 'final_mean']


def cdf_intervals(cfg):
    """Interval indices (1-based, sorted) at which CDF samples are taken.

    Drawn uniformly without replacement from the horizon, identically for
    every policy run under the same seed.
    """
    if not cfg.cdf_samples:
        return frozenset()
    gen = SeededRng(cfg.seed, (CDF_PICK, 0)).gen
    picks = gen.choice(cfg.horizon, size=cfg.cdf_samples, replace=False) + 1
    return frozenset(int(t) for t in picks)


def run_experiment(cfg, parent_policy=None, hooks=None, records=None):
    """Play ``cfg.horizon`` intervals with one parent policy.

    Parameters
    ----------
    cfg : SimConfig
    parent_policy : str, optional
        Overrides ``cfg.parent_policy``; also the policy label in the log.
    hooks : list, optional
        Instrumentation hooks forwarded to :class:`World`.
    records : list, optional
        If given, every :class:`IntervalRecord` is appended to it.

    Returns
    -------
    MetricsLog
        One row per interval. A learning parent also fills the traces
        ``theta`` (distance after the sync check) and ``theta_pre`` (before
        it). With ``cdf_samples`` set, the reduced cost at the sampled
        intervals, played without exploration, goes into ``log.cdf``.
    """
    world = World(cfg, parent_policy, hooks)
    name = world.parent_name
    picks = cdf_intervals(cfg)
    log = MetricsLog()
    for tau in range(1, cfg.horizon + 1):
        sampled = tau in picks
        rec = world.run_interval(explore=not sampled)
        log.add_row(tau, name, rec.total_cost, rec.reduced_cost)
        if world.learning:
            log.traces['theta'].append((tau, rec.distance_post))
            log.traces['theta_pre'].append((tau, rec.distance_pre))
        if sampled:
            log.cdf[name].append(rec.reduced_cost)
        if records is not None:
            records.append(rec)
    return log


def compare_policies(cfg, policies):
    """Run several parent policies on the same demand realization.

    Every run rebuilds its world from the same seed, so request streams and
    leaf behavior are identical and reduced costs are directly comparable.
    Traces are stored under ``'<policy>:theta'`` and ``'<policy>:theta_pre'``.
    """
    policies = list(policies)
    if len(policies) < 2:
        raise ConfigError('policies', 'need at least two policies to compare')
    if len(set(policies)) != len(policies):
        raise ConfigError('policies', 'policy names must be distinct')
    merged = MetricsLog()
    for name in policies:
        log = run_experiment(cfg, name)
        traces = {f'{name}:{k}': v for k, v in log.traces.items()}
        log.traces.clear()
        log.traces.update(traces)
        merged.merge(log)
    return merged


def sweep(cfg, key, values, policies=None):
    """Vary one setting; returns ``[(value, MetricsLog), ...]``.

    ``values`` are strings in config-file syntax (or already converted).
    """
    out = []
    for raw in values:
        value = _convert(key, raw) if isinstance(raw, str) else raw
        run_cfg = cfg.replace(**{key: value})
        log = compare_policies(run_cfg, policies) if policies and len(policies) > 1 else \
            run_experiment(run_cfg, policies[0] if policies else None)
        out.append((value, log))
    return out


# presets ------------------------------------------------------------------

# one cache serving users directly; raw inputs and raw cost targets
FIG5 = dict(files=50, leaves=1, parent_capacity=5, leaf_capacity=(1,), slots=1, horizon=500,
            parent_policy='dqn', leaf_policy='nocache', hidden=(50,), replay_size=10, batch_size=1,
            sync_period=10, gamma=0.8, beta=0.01, epsilon=0.4, demand='static', intensity=100.0,
            input_norm='none', cost_norm='none')

FIG6_SYNC = (2, 3, 5, 20)

# normalized targets so the softmax output can reach its fixed point
STATIC = dict(FIG5, horizon=2000, intensity=10_000.0, input_norm='sum', cost_norm='demand', beta=10.0)

FIG7 = dict(files=100, leaves=5, parent_capacity=10, leaf_capacity=(5,), slots=2, horizon=2000,
            parent_policy='hyper_dqn', groups=5, leaf_policy='window_pop', hidden=(50,), replay_size=100,
            batch_size=8, sync_period=10, gamma=0.8, beta=10.0, epsilon=0.4, epsilon_mode='glie',
            input_norm='max', cost_norm='demand', demand='markov', markov_mu=(0.45,), markov_sigma=(0.3,),
            markov_r0=(0,), markov_spread=0.03, request_order='shuffled', cdf_samples=100)

FIG7_POLICIES = ('optimal', 'hyper_dqn', 'lru', 'lfu', 'fifo')
FIG9_LEAVES = (10, 100)
FIG9_POLICIES = ('optimal', 'hyper_dqn')

PRESETS = ('fig5', 'fig6', 'fig7', 'fig9', 'static')


def preset_configs(name, seed=0):
    """``[(label, SimConfig, policies), ...]`` for a named preset."""
    if name == 'fig5':
        return [('fig5', SimConfig(**FIG5, seed=seed), ('dqn',))]
    if name == 'fig6':
        base = SimConfig(**FIG5, seed=seed)
        return [(f'C{c}', base.replace(sync_period=c), ('dqn',)) for c in FIG6_SYNC]
    if name == 'static':
        return [('static', SimConfig(**STATIC, seed=seed), ('dqn',))]
    if name == 'fig7':
        return [('fig7', SimConfig(**FIG7, seed=seed), FIG7_POLICIES)]
    if name == 'fig9':
        base = SimConfig(**FIG7, seed=seed)
        return [(f'N{n}', base.replace(leaves=n, weights=(1.0 / n,), cdf_samples=0), FIG9_POLICIES)
                for n in FIG9_LEAVES]
    raise ConfigError('preset', f'unknown preset {name!r}; choose from {", ".join(PRESETS)}')


def write_outputs(log, out_dir, prefix=''):
    """Write the metrics table, every trace and every CDF of ``log``.

    Returns the list of written paths.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    path = os.path.join(out_dir, f'{prefix}metrics.csv')
    emit_csv(log, path)
    paths.append(path)
    for name, trace in sorted(log.traces.items()):
        path = os.path.join(out_dir, f'{prefix}{name.replace(":", "_")}_trace.csv')
        emit_trace_csv(trace, path)
        paths.append(path)
    for pol, samples in sorted(log.cdf.items()):
        path = os.path.join(out_dir, f'{prefix}cdf_{pol}.csv')
        emit_cdf_csv(samples, path)
        paths.append(path)
    return paths


def run_preset(name, seed=0, out_dir=None):
    """Run a preset; optionally write its CSVs under ``out_dir``.

    Returns ``{label: MetricsLog}``.
    """
    results = {}
    for label, cfg, policies in preset_configs(name, seed):
        log = compare_policies(cfg, policies) if len(policies) > 1 else run_experiment(cfg, policies[0])
        results[label] = log
        if out_dir is not None:
            write_outputs(log, out_dir, prefix=f'{label}_')
    return results


def sync_peaks(trace, period):
    """Entries of a pre-sync trace at the sync steps (multiples of ``period``),
    i.e. the distance accumulated since the previous sync."""
    return [(step, d) for step, d in trace if step % period == 0]


def first_below(trace, threshold):
    """First step whose distance is below ``threshold``, or ``None``."""
    for step, d in trace:
        if d < threshold:
            return step
    return None


def final_mean(log, policy, last=500):
    return float(np.mean(log.series(policy)[-last:]))
