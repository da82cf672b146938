"""Two-timescale simulation of one parent cache over ``N`` leaf caches.

Each call to :meth:`World.run_interval` plays one parent interval:

1. the parent picks its placement from the previous interval's state (the
   non-causal benchmark instead peeks at the interval's leaf misses);
2. for each of the ``T`` slots every leaf acts on its previous slot's
   requests, the slot's requests are revealed and served, and leaf misses
   go up to the parent;
3. leaves average their observations, send masked reports and averaged
   costs, and the parent forms its state and cost;
4. a learning parent stores the experience, takes one training step and
   syncs its target networks on schedule.

Interval 0 is a bootstrap: all states are zero and every cache holds the
lowest-id files.
"""
import copy
from dataclasses import dataclass

import numpy as np

from ..agent import AgentConfig, DQNAgent
from ..core import InvalidInputError, SeededRng
from ..costs import (masked_leaf_report, nocache_cost, parent_cost, parent_state, reduced_cost,
                     slot_average_cost)
from ..demand import MarkovDemand, MarkovSource, StaticPopularity, StaticSource, TraceSource, read_trace
from ..policies import make_policy
from ..tabular import ExplorationSchedule, TabularQLeafPolicy
from .config import PARENT_POLICIES, ConfigError

__all__ = ['Leaf', 'IntervalRecord', 'World', 'popularity_for', 'build_sources']

# substream labels under the master seed; shared labels give paired runs
DEMAND, LEAF_POLICY, ORDER, PARENT_RR, PARENT_DQN, CDF_PICK, POPULARITY = 1, 2, 3, 4, 5, 6, 7


class Leaf:
    """One leaf cache: its request source, policy and last observed slot."""

    def __init__(self, source, policy, weight, order_gen):
        self.source = source
        self.policy = policy
        self.weight = weight
        self.order_gen = order_gen
        self.last_state = np.zeros(policy.files, dtype=np.int64)


@dataclass
class IntervalRecord:
    """Everything one interval produced.

    ``requests[n][t]`` and ``leaf_actions[n][t]`` are the raw per-slot
    vectors, kept so the aggregation can be replayed independently.
    """

    tau: int
    parent_action: np.ndarray
    state: np.ndarray
    cost: np.ndarray
    nocache: np.ndarray
    total_cost: float
    reduced_cost: float
    requests: list
    leaf_actions: list
    distance_pre: float = float('nan')
    distance_post: float = float('nan')


def popularity_for(cfg):
    """Static popularity vector: configured, or drawn from U[0, 1)."""
    if cfg.popularity:
        return np.asarray(cfg.popularity, dtype=float)
    return SeededRng(cfg.seed, (POPULARITY, 0)).gen.random(cfg.files)


def build_sources(cfg, master):
    """One request source per leaf, each on its own substream."""
    sources = []
    if cfg.demand == 'static':
        pop = StaticPopularity(popularity_for(cfg), cfg.intensity)
        for n in range(cfg.leaves):
            sources.append(StaticSource(pop, master.substream((DEMAND, n)).gen))
    elif cfg.demand == 'markov':
        r0 = np.broadcast_to(np.asarray(cfg.markov_r0, dtype=np.int64), (cfg.files,))
        mu = np.broadcast_to(np.asarray(cfg.markov_mu, dtype=float), (cfg.files,))
        for n in range(cfg.leaves):
            gen = master.substream((DEMAND, n)).gen
            # heterogeneous local dynamics: each leaf gets its own drift
            shift = gen.uniform(-cfg.markov_spread, cfg.markov_spread, cfg.files) if cfg.markov_spread else 0.0
            state = MarkovDemand(r0.copy(), mu + shift, cfg.markov_sigma, cfg.markov_r_max)
            sources.append(MarkovSource(state, gen))
    else:
        paths = list(cfg.trace) * (cfg.leaves if len(cfg.trace) == 1 else 1)
        for path in paths:
            try:
                counts = read_trace(path, cfg.files)
            except OSError as exc:
                raise ConfigError('trace', f'cannot read {path}: {exc.strerror}') from None
            except InvalidInputError as exc:
                raise ConfigError('trace', str(exc)) from None
            sources.append(TraceSource(counts))
    return sources


def _make_leaf_policy(cfg, n, capacity, master):
    gen = master.substream((LEAF_POLICY, n)).gen
    if cfg.leaf_policy == 'tabular_q':
        return TabularQLeafPolicy(cfg.files, capacity, gen, cfg.leaf_levels, cfg.leaf_beta, cfg.leaf_gamma,
                                  ExplorationSchedule('constant', cfg.leaf_epsilon), prefill=True)
    return make_policy(cfg.leaf_policy, cfg.files, capacity, gen=gen, prefill=cfg.leaf_policy != 'nocache')


def agent_config(cfg):
    return AgentConfig(capacity=cfg.parent_capacity, gamma=cfg.gamma, beta=cfg.beta, epsilon=cfg.epsilon,
                       epsilon_mode=cfg.epsilon_mode, sync_period=cfg.sync_period, batch_size=cfg.batch_size,
                       replay_size=cfg.replay_size, hidden=cfg.hidden, input_norm=cfg.input_norm,
                       cost_norm=cfg.cost_norm,                        cost_scale=cfg.cost_scale)


def _make_parent(cfg, name, master):
    if name in ('dqn', 'hyper_dqn'):
        sizes = cfg.partition() if name == 'hyper_dqn' else None
        return DQNAgent(cfg.files, agent_config(cfg), master.substream((PARENT_DQN, 0)), sizes)
    gen = master.substream((PARENT_RR, 0)).gen
    return make_policy(name, cfg.files, cfg.parent_capacity, gen=gen, prefill=name != 'nocache')


def _expand(counts, order, gen):
    """Unit requests of a count vector, ascending by file id or shuffled."""
    stream = np.repeat(np.arange(counts.size), counts)
    if order == 'shuffled' and stream.size > 1:
        stream = gen.permutation(stream)
    return stream


class World:
    """Mutable state of one simulation: leaves, parent and clocks.

    Parameters
    ----------
    cfg : SimConfig
    parent_policy : str, optional
        Overrides ``cfg.parent_policy``; used when comparing policies on the
        same demand realization.
    hooks : list of callables, optional
        Each is called as ``hook(event, info)`` after every unit request
        (``event == 'request'``) and at every placement decision
        (``event == 'decision'``). Meant for instrumentation in tests.
    """

    def __init__(self, cfg, parent_policy=None, hooks=None):
        cfg.validate()
        self.cfg = cfg
        self.parent_name = parent_policy or cfg.parent_policy
        if self.parent_name not in PARENT_POLICIES:
            raise ConfigError('parent_policy', f'unknown parent policy {self.parent_name!r}')
        master = SeededRng(cfg.seed)
        self.weights = np.asarray(cfg.leaf_weights(), dtype=float)
        sources = build_sources(cfg, master)
        self.leaves = [
            Leaf(src, _make_leaf_policy(cfg, n, m, master), w, master.substream((ORDER, n)).gen)
            for n, (src, m, w) in enumerate(zip(sources, cfg.leaf_capacities(), self.weights))
        ]
        self.parent = _make_parent(cfg, self.parent_name, master)
        self.learning = isinstance(self.parent, DQNAgent)
        self.tau = 0
        self.state = np.zeros(cfg.files)
        self.hooks = list(hooks or [])

    def _emit(self, event, **info):
        for hook in self.hooks:
            hook(event, info)

    # leaf phase ---------------------------------------------------------

    def _serve_slot(self, leaves, slot):
        """Serve one slot at every leaf; returns per-leaf (a, r, misses, stream)."""
        out = []
        order = self.cfg.request_order
        for n, leaf in enumerate(leaves):
            pol = leaf.policy
            a = pol.act(leaf.last_state)
            self._emit('decision', level='leaf', node=n, slot=slot, placement=a)
            r = leaf.source.next()
            if pol.per_request:
                stream = _expand(r, order, leaf.order_gen)
                missed = []
                for f in stream:
                    before = pol.current_placement() if self.hooks else None
                    hit = pol.on_request(int(f))
                    if self.hooks:
                        self._emit('request', level='leaf', node=n, slot=slot, file=int(f), hit=hit,
                                   before=before, after=pol.current_placement(), per_request=True)
                    if not hit:
                        missed.append(f)
                missed = np.asarray(missed, dtype=np.int64)
                m = np.bincount(missed, minlength=r.size).astype(np.int64)
            else:
                m = r * (1 - a)
                missed = None
            leaf.last_state = r
            out.append((a, r, m, missed))
        return out

    def _parent_slot(self, served, a0, slot):
        """Parent side of one slot; returns per-leaf nodal cost vectors."""
        parent = self.parent
        if not getattr(parent, 'per_request', False):
            return [m * (2 - a0) for _, _, m, _ in served]
        costs = []
        order = self.cfg.request_order
        for n, (leaf, (_, _, m, missed)) in enumerate(zip(self.leaves, served)):
            if missed is None:
                missed = _expand(m, order, leaf.order_gen)
            parent_miss = np.zeros_like(m)
            for f in missed:
                before = parent.current_placement() if self.hooks else None
                hit = parent.on_request(int(f))
                if self.hooks:
                    self._emit('request', level='parent', node=n, slot=slot, file=int(f), hit=hit,
                               before=before, after=parent.current_placement(), per_request=True)
                if not hit:
                    parent_miss[f] += 1
            costs.append(m + parent_miss)
        return costs

    def _play_slots(self, leaves, a0):
        """Run all slots of the interval; returns per-leaf per-slot records."""
        T = self.cfg.slots
        acts = [[None] * T for _ in leaves]
        reqs = [[None] * T for _ in leaves]
        misses = [[None] * T for _ in leaves]
        costs = [[None] * T for _ in leaves]
        for t in range(T):
            served = self._serve_slot(leaves, t)
            slot_costs = self._parent_slot(served, a0, t) if a0 is not None else [None] * len(leaves)
            for n, ((a, r, m, _), c) in enumerate(zip(served, slot_costs)):
                acts[n][t], reqs[n][t], misses[n][t], costs[n][t] = a, r, m, c
                if c is not None and hasattr(leaves[n].policy, 'observe'):
                    leaves[n].policy.observe(c, r)
        return acts, reqs, misses, costs

    def _peek_unserved(self, a0_guess):
        """Weighted, slot-averaged leaf misses of the coming interval.

        Plays the interval on copies of the leaves so the real ones are not
        advanced. Exact whenever leaf behavior does not depend on the
        parent's placement; otherwise ``a0_guess`` stands in for it.
        """
        saved_hooks, self.hooks = self.hooks, []
        ghost = copy.deepcopy(self.leaves)
        _, _, misses, _ = self._play_slots(ghost, a0_guess)
        self.hooks = saved_hooks
        return parent_state(self.weights, [np.mean(m, axis=0) for m in misses])

    # interval -----------------------------------------------------------

    def run_interval(self, explore=True):
        """Advance the world by one parent interval.

        Parameters
        ----------
        explore : bool
            If false a learning parent acts greedily this interval.

        Returns
        -------
        IntervalRecord
        """
        self.tau += 1
        parent = self.parent
        adaptive = any(hasattr(leaf.policy, 'observe') for leaf in self.leaves)
        if getattr(parent, 'noncausal', False) and not adaptive:
            # leaves ignore the parent, so play them first and reveal the
            # interval's unserved demand to the benchmark
            acts, reqs, misses, _ = self._play_slots(self.leaves, None)
            future = parent_state(self.weights, [np.mean(m, axis=0) for m in misses])
            a0 = parent.act(future)
            self._emit('decision', level='parent', node=0, slot=0, placement=a0)
            costs = [[m * (2 - a0) for m in per_leaf] for per_leaf in misses]
        else:
            if getattr(parent, 'noncausal', False):
                a0 = parent.act(self._peek_unserved(parent.current_placement()))
            elif self.learning:
                a0 = parent.act(self.state, explore=explore)
            else:
                a0 = parent.act(self.state)
            self._emit('decision', level='parent', node=0, slot=0, placement=a0)
            acts, reqs, misses, costs = self._play_slots(self.leaves, a0)

        reports, cbars = [], []
        for n, leaf in enumerate(self.leaves):
            s_bar = np.mean(reqs[n], axis=0)
            reports.append(masked_leaf_report(s_bar, leaf.policy.query(s_bar)))
            cbars.append(slot_average_cost(costs[n]))
        s0 = parent_state(self.weights, reports)
        c0 = parent_cost(self.weights, cbars)
        base = nocache_cost(self.weights, [np.asarray(r) for r in reqs])
        total = float(c0.sum())
        rec = IntervalRecord(self.tau, a0, s0, c0, base, total, reduced_cost(c0, base), reqs, acts)
        if self.learning:
            rec.distance_pre, rec.distance_post = parent.observe(self.state, a0, c0, s0)
        self.state = s0
        return rec
