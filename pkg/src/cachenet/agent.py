"""Deep-Q caching agent for the parent node.

The network maps the parent's state vector to one predicted long-term cost
per file; the placement caches the ``M`` files with the largest prediction.
Training follows the usual recipe: masked temporal-difference errors
bootstrapped from a periodically synced target network, minimized by SGD
over minibatches replayed uniformly from a ring buffer.

A hyper agent splits the catalog into ``K`` contiguous groups, each with its
own network pair and replay buffer, and selects the global top ``M`` over
the concatenated outputs. The plain agent is the ``K = 1`` case.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import InvalidInputError, as_cost, as_placement, as_state, random_subset_action, top_m_action
from .neural import (LayerSpec, backward, forward, forward_logits, init_params,
                     load_checkpoint, param_distance, save_checkpoint, sgd_step)
from .tabular import ExplorationSchedule

__all__ = [
    'Experience',
    'ReplayBuffer',
    'AgentConfig',
    'select_action',
    'td_error',
    'batch_loss',
    'loss_gradient',
    'GroupLearner',
    'train_step',
    'sync_target',
    'partition_bounds',
    'hyper_forward',
    'hyper_scores',
    'hyper_select_action',
    'DQNAgent',
]


@dataclass(frozen=True)
class Experience:
    """One transition ``(s_prev, action, cost, s_next)`` as seen by a learner."""

    s_prev: np.ndarray
    action: np.ndarray
    cost: np.ndarray
    s_next: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.s_prev).size
        object.__setattr__(self, 's_prev', as_state(self.s_prev, f))
        object.__setattr__(self, 'action', as_placement(self.action, f))
        object.__setattr__(self, 'cost', as_cost(self.cost, f))
        object.__setattr__(self, 's_next', as_state(self.s_next, f))

    def slice(self, lo, hi):
        return Experience(self.s_prev[lo:hi], self.action[lo:hi], self.cost[lo:hi], self.s_next[lo:hi])


class ReplayBuffer:
    """Ring buffer of the ``capacity`` most recent experiences.

    Sampling is uniform with replacement over the current contents.
    """

    def __init__(self, capacity, gen):
        if capacity < 1:
            raise InvalidInputError('replay capacity must be positive')
        self.capacity = int(capacity)
        self.gen = gen
        self._items = []
        self.inserted = 0

    def __len__(self):
        return len(self._items)

    def add(self, experience):
        if len(self._items) < self.capacity:
            self._items.append(experience)
        else:
            self._items[self.inserted % self.capacity] = experience
        self.inserted += 1

    def sample(self, batch_size):
        idx = self.gen.integers(len(self._items), size=batch_size)
        return [self._items[i] for i in idx]

    def contents(self):
        """Resident experiences, oldest first."""
        if len(self._items) < self.capacity:
            return list(self._items)
        k = self.inserted % self.capacity
        return self._items[k:] + self._items[:k]


@dataclass(frozen=True)
class AgentConfig:
    """Learning hyper-parameters of the parent agent.

    ``input_norm`` rescales each state vector before it enters a network:
    ``'max'`` divides by the largest entry, ``'sum'`` by the total,
    ``'none'`` passes it unchanged.
    ``cost_norm`` rescales observed costs before they become TD targets:
    ``'demand'`` divides each group's costs by ``2 * sum(s_next) / (1 - gamma)``
    taken over that group's slice of the next state, so that a softmax output
    can represent the fixed point; ``'none'`` keeps raw costs. ``cost_scale`` is a
    further constant factor.
    """

    capacity: int = 5
    gamma: float = 0.8
    beta: float = 0.01
    epsilon: float = 0.4
    epsilon_mode: str = 'constant'
    sync_period: int = 10
    batch_size: int = 1
    replay_size: int = 10
    hidden: tuple = (50,)
    input_norm: str = 'none'
    cost_norm: str = 'none'
    cost_scale: float = 1.0
    schedule: ExplorationSchedule = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.gamma < 1:
            raise InvalidInputError('gamma must lie in [0, 1)')
        if self.beta <= 0:
            raise InvalidInputError('beta must be positive')
        if self.sync_period < 1 or self.batch_size < 1 or self.replay_size < 1 or self.capacity < 1:
            raise InvalidInputError('sync period, batch, replay size and capacity must be positive')
        if self.input_norm not in ('max', 'sum', 'none'):
            raise InvalidInputError(f'unknown input normalization {self.input_norm!r}')
        if self.cost_norm not in ('demand', 'none'):
            raise InvalidInputError(f'unknown cost normalization {self.cost_norm!r}')
        if self.cost_scale <= 0:
            raise InvalidInputError('cost scale must be positive')
        object.__setattr__(self, 'hidden', tuple(int(h) for h in self.hidden))
        object.__setattr__(self, 'schedule', ExplorationSchedule(self.epsilon_mode, self.epsilon))


def select_action(theta, s, epsilon, m, gen):
    """Exploration-exploitation placement from one network.

    With probability ``1 - epsilon`` cache the ``m`` files with the largest
    predicted cost, otherwise a uniformly random ``m``-subset. Selection
    reads the pre-softmax logits, which rank files exactly like the softmax
    output but cannot tie through underflow.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 1 or s.size != theta.spec.sizes[0] or theta.spec.sizes[-1] != s.size:
        raise InvalidInputError('state width does not match the network')
    if gen.random() < epsilon:
        return random_subset_action(s.size, m, gen)
    return top_m_action(forward_logits(theta, s), m)


def td_error(theta, theta_tar, e, gamma):
    """Masked TD error ``(c + gamma Q(s'; tar) - Q(s; theta)) * (1 - a)``."""
    if theta.spec.sizes[0] != e.s_prev.size or theta.spec != theta_tar.spec:
        raise InvalidInputError('experience width does not match the networks')
    target = e.cost + gamma * forward(theta_tar, e.s_next)
    return (target - forward(theta, e.s_prev)) * (1 - e.action)


def _stack(batch):
    s_prev = np.stack([e.s_prev for e in batch])
    a = np.stack([e.action for e in batch]).astype(float)
    c = np.stack([e.cost for e in batch])
    s_next = np.stack([e.s_next for e in batch])
    return s_prev, a, c, s_next


def _batch_deltas(theta, theta_tar, batch, gamma):
    if not batch:
        raise InvalidInputError('batch must be non-empty')
    s_prev, a, c, s_next = _stack(batch)
    if s_prev.shape[1] != theta.spec.sizes[0]:
        raise InvalidInputError('experience width does not match the networks')
    delta = (c + gamma * forward(theta_tar, s_next) - forward(theta, s_prev)) * (1 - a)
    return s_prev, delta


def batch_loss(theta, theta_tar, batch, gamma):
    """Sample mean over the batch of the squared norm of the TD error."""
    _, delta = _batch_deltas(theta, theta_tar, batch, gamma)
    return float(np.mean(np.sum(delta ** 2, axis=1)))


def loss_gradient(theta, theta_tar, batch, gamma):
    """Gradient of :func:`batch_loss` in ``theta``; the target network is
    held constant."""
    s_prev, delta = _batch_deltas(theta, theta_tar, batch, gamma)
    return backward(theta, s_prev, -2.0 / len(batch) * delta)


class GroupLearner:
    """Network pair and replay buffer owning one contiguous file range."""

    def __init__(self, theta, replay_size, gen):
        self.theta = theta
        self.theta_tar = theta.copy()
        self.buffer = ReplayBuffer(replay_size, gen)

    def distance(self):
        return param_distance(self.theta, self.theta_tar)


def train_step(learner, batch_size, gamma, beta):
    """One SGD step on a uniformly sampled minibatch. Returns ``learner``."""
    if not len(learner.buffer):
        warnings.warn('replay buffer is empty; skipping training step', RuntimeWarning)
        return learner
    batch = learner.buffer.sample(batch_size)
    learner.theta = sgd_step(learner.theta, loss_gradient(learner.theta, learner.theta_tar, batch, gamma), beta)
    return learner


def sync_target(learner, tau, period):
    """Copy ``theta`` into the target network when ``tau`` is a multiple of
    ``period``. Returns ``learner``."""
    if tau < 1:
        raise InvalidInputError('training iterations are counted from 1')
    if tau % period == 0:
        learner.theta_tar = learner.theta.copy()
    return learner


def partition_bounds(sizes):
    """``[(lo, hi), ...]`` for contiguous groups of the given widths."""
    edges = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    return list(zip(edges[:-1], edges[1:]))


def hyper_forward(thetas, s, sizes=None, logits=False):
    """Run each group network on its slice of ``s`` and concatenate."""
    s = np.asarray(s, dtype=float)
    if sizes is None:
        sizes = [t.spec.sizes[0] for t in thetas]
    if len(sizes) != len(thetas) or sum(sizes) != s.size:
        raise InvalidInputError('partition does not cover the state vector')
    fn = forward_logits if logits else forward
    return np.concatenate([fn(t, s[lo:hi]) for t, (lo, hi) in zip(thetas, partition_bounds(sizes))])


def _log_softmax(z):
    z = z - z.max()
    return z - np.log(np.exp(z).sum())


def hyper_scores(thetas, s, sizes=None, scales=None):
    """Log predicted costs of all files, comparable across groups.

    Each group contributes its log-softmax output plus ``log(scales[k])``,
    the factor that turns group ``k``'s normalized output back into a cost.
    Working in log space keeps the ranking free of underflow ties. With a
    single group the ranking equals that of the raw logits.
    """
    s = np.asarray(s, dtype=float)
    if sizes is None:
        sizes = [t.spec.sizes[0] for t in thetas]
    if scales is None:
        scales = np.ones(len(thetas))
    parts = []
    for t, (lo, hi), scale in zip(thetas, partition_bounds(sizes), scales):
        parts.append(_log_softmax(forward_logits(t, s[lo:hi])) + np.log(max(scale, 1e-300)))
    return np.concatenate(parts)


def hyper_select_action(thetas, s, epsilon, m, gen, scales=None):
    """Global exploration-exploitation placement over all groups."""
    s = np.asarray(s, dtype=float)
    if gen.random() < epsilon:
        return random_subset_action(s.size, m, gen)
    return top_m_action(hyper_scores(thetas, s, scales=scales), m)


def _normalize(s, mode):
    s = np.asarray(s, dtype=float)
    if mode in ('max', 'sum'):
        scale = s.max(initial=0.0) if mode == 'max' else s.sum()
        return s / scale if scale > 0 else s.copy()
    return s.copy()


class DQNAgent:
    """Parent caching agent, optionally partitioned into groups.

    Parameters
    ----------
    files : int
    config : AgentConfig
    rng : SeededRng
        Owner stream; exploration, per-group replay sampling and per-group
        initialization use disjoint substreams of it.
    group_sizes : sequence of int, optional
        Contiguous partition widths; defaults to one group of all files.
    """

    name = 'dqn'
    per_request = False
    noncausal = False

    def __init__(self, files, config, rng, group_sizes=None):
        self.files = int(files)
        self.config = config
        self.group_sizes = [self.files] if group_sizes is None else [int(k) for k in group_sizes]
        if sum(self.group_sizes) != self.files or min(self.group_sizes) < 1:
            raise InvalidInputError('group sizes must be positive and sum to the catalog size')
        self.bounds = partition_bounds(self.group_sizes)
        self.explore_gen = rng.substream(0).gen
        self.groups = []
        for k, width in enumerate(self.group_sizes):
            spec = LayerSpec((width,) + config.hidden + (width,))
            theta = init_params(spec, rng.substream((2, k)).gen)
            self.groups.append(GroupLearner(theta, config.replay_size, rng.substream((1, k)).gen))
        self.tau = 0
        self._placement = np.zeros(self.files, dtype=np.int8)
        self._placement[:min(config.capacity, self.files)] = 1

    @property
    def thetas(self):
        return [g.theta for g in self.groups]

    def preprocess(self, s):
        """Network input: each group's slice normalized on its own."""
        s = np.asarray(s, dtype=float)
        return np.concatenate([_normalize(s[lo:hi], self.config.input_norm) for lo, hi in self.bounds])

    def _demand(self, s):
        """Per-group cost normalizer ``2 * sum(s_k) / (1 - gamma)``."""
        s = np.asarray(s, dtype=float)
        return np.array([2.0 * s[lo:hi].sum() for lo, hi in self.bounds]) / (1 - self.config.gamma)

    def _scales(self, s):
        if self.config.cost_norm == 'demand':
            return self._demand(s)
        return np.ones(len(self.groups))

    def scores(self, s):
        """Log predicted costs that drive the placement."""
        return hyper_scores(self.thetas, self.preprocess(s), self.group_sizes, self._scales(s))

    def current_placement(self):
        return self._placement.copy()

    def predicted_costs(self, s):
        """Network outputs mapped back to cost units."""
        out = hyper_forward(self.thetas, self.preprocess(s), self.group_sizes)
        return out * np.repeat(self._scales(s), self.group_sizes)

    def greedy_action(self, s):
        """Exploit-only placement for state ``s``; draws no random numbers."""
        return top_m_action(self.scores(s), self.config.capacity)

    def act(self, s, explore=True):
        eps = self.config.schedule.epsilon(self.tau + 1) if explore else 0.0
        if self.explore_gen.random() < eps:
            self._placement = random_subset_action(self.files, self.config.capacity, self.explore_gen)
        else:
            self._placement = self.greedy_action(s)
        return self.current_placement()

    def scale_cost(self, cost, s_next):
        """TD cost targets: raw costs, or each group's costs divided by its
        normalizer so a softmax output can represent the fixed point."""
        cost = self.config.cost_scale * np.asarray(cost, dtype=float)
        if self.config.cost_norm == 'demand':
            norm = np.repeat(self._demand(s_next), self.group_sizes)
            cost = np.divide(cost, norm, out=np.zeros_like(cost), where=norm > 0)
        return cost

    def observe(self, s_prev, action, cost, s_next):
        """Store one transition, train every group once and sync targets.

        Returns
        -------
        (float, float)
            Parameter distance to the target networks right before and right
            after the sync check.
        """
        cfg = self.config
        e = Experience(self.preprocess(s_prev), action, self.scale_cost(cost, s_next), self.preprocess(s_next))
        self.tau += 1
        for g, (lo, hi) in zip(self.groups, self.bounds):
            g.buffer.add(e.slice(lo, hi) if len(self.groups) > 1 else e)
            train_step(g, cfg.batch_size, cfg.gamma, cfg.beta)
        pre = self.distance()
        for g in self.groups:
            sync_target(g, self.tau, cfg.sync_period)
        return pre, self.distance()

    def distance(self):
        """Distance between all online and all target parameters."""
        return float(np.sqrt(sum(g.distance() ** 2 for g in self.groups)))

    def save(self, path):
        save_checkpoint(path, self.thetas)

    def load(self, path):
        params = load_checkpoint(path)
        if [p.spec for p in params] != [g.theta.spec for g in self.groups]:
            raise InvalidInputError('checkpoint layout does not match this agent')
        for g, p in zip(self.groups, params):
            g.theta = p
            g.theta_tar = p.copy()
