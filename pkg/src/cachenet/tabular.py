"""Tabular Q-learning, exact dynamic-programming oracles for tiny MDPs, and
a quantized Q-learning leaf caching policy.

Everything here minimizes cost, so greedy means argmin and ties go to the
lowest action id.
"""
from dataclasses import dataclass

import numpy as np

from .core import InvalidInputError, random_subset_action, top_m_action
from .policies import Policy

__all__ = [
    'QTable',
    'TinyMdpSpec',
    'ExplorationSchedule',
    'epsilon_greedy',
    'q_update',
    'bellman_operator',
    'value_iteration',
    'greedy_policy',
    'policy_evaluation',
    'random_tiny_mdp',
    'q_learning',
    'quantize_counts',
    'TabularQLeafPolicy',
]


class QTable:
    """Dense state-action value table, initialized to zero."""

    def __init__(self, states, actions, values=None):
        if states < 1 or actions < 1:
            raise InvalidInputError('need at least one state and one action')
        if values is None:
            values = np.zeros((states, actions))
        values = np.asarray(values, dtype=float)
        if values.shape != (states, actions) or not np.all(np.isfinite(values)):
            raise InvalidInputError('table values must be finite with shape (states, actions)')
        self.values = values

    @property
    def states(self):
        return self.values.shape[0]

    @property
    def actions(self):
        return self.values.shape[1]

    def v(self):
        """State values ``min_a Q(s, a)``."""
        return self.values.min(axis=1)

    def copy(self):
        return QTable(self.states, self.actions, self.values.copy())


@dataclass(frozen=True)
class TinyMdpSpec:
    """Explicit finite MDP, used only to build test oracles.

    ``P[s, a, s2]`` are transition probabilities and ``cost[s, a, s2]`` the
    cost incurred on that transition.
    """

    P: np.ndarray
    cost: np.ndarray
    gamma: float

    def __post_init__(self):
        P = np.asarray(self.P, dtype=float)
        cost = np.asarray(self.cost, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2] or cost.shape != P.shape:
            raise InvalidInputError('P and cost must have shape (S, A, S)')
        if np.any(P < 0) or np.any(np.abs(P.sum(axis=2) - 1) > 1e-12):
            raise InvalidInputError('transition rows must be stochastic')
        if not np.all(np.isfinite(cost)):
            raise InvalidInputError('costs must be finite')
        if not 0 <= self.gamma < 1:
            raise InvalidInputError('discount must lie in [0, 1)')
        object.__setattr__(self, 'P', P)
        object.__setattr__(self, 'cost', cost)

    @property
    def states(self):
        return self.P.shape[0]

    @property
    def actions(self):
        return self.P.shape[1]

    def expected_cost(self):
        return (self.P * self.cost).sum(axis=2)


@dataclass(frozen=True)
class ExplorationSchedule:
    """``constant`` keeps ``epsilon0``; ``glie`` decays as ``1 / tau``."""

    mode: str = 'constant'
    epsilon0: float = 0.4

    def __post_init__(self):
        if self.mode not in ('constant', 'glie'):
            raise InvalidInputError(f'unknown exploration mode {self.mode!r}')
        if not 0 <= self.epsilon0 <= 1:
            raise InvalidInputError('epsilon must lie in [0, 1]')

    def epsilon(self, tau):
        if self.mode == 'glie':
            return 1.0 / max(int(tau), 1)
        return self.epsilon0


def epsilon_greedy(qrow, epsilon, gen):
    """Pick argmin of ``qrow`` w.p. ``1 - epsilon``, else a uniform action."""
    qrow = np.asarray(qrow, dtype=float)
    if qrow.ndim != 1 or qrow.size == 0:
        raise InvalidInputError('action values must be a non-empty vector')
    if not 0 <= epsilon <= 1:
        raise InvalidInputError('epsilon must lie in [0, 1]')
    if epsilon > 0 and gen.random() < epsilon:
        return int(gen.integers(qrow.size))
    return int(np.argmin(qrow))


def q_update(table, s, a, cost, s_next, beta, gamma):
    """One Q-learning step on entry ``(s, a)``, in place.

    ``Q(s,a) <- (1 - beta) Q(s,a) + beta (cost + gamma min_b Q(s_next, b))``

    Returns the same table for chaining.
    """
    if not (0 <= s < table.states and 0 <= s_next < table.states and 0 <= a < table.actions):
        raise InvalidInputError('state or action id outside the table')
    if not 0 < beta <= 1 or not 0 <= gamma < 1:
        raise InvalidInputError('need beta in (0, 1] and gamma in [0, 1)')
    q = table.values
    q[s, a] = (1 - beta) * q[s, a] + beta * (cost + gamma * q[s_next].min())
    return table


def bellman_operator(mdp, q):
    """Apply the optimal Bellman operator once to a value array."""
    return mdp.expected_cost() + mdp.gamma * mdp.P @ q.min(axis=1)


def value_iteration(mdp, tol=1e-12, max_iter=100_000):
    """Optimal Q-table of ``mdp`` by fixed-point iteration.

    Iterates until the sup-norm change drops below ``tol``.
    """
    if tol <= 0:
        raise InvalidInputError('tolerance must be positive')
    q = np.zeros((mdp.states, mdp.actions))
    for _ in range(max_iter):
        q_next = bellman_operator(mdp, q)
        done = np.max(np.abs(q_next - q)) < tol
        q = q_next
        if done:
            break
    return QTable(mdp.states, mdp.actions, q)


def greedy_policy(table):
    """Greedy (argmin) action per state; ties to the lowest action id."""
    return np.argmin(table.values, axis=1)


def policy_evaluation(mdp, policy, tol=1e-12):
    """Value of a deterministic policy by a direct linear solve.

    ``tol`` bounds the accepted residual of the linear system.
    """
    policy = np.asarray(policy, dtype=int)
    if policy.shape != (mdp.states,) or np.any(policy < 0) or np.any(policy >= mdp.actions):
        raise InvalidInputError('policy must map each state to a valid action')
    idx = np.arange(mdp.states)
    P_pi = mdp.P[idx, policy]
    c_pi = mdp.expected_cost()[idx, policy]
    A = np.eye(mdp.states) - mdp.gamma * P_pi
    v = np.linalg.solve(A, c_pi)
    if np.max(np.abs(A @ v - c_pi)) > max(tol, 1e-9):
        raise InvalidInputError('policy evaluation did not reach the tolerance')
    return v


def random_tiny_mdp(gen, states=3, actions=2, gamma=0.8):
    """Dirichlet transitions and uniform [0, 1) transition costs."""
    P = gen.dirichlet(np.ones(states), size=(states, actions))
    # renormalize so rows sum to one within float rounding
    P /= P.sum(axis=2, keepdims=True)
    cost = gen.random((states, actions, states))
    return TinyMdpSpec(P, cost, gamma)


def q_learning(mdp, steps, schedule, gen, start=0):
    """Run Q-learning on ``mdp`` by simulation.

    The step size for each visit is ``1 / (1 + previous visits of (s, a))``
    and exploration follows ``schedule`` with ``tau`` the 1-based step.

    Returns
    -------
    (QTable, numpy.ndarray)
        Learned table and visit counts.
    """
    table = QTable(mdp.states, mdp.actions)
    visits = np.zeros((mdp.states, mdp.actions), dtype=np.int64)
    s = start
    cum = np.cumsum(mdp.P, axis=2)
    for tau in range(1, steps + 1):
        a = epsilon_greedy(table.values[s], schedule.epsilon(tau), gen)
        s_next = min(int(np.searchsorted(cum[s, a], gen.random(), side='right')), mdp.states - 1)
        q_update(table, s, a, mdp.cost[s, a, s_next], s_next, 1.0 / (1 + visits[s, a]), mdp.gamma)
        visits[s, a] += 1
        s = s_next
    return table, visits


def quantize_counts(counts, levels):
    """Bucket request counts as ``min(levels - 1, floor(log2(1 + count)))``."""
    counts = np.asarray(counts, dtype=float)
    return np.minimum(levels - 1, np.floor(np.log2(1 + counts))).astype(np.int64)


class TabularQLeafPolicy(Policy):
    """Leaf policy learning one small Q-table per file.

    The state of file ``f`` is its quantized request count in the previous
    slot, the action is cache / don't cache, and the cost is that file's
    entry of the nodal cost. The placement keeps the ``capacity`` files with
    the largest learned saving ``Q(l, 0) - Q(l, 1)``.
    """

    name = 'tabular_q'

    def __init__(self, files, capacity, gen, levels=4, beta=0.1, gamma=0.8,
                 schedule=None, prefill=False):
        super().__init__(files, capacity)
        if levels < 1:
            raise InvalidInputError('need at least one quantization level')
        self.gen = gen
        self.levels = int(levels)
        self.beta = beta
        self.gamma = gamma
        self.schedule = schedule or ExplorationSchedule('constant', 0.1)
        self.q = np.zeros((self.files, self.levels, 2))
        self.tau = 0
        self._levels_now = np.zeros(self.files, dtype=np.int64)
        if prefill:
            self._placement[:self.capacity] = 1

    def act(self, state):
        self.tau += 1
        self._levels_now = quantize_counts(state, self.levels)
        eps = self.schedule.epsilon(self.tau)
        if eps > 0 and self.gen.random() < eps:
            self._placement = random_subset_action(self.files, self.capacity, self.gen)
        else:
            self._placement = self.query(state)
        return self.current_placement()

    def query(self, state):
        """Greedy placement for ``state``; no exploration, no learning."""
        rows = self.q[np.arange(self.files), quantize_counts(state, self.levels)]
        return top_m_action(rows[:, 0] - rows[:, 1], self.capacity)

    def observe(self, cost, next_state):
        """Update every file's table with the cost of the slot just served."""
        idx = np.arange(self.files)
        nxt = quantize_counts(next_state, self.levels)
        a = self._placement.astype(np.int64)
        target = np.asarray(cost, dtype=float) + self.gamma * self.q[idx, nxt].min(axis=1)
        cur = self.q[idx, self._levels_now, a]
        self.q[idx, self._levels_now, a] = (1 - self.beta) * cur + self.beta * target
