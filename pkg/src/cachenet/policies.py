"""Classical caching policies usable at either level of the hierarchy.

Every policy exposes the same surface:

* ``on_request(f)`` registers one unit request and returns whether it hit.
  Per-request refreshers (LRU, LFU, FIFO, RR) update their contents here;
  slot-level deciders only report.
* ``act(state)`` is called at slot/interval boundaries and returns the new
  placement. Per-request refreshers ignore the state and return their
  current contents.
* ``current_placement()`` returns the binary placement vector.
* ``query(state)`` answers what ``act`` would choose for ``state`` without
  changing anything; leaves use it to mask their upstream reports.
"""
from collections import OrderedDict

import numpy as np

from .core import InvalidInputError, as_state, top_m_action

__all__ = [
    'Policy',
    'LRUPolicy',
    'LFUPolicy',
    'FIFOPolicy',
    'RandomReplacementPolicy',
    'WindowPopularityPolicy',
    'NoCachePolicy',
    'NoncausalOptimalPolicy',
    'windowed_popularity_act',
    'noncausal_optimal_act',
    'POLICY_NAMES',
    'make_policy',
]

POLICY_NAMES = ('lru', 'lfu', 'fifo', 'rr', 'window_pop', 'tabular_q', 'dqn',
                'hyper_dqn', 'optimal', 'nocache')


class Policy:
    """Base class; concrete policies override ``act`` and/or ``on_request``."""

    name = 'base'
    per_request = False
    noncausal = False

    def __init__(self, files, capacity):
        if files < 1 or capacity < 0:
            raise InvalidInputError('invalid catalog size or capacity')
        self.files = int(files)
        self.capacity = min(int(capacity), self.files)
        self._placement = np.zeros(self.files, dtype=np.int8)

    def current_placement(self):
        return self._placement.copy()

    def act(self, state):
        return self.current_placement()

    def query(self, state):
        return self.current_placement()

    def on_request(self, f):
        return bool(self._placement[f])

    def _check(self, f):
        if not 0 <= f < self.files:
            raise InvalidInputError(f'file id {f} outside the catalog')


class _RefreshingPolicy(Policy):
    per_request = True

    def __init__(self, files, capacity, prefill=False):
        super().__init__(files, capacity)
        self._cached = OrderedDict()
        if prefill:
            for f in range(self.capacity):
                self._insert(f)

    def _insert(self, f):
        self._cached[f] = None
        self._placement[f] = 1

    def _evict(self, f):
        del self._cached[f]
        self._placement[f] = 0

    def contents(self):
        """Cached file ids, oldest / least recently used first."""
        return list(self._cached)


class LRUPolicy(_RefreshingPolicy):
    """Least recently used."""

    name = 'lru'

    def on_request(self, f):
        self._check(f)
        if f in self._cached:
            self._cached.move_to_end(f)
            return True
        if self.capacity == 0:
            return False
        if len(self._cached) >= self.capacity:
            self._evict(next(iter(self._cached)))
        self._insert(f)
        return False


class FIFOPolicy(_RefreshingPolicy):
    """First in, first out; hits do not reorder."""

    name = 'fifo'

    def on_request(self, f):
        self._check(f)
        if f in self._cached:
            return True
        if self.capacity == 0:
            return False
        if len(self._cached) >= self.capacity:
            self._evict(next(iter(self._cached)))
        self._insert(f)
        return False


class LFUPolicy(_RefreshingPolicy):
    """Least frequently used with counters that survive eviction.

    A missed file replaces the least-counted cached file (lowest id on ties)
    only if its own count is strictly larger.
    """

    name = 'lfu'

    def __init__(self, files, capacity, prefill=False):
        self.counts = np.zeros(files, dtype=np.int64)
        super().__init__(files, capacity, prefill)

    def on_request(self, f):
        self._check(f)
        self.counts[f] += 1
        if f in self._cached:
            return True
        if self.capacity == 0:
            return False
        if len(self._cached) < self.capacity:
            self._insert(f)
            return False
        cached = np.flatnonzero(self._placement)
        victim = cached[np.argmin(self.counts[cached])]
        if self.counts[f] > self.counts[victim]:
            self._evict(int(victim))
            self._insert(f)
        return False


class RandomReplacementPolicy(_RefreshingPolicy):
    """Evicts a uniformly random cached file on a miss at capacity."""

    name = 'rr'

    def __init__(self, files, capacity, gen, prefill=False):
        self.gen = gen
        super().__init__(files, capacity, prefill)

    def on_request(self, f):
        self._check(f)
        if f in self._cached:
            return True
        if self.capacity == 0:
            return False
        if len(self._cached) >= self.capacity:
            members = list(self._cached)
            self._evict(members[int(self.gen.integers(len(members)))])
        self._insert(f)
        return False


def windowed_popularity_act(s, m):
    """Cache the ``m`` files with the largest observed demand ``s``."""
    return top_m_action(as_state(s), m)


def noncausal_optimal_act(future, m):
    """Cache the ``m`` files with the largest upcoming weighted unserved
    demand. ``future`` is only available to this benchmark."""
    return top_m_action(as_state(future), m)


class WindowPopularityPolicy(Policy):
    """Per-slot LFU over the most recent observation window."""

    name = 'window_pop'

    def __init__(self, files, capacity, prefill=False):
        super().__init__(files, capacity)
        if prefill:
            self._placement[:self.capacity] = 1

    def act(self, state):
        self._placement = self.query(state)
        return self.current_placement()

    def query(self, state):
        return windowed_popularity_act(state, self.capacity)


class NoCachePolicy(Policy):
    """Never caches anything."""

    name = 'nocache'


class NoncausalOptimalPolicy(Policy):
    """Benchmark that is handed the next interval's demand before acting."""

    name = 'optimal'
    noncausal = True

    def __init__(self, files, capacity, prefill=False):
        super().__init__(files, capacity)
        if prefill:
            self._placement[:self.capacity] = 1

    def act(self, future):
        self._placement = noncausal_optimal_act(future, self.capacity)
        return self.current_placement()


def make_policy(name, files, capacity, gen=None, prefill=False):
    """Build a classical policy by its configuration name.

    Learning policies (``tabular_q``, ``dqn``, ``hyper_dqn``) live in their
    own modules and are constructed by the simulator.
    """
    if name == 'lru':
        return LRUPolicy(files, capacity, prefill)
    if name == 'lfu':
        return LFUPolicy(files, capacity, prefill)
    if name == 'fifo':
        return FIFOPolicy(files, capacity, prefill)
    if name == 'rr':
        if gen is None:
            raise InvalidInputError('random replacement needs a random stream')
        return RandomReplacementPolicy(files, capacity, gen, prefill)
    if name == 'window_pop':
        return WindowPopularityPolicy(files, capacity, prefill)
    if name == 'optimal':
        return NoncausalOptimalPolicy(files, capacity, prefill)
    if name == 'nocache':
        return NoCachePolicy(files, capacity)
    raise InvalidInputError(f'unknown policy {name!r}')
