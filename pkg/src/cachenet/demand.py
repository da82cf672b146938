"""Per-slot request generation for leaf nodes.

Two synthetic models are provided: a static popularity profile sampled with
independent Poisson counts, and a Markov random walk on the request vector
itself, ``r(t+1) = clip(floor(r(t) + noise), 0, r_max)`` with diagonal
Gaussian noise. Recorded traces (``slot,file,count`` CSV) can stand in for
either.
"""
import csv
from dataclasses import dataclass, replace

import numpy as np

from .core import InvalidInputError, as_requests

__all__ = [
    'StaticPopularity',
    'MarkovDemand',
    'draw_static',
    'markov_step',
    'read_trace',
    'StaticSource',
    'MarkovSource',
    'TraceSource',
]


@dataclass(frozen=True)
class StaticPopularity:
    """Time-invariant popularity ``p`` and total per-slot intensity."""

    p: np.ndarray
    intensity: float = 100.0

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 1 or np.any(p < 0) or np.any(p > 1) or not np.all(np.isfinite(p)):
            raise InvalidInputError('popularities must lie in [0, 1]')
        object.__setattr__(self, 'p', p)

    @property
    def means(self):
        total = self.p.sum()
        if total <= 0:
            raise InvalidInputError('popularity vector is all zero')
        return self.intensity * self.p / total


@dataclass(frozen=True)
class MarkovDemand:
    """State of the Markov request process at one leaf."""

    r: np.ndarray
    mu: np.ndarray
    sigma: np.ndarray
    r_max: int = 10_000

    def __post_init__(self):
        r = as_requests(self.r)
        f = r.size
        mu = np.broadcast_to(np.asarray(self.mu, dtype=float), (f,)).copy()
        sigma = np.broadcast_to(np.asarray(self.sigma, dtype=float), (f,)).copy()
        if np.any(sigma <= 0) or not np.all(np.isfinite(mu)):
            raise InvalidInputError('noise needs finite mean and positive stddev')
        if self.r_max < 1 or np.any(r > self.r_max):
            raise InvalidInputError('requests must lie in [0, r_max]')
        object.__setattr__(self, 'r', r)
        object.__setattr__(self, 'mu', mu)
        object.__setattr__(self, 'sigma', sigma)


def draw_static(pop, gen):
    """Sample one slot of requests under a static popularity profile.

    Parameters
    ----------
    pop : StaticPopularity
    gen : numpy.random.Generator

    Returns
    -------
    numpy.ndarray of int64
        Independent Poisson counts with means ``intensity * p / sum(p)``.
    """
    if pop.intensity <= 0:
        raise InvalidInputError('intensity must be positive')
    return gen.poisson(pop.means).astype(np.int64)


def markov_step(d, gen):
    """Advance the Markov request process by one slot.

    Returns
    -------
    (MarkovDemand, numpy.ndarray)
        The successor state and its request vector.
    """
    noise = gen.normal(d.mu, d.sigma)
    r = np.clip(np.floor(d.r + noise), 0, d.r_max).astype(np.int64)
    return replace(d, r=r), r


def read_trace(path, files):
    """Load a ``slot,file,count`` CSV into a dense ``(slots, files)`` array.

    Slots are 0-based global slot indices; absent pairs are zero.
    """
    rows = []
    with open(path, newline='') as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [h.strip() for h in reader.fieldnames] != ['slot', 'file', 'count']:
            raise InvalidInputError(f'{path}: header must be slot,file,count')
        last = -1
        for line, rec in enumerate(reader, start=2):
            try:
                slot, f, count = int(rec['slot']), int(rec['file']), int(rec['count'])
            except (TypeError, ValueError):
                raise InvalidInputError(f'{path}:{line}: malformed row') from None
            if slot < last:
                raise InvalidInputError(f'{path}:{line}: rows must be sorted by slot')
            if not 0 <= f < files or slot < 0 or count < 0:
                raise InvalidInputError(f'{path}:{line}: value out of range')
            last = slot
            rows.append((slot, f, count))
    n_slots = rows[-1][0] + 1 if rows else 0
    dense = np.zeros((n_slots, files), dtype=np.int64)
    for slot, f, count in rows:
        dense[slot, f] += count
    return dense


class StaticSource:
    """Leaf request source under a static popularity profile."""

    def __init__(self, pop, gen):
        self.pop = pop
        self.gen = gen

    def next(self):
        return draw_static(self.pop, self.gen)


class MarkovSource:
    """Leaf request source following the Markov random walk."""

    def __init__(self, state, gen):
        self.state = state
        self.gen = gen

    def next(self):
        self.state, r = markov_step(self.state, self.gen)
        return r


class TraceSource:
    """Replays a dense trace; slots past its end carry no requests."""

    def __init__(self, counts):
        self.counts = np.asarray(counts, dtype=np.int64)
        self.pos = 0

    def next(self):
        f = self.counts.shape[1]
        r = self.counts[self.pos] if self.pos < len(self.counts) else np.zeros(f, dtype=np.int64)
        self.pos += 1
        return r.copy()
