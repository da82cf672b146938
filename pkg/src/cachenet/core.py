"""Shared vocabulary: vector validation, the two-timescale clock, seeded
random streams and top-M placement selection.

Vectors are plain 1-D numpy arrays. Request counts are ``int64``; states,
costs and scores are ``float64``; placements are ``int8`` arrays of 0/1.
"""
from dataclasses import dataclass

import numpy as np

__all__ = [
    'InvalidInputError',
    'CatalogSpec',
    'Clock',
    'SeededRng',
    'rng_substream',
    'top_m_action',
    'as_requests',
    'as_state',
    'as_cost',
    'as_placement',
    'random_subset_action',
]


class InvalidInputError(ValueError):
    """Raised when an operation receives arguments violating its contract."""


@dataclass(frozen=True)
class CatalogSpec:
    """Catalog of ``files`` equally sized files with ids ``0 .. files-1``."""

    files: int

    def __post_init__(self):
        if int(self.files) < 1:
            raise InvalidInputError('catalog needs at least one file')


@dataclass(frozen=True)
class Clock:
    """Position on the two timescales.

    ``interval`` counts slow intervals (0 is the bootstrap interval) and
    ``slot`` runs 1..``slots`` inside each interval.
    """

    slots: int
    interval: int = 0
    slot: int = 1

    def __post_init__(self):
        if self.slots < 1:
            raise InvalidInputError('slots per interval must be positive')
        if not 1 <= self.slot <= self.slots or self.interval < 0:
            raise InvalidInputError('clock position out of range')

    def tick(self):
        """Return the clock advanced by one fast slot."""
        if self.slot == self.slots:
            return Clock(self.slots, self.interval + 1, 1)
        return Clock(self.slots, self.interval, self.slot + 1)

    @property
    def global_slot(self):
        """0-based slot index counted from the first slot of interval 1."""
        return (self.interval - 1) * self.slots + (self.slot - 1)


class SeededRng:
    """A numpy ``Generator`` that remembers the (seed, label path) it was
    derived from, so children can be split off deterministically.

    Children depend only on ``(seed, key + label)``, never on how many draws
    the parent already made.
    """

    def __init__(self, seed, key=()):
        seed = int(seed)
        if not 0 <= seed < 2 ** 64:
            raise InvalidInputError('seed must be an unsigned 64-bit integer')
        self.seed = seed
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.gen = np.random.Generator(np.random.PCG64(ss))

    def substream(self, label):
        return rng_substream(self, label)

    def __repr__(self):
        return f'SeededRng(seed={self.seed}, key={self.key})'


def rng_substream(master, label):
    """Derive an independent child stream from ``master``.

    Parameters
    ----------
    master : SeededRng
        Parent stream; its draw position is irrelevant.
    label : tuple of int
        Label appended to the parent's key, e.g. ``(node_kind, node_id)``.

    Returns
    -------
    SeededRng
    """
    if isinstance(label, (int, np.integer)):
        label = (label,)
    return SeededRng(master.seed, master.key + tuple(label))


def top_m_action(scores, m):
    """Place the ``min(m, F)`` highest-scoring files.

    Ties are broken by lowest file id, so the result is invariant under any
    strictly increasing transform of ``scores``.

    Parameters
    ----------
    scores : array-like of float, shape (F,)
    m : int
        Capacity budget; values above ``F`` are clamped.

    Returns
    -------
    numpy.ndarray of int8, shape (F,)
    """
    scores = np.asarray(scores, dtype=float)
    if scores.ndim != 1 or scores.size == 0:
        raise InvalidInputError('scores must be a non-empty vector')
    if not np.all(np.isfinite(scores)):
        raise InvalidInputError('scores must be finite')
    m = int(m)
    if m < 0:
        raise InvalidInputError('budget must be nonnegative')
    m = min(m, scores.size)
    out = np.zeros(scores.size, dtype=np.int8)
    if m:
        # stable sort on -scores keeps lower ids first among equal scores
        out[np.argsort(-scores, kind='stable')[:m]] = 1
    return out


def random_subset_action(f, m, gen):
    """Uniformly random placement of ``min(m, f)`` files."""
    out = np.zeros(f, dtype=np.int8)
    out[gen.choice(f, size=min(int(m), f), replace=False)] = 1
    return out


def _vector(x, dtype, what, length=None):
    arr = np.asarray(x, dtype=dtype)
    if arr.ndim != 1:
        raise InvalidInputError(f'{what} must be one-dimensional')
    if length is not None and arr.size != length:
        raise InvalidInputError(f'{what} has length {arr.size}, expected {length}')
    return arr


def as_requests(x, length=None):
    """Validate a request-count vector (nonnegative integers)."""
    raw = np.asarray(x)
    if raw.dtype.kind == 'f' and np.any(raw != np.floor(raw)):
        raise InvalidInputError('request counts must be integers')
    arr = _vector(raw, np.int64, 'request vector', length)
    if np.any(arr < 0):
        raise InvalidInputError('request counts must be nonnegative')
    return arr


def as_state(x, length=None):
    """Validate a demand-state vector (finite, nonnegative reals)."""
    arr = _vector(x, float, 'state vector', length)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError('state entries must be finite and nonnegative')
    return arr


def as_cost(x, length=None):
    """Validate a cost vector (finite, nonnegative reals)."""
    arr = _vector(x, float, 'cost vector', length)
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise InvalidInputError('cost entries must be finite and nonnegative')
    return arr


def as_placement(x, length=None, budget=None):
    """Validate a binary placement vector, optionally against a budget."""
    raw = np.asarray(x)
    arr = _vector(raw, np.int8, 'placement', length)
    if not np.array_equal(raw, arr) or np.any((arr != 0) & (arr != 1)):
        raise InvalidInputError('placement entries must be 0 or 1')
    if budget is not None and int(arr.sum()) > budget:
        raise InvalidInputError('placement exceeds the capacity budget')
    return arr
