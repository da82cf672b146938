"""Nodal costs and leaf-to-parent aggregation.

A request missed at a leaf costs one unit for the leaf-to-parent hop and one
more if the parent misses too and has to fetch from the cloud. Leaves report
interval-averaged demand and costs; the parent combines them with
nonnegative per-leaf weights.
"""
import numpy as np

from .core import InvalidInputError, as_cost, as_placement, as_requests, as_state

__all__ = [
    'leaf_cost',
    'slot_average_cost',
    'parent_cost',
    'masked_leaf_report',
    'parent_state',
    'reduced_cost',
    'nocache_cost',
    'as_weights',
]


def as_weights(w, n=None):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or (n is not None and w.size != n):
        raise InvalidInputError('one weight per leaf is required')
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise InvalidInputError('leaf weights must be finite and nonnegative')
    return w


def leaf_cost(a_leaf, a_parent, r):
    """Per-file cost of serving one slot of requests at a leaf.

    ``c_f = r_f (1 - a0_f)(1 - an_f) + r_f (1 - an_f)``: the first term is the
    parent fetching from the cloud, the second the leaf fetching from the
    parent.

    Parameters
    ----------
    a_leaf, a_parent : array-like of {0, 1}, shape (F,)
    r : array-like of int, shape (F,)

    Returns
    -------
    numpy.ndarray of float, shape (F,)
    """
    r = as_requests(r)
    a_leaf = as_placement(a_leaf, r.size)
    a_parent = as_placement(a_parent, r.size)
    miss = r * (1 - a_leaf.astype(np.int64))
    return (miss * (1 - a_parent.astype(np.int64)) + miss).astype(float)


def slot_average_cost(per_slot):
    """Elementwise mean of the per-slot cost vectors of one interval."""
    if len(per_slot) == 0:
        raise InvalidInputError('at least one slot is required')
    stacked = np.asarray([as_cost(c) for c in per_slot], dtype=float)
    if stacked.ndim != 2:
        raise InvalidInputError('cost vectors must share one length')
    return stacked.mean(axis=0)


def _weighted_sum(weights, vectors, check):
    w = as_weights(weights)
    if len(vectors) != w.size or w.size == 0:
        raise InvalidInputError('need exactly one vector per leaf weight')
    stacked = np.asarray([check(v) for v in vectors], dtype=float)
    if stacked.ndim != 2:
        raise InvalidInputError('vectors must share one length')
    return w @ stacked


def parent_cost(weights, leaf_costs):
    """Parent cost vector: weighted sum of the leaves' slot-averaged costs."""
    return _weighted_sum(weights, leaf_costs, as_cost)


def masked_leaf_report(s_bar, leaf_action_on_s_bar):
    """What a leaf forwards upstream: its averaged demand on files it would
    not cache itself."""
    s_bar = as_state(s_bar)
    a = as_placement(leaf_action_on_s_bar, s_bar.size)
    return s_bar * (1 - a)


def parent_state(weights, reports):
    """Parent state vector: weighted sum of the masked leaf reports."""
    return _weighted_sum(weights, reports, as_state)


def nocache_cost(weights, requests_per_leaf):
    """Parent cost with every cache empty.

    ``requests_per_leaf[n]`` is the ``(T, F)`` array of leaf ``n``'s
    requests over the interval.
    """
    averaged = [2.0 * np.asarray(r, dtype=float).mean(axis=0) for r in requests_per_leaf]
    return parent_cost(weights, averaged)


def reduced_cost(policy_cost, nocache):
    """Total cost saved relative to the empty-cache run on the same demand."""
    policy_cost = as_cost(policy_cost)
    nocache = as_cost(nocache, policy_cost.size)
    return float(nocache.sum() - policy_cost.sum())
