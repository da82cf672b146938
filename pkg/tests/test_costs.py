import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cachenet.core import InvalidInputError
from cachenet.costs import (leaf_cost, masked_leaf_report, nocache_cost, parent_cost, parent_state, reduced_cost,
                            slot_average_cost)


def literal_nodal_cost(a_leaf, a_parent, r):
    # per file: parent-to-cloud fetch if both miss, plus leaf-to-parent fetch
    return [r[f] * (1 - a_parent[f]) * (1 - a_leaf[f]) + r[f] * (1 - a_leaf[f]) for f in range(len(r))]


def test_leaf_cost_examples():
    assert leaf_cost([0], [0], [2]).tolist() == [4]
    assert leaf_cost([0], [1], [3]).tolist() == [3]
    assert leaf_cost([1, 1, 1], [0, 1, 0], [7, 2, 9]).tolist() == [0, 0, 0]


def test_leaf_cost_exhaustive_f3(gen):
    actions = list(itertools.product((0, 1), repeat=3))
    for _ in range(20):
        r = gen.integers(0, 1000, size=3)
        for a_leaf in actions:
            for a_parent in actions:
                got = leaf_cost(a_leaf, a_parent, r)
                assert got.tolist() == literal_nodal_cost(a_leaf, a_parent, r.tolist())


def test_leaf_cost_length_mismatch():
    with pytest.raises(InvalidInputError):
        leaf_cost([0, 1], [0], [1, 1])


@given(st.lists(st.integers(0, 50), min_size=1, max_size=6), st.data())
def test_leaf_cost_monotone_in_each_bit(r, data):
    f = len(r)
    a_leaf = data.draw(st.lists(st.integers(0, 1), min_size=f, max_size=f))
    a_parent = data.draw(st.lists(st.integers(0, 1), min_size=f, max_size=f))
    base = leaf_cost(a_leaf, a_parent, r)
    for i in range(f):
        for vec, other, order in ((a_leaf, a_parent, 'leaf'), (a_parent, a_leaf, 'parent')):
            flipped = list(vec)
            flipped[i] = 1
            c = leaf_cost(flipped, other, r) if order == 'leaf' else leaf_cost(other, flipped, r)
            assert np.all(c <= base)


def test_slot_average_examples():
    assert slot_average_cost([[2], [4]]).tolist() == [3]
    assert slot_average_cost([[5]]).tolist() == [5]
    with pytest.raises(InvalidInputError):
        slot_average_cost([])


def test_slot_average_rational_oracle(gen):
    per_slot = gen.random((4, 3)) * 10
    exact = [sum(Fraction(x) for x in per_slot[:, f]) / 4 for f in range(3)]
    assert np.allclose(slot_average_cost(list(per_slot)), [float(x) for x in exact], atol=1e-12, rtol=0)


def test_parent_cost_examples():
    assert parent_cost([1, 1], [[1], [2]]).tolist() == [3]
    assert parent_cost([0, 5], [[9], [2]]).tolist() == [10]
    with pytest.raises(InvalidInputError):
        parent_cost([1], [[1], [2]])
    with pytest.raises(InvalidInputError):
        parent_cost([-1], [[1]])


def test_parent_cost_rational_oracle(gen):
    w = gen.random(3)
    costs = gen.random((3, 4)) * 5
    exact = [sum(Fraction(w[n]) * Fraction(costs[n, f]) for n in range(3)) for f in range(4)]
    assert np.allclose(parent_cost(w, list(costs)), [float(x) for x in exact], atol=1e-12, rtol=0)


def test_masked_report_examples():
    assert masked_leaf_report([4, 7], [0, 1]).tolist() == [4, 0]
    assert masked_leaf_report([4, 7], [1, 1]).tolist() == [0, 0]
    assert masked_leaf_report([4, 7], [0, 0]).tolist() == [4, 7]
    with pytest.raises(InvalidInputError):
        masked_leaf_report([4, 7], [0])


def test_parent_state_examples():
    assert parent_state([1], [[2, 0]]).tolist() == [2, 0]
    assert parent_state([2, 1], [[1, 0], [0, 3]]).tolist() == [2, 3]


def test_parent_state_rational_oracle(gen):
    w = gen.random(5)
    reports = gen.random((5, 4)) * 20
    exact = [sum(Fraction(w[n]) * Fraction(reports[n, f]) for n in range(5)) for f in range(4)]
    assert np.allclose(parent_state(w, list(reports)), [float(x) for x in exact], atol=1e-12, rtol=0)


@given(st.lists(st.floats(0, 10), min_size=1, max_size=4), st.integers(1, 5), st.integers(0, 2 ** 31))
def test_aggregation_is_linear_in_weights(w, f, seed):
    g = np.random.default_rng(seed)
    vecs = list(g.random((len(w), f)))
    w2 = [2 * x for x in w]
    assert np.allclose(parent_state(w2, vecs), 2 * parent_state(w, vecs))
    assert np.allclose(parent_cost(w2, vecs), 2 * parent_cost(w, vecs))


def test_reduced_cost_examples():
    assert reduced_cost([10], [10]) == 0
    assert reduced_cost([4], [10]) == 6
    with pytest.raises(InvalidInputError):
        reduced_cost([1, 2], [1])


def test_nocache_cost_doubles_mean_demand():
    reqs = [np.array([[2, 0], [4, 2]]), np.array([[1, 1], [1, 1]])]
    assert nocache_cost([1, 0.5], reqs).tolist() == [2 * 3 + 0.5 * 2, 2 * 1 + 0.5 * 2]


@given(st.lists(st.integers(0, 30), min_size=1, max_size=5), st.data())
def test_reduced_cost_nonnegative_when_placements_honored(r, data):
    f = len(r)
    a_leaf = data.draw(st.lists(st.integers(0, 1), min_size=f, max_size=f))
    a_parent = data.draw(st.lists(st.integers(0, 1), min_size=f, max_size=f))
    policy = parent_cost([1], [leaf_cost(a_leaf, a_parent, r)])
    base = nocache_cost([1], [np.array([r])])
    assert reduced_cost(policy, base) >= 0
