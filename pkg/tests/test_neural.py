import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from _oracles import finite_difference_check, literal_forward, perturbed, random_batch, random_net
from cachenet.core import InvalidInputError, top_m_action
from cachenet.neural import (LayerSpec, NetParams, backward, forward, forward_logits, init_params,
                             load_checkpoint, param_distance, read_params, save_checkpoint, sgd_step, softmax,
                             write_params)


def test_zero_net_is_uniform():
    p = NetParams(LayerSpec((3, 4, 5)))
    assert np.allclose(forward(p, [1.0, -2.0, 7.0]), 0.2)


def test_identity_net_closed_form():
    p = NetParams(LayerSpec((2, 2)))
    p.weights[0][...] = np.eye(2)
    e = np.e
    assert np.allclose(forward(p, [1.0, 0.0]), [e / (e + 1), 1 / (e + 1)], atol=1e-15)


def test_forward_matches_extended_precision(gen):
    for _ in range(5):
        p = perturbed(random_net(gen, 10, layers=3), gen)
        x = gen.normal(size=p.spec.sizes[0])
        ref = literal_forward(p, x)
        got = forward(p, x)
        assert np.all(np.abs(got - ref.astype(float)) / ref.astype(float) < 1e-12)


def test_forward_batch_matches_rows(gen):
    p = perturbed(random_net(gen, 8), gen)
    xs = gen.normal(size=(4, p.spec.sizes[0]))
    assert np.allclose(forward(p, xs), np.stack([forward(p, x) for x in xs]), rtol=0, atol=1e-15)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(-5, 5))
def test_output_is_a_distribution(seed, shift):
    gen = np.random.default_rng(seed)
    p = perturbed(random_net(gen, 12), gen, 1.0)
    o = forward(p, gen.normal(size=p.spec.sizes[0]) + shift)
    assert np.all(o > 0)
    assert abs(o.sum() - 1) < 1e-10


def test_logits_rank_like_softmax(gen):
    for _ in range(50):
        p = perturbed(random_net(gen, 10), gen)
        x = gen.normal(size=p.spec.sizes[0])
        m = int(gen.integers(1, p.spec.sizes[-1] + 1))
        assert np.array_equal(top_m_action(forward_logits(p, x), m), top_m_action(forward(p, x), m))


def test_forward_rejects_bad_input():
    p = NetParams(LayerSpec((3, 2)))
    with pytest.raises(InvalidInputError):
        forward(p, [1.0, 2.0])
    with pytest.raises(InvalidInputError):
        forward(p, [1.0, np.nan, 0.0])


def test_backward_zero_seed(gen):
    p = perturbed(random_net(gen, 6), gen)
    g = backward(p, gen.normal(size=p.spec.sizes[0]), np.zeros(p.spec.sizes[-1]))
    assert np.all(g.flat == 0)


def test_backward_single_layer_analytic(gen):
    # loss = ||o - y||^2 with o = softmax(Wx + b); dL/dz = J^T 2(o - y)
    p = perturbed(NetParams(LayerSpec((4, 3))), gen, 1.0)
    x, y = gen.normal(size=4), gen.random(3)
    o = forward(p, x)
    J = np.diag(o) - np.outer(o, o)
    dz = J.T @ (2 * (o - y))
    g = backward(p, x, 2 * (o - y))
    assert np.allclose(g.weights[0], np.outer(dz, x), atol=1e-10, rtol=0)
    assert np.allclose(g.biases[0], dz, atol=1e-10, rtol=0)


def test_backward_finite_differences(gen):
    theta = perturbed(random_net(gen, 8, layers=3), gen)
    tar = perturbed(theta, gen)
    assert finite_difference_check(theta, tar, random_batch(gen, theta.spec.sizes[0], 3), 0.8) <= 1e-4


def test_backward_shape_mismatch(gen):
    p = random_net(gen, 5)
    with pytest.raises(InvalidInputError):
        backward(p, np.zeros(p.spec.sizes[0]), np.zeros(p.spec.sizes[-1] + 1))


def test_sgd_step_examples(gen):
    p = NetParams(LayerSpec((1, 1)), np.array([1.0, 2.0]))
    g = NetParams(LayerSpec((1, 1)), np.array([1.0, -1.0]))
    assert sgd_step(p, g, 1.0).flat.tolist() == [0.0, 3.0]
    assert np.array_equal(sgd_step(p, NetParams(p.spec), 0.5).flat, p.flat)
    with pytest.raises(InvalidInputError):
        sgd_step(p, g, 0.0)


def test_sgd_descends_a_quadratic(gen):
    # loss = ||o - y||^2 on a fixed input; small steps must decrease it
    p = perturbed(random_net(gen, 6, layers=3), gen)
    x = gen.normal(size=p.spec.sizes[0])
    y = softmax(gen.normal(size=p.spec.sizes[-1]))
    loss = np.sum((forward(p, x) - y) ** 2)
    for _ in range(50):
        p = sgd_step(p, backward(p, x, 2 * (forward(p, x) - y)), 1e-2)
        new = np.sum((forward(p, x) - y) ** 2)
        assert new < loss
        loss = new


def test_param_distance(gen):
    a = NetParams(LayerSpec((1, 1)), np.array([0.0, 0.0]))
    b = NetParams(LayerSpec((1, 1)), np.array([3.0, 4.0]))
    assert param_distance(a, b) == 5.0
    assert param_distance(a, a) == 0.0
    p, q = random_net(gen, 5, 2), None
    q = perturbed(p, gen)
    assert param_distance(p, q) == param_distance(q, p)
    with pytest.raises(InvalidInputError):
        param_distance(p, NetParams(LayerSpec((9, 9))))


def test_init_params(gen):
    spec = LayerSpec((300, 400, 300))
    a = init_params(spec, np.random.default_rng(3))
    b = init_params(spec, np.random.default_rng(3))
    assert np.array_equal(a.flat, b.flat)
    assert all(np.all(bias == 0) for bias in a.biases)
    w = np.concatenate([W.ravel() for W in a.weights])
    assert w.size > 1e5
    assert abs(w.mean()) <= 3 * w.std() / np.sqrt(w.size)
    bound = np.sqrt(6 / 700)
    assert np.all(np.abs(w) <= bound)


def test_flat_and_structured_views_alias(gen):
    p = random_net(gen, 5, 3)
    p.weights[1][0, 0] = 42.0
    assert 42.0 in p.flat
    p.flat[:] = 0
    assert np.all(p.weights[0] == 0)
    q = NetParams(p.spec, p.flat.copy())
    assert all(np.array_equal(x, y) for x, y in zip(p.weights, q.weights))


def test_checkpoint_round_trip(tmp_path, gen):
    nets = [perturbed(random_net(gen, 7), gen) for _ in range(3)]
    path = tmp_path / 'net.bin'
    save_checkpoint(path, nets)
    back = load_checkpoint(path)
    assert [n.spec for n in back] == [n.spec for n in nets]
    assert all(np.array_equal(a.flat, b.flat) for a, b in zip(nets, back))


def test_checkpoint_byte_layout():
    p = NetParams(LayerSpec((1, 2)), np.array([1.0, 2.0, 3.0, 4.0]))
    fh = io.BytesIO()
    write_params(fh, p)
    raw = fh.getvalue()
    assert raw[:8] == (2).to_bytes(8, 'little')
    assert raw[8:24] == (1).to_bytes(8, 'little') + (2).to_bytes(8, 'little')
    assert np.frombuffer(raw[24:], '<f8').tolist() == [1.0, 2.0, 3.0, 4.0]
    fh.seek(0)
    assert read_params(fh).flat.tolist() == [1.0, 2.0, 3.0, 4.0]


def test_truncated_checkpoint(tmp_path):
    path = tmp_path / 'bad.bin'
    save_checkpoint(path, [NetParams(LayerSpec((2, 2)))])
    path.write_bytes(path.read_bytes()[:-3])
    with pytest.raises(InvalidInputError):
        load_checkpoint(path)
