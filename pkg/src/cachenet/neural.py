"""Fully connected feedforward network with ReLU hidden layers and a softmax
output layer, trained by plain SGD.

Parameters live in one flat float64 vector. Its canonical order is
layer-major; within a layer the ``(n_out, n_in)`` weight matrix comes first
in row-major order, followed by the bias vector. ``NetParams.weights`` and
``NetParams.biases`` are views into that vector, so both addressings always
see the same numbers.

Checkpoint layout (all little-endian)::

    u64 L                 number of layer sizes
    u64 sizes[L]          n_1 (input width) .. n_L (output width)
    f64 flat[P]           parameters in canonical order

A multi-network checkpoint is ``u64 K`` followed by K such sections.
"""
import struct
from dataclasses import dataclass

import numpy as np

from .core import InvalidInputError

__all__ = [
    'LayerSpec',
    'NetParams',
    'softmax',
    'forward',
    'forward_logits',
    'backward',
    'sgd_step',
    'param_distance',
    'init_params',
    'write_params',
    'read_params',
    'save_checkpoint',
    'load_checkpoint',
]


@dataclass(frozen=True)
class LayerSpec:
    """Layer widths ``(n_1, ..., n_L)``; ``n_1`` is the input width."""

    sizes: tuple

    def __post_init__(self):
        sizes = tuple(int(n) for n in self.sizes)
        if len(sizes) < 2 or min(sizes) < 1:
            raise InvalidInputError('need at least two layers of positive width')
        object.__setattr__(self, 'sizes', sizes)

    @property
    def shapes(self):
        return [(n_out, n_in) for n_in, n_out in zip(self.sizes[:-1], self.sizes[1:])]

    @property
    def n_params(self):
        return sum(o * i + o for o, i in self.shapes)


class NetParams:
    """All weights and biases of one network, backed by a flat vector."""

    def __init__(self, spec, flat=None):
        if not isinstance(spec, LayerSpec):
            spec = LayerSpec(spec)
        self.spec = spec
        if flat is None:
            flat = np.zeros(spec.n_params)
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (spec.n_params,):
            raise InvalidInputError(f'expected {spec.n_params} parameters, got {flat.shape}')
        self.flat = flat
        self.weights, self.biases = [], []
        pos = 0
        for n_out, n_in in spec.shapes:
            self.weights.append(flat[pos:pos + n_out * n_in].reshape(n_out, n_in))
            pos += n_out * n_in
            self.biases.append(flat[pos:pos + n_out])
            pos += n_out

    def copy(self):
        return NetParams(self.spec, self.flat.copy())

    def __repr__(self):
        return f'NetParams(sizes={self.spec.sizes})'


def softmax(z):
    """Row-wise softmax with max subtraction."""
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def _check_input(p, x):
    x = np.asarray(x, dtype=float)
    if x.ndim not in (1, 2) or x.shape[-1] != p.spec.sizes[0]:
        raise InvalidInputError(f'input width must be {p.spec.sizes[0]}')
    if not np.all(np.isfinite(x)):
        raise InvalidInputError('input must be finite')
    return x


def _forward_pass(p, x):
    acts = [x]
    h = x
    last = len(p.weights) - 1
    for layer, (W, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ W.T + b
        if layer == last:
            return acts, z
        h = np.maximum(z, 0.0)
        acts.append(h)


def forward_logits(p, x):
    """Pre-softmax output of the network."""
    return _forward_pass(p, _check_input(p, x))[1]


def forward(p, x):
    """Evaluate the network.

    Parameters
    ----------
    p : NetParams
    x : array-like, shape (n_1,) or (B, n_1)

    Returns
    -------
    numpy.ndarray, shape (n_L,) or (B, n_L)
        Softmax outputs; every row is positive and sums to one.
    """
    return softmax(forward_logits(p, x))


def backward(p, x, output_error):
    """Gradient of a loss with respect to all parameters.

    Parameters
    ----------
    p : NetParams
    x : array-like, shape (n_1,) or (B, n_1)
    output_error : array-like, same leading shape as ``x`` and width n_L
        Derivative of the loss with respect to the softmax output. For a
        batch the per-row gradients are summed.

    Returns
    -------
    NetParams
        Gradient in the same layout as ``p``.
    """
    x = _check_input(p, x)
    g = np.asarray(output_error, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
        if g.ndim == 1:
            g = g[None, :]
    if g.shape != (x.shape[0], p.spec.sizes[-1]):
        raise InvalidInputError('output error shape does not match the network output')
    acts, z = _forward_pass(p, x)
    o = softmax(z)
    # softmax Jacobian-vector product: o * (g - <o, g>)
    dz = o * (g - np.sum(o * g, axis=1, keepdims=True))
    grad = NetParams(p.spec)
    for layer in range(len(p.weights) - 1, -1, -1):
        grad.weights[layer][...] = dz.T @ acts[layer]
        grad.biases[layer][...] = dz.sum(axis=0)
        if layer:
            dz = (dz @ p.weights[layer]) * (acts[layer] > 0)
    return grad


def sgd_step(p, grad, beta):
    """Return ``p - beta * grad`` as new parameters."""
    if beta <= 0:
        raise InvalidInputError('learning rate must be positive')
    if grad.spec != p.spec:
        raise InvalidInputError('gradient layout does not match the parameters')
    return NetParams(p.spec, p.flat - beta * grad.flat)


def param_distance(p1, p2):
    """Euclidean distance between two parameter sets of the same layout."""
    if p1.spec != p2.spec:
        raise InvalidInputError('networks have different layer specs')
    return float(np.linalg.norm(p1.flat - p2.flat))


def init_params(spec, gen):
    """Glorot-uniform weights and zero biases."""
    if not isinstance(spec, LayerSpec):
        spec = LayerSpec(spec)
    p = NetParams(spec)
    for W in p.weights:
        n_out, n_in = W.shape
        bound = np.sqrt(6.0 / (n_in + n_out))
        W[...] = gen.uniform(-bound, bound, size=W.shape)
    return p


def write_params(fh, p):
    sizes = p.spec.sizes
    fh.write(struct.pack(f'<Q{len(sizes)}Q', len(sizes), *sizes))
    fh.write(p.flat.astype('<f8').tobytes())


def read_params(fh):
    (n,) = struct.unpack('<Q', _read_exact(fh, 8))
    sizes = struct.unpack(f'<{n}Q', _read_exact(fh, 8 * n))
    spec = LayerSpec(sizes)
    flat = np.frombuffer(_read_exact(fh, 8 * spec.n_params), dtype='<f8').astype(np.float64)
    return NetParams(spec, flat)


def _read_exact(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise InvalidInputError('truncated checkpoint')
    return data


def save_checkpoint(path, params):
    """Write a list of networks to ``path``."""
    with open(path, 'wb') as fh:
        fh.write(struct.pack('<Q', len(params)))
        for p in params:
            write_params(fh, p)


def load_checkpoint(path):
    with open(path, 'rb') as fh:
        (k,) = struct.unpack('<Q', _read_exact(fh, 8))
        params = [read_params(fh) for _ in range(k)]
        if fh.read(1):
            raise InvalidInputError('trailing bytes in checkpoint')
    return params
