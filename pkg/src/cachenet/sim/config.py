"""Simulation configuration and its flat ``key = value`` file format.

One setting per line, ``#`` starts a comment, lists are comma separated::

    files = 50
    parent_policy = dqn
    hidden = 50
    weights = 1, 1, 0.5

Unknown keys and malformed values raise :class:`ConfigError`, which names
the offending key.
"""
import dataclasses
import os
from dataclasses import dataclass, fields

from ..core import InvalidInputError
from ..policies import POLICY_NAMES

__all__ = ['ConfigError', 'SimConfig', 'parse_config', 'load_config', 'dump_config', 'SEED_ENV']

SEED_ENV = 'CACHENET_SEED'

LEAF_POLICIES = ('lru', 'lfu', 'fifo', 'rr', 'window_pop', 'tabular_q', 'nocache')
PARENT_POLICIES = tuple(p for p in POLICY_NAMES if p != 'tabular_q')


class ConfigError(InvalidInputError):
    """Invalid configuration; ``key`` names the offending setting."""

    def __init__(self, key, message):
        super().__init__(f'{key}: {message}')
        self.key = key
        self.message = message


@dataclass(frozen=True)
class SimConfig:
    # topology and timing
    files: int = 50
    leaves: int = 1
    parent_capacity: int = 5
    leaf_capacity: tuple = (5,)
    slots: int = 1
    horizon: int = 500
    weights: tuple = (1.0,)
    # policies
    parent_policy: str = 'dqn'
    leaf_policy: str = 'window_pop'
    leaf_levels: int = 4
    leaf_beta: float = 0.1
    leaf_gamma: float = 0.8
    leaf_epsilon: float = 0.1
    request_order: str = 'ascending'
    # parent agent
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
    groups: int = 1
    group_sizes: tuple = ()
    # demand
    demand: str = 'static'
    intensity: float = 100.0
    popularity: tuple = ()
    markov_mu: tuple = (0.0,)
    markov_sigma: tuple = (1.0,)
    markov_r0: tuple = (0,)
    markov_r_max: int = 10_000
    markov_spread: float = 0.0
    trace: tuple = ()
    # run control
    seed: int = 0
    cdf_samples: int = 0
    audit: bool = False

    def __post_init__(self):
        self.validate()

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def leaf_capacities(self):
        return _per_leaf(self.leaf_capacity, self.leaves, 'leaf_capacity')

    def leaf_weights(self):
        return _per_leaf(self.weights, self.leaves, 'weights')

    def partition(self):
        """Group widths of the parent network(s)."""
        if self.group_sizes:
            return list(self.group_sizes)
        base, extra = divmod(self.files, self.groups)
        return [base + (k < extra) for k in range(self.groups)]

    def validate(self):
        def need(ok, key, message):
            if not ok:
                raise ConfigError(key, message)

        for key in ('files', 'leaves', 'parent_capacity', 'slots', 'horizon', 'sync_period',
                    'batch_size', 'replay_size', 'groups', 'leaf_levels', 'markov_r_max'):
            need(getattr(self, key) >= 1, key, 'must be a positive integer')
        need(all(m >= 1 for m in self.leaf_capacity), 'leaf_capacity', 'capacities must be >= 1')
        self.leaf_capacities()
        weights = self.leaf_weights()
        need(all(w >= 0 for w in weights), 'weights', 'weights must be nonnegative')
        need(self.parent_policy in PARENT_POLICIES, 'parent_policy',
             f'must be one of {", ".join(PARENT_POLICIES)}')
        need(self.leaf_policy in LEAF_POLICIES, 'leaf_policy', f'must be one of {", ".join(LEAF_POLICIES)}')
        need(self.request_order in ('ascending', 'shuffled'), 'request_order', 'must be ascending or shuffled')
        need(0 <= self.gamma < 1, 'gamma', 'must lie in [0, 1)')
        need(self.beta > 0, 'beta', 'must be positive')
        need(0 <= self.epsilon <= 1, 'epsilon', 'must lie in [0, 1]')
        need(self.epsilon_mode in ('constant', 'glie'), 'epsilon_mode', 'must be constant or glie')
        need(0 <= self.leaf_epsilon <= 1, 'leaf_epsilon', 'must lie in [0, 1]')
        need(0 < self.leaf_beta <= 1, 'leaf_beta', 'must lie in (0, 1]')
        need(0 <= self.leaf_gamma < 1, 'leaf_gamma', 'must lie in [0, 1)')
        need(all(h >= 1 for h in self.hidden), 'hidden', 'widths must be positive')
        need(self.input_norm in ('max', 'sum', 'none'), 'input_norm', 'must be max, sum or none')
        need(self.cost_norm in ('demand', 'none'), 'cost_norm', 'must be demand or none')
        need(self.cost_scale > 0, 'cost_scale', 'must be positive')
        if self.group_sizes:
            need(len(self.group_sizes) == self.groups, 'group_sizes', 'need one width per group')
            need(min(self.group_sizes) >= 1 and sum(self.group_sizes) == self.files, 'group_sizes',
                 'widths must be positive and sum to files')
        need(self.groups <= self.files, 'groups', 'cannot exceed files')
        need(self.demand in ('static', 'markov', 'trace'), 'demand', 'must be static, markov or trace')
        need(self.intensity > 0, 'intensity', 'must be positive')
        if self.popularity:
            need(len(self.popularity) == self.files, 'popularity', 'need one value per file')
            need(all(0 <= p <= 1 for p in self.popularity) and sum(self.popularity) > 0, 'popularity',
                 'values must lie in [0, 1] and not all be zero')
        for key in ('markov_mu', 'markov_sigma', 'markov_r0'):
            need(len(getattr(self, key)) in (1, self.files), key, 'give one value or one per file')
        need(all(s > 0 for s in self.markov_sigma), 'markov_sigma', 'must be positive')
        need(self.markov_spread >= 0, 'markov_spread', 'must be nonnegative')
        need(all(0 <= r <= self.markov_r_max for r in self.markov_r0), 'markov_r0', 'must lie in [0, markov_r_max]')
        if self.demand == 'trace':
            need(len(self.trace) in (1, self.leaves), 'trace', 'give one trace or one per leaf')
        need(0 <= self.seed < 2 ** 64, 'seed', 'must be an unsigned 64-bit integer')
        need(0 <= self.cdf_samples <= self.horizon, 'cdf_samples', 'must lie in [0, horizon]')


def _per_leaf(values, n, key):
    if len(values) == 1:
        return list(values) * n
    if len(values) != n:
        raise ConfigError(key, f'give one value or one per leaf ({n})')
    return list(values)


_FIELDS = {f.name: f for f in fields(SimConfig)}
_TUPLE_ITEM = {
    'leaf_capacity': int, 'weights': float, 'hidden': int, 'group_sizes': int, 'popularity': float,
    'markov_mu': float, 'markov_sigma': float, 'markov_r0': int, 'trace': str,
}


def _convert(key, raw):
    if key not in _FIELDS:
        raise ConfigError(key, 'unknown setting')
    kind = _FIELDS[key].type
    try:
        if key in _TUPLE_ITEM:
            items = [x.strip() for x in raw.split(',') if x.strip()]
            return tuple(_TUPLE_ITEM[key](x) for x in items)
        if kind in ('int', int):
            return int(raw)
        if kind in ('float', float):
            return float(raw)
        if kind in ('bool', bool):
            low = raw.lower()
            if low not in ('true', 'false', '1', '0', 'yes', 'no'):
                raise ValueError(raw)
            return low in ('true', '1', 'yes')
        return raw
    except ValueError:
        raise ConfigError(key, f'cannot parse {raw!r}') from None


def parse_config(text, base=None):
    """Parse configuration text on top of ``base`` (defaults if omitted)."""
    changes = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f'line {lineno}', 'expected key = value')
        key, raw = (part.strip() for part in line.split('=', 1))
        changes[key] = _convert(key, raw)
    base = base or SimConfig()
    return dataclasses.replace(base, **changes)


def load_config(path, base=None, env=None):
    """Read a config file; ``CACHENET_SEED`` in ``env`` overrides the seed."""
    try:
        with open(path, encoding='utf-8') as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError('config', f'cannot read {path}: {exc.strerror}') from None
    return apply_env(parse_config(text, base), env)


def apply_env(cfg, env=None):
    env = os.environ if env is None else env
    if env.get(SEED_ENV):
        try:
            seed = int(env[SEED_ENV])
        except ValueError:
            raise ConfigError('seed', f'{SEED_ENV} is not an integer') from None
        cfg = cfg.replace(seed=seed)
    return cfg


def dump_config(cfg):
    """Render ``cfg`` in the file format (round-trips through parse)."""
    lines = []
    for f in fields(SimConfig):
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            value = ', '.join(repr(v) if isinstance(v, float) else str(v) for v in value)
        lines.append(f'{f.name} = {value}')
    return '\n'.join(lines) + '\n'
