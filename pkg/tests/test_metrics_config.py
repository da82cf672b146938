import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cachenet.core import InvalidInputError
from cachenet.sim import SimConfig, run_experiment
from cachenet.sim.config import ConfigError, apply_env, dump_config, load_config, parse_config
from cachenet.sim.metrics import (MetricsLog, OutputError, ecdf, emit_cdf_csv, emit_csv, emit_trace_csv,
                                  read_metrics_csv)

GOLDEN = Path(__file__).parent / 'golden'
GOLDEN_CONFIG = dict(files=6, leaves=2, parent_capacity=2, leaf_capacity=(1,), slots=2, horizon=12,
                     parent_policy='dqn', leaf_policy='window_pop', hidden=(6,), intensity=10.0, seed=11)


def test_empty_log_is_header_only(tmp_path):
    path = tmp_path / 'm.csv'
    emit_csv(MetricsLog(), path)
    assert path.read_text() == 'tau,policy,total_cost,reduced_cost\n'


def test_one_row_round_trip(tmp_path):
    log = MetricsLog()
    log.add_row(1, 'lru', 0.1, 1 / 3)
    path = tmp_path / 'm.csv'
    emit_csv(log, path)
    assert len(path.read_text().splitlines()) == 2
    back = read_metrics_csv(path)
    assert back.rows() == log.rows()


@given(st.lists(st.tuples(st.integers(1, 50), st.sampled_from(['a', 'b', 'c']),
                          st.floats(-1e9, 1e9, allow_nan=False), st.floats(-1e9, 1e9, allow_nan=False)),
                unique_by=lambda r: r[:2], max_size=30))
def test_rows_round_trip_exactly(rows):
    import tempfile
    log = MetricsLog()
    for r in rows:
        log.add_row(*r)
    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, 'm.csv')
        emit_csv(log, path)
        assert read_metrics_csv(path).rows() == log.rows()
    assert [r[:2] for r in log.rows()] == sorted(r[:2] for r in rows)


def test_duplicate_row_rejected():
    log = MetricsLog()
    log.add_row(1, 'lru', 0, 0)
    with pytest.raises(InvalidInputError):
        log.add_row(1, 'lru', 1, 1)


def test_unwritable_path(tmp_path):
    with pytest.raises(OutputError) as exc:
        emit_csv(MetricsLog(), tmp_path / 'missing' / 'm.csv')
    assert exc.value.key == 'output'
    assert 'missing' in exc.value.path


@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=1, max_size=50))
def test_ecdf_monotone_and_ends_at_one(samples):
    x, p = ecdf(samples)
    assert np.all(np.diff(x) > 0)
    assert np.all(np.diff(p) > 0)
    assert p[-1] == 1.0
    for value, frac in zip(x, p):
        assert frac == np.mean(np.asarray(samples) <= value)


def test_trace_and_cdf_files(tmp_path):
    emit_trace_csv([(1, 0.5), (2, 0.0)], tmp_path / 't.csv')
    assert (tmp_path / 't.csv').read_text() == 'step,distance\n1,0.5\n2,0\n'
    emit_cdf_csv([2.0, 1.0, 2.0, 3.0], tmp_path / 'c.csv')
    assert (tmp_path / 'c.csv').read_text() == 'reduced_cost,cum_prob\n1,0.25\n2,0.75\n3,1\n'


def test_golden_run(tmp_path):
    log = run_experiment(SimConfig(**GOLDEN_CONFIG))
    emit_csv(log, tmp_path / 'metrics.csv')
    emit_trace_csv(log.traces['theta'], tmp_path / 'trace.csv')
    assert (tmp_path / 'metrics.csv').read_bytes() == (GOLDEN / 'metrics.csv').read_bytes()
    assert (tmp_path / 'trace.csv').read_bytes() == (GOLDEN / 'trace.csv').read_bytes()


def test_config_round_trip():
    cfg = SimConfig(files=20, leaves=3, weights=(1.0, 0.5, 0.25), hidden=(10, 10), beta=0.1 + 0.2,
                    leaf_capacity=(2, 3, 4), markov_mu=(0.45,), audit=True, request_order='shuffled')
    assert parse_config(dump_config(cfg)) == cfg


def test_config_text_format():
    cfg = parse_config('# comment\nfiles = 12   # inline\n\nhidden = 8, 8\nparent_policy = lru\n')
    assert (cfg.files, cfg.hidden, cfg.parent_policy) == (12, (8, 8), 'lru')


@pytest.mark.parametrize('text, key', [
    ('colour = red\n', 'colour'),
    ('files = many\n', 'files'),
    ('files\n', 'line 1'),
    ('gamma = 1.5\n', 'gamma'),
    ('leaves = 2\nweights = 1, 2, 3\n', 'weights'),
    ('groups = 3\ngroup_sizes = 10, 10\n', 'group_sizes'),
])
def test_config_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key


def test_seed_env_override(tmp_path):
    path = tmp_path / 'c.cfg'
    path.write_text('seed = 4\n')
    assert load_config(path, env={}).seed == 4
    assert load_config(path, env={'CACHENET_SEED': '9'}).seed == 9
    with pytest.raises(ConfigError):
        apply_env(SimConfig(), {'CACHENET_SEED': 'x'})
    with pytest.raises(ConfigError) as exc:
        load_config(tmp_path / 'nope.cfg')
    assert exc.value.key == 'config'
