import subprocess
import sys

import pytest

from cachenet.cli import main

SMALL = 'files = 6\nleaves = 2\nparent_capacity = 2\nleaf_capacity = 1\nhorizon = 8\nhidden = 6\nintensity = 10\n'


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / 'sim.cfg'
    path.write_text(SMALL)
    return path


def test_run_writes_csvs(tmp_path, cfg_file, capsys):
    out = tmp_path / 'out'
    assert main(['run', '--config', str(cfg_file), '--out', str(out)]) == 0
    assert (out / 'metrics.csv').read_text().startswith('tau,policy,total_cost,reduced_cost\n')
    assert (out / 'theta_trace.csv').exists()
    assert 'dqn: mean reduced cost' in capsys.readouterr().out


def test_compare_and_quiet(tmp_path, cfg_file, capsys):
    out = tmp_path / 'out'
    assert main(['compare', '--config', str(cfg_file), '--out', str(out), '--policies', 'lru,optimal',
                 '--quiet']) == 0
    assert capsys.readouterr().out == ''
    lines = (out / 'metrics.csv').read_text().splitlines()
    assert len(lines) == 1 + 2 * 8


def test_sweep(tmp_path, cfg_file):
    out = tmp_path / 'out'
    assert main(['sweep', '--config', str(cfg_file), '--out', str(out), '--key', 'parent_capacity',
                 '--values', '1,3', '--policies', 'lru', '--quiet']) == 0
    assert (out / 'parent_capacity=1' / 'metrics.csv').exists()
    assert (out / 'parent_capacity=3' / 'metrics.csv').exists()


def _seeded_metrics(tmp_path, cfg_file, monkeypatch, env_seed=None, flag=None):
    if env_seed is None:
        monkeypatch.delenv('CACHENET_SEED', raising=False)
    else:
        monkeypatch.setenv('CACHENET_SEED', env_seed)
    out = tmp_path / f'out_{env_seed}_{flag}'
    args = ['run', '--config', str(cfg_file), '--out', str(out), '--quiet']
    if flag is not None:
        args += ['--seed', flag]
    assert main(args) == 0
    return (out / 'metrics.csv').read_bytes()


def test_seed_precedence(tmp_path, cfg_file, monkeypatch):
    base = _seeded_metrics(tmp_path, cfg_file, monkeypatch)
    env = _seeded_metrics(tmp_path, cfg_file, monkeypatch, env_seed='5')
    flag = _seeded_metrics(tmp_path, cfg_file, monkeypatch, env_seed='5', flag='0')
    assert env != base
    assert flag == base


@pytest.mark.parametrize('args, key', [
    (['run', '--config', '/nonexistent.cfg'], 'config'),
    (['bogus'], 'usage'),
    (['run', '--seed', 'abc'], 'usage'),
    (['run', '--policies', 'lru,fifo'], 'usage'),
    (['compare', '--policies', 'lru'], 'policies'),
])
def test_errors(args, key, tmp_path, capsys):
    assert main(args + ['--out', str(tmp_path)] if args[0] != 'bogus' else args) == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith(f'error_key={key} ')


def test_bad_config_value(tmp_path, capsys):
    path = tmp_path / 'bad.cfg'
    path.write_text('leaf_capacity = 0\n')
    assert main(['run', '--config', str(path), '--out', str(tmp_path)]) == 2
    assert capsys.readouterr().err.startswith('error_key=leaf_capacity ')


def test_module_entry_point(tmp_path, cfg_file):
    proc = subprocess.run([sys.executable, '-m', 'cachenet', 'run', '--config', str(cfg_file),
                           '--out', str(tmp_path / 'o'), '--quiet'], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, '-m', 'cachenet', 'preset', 'fig99'], capture_output=True, text=True)
    assert proc.returncode != 0
    assert proc.stderr.startswith('error_key=')
