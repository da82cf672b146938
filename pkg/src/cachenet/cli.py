"""Command line entry point.

::

    cachenet run --config sim.cfg --out results/
    cachenet compare --config sim.cfg --policies optimal,dqn,lru,lfu,fifo
    cachenet sweep --config sim.cfg --key sync_period --values 2,3,5,20
    cachenet preset fig5 --seed 3

The seed comes from the config file, is overridden by ``CACHENET_SEED`` and
finally by ``--seed``. On failure a single ``error_key=...`` line goes to
stderr and the exit status is nonzero.
"""
import argparse
import os
import sys

import numpy as np

from .core import InvalidInputError
from .sim.config import SimConfig, apply_env, load_config
from .sim.experiment import PRESETS, compare_policies, run_experiment, run_preset, sweep, write_outputs

__all__ = ['main', 'build_parser']


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InvalidInputError(f'usage: {message}')


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', metavar='PATH', help='key = value configuration file')
    common.add_argument('--seed', type=int, metavar='U64', help='master seed (overrides config and env)')
    common.add_argument('--out', metavar='DIR', default='out', help='output directory (default: out)')
    common.add_argument('--policies', metavar='CSV-LIST', help='comma separated parent policies')
    common.add_argument('--quiet', action='store_true', help='print nothing on success')

    parser = _Parser(prog='cachenet', description='Hierarchical caching simulator.')
    sub = parser.add_subparsers(dest='command', required=True, parser_class=_Parser)
    sub.add_parser('run', parents=[common], help='run one configuration')
    sub.add_parser('compare', parents=[common], help='run several parent policies on paired demand')
    p = sub.add_parser('sweep', parents=[common], help='vary one setting over a list of values')
    p.add_argument('--key', required=True, help='setting to vary')
    p.add_argument('--values', required=True, metavar='CSV-LIST', help='values in config syntax')
    p = sub.add_parser('preset', parents=[common], help='run a named desk-scale experiment')
    p.add_argument('name', choices=PRESETS)
    return parser


def _config(args):
    cfg = load_config(args.config) if args.config else apply_env(SimConfig())
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    return cfg


def _policies(args, cfg):
    if not args.policies:
        return [cfg.parent_policy]
    return [p.strip() for p in args.policies.split(',') if p.strip()]


def _summary(log, label=''):
    lines = []
    for pol in log.policies:
        red = log.series(pol)
        lines.append(f'{label}{pol}: mean reduced cost {np.mean(red):.4f} over {red.size} intervals')
    return lines


def _seed_for_preset(args):
    if args.seed is not None:
        return args.seed
    if args.config:
        return load_config(args.config).seed
    return apply_env(SimConfig()).seed


def _dispatch(args):
    lines = []
    if args.command == 'preset':
        results = run_preset(args.name, _seed_for_preset(args), args.out)
        for label, log in results.items():
            lines += _summary(log, f'{label} ')
        return lines
    cfg = _config(args)
    policies = _policies(args, cfg)
    if args.command == 'run':
        if len(policies) != 1:
            raise InvalidInputError('usage: run takes a single policy; use compare for several')
        log = run_experiment(cfg, policies[0])
        write_outputs(log, args.out)
        return _summary(log)
    if args.command == 'compare':
        log = compare_policies(cfg, policies)
        write_outputs(log, args.out)
        return _summary(log)
    values = [v.strip() for v in args.values.split(',') if v.strip()]
    for value, log in sweep(cfg, args.key, values, policies):
        label = f'{args.key}={value if not isinstance(value, tuple) else "_".join(map(str, value))}'
        write_outputs(log, os.path.join(args.out, label))
        lines += _summary(log, f'{label} ')
    return lines


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        lines = _dispatch(args)
    except InvalidInputError as exc:
        key = getattr(exc, 'key', None) or ('usage' if str(exc).startswith('usage:') else 'input')
        message = str(exc).replace('\n', ' ')
        print(f'error_key={key} message={message}', file=sys.stderr)
        return 2
    except OSError as exc:
        print(f'error_key=io message={exc}'.replace('\n', ' '), file=sys.stderr)
        return 2
    if not args.quiet:
        print('\n'.join(lines))
    return 0


if __name__ == '__main__':
    sys.exit(main())
