"""Per-interval metrics and their CSV files.

Three CSV schemas are produced, all with floats printed to 17 significant
digits so that a value survives a text round trip exactly:

* ``tau,policy,total_cost,reduced_cost``, one row per interval and policy,
  ordered by interval and then by policy name;
* ``step,distance`` for a parameter-distance trace;
* ``reduced_cost,cum_prob`` for an empirical CDF.
"""
import csv
from collections import defaultdict

import numpy as np

from ..core import InvalidInputError

__all__ = ['OutputError', 'MetricsLog', 'fmt', 'ecdf', 'emit_csv', 'emit_trace_csv', 'emit_cdf_csv',
           'read_metrics_csv']

HEADER = ('tau', 'policy', 'total_cost', 'reduced_cost')


class OutputError(InvalidInputError):
    """Writing an output file failed; ``path`` names it."""

    def __init__(self, path, message):
        super().__init__(f'{path}: {message}')
        self.key = 'output'
        self.path = str(path)


def fmt(x):
    """Canonical float text: 17 significant digits."""
    return '%.17g' % float(x)


class MetricsLog:
    """Rows keyed by ``(tau, policy)`` plus optional traces and CDF samples.

    Attributes
    ----------
    traces : dict
        ``name -> list of (step, distance)``.
    cdf : dict
        ``policy -> list of reduced-cost samples``.
    """

    def __init__(self):
        self._rows = {}
        self.traces = defaultdict(list)
        self.cdf = defaultdict(list)

    def add_row(self, tau, policy, total_cost, reduced_cost):
        key = (int(tau), str(policy))
        if key in self._rows:
            raise InvalidInputError(f'duplicate metrics row for interval {tau}, policy {policy}')
        self._rows[key] = (float(total_cost), float(reduced_cost))

    def rows(self):
        """``(tau, policy, total_cost, reduced_cost)`` in canonical order."""
        return [(tau, pol) + self._rows[(tau, pol)] for tau, pol in sorted(self._rows)]

    def __len__(self):
        return len(self._rows)

    @property
    def policies(self):
        return sorted({pol for _, pol in self._rows})

    def series(self, policy, column='reduced_cost'):
        """One column for one policy, in interval order."""
        idx = HEADER.index(column) - 2
        return np.array([v[idx] for (_, pol), v in sorted(self._rows.items()) if pol == policy])

    def merge(self, other):
        for (tau, pol), (total, red) in other._rows.items():
            self.add_row(tau, pol, total, red)
        for name, trace in other.traces.items():
            self.traces[name].extend(trace)
        for pol, samples in other.cdf.items():
            self.cdf[pol].extend(samples)
        return self


def ecdf(samples):
    """Empirical CDF at the distinct sample values.

    Returns
    -------
    (numpy.ndarray, numpy.ndarray)
        Sorted distinct values and the fraction of samples at or below each;
        the last fraction is exactly 1.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        return x, x.copy()
    # index of the last occurrence of each distinct value
    last = np.flatnonzero(np.append(x[1:] != x[:-1], True))
    return x[last], (last + 1) / x.size


def _write(path, header, rows):
    try:
        with open(path, 'w', newline='', encoding='utf-8') as fh:
            w = csv.writer(fh, lineterminator='\n')
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OutputError(path, exc.strerror or 'cannot write') from None


def emit_csv(log, path):
    """Write the per-interval table of ``log`` to ``path``."""
    _write(path, HEADER, [(tau, pol, fmt(tot), fmt(red)) for tau, pol, tot, red in log.rows()])


def emit_trace_csv(trace, path):
    _write(path, ('step', 'distance'), [(int(step), fmt(d)) for step, d in trace])


def emit_cdf_csv(samples, path):
    x, p = ecdf(samples)
    _write(path, ('reduced_cost', 'cum_prob'), [(fmt(a), fmt(b)) for a, b in zip(x, p)])


def read_metrics_csv(path):
    """Parse a per-interval table back into a :class:`MetricsLog`."""
    log = MetricsLog()
    with open(path, newline='', encoding='utf-8') as fh:
        reader = csv.reader(fh)
        if tuple(next(reader, ())) != HEADER:
            raise InvalidInputError(f'{path}: unexpected header')
        for tau, pol, tot, red in reader:
            log.add_row(int(tau), pol, float(tot), float(red))
    return log
