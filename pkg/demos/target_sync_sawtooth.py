"""Watch the online network drift from its target copy and snap back.

Runs the ``fig5`` preset (one cache, 50 files, target copied every 10
intervals) and prints the parameter distance around the first few syncs.
Between syncs the distance grows with every SGD step; at each sync it is
exactly zero.

    python3 demos/target_sync_sawtooth.py
"""
from cachenet.sim.experiment import run_preset

log = run_preset('fig5', seed=0)['fig5']
trace = dict(log.traces['theta'])
for tau in range(1, 41):
    bar = '#' * int(round(trace[tau] / max(trace.values()) * 50))
    mark = '  <- sync' if tau % 10 == 0 else ''
    print(f'{tau:3d} {trace[tau]:.3e} {bar}{mark}')
