"""Two-timescale simulation harness: configuration, world, metrics and
experiment drivers."""
from .config import ConfigError, SimConfig, dump_config, load_config, parse_config
from .experiment import compare_policies, preset_configs, run_experiment, run_preset, sweep
from .metrics import MetricsLog, ecdf, emit_cdf_csv, emit_csv, emit_trace_csv
from .world import World

__all__ = ['ConfigError', 'SimConfig', 'dump_config', 'load_config', 'parse_config', 'compare_policies',
           'preset_configs', 'run_experiment', 'run_preset', 'sweep', 'MetricsLog', 'ecdf', 'emit_cdf_csv',
           'emit_csv', 'emit_trace_csv', 'World']
