"""Hierarchical caching simulator with a deep-Q parent cache.

A parent cache serves the misses of several leaf caches. Leaves decide
every fast slot, the parent once per slow interval, and the parent may
learn its placement with a deep Q-network.
"""
from .core import InvalidInputError, SeededRng, top_m_action
from .costs import leaf_cost, nocache_cost, parent_cost, parent_state, reduced_cost
from .agent import AgentConfig, DQNAgent
from .policies import make_policy

__version__ = '0.1.0'

__all__ = ['InvalidInputError', 'SeededRng', 'top_m_action', 'leaf_cost', 'nocache_cost', 'parent_cost',
           'parent_state', 'reduced_cost', 'AgentConfig', 'DQNAgent', 'make_policy']
