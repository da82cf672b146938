"""Tabular Q-learning against the exact dynamic-programming answer.

On a random three-state, two-action MDP, value iteration gives the optimal
Q-table. Q-learning with visit-count step sizes approaches it slowly: the
printed sup-norm error shrinks with the number of steps, but only at a
rate that is sublinear in the number of visits.

    python3 demos/tabular_oracle.py
"""
import numpy as np

from cachenet.tabular import (ExplorationSchedule, greedy_policy, policy_evaluation, q_learning,
                              random_tiny_mdp, value_iteration)

mdp = random_tiny_mdp(np.random.default_rng(0), states=3, actions=2, gamma=0.8)
q_star = value_iteration(mdp, tol=1e-13)
print('optimal Q:\n', np.round(q_star.values, 4))
print('greedy policy', greedy_policy(q_star), 'value', np.round(policy_evaluation(mdp, greedy_policy(q_star)), 4))
for mode in ('glie', 'constant'):
    for steps in (1_000, 10_000, 100_000):
        table, visits = q_learning(mdp, steps, ExplorationSchedule(mode, 0.4), np.random.default_rng(1))
        err = np.max(np.abs(table.values - q_star.values))
        print(f'{mode:8s} {steps:7d} steps: sup-norm error {err:.3f}, fewest visits {visits.min()}')
