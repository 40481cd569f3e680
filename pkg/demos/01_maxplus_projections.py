"""Tour of the max-plus algebra layer on a toy state space.

Dictionaries of basis functions act like matrices over the semiring
(R u {-inf}, max, +); residuation gives the best coefficients below a
target, and the two induced projections bracket any function from below
and above.
"""

import numpy as np

from maxplus_mdp import (Dictionary, eval_dictionary, project_lower, project_upper,
                         residuate, transpose_apply, transpose_residuate)

NEG_INF = float("-inf")

# Three states, two indicator atoms: {0, 1} and {2}.
W = Dictionary(np.array([[0.0, 0.0, NEG_INF],
                         [NEG_INF, NEG_INF, 0.0]]))
V = np.array([1.0, 3.0, 2.0])

print("target V              :", V)

# A max-plus combination: each state takes the best coefficient + atom value.
alpha = np.array([1.0, 2.0])
print("W alpha for alpha=[1,2]:", eval_dictionary(W, alpha))

# Residuation: the largest coefficients whose combination stays below V.
best = residuate(W, V)
print("residuated coefficients:", best)

# The lower projection under-approximates V, the upper one over-approximates.
low = project_lower(W, V)
up = project_upper(W, V)
print("lower projection       :", low, "(per-cell min)")
print("upper projection       :", up, "(per-cell max)")
assert (low <= V).all() and (up >= V).all()

# Projections are idempotent: applying them twice changes nothing.
assert np.array_equal(project_lower(W, low), low)
assert np.array_equal(project_upper(W, up), up)

# Galois connection: W alpha <= V exactly when alpha <= residuate(W, V).
for trial_alpha in ([0.5, 1.0], [1.0, 2.0], [2.0, 2.0]):
    below = (eval_dictionary(W, trial_alpha) <= V + 1e-12).all()
    dominated = (np.asarray(trial_alpha) <= best + 1e-12).all()
    print(f"alpha={trial_alpha}: combination below V? {below}; alpha below W+V? {dominated}")
    assert below == dominated

# Duality: the upper machinery is the lower machinery on negated data.
beta = transpose_apply(W, V)
print("pairing Z^T V          :", beta)
assert np.allclose(transpose_residuate(W, beta), -eval_dictionary(W, -beta))
print("duality Z^T+ beta == -Z(-beta) verified")
