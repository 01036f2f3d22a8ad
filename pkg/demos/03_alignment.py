# %% [markdown]
# # Measuring distance modulo the factorization ambiguity
#
# `(X P, Y P^{-T})` represents the same matrix for every invertible `P`.
# Procrustes only removes rotations; the invertible alignment removes all of it.

# %%
import numpy as np

from lrsense import FactorPair, dist, invertible_align, make_ground_truth, procrustes_distance

truth = make_ground_truth(30, 20, 2, kappa=3.0, seed=4)
P = np.array([[2.0, 0.3], [0.0, 0.5]])
hidden = FactorPair(truth.Xstar @ np.linalg.inv(P), truth.Ystar @ P.T)

print("procrustes distance:", procrustes_distance(hidden, truth))
print("invertible distance:", dist(hidden, truth))

# %%
res = invertible_align(hidden, truth, tol=1e-12)
print("recovered transform:\n", res.Q)
print("iterations:", res.iterations, " first-order residual:", res.foc_residual)
