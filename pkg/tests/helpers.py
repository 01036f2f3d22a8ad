import numpy as np

from lrsense import FactorPair


def hidden_pair(gt, rng, noise, lo=0.5, hi=1.5):
    """Noisy planted factors behind a random invertible transform P."""
    r = gt.r
    U = np.linalg.qr(rng.standard_normal((r, r)))[0]
    V = np.linalg.qr(rng.standard_normal((r, r)))[0]
    P = (U * rng.uniform(lo, hi, r)) @ V.T
    X = (gt.Xstar + noise * rng.standard_normal(gt.Xstar.shape)) @ np.linalg.inv(P)
    Y = (gt.Ystar + noise * rng.standard_normal(gt.Ystar.shape)) @ P.T
    return FactorPair(X, Y), P
