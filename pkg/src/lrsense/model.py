"""Factor pairs, planted low-rank instances and related helpers."""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

__all__ = [
    "FactorPair",
    "GroundTruth",
    "make_ground_truth",
    "stack",
    "balancedness_gap",
    "random_orthonormal",
]


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FactorPair:
    """A pair of factors ``(X, Y)`` representing the matrix ``X @ Y.T``.

    ``X`` is ``n1 x r`` and ``Y`` is ``n2 x r``. Both are copied into
    read-only float arrays on construction.
    """

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        Y = np.asarray(self.Y, dtype=float)
        if X.ndim != 2 or Y.ndim != 2:
            raise DimensionError("factors must be 2-d arrays")
        if X.shape[1] != Y.shape[1] or X.shape[1] < 1:
            raise DimensionError(
                f"factors need a common column count r >= 1, got {X.shape} and {Y.shape}"
            )
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("factor entries must be finite")
        object.__setattr__(self, "X", _readonly(X))
        object.__setattr__(self, "Y", _readonly(Y))

    @property
    def n1(self):
        return self.X.shape[0]

    @property
    def n2(self):
        return self.Y.shape[0]

    @property
    def r(self):
        return self.X.shape[1]

    def product(self):
        return self.X @ self.Y.T

    def stack(self):
        return stack(self)

    @classmethod
    def from_stacked(cls, Z, n1):
        """Split a stacked ``(n1 + n2) x r`` matrix back into a pair."""
        Z = np.asarray(Z, dtype=float)
        if not 0 < n1 < Z.shape[0]:
            raise DimensionError(f"cannot split {Z.shape[0]} rows at n1={n1}")
        return cls(Z[:n1], Z[n1:])

    def __eq__(self, other):
        if not isinstance(other, FactorPair):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.Y, other.Y)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """A planted rank-``r`` matrix together with its balanced factors.

    ``Xstar = Ustar * sqrt(sigma)`` and ``Ystar = Vstar * sqrt(sigma)``, so
    both factors have Gram matrix ``diag(sigma)``. ``Mstar`` is computed as
    ``Xstar @ Ystar.T``, so the planted pair reproduces it bit for bit.
    """

    Ustar: np.ndarray
    Vstar: np.ndarray
    sigma: np.ndarray
    Xstar: np.ndarray
    Ystar: np.ndarray
    Mstar: np.ndarray
    sigma_max: float
    sigma_min: float
    kappa: float

    @classmethod
    def from_svd(cls, U, sigma, V):
        U = np.asarray(U, dtype=float)
        V = np.asarray(V, dtype=float)
        sigma = np.asarray(sigma, dtype=float)
        if sigma.ndim != 1 or U.shape[1] != sigma.size or V.shape[1] != sigma.size:
            raise DimensionError("U, sigma and V disagree on the rank")
        if np.any(sigma <= 0) or np.any(np.diff(sigma) > 0):
            raise ValueError("sigma must be positive and non-increasing")
        root = np.sqrt(sigma)
        Xstar = U * root
        Ystar = V * root
        return cls(
            Ustar=_readonly(U),
            Vstar=_readonly(V),
            sigma=_readonly(sigma),
            Xstar=_readonly(Xstar),
            Ystar=_readonly(Ystar),
            Mstar=_readonly(Xstar @ Ystar.T),
            sigma_max=float(sigma[0]),
            sigma_min=float(sigma[-1]),
            kappa=float(sigma[0] / sigma[-1]),
        )

    @property
    def n1(self):
        return self.Ustar.shape[0]

    @property
    def n2(self):
        return self.Vstar.shape[0]

    @property
    def r(self):
        return self.sigma.size

    @property
    def factors(self):
        return FactorPair(self.Xstar, self.Ystar)

    def stack(self):
        return np.vstack([self.Xstar, self.Ystar])


def random_orthonormal(rng, n, r):
    """Orthonormal ``n x r`` basis from the QR factorization of a Gaussian.

    Column signs are fixed so that ``R`` has a positive diagonal, which makes
    the result a deterministic function of the Gaussian draw.
    """
    G = rng.standard_normal((n, r))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def make_ground_truth(n1, n2, r, kappa, seed):
    """Draw a planted rank-``r`` instance with condition number ``kappa``.

    Singular values are log-spaced from ``kappa`` down to 1. The singular
    bases are orthonormalized Gaussians; ``U`` and ``V`` use independent
    child streams of ``seed``.

    Raises
    ------
    DimensionError
        If ``r`` is not in ``1..min(n1, n2)``.
    ValueError
        If ``kappa < 1``, or ``r == 1`` with ``kappa != 1`` (a single
        singular value cannot have a spread).
    """
    n1, n2, r = int(n1), int(n2), int(r)
    if n1 < 1 or n2 < 1 or r < 1 or r > min(n1, n2):
        raise DimensionError(f"need 1 <= r <= min(n1, n2), got n1={n1}, n2={n2}, r={r}")
    kappa = float(kappa)
    if not kappa >= 1.0:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if r == 1 and kappa != 1.0:
        raise ValueError("a rank-1 instance has kappa = 1")
    if r == 1:
        sigma = np.ones(1)
    else:
        sigma = np.logspace(np.log10(kappa), 0.0, r)
        sigma[0], sigma[-1] = kappa, 1.0
    ss_u, ss_v = np.random.SeedSequence(seed).spawn(2)
    U = random_orthonormal(np.random.default_rng(ss_u), n1, r)
    V = random_orthonormal(np.random.default_rng(ss_v), n2, r)
    return GroundTruth.from_svd(U, sigma, V)


def stack(fp):
    """Vertically stack ``X`` over ``Y``."""
    return np.vstack([fp.X, fp.Y])


def balancedness_gap(fp):
    """Frobenius norm of ``X.T @ X - Y.T @ Y``."""
    return float(np.linalg.norm(fp.X.T @ fp.X - fp.Y.T @ fp.Y))
