"""Linear measurement operators and a Monte-Carlo RIP probe.

An operator maps an ``n1 x n2`` matrix to a vector of ``m`` inner products
``<A_i, M>``. Two kinds are provided:

* ``gaussian``: ``m`` dense sensing matrices with i.i.d. ``N(0, 1/m)``
  entries, materialized once per ``(n1, n2, m, seed)`` and cached;
* ``exact``: the identity embedding ``M -> vec(M)``, the noise-free limit
  in which ``A* A`` is the identity.

With the ``1/m`` variance the map is already isotropic in expectation,
``E ||A(M)||^2 = ||M||_F^2``, so the back-projection ``A*(y)`` is used as
the spectral surrogate without any further rescaling.
"""

from functools import lru_cache

import numpy as np

from .errors import DimensionError

__all__ = [
    "SensingOperator",
    "gaussian_operator",
    "exact_operator",
    "apply",
    "adjoint",
    "rip_deviation",
    "estimate_rip",
    "random_low_rank",
]


@lru_cache(maxsize=4)
def _gaussian_ensemble(n1, n2, m, seed):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n1 * n2))
    A /= np.sqrt(m)
    A.setflags(write=False)
    return A


class SensingOperator:
    """A linear map ``R^{n1 x n2} -> R^m`` and its adjoint.

    Use :func:`gaussian_operator`, :func:`exact_operator` or
    :meth:`from_matrices` rather than calling the constructor directly.
    Instances are immutable.
    """

    __slots__ = ("kind", "n1", "n2", "m", "seed", "_flat")

    def __init__(self, kind, n1, n2, m, seed=None, flat=None):
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "n1", int(n1))
        object.__setattr__(self, "n2", int(n2))
        object.__setattr__(self, "m", int(m))
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "_flat", flat)

    def __setattr__(self, name, value):
        raise AttributeError("SensingOperator is immutable")

    def __repr__(self):
        return (f"SensingOperator(kind={self.kind!r}, n1={self.n1}, n2={self.n2}, "
                f"m={self.m}, seed={self.seed!r})")

    @classmethod
    def from_matrices(cls, A):
        """Wrap an explicit ``(m, n1, n2)`` stack of sensing matrices."""
        A = np.array(A, dtype=float)
        if A.ndim != 3:
            raise DimensionError("expected an (m, n1, n2) array of sensing matrices")
        m, n1, n2 = A.shape
        flat = A.reshape(m, n1 * n2)
        flat.setflags(write=False)
        return cls("custom", n1, n2, m, None, flat)

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def matrices(self):
        """The sensing matrices as an ``(m, n1, n2)`` view, or None for ``exact``."""
        if self._flat is None:
            return None
        return self._flat.reshape(self.m, self.n1, self.n2)

    def apply(self, M):
        M = np.asarray(M, dtype=float)
        if M.shape != self.shape:
            raise DimensionError(f"expected a {self.shape} matrix, got {M.shape}")
        if self._flat is None:
            return M.ravel().copy()
        return self._flat @ M.ravel()

    def adjoint(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape != (self.m,):
            raise DimensionError(f"expected a length-{self.m} vector, got shape {y.shape}")
        if self._flat is None:
            return y.reshape(self.shape).copy()
        return (y @ self._flat).reshape(self.shape)

    def normal(self, M):
        """``A*(A(M))``."""
        return self.adjoint(self.apply(M))

    def surrogate(self, y):
        """Back-projection used by spectral initialization."""
        return self.adjoint(y)

    def to_dict(self):
        if self.kind == "custom":
            raise ValueError("an explicit ensemble has no compact serialization")
        return {"kind": self.kind, "m": self.m, "n1": self.n1, "n2": self.n2,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind == "gaussian":
            return gaussian_operator(d["n1"], d["n2"], d["m"], d["seed"])
        if kind == "exact":
            return exact_operator(d["n1"], d["n2"])
        raise ValueError(f"unknown operator kind {kind!r}")


def gaussian_operator(n1, n2, m, seed):
    n1, n2, m, seed = int(n1), int(n2), int(m), int(seed)
    if min(n1, n2, m) < 1:
        raise DimensionError("n1, n2 and m must be positive")
    return SensingOperator("gaussian", n1, n2, m, seed, _gaussian_ensemble(n1, n2, m, seed))


def exact_operator(n1, n2):
    n1, n2 = int(n1), int(n2)
    if min(n1, n2) < 1:
        raise DimensionError("n1 and n2 must be positive")
    return SensingOperator("exact", n1, n2, n1 * n2)


def apply(op, M):
    return op.apply(M)


def adjoint(op, y):
    return op.adjoint(y)


def _inner(A, B):
    return float(np.dot(np.ravel(A), np.ravel(B)))


def rip_deviation(op, M1, M2):
    """Normalized inner-product distortion ``|<A M1, A M2> - <M1, M2>| / (|M1| |M2|)``."""
    n1 = np.linalg.norm(M1)
    n2 = np.linalg.norm(M2)
    if n1 == 0 or n2 == 0:
        raise ValueError("rip_deviation needs nonzero matrices")
    dev = _inner(op.apply(M1), op.apply(M2)) - _inner(M1, M2)
    return abs(dev) / (n1 * n2)


def random_low_rank(rng, n1, n2, r):
    """Gaussian ``n1 x r`` times ``r x n2`` product scaled to unit Frobenius norm."""
    M = rng.standard_normal((n1, r)) @ rng.standard_normal((r, n2))
    return M / np.linalg.norm(M)


def estimate_rip(op, r, trials, seed):
    """Monte-Carlo lower bound on the rank-``r`` restricted isometry constant.

    Returns ``max |‖A(M)‖² - 1|`` over ``trials`` random unit-norm rank-``r``
    matrices. Trials are drawn sequentially from one stream, so a run with
    more trials extends the sample of a shorter run with the same seed. This
    is an estimate, never a certificate: the true constant can only be larger.
    """
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 1 <= r <= min(op.n1, op.n2):
        raise DimensionError(f"rank {r} out of range for a {op.shape} operator")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        M = random_low_rank(rng, op.n1, op.n2, r)
        a = op.apply(M)
        worst = max(worst, abs(_inner(a, a) - _inner(M, M)))
    return worst
