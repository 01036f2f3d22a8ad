"""Distances between factor pairs modulo their factorization ambiguity.

Two notions are provided. The orthogonal Procrustes alignment solves

    min_{R orthonormal} ||Z R - Zstar||_F

in closed form. The invertible alignment solves

    min_{P invertible} g(P) = ||X P - Xstar||_F^2 + ||Y P^{-T} - Ystar||_F^2,

which accounts for every transform leaving ``X Y^T`` unchanged. ``g`` is
not convex; the solver is a local method started from the Procrustes
rotation and reports the stationary point it reaches. Near the planted
factors the minimizer exists and lies close to that rotation, which is the
regime in which the reported value is the true distance.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, SingularAlignmentError
from .model import FactorPair, GroundTruth

__all__ = [
    "AlignmentResult",
    "as_pair",
    "procrustes_align",
    "procrustes_distance",
    "alignment_objective",
    "align_gradient",
    "foc_residual",
    "invertible_align",
    "dist",
]

SINGULAR_RATIO = 1e-12
DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 500


@dataclass(frozen=True)
class AlignmentResult:
    """Outcome of :func:`invertible_align`.

    ``foc_residual`` is the norm of ``Xt^T (Xt - Xstar) - (Yt - Ystar)^T Yt``
    with ``Xt = X Q`` and ``Yt = Y Q^{-T}``; it vanishes at any stationary
    point of ``g``.
    """

    Q: np.ndarray
    g_value: float
    foc_residual: float
    iterations: int
    converged: bool

    @property
    def distance(self):
        return float(np.sqrt(self.g_value))

    def aligned(self, Z):
        """The pair ``(X Q, Y Q^{-T})``."""
        Z = as_pair(Z)
        return FactorPair(Z.X @ self.Q, np.linalg.solve(self.Q, Z.Y.T).T)


def as_pair(obj):
    """Coerce a FactorPair, GroundTruth or ``(X, Y)`` tuple to a FactorPair."""
    if isinstance(obj, FactorPair):
        return obj
    if isinstance(obj, GroundTruth):
        return obj.factors
    X, Y = obj
    return FactorPair(X, Y)


def _pairs(Z, Zstar):
    Z, Zstar = as_pair(Z), as_pair(Zstar)
    if Z.X.shape != Zstar.X.shape or Z.Y.shape != Zstar.Y.shape:
        raise DimensionError(
            f"shape mismatch: X {Z.X.shape} vs {Zstar.X.shape}, Y {Z.Y.shape} vs {Zstar.Y.shape}"
        )
    return Z, Zstar


def procrustes_align(Z, Zstar):
    """Orthonormal ``R`` minimizing ``||Z R - Zstar||_F``.

    Parameters
    ----------
    Z, Zstar : FactorPair or ndarray
        Factor pairs, or already stacked ``(n1 + n2) x r`` arrays.

    Returns
    -------
    R : (r, r) ndarray
        ``U V^T`` from the SVD ``Z^T Zstar = U S V^T``.
    """
    A, B = _stacked(Z, Zstar)
    U, _, Vt = np.linalg.svd(A.T @ B)
    return U @ Vt


def _stacked(Z, Zstar):
    if isinstance(Z, np.ndarray) and isinstance(Zstar, np.ndarray):
        if Z.shape != Zstar.shape:
            raise DimensionError(f"shape mismatch: {Z.shape} vs {Zstar.shape}")
        return Z, Zstar
    Z, Zstar = _pairs(Z, Zstar)
    return Z.stack(), Zstar.stack()


def procrustes_distance(Z, Zstar):
    A, B = _stacked(Z, Zstar)
    R = procrustes_align(A, B)
    return float(np.linalg.norm(A @ R - B))


def _check_invertible(P):
    s = np.linalg.svd(P, compute_uv=False)
    if not s[-1] > SINGULAR_RATIO * s[0]:
        ratio = s[-1] / s[0] if s[0] > 0 else 0.0
        raise SingularAlignmentError(
            f"alignment matrix is numerically singular (sigma_r/sigma_1 = {ratio:.3e})"
        )


def _residuals(P, Z, Zstar):
    Xt = Z.X @ P
    Yt = np.linalg.solve(P, Z.Y.T).T
    return Xt, Yt


def _objective(P, Z, Zstar):
    Xt, Yt = _residuals(P, Z, Zstar)
    return float(np.sum((Xt - Zstar.X) ** 2) + np.sum((Yt - Zstar.Y) ** 2))


def _foc(Xt, Yt, Zstar):
    return Xt.T @ (Xt - Zstar.X) - (Yt - Zstar.Y).T @ Yt


def alignment_objective(P, Z, Zstar):
    """``g(P) = ||X P - Xstar||_F^2 + ||Y P^{-T} - Ystar||_F^2``."""
    Z, Zstar = _pairs(Z, Zstar)
    P = np.asarray(P, dtype=float)
    _check_invertible(P)
    return _objective(P, Z, Zstar)


def align_gradient(P, Z, Zstar):
    """Analytic gradient of :func:`alignment_objective` at ``P``."""
    Z, Zstar = _pairs(Z, Zstar)
    P = np.asarray(P, dtype=float)
    _check_invertible(P)
    X, Y = Z.X, Z.Y
    Pinv = np.linalg.inv(P)
    S = Pinv.T @ Pinv                      # (P P^T)^{-1}
    return (2 * X.T @ X @ P - 2 * X.T @ Zstar.X
            - 2 * S @ Y.T @ Y @ S @ P
            + 2 * Pinv.T @ Zstar.Y.T @ Y @ Pinv.T)


def foc_residual(P, Z, Zstar):
    """Norm of the first-order optimality residual after aligning with ``P``."""
    Z, Zstar = _pairs(Z, Zstar)
    Xt, Yt = _residuals(np.asarray(P, dtype=float), Z, Zstar)
    return float(np.linalg.norm(_foc(Xt, Yt, Zstar)))


def invertible_align(Z, Zstar, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, P0=None):
    """Locally minimize ``g(P)`` over invertible ``P``.

    The iteration is a gradient method with Armijo backtracking, taken in
    the right-relative coordinates ``P <- P (I + D)``: at ``P`` the gradient
    with respect to ``D`` is ``P^T grad g(P) = 2 F`` with ``F`` the
    first-order residual matrix, so the stopping test and the search
    direction are the same quantity. Trial steps are sized by a
    Barzilai-Borwein estimate.

    Parameters
    ----------
    Z, Zstar : FactorPair
        Current and target factors.
    tol : float
        Stop once ``foc_residual <= tol``.
    max_iter : int
        Iteration budget. Exhausting it is not an error; the result then
        has ``converged=False``.
    P0 : (r, r) ndarray, optional
        Warm start. Defaults to the Procrustes rotation between ``Z`` and
        ``Zstar``.

    Returns
    -------
    AlignmentResult

    Raises
    ------
    SingularAlignmentError
        If the warm start is numerically singular.

    Notes
    -----
    Away from the planted factors ``g`` can have several stationary points
    and its infimum need not be attained. The result is the stationary
    point reached from the warm start, with no claim of global optimality.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    Z, Zstar = _pairs(Z, Zstar)
    r = Z.r
    P = procrustes_align(Z, Zstar) if P0 is None else np.array(P0, dtype=float)
    if P.shape != (r, r):
        raise DimensionError(f"warm start must be {r}x{r}")
    _check_invertible(P)

    I = np.eye(r)
    Xt, Yt = _residuals(P, Z, Zstar)
    F = _foc(Xt, Yt, Zstar)
    res = float(np.linalg.norm(F))
    scale = max(np.linalg.norm(Xt, 2) ** 2, np.linalg.norm(Yt, 2) ** 2, 1e-300)
    step = 1.0 / (4.0 * scale)
    prev = None
    it = 0
    while res > tol and it < max_iter:
        G = 2.0 * F
        gg = float(np.sum(G * G))
        if prev is not None:
            s, dG = prev
            sy = float(np.sum(s * (G - dG)))
            if sy > 0:
                step = float(np.sum(s * s)) / sy
        t = step
        accepted = False
        EX, EY = Xt - Zstar.X, Yt - Zstar.Y
        while t * np.sqrt(gg) > 1e-16:
            D = -t * G
            W = I + D
            sv = np.linalg.svd(W, compute_uv=False)
            if sv[-1] > SINGULAR_RATIO * sv[0]:
                # change of g evaluated from the increments, free of cancellation
                dX = Xt @ D
                dY = -Yt @ np.linalg.solve(W, D).T
                dg = float(np.sum(dX * (dX + 2 * EX)) + np.sum(dY * (dY + 2 * EY)))
                if dg <= -1e-4 * t * gg:
                    accepted = True
                    break
            t *= 0.5
        it += 1
        if not accepted:
            break
        prev = (D, G)
        step = t
        P = P @ W
        Xt, Yt = _residuals(P, Z, Zstar)
        F = _foc(Xt, Yt, Zstar)
        res = float(np.linalg.norm(F))

    g = float(np.sum((Xt - Zstar.X) ** 2) + np.sum((Yt - Zstar.Y) ** 2))
    return AlignmentResult(Q=P, g_value=g, foc_residual=res, iterations=it,
                           converged=bool(res <= tol))


def dist(Z, Zstar, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Invertible-transform distance ``sqrt(min_P g(P))``.

    Returns NaN when the alignment solver does not reach ``tol``, since no
    trustworthy value is available in that case.
    """
    res = invertible_align(Z, Zstar, tol=tol, max_iter=max_iter)
    return res.distance if res.converged else float("nan")
