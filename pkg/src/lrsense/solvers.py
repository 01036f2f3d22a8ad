"""Initializations and factored gradient descent for low-rank matrix sensing.

The main loop updates both factors simultaneously from the same iterate,

    X <- X - (eta / s_X) * G @ Y
    Y <- Y - (eta / s_Y) * G.T @ X

where ``G = A*(A(X Y^T) - y)`` for sensing, or ``G = X Y^T - Mstar`` for
plain factorization. The regularized variant adds the gradient of
``lam * ||X^T X - Y^T Y||_F^2``. Without that term nothing forces the two
factors to stay on the same scale; the point of the vanilla variant is
that a balanced start keeps them close to balanced anyway.
"""

from dataclasses import dataclass, field

import numpy as np

from .alignment import invertible_align, procrustes_distance
from .errors import DimensionError, DivergenceError, SingularAlignmentError, TraceLengthError
from .model import FactorPair, balancedness_gap

__all__ = [
    "VARIANTS",
    "STEP_SCALINGS",
    "DEFAULT_LAMBDA",
    "SolverConfig",
    "IterateTrace",
    "balanced_factors",
    "spectral_init",
    "pgd_init",
    "sensing_loss",
    "regularizer",
    "regularizer_gradient",
    "loss_gradient",
    "gd_run",
    "contraction_factor",
]

VARIANTS = ("vanilla_sensing", "regularized_sensing", "mf_vanilla")
STEP_SCALINGS = ("init_norms", "sigma_max")
DEFAULT_LAMBDA = 1.0 / 64.0


@dataclass(frozen=True)
class SolverConfig:
    eta: float = 0.5
    max_iter: int = 600
    variant: str = "vanilla_sensing"
    lam: float = 0.0
    stop_tol: float = 0.0
    step_scaling: str = "sigma_max"

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if int(self.max_iter) < 0:
            raise ValueError("max_iter must be non-negative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.step_scaling not in STEP_SCALINGS:
            raise ValueError(f"step_scaling must be one of {STEP_SCALINGS}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.lam != 0 and self.variant != "regularized_sensing":
            raise ValueError("lambda is only meaningful for regularized_sensing")
        if self.stop_tol < 0:
            raise ValueError("stop_tol must be non-negative")

    @classmethod
    def regularized(cls, lam=DEFAULT_LAMBDA, **kw):
        return cls(variant="regularized_sensing", lam=lam, **kw)


@dataclass
class IterateTrace:
    """Per-iteration metrics of a run.

    ``dist_to_truth`` entries are None when the invertible alignment was
    not tracked at that step or did not converge.
    """

    t: list = field(default_factory=list)
    recon_error: list = field(default_factory=list)
    procrustes_dist: list = field(default_factory=list)
    dist_to_truth: list = field(default_factory=list)
    balancedness_gap: list = field(default_factory=list)
    grad_norm: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    COLUMNS = ("t", "recon_error", "procrustes_dist", "dist_to_truth",
               "balancedness_gap", "grad_norm")

    def append(self, t, recon_error, procrustes_dist, dist_to_truth, gap, grad_norm):
        if self.t and t <= self.t[-1]:
            raise ValueError("trace indices must increase")
        self.t.append(int(t))
        self.recon_error.append(float(recon_error))
        self.procrustes_dist.append(None if procrustes_dist is None else float(procrustes_dist))
        self.dist_to_truth.append(None if dist_to_truth is None else float(dist_to_truth))
        self.balancedness_gap.append(float(gap))
        self.grad_norm.append(float(grad_norm))

    def __len__(self):
        return len(self.t)

    def rows(self):
        return zip(*(getattr(self, c) for c in self.COLUMNS))

    def array(self, name):
        """Column as a float array, with absent entries as NaN."""
        return np.array([np.nan if v is None else v for v in getattr(self, name)], dtype=float)

    @classmethod
    def from_trajectory(cls, dists):
        """Trace carrying only distances; other columns are zero-filled."""
        tr = cls()
        for i, d in enumerate(dists):
            tr.append(i, 0.0, None, d, 0.0, 0.0)
        return tr


def _check_rank(op, r):
    if not 1 <= r <= min(op.n1, op.n2):
        raise DimensionError(f"rank {r} out of range for a {op.shape} operator")


def balanced_factors(M, r):
    """Rank-``r`` truncated SVD ``U S V^T`` of ``M`` as ``(U S^{1/2}, V S^{1/2})``."""
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    root = np.sqrt(s[:r])
    return FactorPair(U[:, :r] * root, Vt[:r].T * root)


def spectral_init(y, op, r):
    """Balanced factors of the rank-``r`` SVD of the back-projection ``A*(y)``."""
    _check_rank(op, r)
    return balanced_factors(op.surrogate(y), r)


def pgd_init(y, op, r, tau):
    """Balanced factors after ``tau`` projected gradient steps from zero.

    Each step is ``M <- P_r(M - A*(A(M) - y))`` with ``P_r`` the rank-``r``
    truncated SVD. From ``M = 0`` the first step is exactly
    :func:`spectral_init`, which is what ``tau=1`` returns.
    """
    tau = int(tau)
    if tau < 1:
        raise ValueError("tau must be >= 1")
    fp = spectral_init(y, op, r)
    for _ in range(tau - 1):
        M = fp.product()
        fp = balanced_factors(M - op.adjoint(op.apply(M) - y), r)
    return fp


def sensing_loss(fp, y, op):
    """``0.5 * ||A(X Y^T) - y||^2``."""
    res = op.apply(fp.product()) - y
    return 0.5 * float(res @ res)


def regularizer(fp, lam):
    """``lam * ||X^T X - Y^T Y||_F^2``."""
    D = fp.X.T @ fp.X - fp.Y.T @ fp.Y
    return lam * float(np.sum(D * D))


def regularizer_gradient(fp, lam):
    """Gradient of :func:`regularizer` with respect to ``(X, Y)``."""
    D = fp.X.T @ fp.X - fp.Y.T @ fp.Y
    return 4 * lam * fp.X @ D, -4 * lam * fp.Y @ D


def _core(X, Y, y, op, variant, Mstar):
    if variant == "mf_vanilla":
        return X @ Y.T - Mstar
    return op.adjoint(op.apply(X @ Y.T) - y)


def loss_gradient(fp, y, op, cfg, truth=None):
    """Gradient ``(dX, dY)`` of the objective minimized by ``cfg.variant``."""
    Mstar = None if truth is None else truth.Mstar
    if cfg.variant == "mf_vanilla" and Mstar is None:
        raise ValueError("mf_vanilla needs the ground truth")
    G = _core(fp.X, fp.Y, y, op, cfg.variant, Mstar)
    gX, gY = G @ fp.Y, G.T @ fp.X
    if cfg.variant == "regularized_sensing" and cfg.lam:
        rX, rY = regularizer_gradient(fp, cfg.lam)
        gX, gY = gX + rX, gY + rY
    return gX, gY


def _step_scales(init, cfg, truth):
    if cfg.step_scaling == "init_norms":
        sX = np.linalg.norm(init.Y, 2) ** 2
        sY = np.linalg.norm(init.X, 2) ** 2
        source = "init_norms"
    elif truth is not None:
        sX = sY = truth.sigma_max
        source = "truth"
    else:
        sX = sY = np.linalg.norm(init.X, 2) ** 2
        source = "init_estimate"
    if not (sX > 0 and sY > 0):
        raise ValueError("step scaling is zero; the initialization is degenerate")
    return float(sX), float(sY), source


def _diverged(t, trace):
    err = DivergenceError(t)
    err.trace = trace
    return err


def _track_alignment(fp, truth, Q, rel_tol, scale, floor):
    # The Procrustes distance can stay far above dist once the factors drift
    # apart, so the tolerance is tightened until it is relative to dist itself.
    tol = max(rel_tol * scale, floor)
    al = None
    for _ in range(8):
        try:
            al = invertible_align(fp, truth, tol=tol, P0=Q)
        except SingularAlignmentError:
            return None
        if not al.converged:
            return None
        new_tol = max(rel_tol * al.distance, floor)
        if new_tol >= 0.5 * tol:
            break
        tol, Q = new_tol, al.Q
    return al


def gd_run(y, op, init, cfg, truth=None, track_dist=True, dist_tol=1e-6, dist_every=1):
    """Run factored gradient descent from ``init``.

    Parameters
    ----------
    y : (m,) ndarray
        Measurements. Ignored by ``mf_vanilla``.
    op : SensingOperator
    init : FactorPair
    cfg : SolverConfig
    truth : GroundTruth, optional
        Needed for ``mf_vanilla`` and for every metric measured against the
        planted factors. Without it ``recon_error`` is the relative
        measurement misfit ``||A(X Y^T) - y|| / ||y||``.
    track_dist : bool
        Compute the invertible-alignment distance (every ``dist_every``
        iterations).
    dist_tol : float
        Alignment tolerance relative to the current error scale
        ``sqrt(sigma_max) * dist``.

    Returns
    -------
    (FactorPair, IterateTrace)
        Last iterate and its trace. Row ``t`` describes iterate ``t``; the
        run stops after ``cfg.max_iter`` updates or at the first iterate
        with ``recon_error < cfg.stop_tol``, so ``stop_tol=0`` never stops early.

    Raises
    ------
    DivergenceError
        When an iterate has a non-finite entry. The partial trace is
        attached as ``err.trace``.
    """
    if init.n1 != op.n1 or init.n2 != op.n2:
        raise DimensionError(f"init is {init.n1}x{init.n2}, operator is {op.shape}")
    if truth is not None and (truth.n1, truth.n2, truth.r) != (init.n1, init.n2, init.r):
        raise DimensionError("init and ground truth disagree on dimensions")
    variant = cfg.variant
    if variant == "mf_vanilla" and truth is None:
        raise ValueError("mf_vanilla needs the ground truth")
    Mstar = None if truth is None else truth.Mstar
    y = None if variant == "mf_vanilla" else np.asarray(y, dtype=float)
    sX, sY, source = _step_scales(init, cfg, truth)
    eta, lam = cfg.eta, cfg.lam if variant == "regularized_sensing" else 0.0

    trace = IterateTrace(meta={"variant": variant, "eta": eta, "lam": lam,
                               "step_scaling": cfg.step_scaling, "scale_source": source,
                               "s_X": sX, "s_Y": sY})
    if truth is not None:
        mnorm = float(np.linalg.norm(Mstar))
        err_scale = np.sqrt(truth.sigma_max)
        floor = 1e-14 * max(1.0, truth.sigma_max)
    else:
        ynorm = float(np.linalg.norm(y))

    X, Y = init.X.copy(), init.Y.copy()
    Q = None
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(int(cfg.max_iter) + 1):
            if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
                raise _diverged(t, trace)
            if variant == "mf_vanilla":
                G = X @ Y.T - Mstar
            else:
                res = op.apply(X @ Y.T) - y
                G = op.adjoint(res)
            gX, gY = G @ Y, G.T @ X
            if lam:
                Dg = X.T @ X - Y.T @ Y
                gX = gX + 4 * lam * X @ Dg
                gY = gY - 4 * lam * Y @ Dg
            gnorm = float(np.sqrt(np.sum(gX * gX) + np.sum(gY * gY)))
            if not np.isfinite(gnorm):
                raise _diverged(t, trace)

            fp = FactorPair(X, Y)
            gap = balancedness_gap(fp)
            pd = d = None
            if truth is not None:
                E = X @ Y.T - Mstar
                recon = float(np.linalg.norm(E)) / mnorm
                pd = procrustes_distance(fp, truth)
                if track_dist and t % dist_every == 0:
                    al = _track_alignment(fp, truth, Q, dist_tol * err_scale, pd, floor)
                    if al is not None:
                        d, Q = al.distance, al.Q
                    else:
                        Q = None
            else:
                recon = float(np.linalg.norm(res)) / ynorm if ynorm > 0 else float(np.linalg.norm(res))
            trace.append(t, recon, pd, d, gap, gnorm)

            if recon < cfg.stop_tol or t == cfg.max_iter:
                break
            X = X - (eta / sX) * gX
            Y = Y - (eta / sY) * gY

    return FactorPair(X, Y), trace


def contraction_factor(trace, window):
    """Geometric mean of ``dist[t+1] / dist[t]`` over the last ``window`` steps."""
    window = int(window)
    if window < 1:
        raise ValueError("window must be >= 1")
    d = trace.dist_to_truth[-(window + 1):]
    if len(d) < window + 1 or any(v is None for v in d):
        raise TraceLengthError(
            f"need {window + 1} trailing iterates with a tracked distance, trace has {len(trace)}"
        )
    if d[0] == 0:
        raise ValueError("distance is zero at the start of the window")
    return float((d[-1] / d[0]) ** (1.0 / window))
