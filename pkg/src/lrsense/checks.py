"""Randomized verifiers for the inequalities behind the convergence analysis.

Each ``check_*`` function draws seeded planted instances, evaluates one or
more inequalities of the form ``lhs <= rhs``, and reports the margins
``rhs - lhs``. An instance is a violation when its margin falls below
``-SLACK``. The pure ``*_margins`` helpers evaluate a single instance and
are what the checks are built from.
"""

from dataclasses import dataclass, field

import numpy as np

from .alignment import invertible_align
from .errors import SingularAlignmentError
from .model import FactorPair, make_ground_truth
from .sensing import estimate_rip, random_low_rank, rip_deviation

__all__ = [
    "SLACK",
    "CheckReport",
    "gradient_dominance_margins",
    "smoothness_margins",
    "smoothness_precondition",
    "alignment_margins",
    "check_lemma_gradient_dominance",
    "check_lemma_smoothness",
    "check_rip_inner_product",
    "check_alignment_lemmas",
    "CHECKS",
]

SLACK = 1e-8


@dataclass
class CheckReport:
    check_name: str
    instances_tested: int = 0
    violations: int = 0
    worst_margin: float = float("inf")
    violating_seeds: list = field(default_factory=list)
    skipped: int = 0
    extra: dict = field(default_factory=dict)

    def record(self, seed, margin, slack=SLACK):
        self.instances_tested += 1
        self.worst_margin = min(self.worst_margin, float(margin))
        if margin < -slack:
            self.violations += 1
            self.violating_seeds.append(int(seed))

    @property
    def passed(self):
        return self.violations == 0

    def to_dict(self):
        return {
            "check_name": self.check_name,
            "instances_tested": self.instances_tested,
            "violations": self.violations,
            "worst_margin": self.worst_margin,
            "violating_seeds": list(self.violating_seeds),
            "skipped": self.skipped,
            **self.extra,
        }


def _instance_seeds(seed, instances):
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(instances)]


def _random_invertible(rng, r, lo=0.5, hi=1.5):
    U = np.linalg.qr(rng.standard_normal((r, r)))[0]
    V = np.linalg.qr(rng.standard_normal((r, r)))[0]
    return (U * rng.uniform(lo, hi, r)) @ V.T


def _fro2(A):
    return float(np.sum(A * A))


# ---------------------------------------------------------------- margins

def gradient_dominance_margins(fp, truth):
    """Margins of the two gradient-dominance inequalities at an aligned pair.

    For the X side:
    ``<X - Xs, (X Y^T - Ms) Y> >= ||Y (X - Xs)^T||^2 - ||X - Xs||^4 / 4``,
    and symmetrically for Y.
    """
    X, Y = fp.X, fp.Y
    Ex, Ey = X - truth.Xstar, Y - truth.Ystar
    R = X @ Y.T - truth.Mstar
    mx = float(np.sum(Ex * (R @ Y))) - (_fro2(Y @ Ex.T) - 0.25 * _fro2(Ex) ** 2)
    my = float(np.sum(Ey * (R.T @ X))) - (_fro2(X @ Ey.T) - 0.25 * _fro2(Ey) ** 2)
    return mx, my


def smoothness_precondition(fp, truth):
    """``(||Y - Ys|| <= s1(Ys)/4, ||X - Xs|| <= s1(Xs)/4)`` in spectral norm."""
    ok_y = np.linalg.norm(fp.Y - truth.Ystar, 2) <= np.linalg.norm(truth.Ystar, 2) / 4
    ok_x = np.linalg.norm(fp.X - truth.Xstar, 2) <= np.linalg.norm(truth.Xstar, 2) / 4
    return bool(ok_y), bool(ok_x)


def smoothness_margins(fp, truth):
    """Margins of the two smoothness bounds on ``(X Y^T - Ms) Y`` and its transpose."""
    X, Y = fp.X, fp.Y
    Ex, Ey = X - truth.Xstar, Y - truth.Ystar
    R = X @ Y.T - truth.Mstar
    bracket = (np.linalg.norm(Ex @ Y.T) + np.linalg.norm(X @ Ey.T)
               + np.linalg.norm(Ex) * np.linalg.norm(Ey))
    my = 1.5 * np.linalg.norm(truth.Ystar, 2) * bracket - np.linalg.norm(R @ Y)
    mx = 1.5 * np.linalg.norm(truth.Xstar, 2) * bracket - np.linalg.norm(R.T @ X)
    return float(my), float(mx)


def alignment_margins(fp, truth, P, delta, result):
    """Margins for the alignment existence and proximity claims.

    Returns ``(proximity, objective)``: ``5 delta / s_r(Xs) - ||P - Q||_F``
    and ``g(P) - g(Q)``.
    """
    sr = float(np.linalg.svd(truth.Xstar, compute_uv=False)[-1])
    prox = 5 * delta / sr - float(np.linalg.norm(P - result.Q))
    gP = _fro2(fp.X @ P - truth.Xstar) + _fro2(np.linalg.solve(P, fp.Y.T).T - truth.Ystar)
    return prox, gP - result.g_value


# ---------------------------------------------------------------- instances

def _perturbed(gt, rng, scale, transform=True):
    """Planted factors plus Gaussian noise of Frobenius size ``scale``, then
    hidden behind a random invertible transform."""
    Ex = rng.standard_normal(gt.Xstar.shape)
    Ey = rng.standard_normal(gt.Ystar.shape)
    norm = np.sqrt(_fro2(Ex) + _fro2(Ey))
    X = gt.Xstar + scale * Ex / norm
    Y = gt.Ystar + scale * Ey / norm
    if transform:
        C = _random_invertible(rng, gt.r)
        X, Y = X @ C, np.linalg.solve(C, Y.T).T
    return FactorPair(X, Y)


def check_lemma_gradient_dominance(n1=50, n2=40, r=3, instances=100, seed=0, kappa=2.0,
                                   scale=0.01, align=True, tol=1e-10):
    """Gradient dominance on aligned random instances.

    Each instance is a planted pair perturbed by noise of size
    ``scale * sqrt(sigma_min)`` and passed through a random invertible
    transform; the invertible alignment then undoes the transform. With
    ``align=False`` the inequality is evaluated on the raw pair, where it
    is not guaranteed.
    """
    rep = CheckReport("gradient_dominance", extra={"aligned": bool(align)})
    kappa = 1.0 if r == 1 else kappa
    for s in _instance_seeds(seed, instances):
        rng = np.random.default_rng(s)
        gt = make_ground_truth(n1, n2, r, kappa, s)
        fp = _perturbed(gt, rng, scale * np.sqrt(gt.sigma_min))
        if align:
            try:
                res = invertible_align(fp, gt, tol=tol)
            except SingularAlignmentError:
                rep.skipped += 1
                continue
            if not res.converged:
                rep.skipped += 1
                continue
            fp = res.aligned(fp)
        rep.record(s, min(gradient_dominance_margins(fp, gt)))
    return rep


def check_lemma_smoothness(n1=50, n2=40, r=3, instances=100, seed=0, kappa=2.0,
                           scale=0.5, boundary=False, max_redraws=100):
    """Smoothness bounds on random instances inside the precondition.

    Perturbations are Gaussian with Frobenius size drawn uniformly up to
    ``scale * sqrt(sigma_min)``; draws outside the precondition are
    redrawn. With ``boundary=True`` each ``Y`` perturbation is rescaled so
    that ``||Y - Ys|| = s1(Ys)/4`` holds with equality.
    """
    rep = CheckReport("smoothness", extra={"boundary": bool(boundary), "redraws": 0})
    kappa = 1.0 if r == 1 else kappa
    for s in _instance_seeds(seed, instances):
        rng = np.random.default_rng(s)
        gt = make_ground_truth(n1, n2, r, kappa, s)
        for _ in range(max_redraws):
            size = rng.uniform(0, scale) * np.sqrt(gt.sigma_min)
            fp = _perturbed(gt, rng, size, transform=False)
            if boundary:
                Ey = fp.Y - gt.Ystar
                Ey = Ey * (np.linalg.norm(gt.Ystar, 2) / 4 / np.linalg.norm(Ey, 2))
                fp = FactorPair(fp.X, gt.Ystar + Ey)
            ok_y, ok_x = smoothness_precondition(fp, gt)
            if boundary:
                ok_y = True
            if ok_y and ok_x:
                break
            rep.extra["redraws"] += 1
        else:
            rep.skipped += 1
            continue
        rep.record(s, min(smoothness_margins(fp, gt)))
    return rep


def check_rip_inner_product(op, r=2, instances=200, seed=0, trials=None, safety=2.0):
    """Inner-product distortion of ``op`` on random rank-``r`` pairs.

    The reference constant is ``delta_hat = estimate_rip(op, 2r, trials)``,
    itself only a lower bound on the true constant, so each pair is checked
    against ``safety * delta_hat``. Every tenth pair uses ``M1 = M2``.
    """
    trials = instances if trials is None else trials
    ss_rip, ss_pairs = np.random.SeedSequence(seed).spawn(2)
    delta_hat = estimate_rip(op, min(2 * r, op.n1, op.n2), trials, ss_rip)
    rng = np.random.default_rng(ss_pairs)
    rep = CheckReport("rip_inner_product", extra={"delta_hat": delta_hat})
    worst = 0.0
    for i in range(instances):
        M1 = random_low_rank(rng, op.n1, op.n2, r)
        M2 = M1 if i % 10 == 0 else random_low_rank(rng, op.n1, op.n2, r)
        dev = rip_deviation(op, M1, M2)
        worst = max(worst, dev)
        rep.record(i, safety * delta_hat - dev)
    rep.extra["max_deviation"] = float(worst)
    return rep


def check_alignment_lemmas(n1=50, n2=40, r=3, instances=50, seed=0, kappa=2.0,
                           delta_frac=0.01, tol=1e-10):
    """Existence, proximity and first-order condition of the optimal alignment.

    Each instance hides noisy planted factors behind a transform ``P`` with
    singular values in ``[1/2, 3/2]``, so that
    ``max(||X P - Xs||, ||Y P^{-T} - Ys||) = delta = delta_frac * s_r(Xs)``.
    The solver must converge from its Procrustes warm start, land within
    ``5 delta / s_r(Xs)`` of ``P``, do no worse than ``g(P)``, and satisfy
    the first-order condition to ``tol``.
    """
    rep = CheckReport("alignment", extra={"delta_frac": delta_frac, "nonconverged": 0})
    kappa = 1.0 if r == 1 else kappa
    for s in _instance_seeds(seed, instances):
        rng = np.random.default_rng(s)
        gt = make_ground_truth(n1, n2, r, kappa, s)
        sr = float(np.linalg.svd(gt.Xstar, compute_uv=False)[-1])
        delta = delta_frac * sr
        P = _random_invertible(rng, r)
        Ex = rng.standard_normal(gt.Xstar.shape)
        Ey = rng.standard_normal(gt.Ystar.shape)
        Ex *= delta / np.linalg.norm(Ex)
        Ey *= delta / np.linalg.norm(Ey)
        fp = FactorPair((gt.Xstar + Ex) @ np.linalg.inv(P), (gt.Ystar + Ey) @ P.T)
        try:
            res = invertible_align(fp, gt, tol=tol)
        except SingularAlignmentError:
            res = None
        if res is None or not res.converged:
            rep.extra["nonconverged"] += 1
            rep.record(s, -np.inf)
            continue
        prox, obj = alignment_margins(fp, gt, P, delta, res)
        rep.record(s, min(prox, obj, tol - res.foc_residual))
    return rep


CHECKS = {
    "gradient-dominance": check_lemma_gradient_dominance,
    "smoothness": check_lemma_smoothness,
    "alignment": check_alignment_lemmas,
    "rip-inner-product": check_rip_inner_product,
}
