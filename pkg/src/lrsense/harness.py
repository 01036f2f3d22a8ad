"""Experiment configuration, orchestration and CSV output.

A run is fully described by an :class:`ExperimentConfig`, stored as JSON::

    {
      "name": "a1_convergence",
      "instance": {"n1": 50, "n2": 50, "r": 3, "kappa": 2.0, "truth_seed": 0},
      "operator": {"kind": "gaussian", "m": 6000, "op_seed": 1},
      "init": {"kind": "spectral"},
      "solver": {"eta": 0.5, "max_iter": 600, "variant": "vanilla_sensing",
                 "lambda": 0.0, "stop_tol": 1e-12, "step_scaling": "sigma_max"},
      "tracking": {"track_dist": true, "dist_tol": 1e-6, "dist_every": 1,
                   "contraction_window": 100},
      "output": {"csv_path": "out/a1.csv", "emit_summary": true}
    }

The only environment input is ``LRSENSE_OUTPUT_DIR``, which redirects every
CSV into that directory (keeping the file name).
"""

import copy
import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .errors import ConfigError, DivergenceError
from .model import FactorPair, make_ground_truth
from .sensing import exact_operator, gaussian_operator
from .solvers import IterateTrace, SolverConfig, contraction_factor, gd_run, pgd_init, spectral_init

__all__ = [
    "CSV_COLUMNS",
    "INIT_KINDS",
    "InstanceConfig",
    "OperatorConfig",
    "InitConfig",
    "TrackingConfig",
    "OutputConfig",
    "ExperimentConfig",
    "ExperimentResult",
    "load_config",
    "save_config",
    "apply_overrides",
    "build_problem",
    "make_init",
    "write_trace_csv",
    "format_value",
    "run_experiment",
    "run_comparison",
    "recon_ratios",
    "run_check",
    "load_check_suite",
    "run_check_suite",
]

CSV_COLUMNS = IterateTrace.COLUMNS
INIT_KINDS = ("spectral", "pgd", "planted", "custom_perturbed")
OUTPUT_DIR_ENV = "LRSENSE_OUTPUT_DIR"


@dataclass(frozen=True)
class InstanceConfig:
    n1: int = 50
    n2: int = 50
    r: int = 3
    kappa: float = 2.0
    truth_seed: int = 0


@dataclass(frozen=True)
class OperatorConfig:
    kind: str = "gaussian"
    m: int = 6000
    op_seed: int = 1

    def __post_init__(self):
        if self.kind not in ("gaussian", "exact"):
            raise ConfigError(f"operator.kind must be 'gaussian' or 'exact', got {self.kind!r}")


@dataclass(frozen=True)
class InitConfig:
    kind: str = "spectral"
    tau: int = 1
    scale: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in INIT_KINDS:
            raise ConfigError(f"init.kind must be one of {INIT_KINDS}, got {self.kind!r}")
        if self.kind == "pgd" and int(self.tau) < 1:
            raise ConfigError("init.tau must be >= 1")


@dataclass(frozen=True)
class TrackingConfig:
    track_dist: bool = True
    dist_tol: float = 1e-6
    dist_every: int = 1
    contraction_window: int = 100


@dataclass(frozen=True)
class OutputConfig:
    csv_path: str = None
    emit_summary: bool = True


_SECTIONS = {
    "instance": InstanceConfig,
    "operator": OperatorConfig,
    "init": InitConfig,
    "tracking": TrackingConfig,
    "output": OutputConfig,
}


def _solver_to_dict(s):
    d = asdict(s)
    d["lambda"] = d.pop("lam")
    return d


def _solver_from_dict(d):
    d = dict(d)
    if "lambda" in d:
        d["lam"] = d.pop("lambda")
    return _section(SolverConfig, d, "solver")


def _section(cls, d, name):
    if not isinstance(d, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown keys in {name!r}: {sorted(unknown)}")
    try:
        return cls(**d)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {name!r} section: {exc}") from exc


@dataclass(frozen=True)
class ExperimentConfig:
    instance: InstanceConfig = field(default_factory=InstanceConfig)
    operator: OperatorConfig = field(default_factory=OperatorConfig)
    init: InitConfig = field(default_factory=InitConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    tracking: TrackingConfig = field(default_factory=TrackingConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    name: str = ""

    def to_dict(self):
        d = {"name": self.name}
        for key in ("instance", "operator", "init"):
            d[key] = asdict(getattr(self, key))
        d["solver"] = _solver_to_dict(self.solver)
        for key in ("tracking", "output"):
            d[key] = asdict(getattr(self, key))
        return d

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("configuration must be a mapping")
        unknown = set(d) - set(_SECTIONS) - {"solver", "name"}
        if unknown:
            raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
        kw = {k: _section(c, d.get(k, {}), k) for k, c in _SECTIONS.items()}
        kw["solver"] = _solver_from_dict(d.get("solver", {}))
        kw["name"] = str(d.get("name", ""))
        return cls(**kw)


def load_config(path, overrides=()):
    """Read a JSON config, apply ``key=value`` overrides and validate it."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return ExperimentConfig.from_dict(apply_overrides(d, overrides))


def save_config(cfg, path):
    with open(path, "w") as fh:
        json.dump(cfg.to_dict(), fh, indent=2)
        fh.write("\n")


def apply_overrides(d, overrides):
    """Set dotted-path entries, e.g. ``"solver.eta=0.25"``.

    Values are parsed as JSON when possible (numbers, booleans, null),
    otherwise kept as strings.
    """
    d = copy.deepcopy(d)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        *parents, leaf = key.strip().split(".")
        node = d
        for p in parents:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping")
        node[leaf] = value
    return d


# ---------------------------------------------------------------- running

def build_problem(cfg):
    """Planted instance, operator and measurements for a config."""
    inst = cfg.instance
    try:
        truth = make_ground_truth(inst.n1, inst.n2, inst.r, inst.kappa, inst.truth_seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.operator.kind == "exact":
        op = exact_operator(inst.n1, inst.n2)
    else:
        op = gaussian_operator(inst.n1, inst.n2, cfg.operator.m, cfg.operator.op_seed)
    return truth, op, op.apply(truth.Mstar)


def make_init(cfg, truth, op, y):
    ic = cfg.init
    r = cfg.instance.r
    if ic.kind == "spectral":
        return spectral_init(y, op, r)
    if ic.kind == "pgd":
        return pgd_init(y, op, r, ic.tau)
    if ic.kind == "planted":
        return truth.factors
    # custom_perturbed: planted factors plus Gaussian noise of Frobenius size
    # scale * sqrt(sigma_min), split across both factors
    rng = np.random.default_rng(ic.seed)
    Ex = rng.standard_normal(truth.Xstar.shape)
    Ey = rng.standard_normal(truth.Ystar.shape)
    norm = np.sqrt(np.sum(Ex ** 2) + np.sum(Ey ** 2))
    s = ic.scale * np.sqrt(truth.sigma_min) / norm
    return FactorPair(truth.Xstar + s * Ex, truth.Ystar + s * Ey)


def _resolve_csv(path):
    if path is None:
        return None
    path = Path(path)
    override = os.environ.get(OUTPUT_DIR_ENV)
    if override:
        path = Path(override) / path.name
    if not path.parent.is_dir():
        raise FileNotFoundError(f"output directory {path.parent} does not exist")
    return path


def format_value(v):
    """CSV cell: integers verbatim, floats with 17 significant digits, None empty."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return format(float(v), ".17g")


def write_trace_csv(trace, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in trace.rows():
            w.writerow([format_value(v) for v in row])


@dataclass
class ExperimentResult:
    summary: dict
    trace: IterateTrace
    factors: FactorPair = None


def _contraction(trace, window):
    present = 0
    for v in reversed(trace.dist_to_truth):
        if v is None:
            break
        present += 1
    w = min(window, present - 1)
    if w < 1:
        return None, 0
    try:
        return contraction_factor(trace, w), w
    except ValueError:
        return None, 0


def run_experiment(cfg):
    """Run one configured experiment.

    Writes the trace CSV when ``output.csv_path`` is set and returns an
    :class:`ExperimentResult` whose ``summary`` holds ``final_error``,
    ``iterations_used``, ``contraction_factor`` and ``diverged``.
    Divergence is reported, not raised.
    """
    csv_path = _resolve_csv(cfg.output.csv_path)
    truth, op, y = build_problem(cfg)
    init = make_init(cfg, truth, op, y)
    tr = cfg.tracking
    diverged = False
    factors = None
    try:
        factors, trace = gd_run(y, op, init, cfg.solver, truth, track_dist=tr.track_dist,
                                dist_tol=tr.dist_tol, dist_every=tr.dist_every)
    except DivergenceError as exc:
        diverged = True
        trace = exc.trace
    if csv_path is not None:
        write_trace_csv(trace, csv_path)
    cf, window = _contraction(trace, tr.contraction_window)
    d = [v for v in trace.dist_to_truth if v is not None]
    summary = {
        "name": cfg.name,
        "final_error": trace.recon_error[-1] if len(trace) else None,
        "iterations_used": trace.t[-1] if len(trace) else 0,
        "contraction_factor": cf,
        "contraction_window": window,
        "diverged": diverged,
        "final_dist": d[-1] if d else None,
        "max_balancedness_gap": max(trace.balancedness_gap) if len(trace) else None,
        "scale_source": trace.meta.get("scale_source"),
        "csv_path": None if csv_path is None else str(csv_path),
    }
    return ExperimentResult(summary, trace, factors)


def recon_ratios(trace_a, trace_b, threshold=1e-6):
    """Per-iteration ``max(a/b, b/a)`` of the two reconstruction errors.

    Covers the common iterations up to the first one where both errors are
    below ``threshold``. Two zero errors count as ratio 1.
    """
    out = []
    for a, b in zip(trace_a.recon_error, trace_b.recon_error):
        if a < threshold and b < threshold:
            break
        if a == 0 and b == 0:
            out.append(1.0)
        elif a == 0 or b == 0:
            out.append(float("inf"))
        else:
            out.append(max(a / b, b / a))
    return out


def _same_problem(a, b):
    return a.instance == b.instance and a.operator == b.operator and a.init == b.init


def run_comparison(cfg_a, cfg_b, threshold=1e-6, compare_csv=None, parallel=True):
    """Run two solver configurations on the same instance, operator and init.

    Returns ``(summary, result_a, result_b)``. The summary holds both
    per-run summaries and ``max_ratio``, the largest per-iteration ratio of
    reconstruction errors (either direction) before both drop below
    ``threshold``. ``compare_csv`` optionally receives the columns
    ``t, recon_a, recon_b, ratio``.
    """
    if not _same_problem(cfg_a, cfg_b):
        raise ConfigError("compared configs must share instance, operator and init")
    if parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fa, fb = pool.submit(run_experiment, cfg_a), pool.submit(run_experiment, cfg_b)
            ra, rb = fa.result(), fb.result()
    else:
        ra, rb = run_experiment(cfg_a), run_experiment(cfg_b)
    ratios = recon_ratios(ra.trace, rb.trace, threshold)
    if compare_csv is not None:
        path = _resolve_csv(compare_csv)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("t", "recon_a", "recon_b", "ratio"))
            for t, (a, b) in enumerate(zip(ra.trace.recon_error, rb.trace.recon_error)):
                ratio = ratios[t] if t < len(ratios) else None
                w.writerow([str(t), format_value(a), format_value(b), format_value(ratio)])
    summary = {
        "a": ra.summary,
        "b": rb.summary,
        "max_ratio": max(ratios) if ratios else 1.0,
        "ratio_iterations": len(ratios),
        "threshold": threshold,
    }
    return summary, ra, rb


# ---------------------------------------------------------------- checks

def _check_kwargs(name, params):
    params = dict(params)
    if name == "rip-inner-product":
        op_cfg = params.pop("operator", {"kind": "gaussian", "m": 6000, "op_seed": 1})
        n1, n2 = params.pop("n1", 50), params.pop("n2", 50)
        oc = _section(OperatorConfig, op_cfg, "operator")
        op = (exact_operator(n1, n2) if oc.kind == "exact"
              else gaussian_operator(n1, n2, oc.m, oc.op_seed))
        params["op"] = op
    return params


def run_check(name, params=None):
    """Run one named check from :data:`lrsense.checks.CHECKS`.

    ``params`` are keyword arguments of the check. For
    ``rip-inner-product`` the operator is given as ``n1``, ``n2`` and an
    ``operator`` section shaped like the experiment config's.
    """
    from .checks import CHECKS

    if name not in CHECKS:
        raise ConfigError(f"unknown check {name!r}; choose from {sorted(CHECKS)}")
    try:
        return CHECKS[name](**_check_kwargs(name, params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name!r}: {exc}") from exc


def load_check_suite(path, overrides=()):
    """Read a check-suite JSON file: ``{"name": ..., "checks": {check: params}}``."""
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    d = apply_overrides(d, overrides)
    if not isinstance(d.get("checks"), dict):
        raise ConfigError("check suite needs a 'checks' mapping")
    return d


def run_check_suite(suite):
    """Run every check of a loaded suite; returns ``{name: CheckReport}``."""
    return {name: run_check(name, params) for name, params in suite["checks"].items()}
