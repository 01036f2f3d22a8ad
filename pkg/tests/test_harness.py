import csv
import json
from dataclasses import replace

import pytest
from hypothesis import given, settings, strategies as st

from lrsense import ConfigError
from lrsense.harness import (CSV_COLUMNS, ExperimentConfig, InitConfig, InstanceConfig,
                             OperatorConfig, OutputConfig, TrackingConfig, apply_overrides,
                             format_value, load_check_suite, load_config, recon_ratios,
                             run_check, run_comparison, run_experiment, save_config)
from lrsense.solvers import IterateTrace, SolverConfig


def _cfg(tmp_path, name="run", **kw):
    base = dict(
        instance=InstanceConfig(n1=10, n2=8, r=2, kappa=2.0, truth_seed=3),
        operator=OperatorConfig(kind="gaussian", m=300, op_seed=4),
        init=InitConfig(kind="spectral"),
        solver=SolverConfig(max_iter=30),
        output=OutputConfig(csv_path=str(tmp_path / f"{name}.csv")),
        name=name,
    )
    base.update(kw)
    return ExperimentConfig(**base)


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def test_roundtrip_default():
    cfg = ExperimentConfig()
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 60), r=st.integers(1, 2), eta=st.floats(1e-3, 2.0),
       lam=st.floats(0.0, 1.0), seed=st.integers(0, 2 ** 63), kind=st.sampled_from(["spectral", "pgd"]),
       tol=st.floats(0.0, 1e-3))
def test_roundtrip_property(n, r, eta, lam, seed, kind, tol):
    cfg = ExperimentConfig(
        instance=InstanceConfig(n1=n, n2=n, r=r, kappa=1.0 if r == 1 else 3.0, truth_seed=seed),
        init=InitConfig(kind=kind, tau=3),
        solver=SolverConfig.regularized(lam, eta=eta, stop_tol=tol),
        tracking=TrackingConfig(dist_every=2),
    )
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_solver_key_is_lambda():
    d = ExperimentConfig(solver=SolverConfig.regularized(0.25)).to_dict()
    assert d["solver"]["lambda"] == 0.25 and "lam" not in d["solver"]


def test_save_and_load(tmp_path):
    cfg = _cfg(tmp_path)
    save_config(cfg, tmp_path / "c.json")
    assert load_config(tmp_path / "c.json") == cfg
    over = load_config(tmp_path / "c.json", ["solver.eta=0.25", "name=other", "tracking.track_dist=false"])
    assert over.solver.eta == 0.25 and over.name == "other" and over.tracking.track_dist is False


def test_overrides():
    d = apply_overrides({"a": {"b": 1}}, ["a.b=2.5", "a.c=text", "d.e=null"])
    assert d == {"a": {"b": 2.5, "c": "text"}, "d": {"e": None}}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["novalue"])
    with pytest.raises(ConfigError):
        apply_overrides({"a": 1}, ["a.b=1"])


@pytest.mark.parametrize("bad", [
    {"bogus": {}},
    {"solver": {"eta": -1}},
    {"solver": {"etaa": 1}},
    {"operator": {"kind": "fourier"}},
    {"init": {"kind": "pgd", "tau": 0}},
    {"instance": "x"},
])
def test_config_errors(bad):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict(bad)


def test_load_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


def test_csv_schema(tmp_path):
    cfg = _cfg(tmp_path, tracking=TrackingConfig(dist_every=2))
    res = run_experiment(cfg)
    rows = _read(cfg.output.csv_path)
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 32
    assert [int(r[0]) for r in rows[1:]] == list(range(31))
    assert rows[2][3] == "" and rows[3][3] != ""
    assert float(rows[-1][1]) == res.summary["final_error"]
    assert res.summary["iterations_used"] == 30 and res.summary["diverged"] is False


def test_format_value():
    assert format_value(None) == ""
    assert format_value(3) == "3"
    assert format_value(0.1) == "0.10000000000000001"
    assert float(format_value(1 / 3)) == 1 / 3


def test_planted_exact(tmp_path):
    cfg = _cfg(tmp_path, operator=OperatorConfig(kind="exact"), init=InitConfig(kind="planted"))
    res = run_experiment(cfg)
    rows = _read(cfg.output.csv_path)
    assert all(r[1] == "0" for r in rows[1:])
    assert res.summary["iterations_used"] == 30
    # dist is exactly 0 throughout, so there is no ratio to report
    assert res.summary["contraction_factor"] is None


def test_custom_perturbed_init(tmp_path):
    cfg = _cfg(tmp_path, init=InitConfig(kind="custom_perturbed", scale=0.1, seed=2),
               solver=SolverConfig(max_iter=0))
    res = run_experiment(cfg)
    d = res.trace.procrustes_dist[0]
    assert 0 < d <= 0.1 * 1.0 + 1e-12
    assert run_experiment(cfg).trace.procrustes_dist[0] == d


def test_byte_identical(tmp_path):
    a = _cfg(tmp_path, name="a")
    b = replace(a, output=OutputConfig(csv_path=str(tmp_path / "b.csv")))
    run_experiment(a)
    run_experiment(b)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_missing_output_dir(tmp_path):
    cfg = _cfg(tmp_path, output=OutputConfig(csv_path=str(tmp_path / "nope" / "x.csv")))
    with pytest.raises(FileNotFoundError):
        run_experiment(cfg)


def test_output_dir_override(tmp_path, monkeypatch):
    (tmp_path / "redirect").mkdir()
    monkeypatch.setenv("LRSENSE_OUTPUT_DIR", str(tmp_path / "redirect"))
    cfg = _cfg(tmp_path, output=OutputConfig(csv_path="does/not/exist/x.csv"))
    res = run_experiment(cfg)
    assert (tmp_path / "redirect" / "x.csv").exists()
    assert res.summary["csv_path"] == str(tmp_path / "redirect" / "x.csv")


def test_divergence_is_reported(tmp_path):
    cfg = _cfg(tmp_path, solver=SolverConfig(eta=60.0, max_iter=500))
    res = run_experiment(cfg)
    assert res.summary["diverged"] is True
    rows = _read(cfg.output.csv_path)
    assert len(rows) - 1 == len(res.trace) > 0


def test_no_csv(tmp_path):
    cfg = _cfg(tmp_path, output=OutputConfig(csv_path=None))
    assert run_experiment(cfg).summary["csv_path"] is None


def test_comparison_zero_lambda(tmp_path):
    a = _cfg(tmp_path, name="a")
    b = _cfg(tmp_path, name="b", solver=SolverConfig.regularized(0.0, max_iter=30))
    summary, ra, rb = run_comparison(a, b, compare_csv=str(tmp_path / "cmp.csv"))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert summary["max_ratio"] == 1.0
    rows = _read(tmp_path / "cmp.csv")
    assert rows[0] == ["t", "recon_a", "recon_b", "ratio"] and len(rows) == 32


def test_comparison_planted_both_zero(tmp_path):
    kw = dict(operator=OperatorConfig(kind="exact"), init=InitConfig(kind="planted"))
    a = _cfg(tmp_path, name="a", **kw)
    b = _cfg(tmp_path, name="b", solver=SolverConfig.regularized(max_iter=30), **kw)
    summary, ra, rb = run_comparison(a, b)
    assert max(ra.trace.recon_error + rb.trace.recon_error) < 1e-15
    assert summary["max_ratio"] == 1.0 and summary["ratio_iterations"] == 0


def test_comparison_sequential_matches(tmp_path):
    a = _cfg(tmp_path, name="a", output=OutputConfig())
    b = _cfg(tmp_path, name="b", solver=SolverConfig.regularized(max_iter=30), output=OutputConfig())
    s1, _, _ = run_comparison(a, b)
    s2, _, _ = run_comparison(a, b, parallel=False)
    assert s1 == s2


def test_comparison_requires_same_problem(tmp_path):
    a = _cfg(tmp_path)
    b = replace(a, instance=replace(a.instance, truth_seed=99))
    with pytest.raises(ConfigError):
        run_comparison(a, b)


def test_recon_ratios():
    ta, tb = IterateTrace(), IterateTrace()
    for t, (x, y) in enumerate([(1.0, 0.5), (0.0, 0.0), (1e-7, 1e-8)]):
        ta.append(t, x, None, None, 0, 0)
        tb.append(t, y, None, None, 0, 0)
    assert recon_ratios(ta, tb) == [2.0]
    assert recon_ratios(ta, tb, threshold=0.0) == [2.0, 1.0, pytest.approx(10.0)]


def test_check_suite_file(tmp_path):
    p = tmp_path / "suite.json"
    p.write_text(json.dumps({"checks": {"smoothness": {"instances": 3},
                                        "rip-inner-product": {"n1": 6, "n2": 6, "r": 1, "instances": 5,
                                                              "operator": {"kind": "exact"}}}}))
    suite = load_check_suite(p)
    assert run_check("smoothness", suite["checks"]["smoothness"]).instances_tested == 3
    rep = run_check("rip-inner-product", suite["checks"]["rip-inner-product"])
    assert rep.extra["max_deviation"] == 0.0
    with pytest.raises(ConfigError):
        run_check("nope")
    with pytest.raises(ConfigError):
        run_check("smoothness", {"bogus": 1})
