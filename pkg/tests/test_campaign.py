import math

import numpy as np
import pytest
import yaml

from mfsobol.campaign import Campaign, load_config, paired_pc_order, parse_config, with_overrides
from mfsobol.campaign.cache import EvalCache
from mfsobol.campaign.stages import cost_report
from mfsobol.campaign.validation import error_metrics, validate_fidelities
from mfsobol.errors import AllocationError, ConfigError, DomainError, StageOrderError
from mfsobol.models import simulate_0d
from mfsobol.models.qoi import StationTrace

ISHIGAMI_SPACE = [{"name": f"z{i}", "lower": -math.pi, "upper": math.pi} for i in (1, 2, 3)]


def analytic_cfg(**extra):
    data = {
        "space": ISHIGAMI_SPACE,
        "models": [
            {"id": "hi", "kind": "analytic", "cost": 1.0, "function": "ishigami"},
            {"id": "lo", "kind": "analytic", "cost": 0.01, "function": "ishigami", "params": {"a": 6.5, "b": 0.1}},
        ],
        "budgets": [200],
        "n_pilot": 40,
        "replicates": 4,
    }
    data.update(extra)
    return parse_config(data)


# -- configuration -----------------------------------------------------------


@pytest.mark.parametrize("data, key", [
    ({"models": [{"id": "a", "kind": "oned", "cost": 1}], "bogus": 1}, "bogus"),
    ({}, "models"),
    ({"models": [{"id": "a", "kind": "warp", "cost": 1}]}, "models[0].kind"),
    ({"models": [{"id": "a", "kind": "oned", "cost": -1}]}, "models[0].cost"),
    ({"models": [{"id": "a", "kind": "oned", "cost": 0.3}, {"id": "b", "kind": "zerod", "cost": 1}]}, "models[1].cost"),
    ({"models": [{"id": "a", "kind": "oned", "cost": 1}], "n_pilot": 3}, "n_pilot"),
    ({"models": [{"id": "a", "kind": "oned", "cost": 1}], "qois": ["pressure"]}, "qois"),
    ({"models": [{"id": "a", "kind": "oned", "cost": 1}], "hemo": {"rho_q": 1}}, "hemo"),
    ({"models": [{"id": "a", "kind": "oned", "cost": 1}], "replicate_mode": "lhs"}, "replicate_mode"),
    ({"models": [{"id": "a", "kind": "oned", "cost": 1}], "waveform": "missing.txt"}, "waveform"),
    ({"models": [{"id": "a", "kind": "zerod_perturbed", "cost": 1}]}, "models[0].kind"),
])
def test_config_errors_name_key(data, key):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.key == key


def test_config_defaults_and_aliases(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({
        "models": [{"id": "1d", "kind": "oned", "cost": 1.0}, {"id": "0d", "kind": "zerod", "cost": 0.3}],
        "qois": ["psys", "dr"],
    }))
    cfg = load_config(path)
    assert cfg.qois == ("P_sys", "dr_max")
    assert cfg.space.names == ["r", "E", "h"]
    assert cfg.n_pilot == 150 and cfg.replicate_mode == "random"
    np.testing.assert_allclose(cfg.w, [1.0, 0.3])
    cfg2 = with_overrides(cfg, phi=0.5, budgets=[500])
    assert cfg2.phi == 0.5 and cfg2.budgets == (500.0,)
    assert cfg2.model_digest(0) == cfg.model_digest(0)
    assert cfg2.digest() != cfg.digest()


def test_perturbed_shares_zerod_cache_digest():
    cfg = parse_config({"models": [
        {"id": "1d", "kind": "oned", "cost": 1}, {"id": "0d", "kind": "zerod", "cost": 0.3},
        {"id": "0p", "kind": "zerod_perturbed", "cost": 0.3}]})
    assert cfg.model_digest(1) == cfg.model_digest(2) != cfg.model_digest(0)


def test_waveform_path_relative_to_config(tmp_path):
    np.savetxt(tmp_path / "q.txt", np.column_stack([np.linspace(0, 1, 11), 5e-6 + np.zeros(11)]))
    (tmp_path / "c.yaml").write_text("models: [{id: a, kind: zerod, cost: 1}]\nwaveform: q.txt\n")
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.waveform().mean == pytest.approx(5e-6)


# -- cache and resume --------------------------------------------------------------


def test_cache_roundtrip(tmp_path):
    c = EvalCache(tmp_path, 2)
    Z = np.arange(6.0).reshape(2, 3)
    c.add(Z, [[1, 2], [3, 4]], [0.1, 0.2])
    again = EvalCache(tmp_path, 2)
    Y, wall, found = again.lookup(np.vstack([Z[1], [9, 9, 9]]))
    assert found.tolist() == [True, False]
    assert Y[0].tolist() == [3, 4] and wall[0] == 0.2 and np.isnan(Y[1]).all()


def test_resume_never_reruns_points(tmp_path):
    cfg = analytic_cfg()
    first = Campaign(cfg, tmp_path)
    first.run_pilot()
    first.run_mfmc(200)
    solved = first.evaluator.solved
    assert solved > 0
    second = Campaign(cfg, tmp_path)
    second.run_pilot()
    second.run_mfmc(200)
    assert second.evaluator.solved == 0
    assert second.evaluator.cache(0).hits > 0


def test_larger_pilot_solves_only_new_points(tmp_path):
    cfg = analytic_cfg()
    Campaign(cfg, tmp_path).run_pilot()
    bigger = Campaign(with_overrides(cfg, n_pilot=60), tmp_path)
    bigger.run_pilot()
    assert bigger.evaluator.solved == 2 * 20


def test_identical_models_have_unit_correlation():
    cfg = analytic_cfg(models=[
        {"id": "a", "kind": "analytic", "cost": 1.0, "function": "ishigami"},
        {"id": "b", "kind": "analytic", "cost": 0.1, "function": "ishigami"},
    ])
    pilot = Campaign(cfg).run_pilot()
    np.testing.assert_allclose(pilot.stats["y"].rho, 1.0)


def test_stage_order_errors(tmp_path):
    camp = Campaign(analytic_cfg(), tmp_path)
    with pytest.raises(StageOrderError):
        camp.allocate(200, "y")
    with pytest.raises(StageOrderError):
        camp.run_mfmc(200)
    camp.run_pilot()
    other = Campaign(analytic_cfg(n_pilot=30), tmp_path)
    with pytest.raises(StageOrderError):
        other.pilot()


def test_mfmc_run_outputs(tmp_path):
    camp = Campaign(analytic_cfg(budgets=[2000]), tmp_path)
    camp.run_pilot()
    est = camp.run_mfmc(2000)["y"]
    assert est.method == "mfmc" and len(est.terms["levels"]) == 2
    plan = camp.result.plans[("y", 2000.0)]
    assert plan.cost <= 2000
    for name in ("estimates.csv", "terms.csv", "allocation.csv", "raw.csv"):
        assert (tmp_path / "mfmc" / "p2000" / name).is_file()
    raw = (tmp_path / "mfmc" / "p2000" / "raw.csv").read_text().splitlines()
    assert raw[0].startswith("model,matrix,row,z1,z2,z3")
    assert len(raw) - 1 == int(np.sum(plan.evaluations))


def test_constant_model_degenerate_without_wasted_runs():
    cfg = analytic_cfg(models=[
        {"id": "a", "kind": "analytic", "cost": 1.0, "function": "constant"},
        {"id": "b", "kind": "analytic", "cost": 0.1, "function": "constant", "params": {"c": 2.0}},
    ])
    camp = Campaign(cfg)
    camp.run_pilot()
    after_pilot = camp.evaluator.solved
    est = camp.run_mfmc(200)["y"]
    assert est.degenerate and np.all(est.S == 0)
    assert camp.evaluator.solved == after_pilot


def test_inadmissible_allocation_is_instructive():
    cfg = parse_config({
        "space": ISHIGAMI_SPACE,
        "models": [
            {"id": "hi", "kind": "analytic", "cost": 1.0, "function": "ishigami"},
            {"id": "mid", "kind": "analytic", "cost": 0.1, "function": "ishigami", "params": {"a": 3.0}},
            {"id": "lo", "kind": "analytic", "cost": 0.01, "function": "ishigami", "params": {"a": 6.9}},
        ],
        "n_pilot": 40,
    })
    camp = Campaign(cfg)
    camp.run_pilot()
    with pytest.raises(AllocationError) as info:
        camp.allocate(1000, "y")
    assert "zerod_perturbed" in str(info.value) and info.value.violations


@pytest.mark.parametrize("mode", ["random", "sobol_blocks"])
def test_replicates_disjoint_and_reproducible(mode):
    cfg = analytic_cfg(replicate_mode=mode)
    camp = Campaign(cfg)
    n = 16
    seeds = np.random.SeedSequence(cfg.seed).spawn(3)
    sets = []
    for r in range(3):
        b, skip = camp.replicate_bundle(r, n, np.random.default_rng(seeds[r]))
        sets.append({row.tobytes() for t in b.tags() for row in b.matrix(t)})
        assert (skip == -1) == (mode == "random")
    for i in range(3):
        for j in range(i + 1, 3):
            assert not sets[i] & sets[j]


def test_replicated_constant_model_zero_variance():
    cfg = analytic_cfg(models=[{"id": "a", "kind": "analytic", "cost": 1.0, "function": "constant"}])
    summary = Campaign(cfg).run_replicates([100], methods=("mc",), replicates=3)
    assert summary[0]["sd_mu"] == 0.0 and summary[0]["sd_V"] == 0.0


def test_replicates_summary_and_traceability(tmp_path):
    camp = Campaign(analytic_cfg(budgets=[400, 800]), tmp_path)
    camp.run_pilot()
    summary = camp.run_replicates()
    keys = {(r["method"], r["budget"]) for r in summary}
    assert keys == {("mc", 400.0), ("mc", 800.0), ("mfmc", 400.0), ("mfmc", 800.0)}
    header = (tmp_path / "replicates" / "replicates.csv").read_text().splitlines()[0].split(",")
    assert header[:6] == ["config_digest", "method", "qoi", "budget", "replicate", "bundle_skip"]
    assert ("mfmc", "y", 400.0, 3) in camp.result.estimates


def test_pc_stage(tmp_path):
    camp = Campaign(analytic_cfg(pc_order=3, pc_samples=60), tmp_path)
    est = camp.run_pc()["y"]
    assert est.method == "pc"
    assert (tmp_path / "pc" / "order3" / "coefficients_y.txt").is_file()


# -- validation and cost ----------------------------------------------------------


def test_validate_identical_models_zero(tmp_path):
    cfg = parse_config({"models": [{"id": "a", "kind": "zerod", "cost": 1}, {"id": "b", "kind": "zerod", "cost": 1}]})
    rows = Campaign(cfg, tmp_path).validate()
    assert len(rows) == 1 and all(v == 0.0 for k, v in rows[0].items() if k not in ("reference", "model"))


def test_validation_resampling_and_errors():
    tr = simulate_0d([3.29e-3, 440e3, 0.785e-3])
    coarse = StationTrace(tr.t[::5], tr.P[::5], tr.Q[::5], tr.r[::5], tr.r_dia, tr.period)
    m = error_metrics(coarse, tr)
    assert m["avg_P"] < 1e-3 and set(m) == set(validate_fidelities({"a": tr, "b": coarse})[0]) - {"reference", "model"}
    shifted = StationTrace(tr.t + 100.0, tr.P, tr.Q, tr.r, tr.r_dia, tr.period)
    with pytest.raises(DomainError):
        error_metrics(tr, shifted, align="time")
    assert error_metrics(tr, shifted, align="phase")["avg_P"] < 1e-12


def test_pc_order_pairing():
    assert paired_pc_order(20, 3) == 2
    assert paired_pc_order(19, 3) == 1
    assert paired_pc_order(70, 3) == 4
    assert paired_pc_order(1, 3) is None


def test_cost_report_empty_and_populated():
    camp = Campaign(analytic_cfg())
    assert cost_report(camp.result, camp.cfg) == []
    camp.run_pilot()
    camp.run_mfmc(200)
    camp.run_mc(200)
    rows = camp.cost_report()
    methods = [r["method"] for r in rows]
    assert methods == ["mc", "mfmc"]
    mf = rows[1]
    assert mf["pc_order"] == paired_pc_order(mf["evaluations"][0], 3)
    assert rows[0]["evaluations"] == [200, 0]


def test_shipped_configs_load():
    from pathlib import Path
    paths = sorted((Path(__file__).parent.parent / "configs").glob("*.yaml"))
    assert paths
    for path in paths:
        cfg = load_config(path)
        assert cfg.K >= 2 and cfg.budgets
