"""Campaign stages: pilot, allocation, production runs, replicates, validation, cost.

A ``Campaign`` binds a validated configuration to an output directory. Raw
model outputs live in the evaluation cache (SI units); every table written by
a stage is derived from them and converted to mmHg / mm on output only.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from math import comb
from pathlib import Path

import numpy as np

from ..errors import (
    AllocationError,
    DegenerateStatisticsError,
    DomainError,
    SolverError,
    StageOrderError,
    ConfigError,
)
from ..estimators import (
    AllocationPlan,
    EvalTable,
    SobolEstimate,
    check_cost_ratio,
    fit_discrepancy,
    mc_sobol,
    mfmc_sobol,
    optimal_allocation,
    perturb_lowfid,
    pilot_statistics,
)
from ..models.physics import MMHG
from ..models.solvers import simulate_0d, simulate_1d
from ..pce import expected_count, fit_pce, pc_sobol, pce_training_points
from ..sampling import SampleBundle, build_bundle, random_bundle, sobol_points
from . import store
from .config import CampaignConfig
from .evaluate import Evaluator, model_hemo
from .validation import validate_fidelities

UNITS = {"P_sys": ("mmHg", 1.0 / MMHG), "PP": ("mmHg", 1.0 / MMHG), "dr_max": ("mm", 1e3), "y": ("-", 1.0)}


def unit_of(qoi: str) -> tuple[str, float]:
    return UNITS[qoi]


def budget_label(p: float) -> str:
    return f"p{int(p)}" if float(p).is_integer() else f"p{p:g}"


def paired_pc_order(n_hf: int, d: int) -> int | None:
    """Highest total order whose basis is at most half of ``n_hf`` training runs."""
    if n_hf < 2:
        return None
    order = None
    o = 0
    while 2 * comb(d + o, d) <= n_hf:
        order = o
        o += 1
    return order


# ---------------------------------------------------------------------------
# results


@dataclass
class PilotRun:
    """Pilot points, raw outputs per model and the derived statistics."""

    Z: np.ndarray
    Y: list
    digest: str
    stats: dict = field(default_factory=dict)
    degenerate: dict = field(default_factory=dict)

    def column(self, k: int, j: int) -> np.ndarray:
        return self.Y[k][:, j]


@dataclass
class CampaignResult:
    """Everything produced in one session, keyed for traceability.

    ``estimates`` keys are ``(method, qoi, budget, replicate)``; ``budget`` is
    the PC order for ``method == "pc"`` and ``replicate`` is ``-1`` for
    production runs.
    """

    config_digest: str
    pilot: dict = field(default_factory=dict)
    plans: dict = field(default_factory=dict)
    estimates: dict = field(default_factory=dict)
    moments: list = field(default_factory=list)
    validation: list = field(default_factory=list)
    costs: list = field(default_factory=list)


# ---------------------------------------------------------------------------


class Campaign:
    """Stage runner bound to a configuration and an output directory.

    Parameters
    ----------
    cfg : CampaignConfig
    out : path or None
        Artifacts directory; ``None`` runs fully in memory (no CSVs, no cache files).
    jobs : int
        Worker processes for model evaluations.
    """

    def __init__(self, cfg: CampaignConfig, out=None, jobs: int = 1):
        self.cfg = cfg
        self.out = None if out is None else Path(out)
        if self.out is not None:
            self.out.mkdir(parents=True, exist_ok=True)
        self.evaluator = Evaluator(cfg, None if self.out is None else self.out / "cache", jobs)
        self.result = CampaignResult(cfg.digest())
        self._pilot: PilotRun | None = None
        self._raw_outs = sorted({q for k in range(cfg.K) for q in self.evaluator.outputs(k)}, key=list(UNITS).index)

    # -- helpers -----------------------------------------------------------

    def _dir(self, *parts) -> Path | None:
        if self.out is None:
            return None
        p = self.out.joinpath(*parts)
        p.mkdir(parents=True, exist_ok=True)
        return p

    def _qoi_col(self, k: int, qoi: str) -> int:
        return self.evaluator.outputs(k).index(qoi)

    def pilot_digest(self) -> str:
        cfg = self.cfg
        payload = {
            "space": [(p.name, p.lower, p.upper) for p in cfg.space.params],
            "models": [cfg.model_digest(k) for k in range(cfg.K)],
            "n_pilot": cfg.n_pilot, "pilot_skip": cfg.pilot_skip,
        }
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]

    def _evaluate_all(self, k: int, bundle: SampleBundle):
        """Raw outputs of model ``k`` on every matrix of ``bundle``; one batched call."""
        tags = bundle.tags()
        Z = np.vstack([bundle.matrix(t) for t in tags])
        Y, wall = self.evaluator.raw(k, Z)
        n = bundle.N
        return {t: Y[i * n:(i + 1) * n] for i, t in enumerate(tags)}, float(np.sum(wall))

    def _lowfid(self, k: int, qoi: str, Z: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Apply the discrepancy perturbation to model ``k`` outputs when configured."""
        if self.cfg.models[k].kind != "zerod_perturbed":
            return y
        pilot = self.pilot()
        j = self._qoi_col(k, qoi)
        sp = self.cfg.space
        return perturb_lowfid(pilot.column(0, self._qoi_col(0, qoi)), pilot.column(k, j), pilot.Z,
                              self.cfg.phi, Z, y, sp.lower, sp.upper)

    # -- pilot -------------------------------------------------------------

    def run_pilot(self) -> PilotRun:
        """Evaluate every model on the shared pilot points and compute statistics per QoI."""
        cfg = self.cfg
        Z = cfg.space.scale(sobol_points(cfg.space.d, cfg.n_pilot, cfg.pilot_skip))
        Y = []
        for k in range(cfg.K):
            try:
                Y.append(self.evaluator.raw(k, Z)[0])
            except SolverError as exc:
                if self.out is not None:
                    store.write_json(self._dir("pilot") / "failure.json", {
                        "model": cfg.models[k].id, "point": None if exc.index is None else Z[exc.index].tolist(),
                        "step": exc.step, "node": exc.node, "message": str(exc),
                    })
                raise
        pilot = PilotRun(Z, Y, self.pilot_digest())
        self._pilot = self._pilot_stats(pilot)
        self._persist_pilot(self._pilot)
        return self._pilot

    def _pilot_stats(self, pilot: PilotRun) -> PilotRun:
        cfg = self.cfg
        for qoi in cfg.qois:
            cols = []
            for k in range(cfg.K):
                y = pilot.column(k, self._qoi_col(k, qoi))
                if cfg.models[k].kind == "zerod_perturbed":
                    sp = cfg.space
                    y = perturb_lowfid(pilot.column(0, self._qoi_col(0, qoi)), y, pilot.Z, cfg.phi,
                                       pilot.Z, y, sp.lower, sp.upper)
                cols.append(y)
            try:
                pilot.stats[qoi] = pilot_statistics(cols)
                pilot.degenerate[qoi] = ""
            except DegenerateStatisticsError as exc:
                pilot.stats[qoi] = None
                pilot.degenerate[qoi] = str(exc)
        self.result.pilot = dict(pilot.stats)
        return pilot

    def _persist_pilot(self, pilot: PilotRun):
        root = self._dir("pilot")
        if root is None:
            return
        np.savez(root / "pilot.npz", Z=pilot.Z, **{f"Y{k}": y for k, y in enumerate(pilot.Y)})
        store.write_json(root / "pilot.json", {"pilot_digest": pilot.digest, "config_digest": self.result.config_digest})
        rows = []
        for k, y in enumerate(pilot.Y):
            for i in range(pilot.Z.shape[0]):
                rows.append(self._raw_row(k, "pilot", i, pilot.Z[i], y[i]))
        store.write_csv(root / "pilot_raw.csv", self._raw_header(), rows)
        store.write_csv(root / "pilot_stats.csv", *self.pilot_table(pilot))
        disc = self.discrepancy_table(pilot)
        if disc[1]:
            store.write_csv(root / "discrepancy.csv", *disc)

    def pilot_table(self, pilot: PilotRun | None = None):
        pilot = pilot or self.pilot()
        header = ["qoi", "unit", "model", "kind", "cost", "mu", "sigma", "rho", "delta", "tau", "q", "n_pilot", "degenerate"]
        rows = []
        for qoi in self.cfg.qois:
            unit, s = unit_of(qoi)
            st = pilot.stats[qoi]
            for k, m in enumerate(self.cfg.models):
                if st is None:
                    rows.append([qoi, unit, m.id, m.kind, m.cost, "", "", "", "", "", "", pilot.Z.shape[0], pilot.degenerate[qoi]])
                    continue
                rows.append([qoi, unit, m.id, m.kind, m.cost, st.mu[k] * s, st.sigma[k] * s, st.rho[k],
                             st.delta[k] * s**4, st.tau[k] * s**2, st.q[k], st.n_pilot, ""])
        return header, rows

    def discrepancy_table(self, pilot: PilotRun):
        sp = self.cfg.space
        header = ["qoi", "model"] + [f"d_{n}" for n in sp.names]
        rows = []
        for qoi in self.cfg.qois:
            for k, m in enumerate(self.cfg.models):
                if m.kind == "zerod_perturbed":
                    d = fit_discrepancy(pilot.column(0, self._qoi_col(0, qoi)), pilot.column(k, self._qoi_col(k, qoi)),
                                        pilot.Z, sp.lower, sp.upper)
                    rows.append([qoi, m.id] + list(d * unit_of(qoi)[1]))
        return header, rows

    def pilot(self) -> PilotRun:
        """Pilot of this session, or the persisted one; missing pilot is an ordering error."""
        if self._pilot is not None:
            return self._pilot
        root = None if self.out is None else self.out / "pilot"
        if root is None or not (root / "pilot.json").is_file():
            raise StageOrderError("no pilot run found; run the `pilot` stage first")
        meta = store.read_json(root / "pilot.json")
        if meta.get("pilot_digest") != self.pilot_digest():
            raise StageOrderError(
                "the persisted pilot was run with different models, space or pilot settings; rerun `pilot`"
            )
        with np.load(root / "pilot.npz") as f:
            pilot = PilotRun(f["Z"], [f[f"Y{k}"] for k in range(self.cfg.K)], meta["pilot_digest"])
        self._pilot = self._pilot_stats(pilot)
        return self._pilot

    # -- allocation --------------------------------------------------------

    def allocate(self, budget: float, qoi: str) -> AllocationPlan | None:
        """Optimal allocation for one QoI; ``None`` when its pilot statistics are degenerate."""
        stats = self.pilot().stats[qoi]
        if stats is None:
            return None
        try:
            plan = optimal_allocation(stats, self.cfg.w, budget, self.cfg.space.d,
                                      perturbation_applied=bool(self.cfg.perturbed))
        except AllocationError as exc:
            if exc.violations and not self.cfg.perturbed:
                raise AllocationError(
                    f"{qoi}: {exc} (configure the cheapest model with kind 'zerod_perturbed')", exc.violations
                ) from None
            raise AllocationError(f"{qoi}: {exc}", exc.violations) from None
        self.result.plans[(qoi, float(budget))] = plan
        return plan

    def allocation_table(self, budgets=None, qois=None):
        budgets = self.cfg.budgets if budgets is None else budgets
        qois = self.cfg.qois if qois is None else qois
        header = ["qoi", "budget", "model", "cost", "m", "evaluations", "alpha", "r", "perturbed", "admissible"]
        rows = []
        for qoi in qois:
            stats = self.pilot().stats[qoi]
            chk = None if stats is None else check_cost_ratio(stats, self.cfg.w)
            for p in budgets:
                plan = self.allocate(p, qoi)
                for k, m in enumerate(self.cfg.models):
                    if plan is None:
                        rows.append([qoi, p, m.id, m.cost, 0, 0, "", "", "", "degenerate"])
                    else:
                        rows.append([qoi, p, m.id, m.cost, int(plan.m[k]), int(plan.evaluations[k]), plan.alpha[k],
                                     plan.r[k], int(plan.perturbation_applied), int(chk.admissible)])
        return header, rows

    def run_allocate(self, budgets=None, qois=None):
        table = self.allocation_table(budgets, qois)
        root = self._dir("allocation")
        if root is not None:
            path = root / "allocation.csv"
            store.merge_csv(path, table[0], table[1], key=("qoi", "budget", "model"))
        return table

    # -- production runs ---------------------------------------------------

    def _estimate_row(self, est: SobolEstimate, budget, replicate: int, skip: int, evals, cost, wall):
        unit, s = unit_of(est.qoi)
        return ([self.result.config_digest, est.method, est.qoi, budget, replicate, skip, unit,
                 est.E_hat * s, est.V_hat * s * s, int(est.degenerate)]
                + list(est.S) + list(est.ST) + [";".join(str(int(e)) for e in evals), cost, wall])

    def _estimate_header(self):
        names = self.cfg.space.names
        return (["config_digest", "method", "qoi", "budget", "replicate", "bundle_skip", "unit", "mean", "variance",
                 "degenerate"] + [f"S_{n}" for n in names] + [f"ST_{n}" for n in names]
                + ["evaluations", "cost", "wall_s"])

    def _raw_header(self):
        names = list(self.cfg.space.names)
        return ["model", "matrix", "row"] + names + [f"{q}[{unit_of(q)[0]}]" for q in self._raw_outs]

    def _raw_row(self, k, tag, i, z, y):
        outs = self.evaluator.outputs(k)
        vals = []
        for q in self._raw_outs:
            vals.append(y[outs.index(q)] * unit_of(q)[1] if q in outs else "")
        return [self.cfg.models[k].id, tag, i] + list(z) + vals

    def _write_raw(self, path, per_model: dict, bundle: SampleBundle):
        rows = []
        header = self._raw_header()
        for k, (vals, n) in per_model.items():
            for t in bundle.tags():
                Zt = bundle.matrix(t)
                for i in range(n):
                    rows.append(self._raw_row(k, t, i, Zt[i], vals[t][i]))
        store.write_csv(path, header, rows)

    def run_mfmc(self, budget: float) -> dict:
        """Multifidelity estimates for every QoI on one nested Saltelli bundle."""
        cfg, d = self.cfg, self.cfg.space.d
        plans = {q: self.allocate(budget, q) for q in cfg.qois}
        live = [p for p in plans.values() if p is not None]
        rows_k = np.max([p.m for p in live], axis=0) if live else np.zeros(cfg.K, dtype=int)
        estimates, per_model, wall = {}, {}, 0.0
        bundle = None
        if live:
            bundle = build_bundle(cfg.space, int(rows_k[-1]), cfg.bundle_skip)
            for k in range(cfg.K):
                vals, w = self._evaluate_all(k, bundle.head(int(rows_k[k])))
                per_model[k] = (vals, int(rows_k[k]))
                wall += w
        for qoi, plan in plans.items():
            if plan is None:
                z = np.zeros(d)
                estimates[qoi] = SobolEstimate(0.0, z, z, z, z, "mfmc", qoi, float("nan"), True)
                continue
            data = []
            for k in range(cfg.K):
                vals, n = per_model[k]
                j = self._qoi_col(k, qoi)
                data.append({t: self._lowfid(k, qoi, bundle.matrix(t)[:n], v[:, j]) for t, v in vals.items()})
            table = EvalTable(tuple(data), cfg.w, qoi)
            estimates[qoi] = mfmc_sobol(table, plan)
        for qoi, est in estimates.items():
            self.result.estimates[("mfmc", qoi, float(budget), -1)] = est
        root = self._dir("mfmc", budget_label(budget))
        if root is not None:
            rows = []
            for qoi, est in estimates.items():
                plan = plans[qoi]
                evals = plan.evaluations if plan is not None else np.zeros(cfg.K, dtype=int)
                # weighted cost of everything the shared bundle evaluated
                cost = float(np.dot(cfg.w, rows_k * (d + 2)))
                rows.append(self._estimate_row(est, budget, -1, cfg.bundle_skip, evals, cost, wall))
            store.write_csv(root / "estimates.csv", self._estimate_header(), rows)
            store.write_csv(root / "terms.csv", *self.terms_table(estimates))
            store.write_csv(root / "allocation.csv", *self.allocation_table([budget]))
            if bundle is not None:
                self._write_raw(root / "raw.csv", per_model, bundle)
        self._record_cost("mfmc", budget, plans, wall)
        return estimates

    def terms_table(self, estimates: dict):
        names = self.cfg.space.names
        header = ["qoi", "level", "model", "m", "m_lo", "index"] + [f"hi_{n}" for n in names] + [f"lo_{n}" for n in names]
        rows = []
        for qoi, est in estimates.items():
            for lev in est.terms.get("levels", []):
                k = lev["k"] - 1
                for idx in ("S", "ST"):
                    lo = lev.get(f"{idx}_lo")
                    rows.append([qoi, lev["k"], self.cfg.models[k].id, lev["m"], lev.get("m_lo", ""), idx]
                                + list(lev[f"{idx}_hi"]) + (list(lo) if lo is not None else [""] * len(names)))
        return header, rows

    def mc_rows(self, budget: float) -> int:
        """High-fidelity rows of a single-fidelity run at ``budget``."""
        return int(np.floor(budget / ((self.cfg.space.d + 2) * self.cfg.models[0].cost)))

    def run_mc(self, budget: float) -> dict:
        """Single-fidelity Saltelli/Owen estimates on the highest-fidelity model."""
        cfg = self.cfg
        n = self.mc_rows(budget)
        if n < 2:
            raise DomainError(f"budget {budget} affords {n} high-fidelity rows; need at least 2")
        bundle = build_bundle(cfg.space, n, cfg.bundle_skip)
        vals, wall = self._evaluate_all(0, bundle)
        estimates = {}
        for qoi in cfg.qois:
            j = self._qoi_col(0, qoi)
            est = mc_sobol({t: v[:, j] for t, v in vals.items()}, qoi)
            estimates[qoi] = est
            self.result.estimates[("mc", qoi, float(budget), -1)] = est
        root = self._dir("mc", budget_label(budget))
        evals = [bundle.total_points] + [0] * (cfg.K - 1)
        cost = bundle.total_points * cfg.models[0].cost
        if root is not None:
            rows = [self._estimate_row(e, budget, -1, cfg.bundle_skip, evals, cost, wall) for e in estimates.values()]
            store.write_csv(root / "estimates.csv", self._estimate_header(), rows)
            self._write_raw(root / "raw.csv", {0: (vals, n)}, bundle)
        self._record_cost("mc", budget, None, wall, evals=evals, cost=cost)
        return estimates

    def run_pc(self, order: int | None = None, n: int | None = None) -> dict:
        """Polynomial chaos indices of the highest-fidelity model."""
        cfg = self.cfg
        order = cfg.pc_order if order is None else int(order)
        n = cfg.pc_samples if n is None else int(n)
        Z = pce_training_points(cfg.space, n, cfg.bundle_skip)
        Y, wall = self.evaluator.raw(0, Z)
        estimates, surrogates = {}, {}
        for qoi in cfg.qois:
            surrogate = fit_pce(cfg.space, order, Z, Y[:, self._qoi_col(0, qoi)])
            est = pc_sobol(surrogate, qoi)
            estimates[qoi], surrogates[qoi] = est, surrogate
            self.result.estimates[("pc", qoi, float(order), -1)] = est
        evals = [n] + [0] * (cfg.K - 1)
        root = self._dir("pc", f"order{order}")
        if root is not None:
            rows = [self._estimate_row(e, order, -1, cfg.bundle_skip, evals, n * cfg.models[0].cost, float(wall.sum()))
                    for e in estimates.values()]
            store.write_csv(root / "estimates.csv", self._estimate_header(), rows)
            for qoi, s in surrogates.items():
                s.export(root / f"coefficients_{qoi}.txt")
            fit_rows = [[q, s.basis.count, s.n_train, s.residual, s.cond, "; ".join(s.warnings)] for q, s in surrogates.items()]
            store.write_csv(root / "fit.csv", ["qoi", "terms", "n_train", "residual", "cond", "warnings"], fit_rows)
            rows = [self._raw_row(0, "pc", i, Z[i], Y[i]) for i in range(n)]
            store.write_csv(root / "raw.csv", self._raw_header(), rows)
        self.result.costs.append({"method": "pc", "budget": float(order), "evaluations": evals,
                                  "cost": n * cfg.models[0].cost, "wall_s": float(wall.sum())})
        return estimates

    def _record_cost(self, method, budget, plans, wall, evals=None, cost=None):
        if plans is not None:
            live = [p for p in plans.values() if p is not None]
            evals = (np.max([p.evaluations for p in live], axis=0) if live else np.zeros(self.cfg.K, dtype=int)).tolist()
            cost = float(np.dot(self.cfg.w, evals))
        self.result.costs.append({"method": method, "budget": float(budget), "evaluations": list(map(int, evals)),
                                  "cost": float(cost), "wall_s": float(wall)})

    # -- replicates --------------------------------------------------------

    def replicate_bundle(self, r: int, n: int, rng=None) -> tuple[SampleBundle, int]:
        """Bundle of replicate ``r``; returns it with its Sobol' skip (-1 for random draws)."""
        if self.cfg.replicate_mode == "sobol_blocks":
            skip = self.cfg.bundle_skip + r * n
            return build_bundle(self.cfg.space, n, skip), skip
        return random_bundle(self.cfg.space, n, rng), -1

    def run_replicates(self, budgets=None, methods=("mc", "mfmc"), replicates: int | None = None):
        """Repeat the MC and MFMC estimators on independent bundles.

        Each replicate draws one bundle sized for the largest budget; smaller
        budgets use its leading rows. Summaries report the mean and standard
        deviation of the mean, variance and index estimates across replicates,
        and the MSE of the indices with respect to the replicate mean.
        """
        cfg = self.cfg
        budgets = tuple(cfg.budgets if budgets is None else budgets)
        R = cfg.replicates if replicates is None else int(replicates)
        if R < 2:
            raise DomainError(f"replicates must be >= 2, got {R}")
        plans = {}
        if "mfmc" in methods:
            for p in budgets:
                for q in cfg.qois:
                    plans[(q, p)] = self.allocate(p, q)
        rows_k = np.zeros(cfg.K, dtype=int)
        for plan in plans.values():
            if plan is not None:
                rows_k = np.maximum(rows_k, plan.m)
        n_mc = {p: self.mc_rows(p) for p in budgets} if "mc" in methods else {}
        if n_mc:
            rows_k[0] = max(rows_k[0], max(n_mc.values()))
            if any(v < 2 for v in n_mc.values()):
                raise DomainError("every budget must afford at least 2 high-fidelity rows for MC")
        N = int(rows_k.max())
        seeds = np.random.SeedSequence(cfg.seed).spawn(R)
        records = []
        for r in range(R):
            bundle, skip = self.replicate_bundle(r, N, np.random.default_rng(seeds[r]))
            vals = {}
            for k in range(cfg.K):
                if rows_k[k] > 0:
                    vals[k] = self._evaluate_all(k, bundle.head(int(rows_k[k])))[0]
            for p in budgets:
                for q in cfg.qois:
                    if "mc" in methods:
                        n = n_mc[p]
                        j = self._qoi_col(0, q)
                        est = mc_sobol({t: v[:n, j] for t, v in vals[0].items()}, q)
                        records.append(("mc", q, p, r, skip, est))
                    if "mfmc" in methods:
                        plan = plans[(q, p)]
                        if plan is None:
                            z = np.zeros(cfg.space.d)
                            est = SobolEstimate(0.0, z, z, z, z, "mfmc", q, float("nan"), True)
                        else:
                            data = []
                            for k in range(cfg.K):
                                j = self._qoi_col(k, q)
                                m = int(plan.m[k])
                                data.append({t: self._lowfid(k, q, bundle.matrix(t)[:m], v[:m, j]) for t, v in vals[k].items()})
                            est = mfmc_sobol(EvalTable(tuple(data), cfg.w, q), plan)
                        records.append(("mfmc", q, p, r, skip, est))
        for method, q, p, r, skip, est in records:
            self.result.estimates[(method, q, float(p), r)] = est
        summary = summarize_replicates(records, cfg.space.names)
        self.result.moments.extend(summary)
        root = self._dir("replicates")
        if root is not None:
            rows = []
            for method, q, p, r, skip, est in records:
                plan = plans.get((q, p))
                if method == "mc":
                    evals = [(cfg.space.d + 2) * n_mc[p]] + [0] * (cfg.K - 1)
                else:
                    evals = plan.evaluations if plan is not None else [0] * cfg.K
                cost = float(np.dot(cfg.w, evals))
                rows.append(self._estimate_row(est, p, r, skip, evals, cost, ""))
            store.write_csv(root / "replicates.csv", self._estimate_header(), rows)
            store.write_csv(root / "summary.csv", *moments_table(summary, cfg.space.names))
        return summary

    # -- validation and cost -------------------------------------------------

    def traces(self, z=None) -> dict:
        """Station traces of every configured haemodynamic model at ``z`` (default: mean inputs)."""
        cfg = self.cfg
        z = cfg.space.mean if z is None else np.asarray(z, dtype=float)
        wf = cfg.waveform()
        out = {}
        for k, m in enumerate(cfg.models):
            if m.kind == "analytic":
                raise ConfigError("models", "trace validation needs haemodynamic models")
            hemo = model_hemo(m.solver_spec(), cfg.model_hemo(k))
            sim = simulate_0d if m.solver_kind == "zerod" else simulate_1d
            out[m.id] = sim(z, hemo, wf)
        return out

    def validate(self, z=None) -> list[dict]:
        rows = validate_fidelities(self.traces(z))
        self.result.validation = rows
        root = self._dir("validate")
        if root is not None:
            keys = [k for k in rows[0] if k not in ("reference", "model")] if rows else []
            table = [[r["reference"], r["model"]] + [100.0 * r[k] for k in keys] for r in rows]
            store.write_csv(root / "metrics.csv", ["reference", "model"] + [f"{k}[%]" for k in keys], table)
        return rows

    def cost_report(self) -> list[dict]:
        return cost_report(self.result, self.cfg)


# ---------------------------------------------------------------------------
# reductions


def summarize_replicates(records, names) -> list[dict]:
    """Moments across replicates per (method, qoi, budget), in report units."""
    groups: dict = {}
    for method, q, p, r, skip, est in records:
        groups.setdefault((method, q, float(p)), []).append(est)
    out = []
    for (method, q, p), ests in sorted(groups.items(), key=lambda kv: (kv[0][0], kv[0][1], kv[0][2])):
        _, s = unit_of(q)
        mu = np.array([e.E_hat for e in ests]) * s
        V = np.array([e.V_hat for e in ests]) * s * s
        S = np.array([e.S for e in ests])
        ST = np.array([e.ST for e in ests])
        row = {"method": method, "qoi": q, "budget": p, "replicates": len(ests), "unit": unit_of(q)[0],
               "E_mu": float(mu.mean()), "sd_mu": float(mu.std(ddof=1)),
               "E_V": float(V.mean()), "sd_V": float(V.std(ddof=1)),
               "degenerate": int(sum(e.degenerate for e in ests))}
        for i, n in enumerate(names):
            row[f"E_S_{n}"] = float(S[:, i].mean())
            row[f"sd_S_{n}"] = float(S[:, i].std(ddof=1))
            row[f"mse_S_{n}"] = float(np.mean((S[:, i] - S[:, i].mean()) ** 2))
            row[f"E_ST_{n}"] = float(ST[:, i].mean())
            row[f"sd_ST_{n}"] = float(ST[:, i].std(ddof=1))
            row[f"mse_ST_{n}"] = float(np.mean((ST[:, i] - ST[:, i].mean()) ** 2))
        out.append(row)
    return out


def moments_table(summary: list[dict], names):
    if not summary:
        return ["method"], []
    header = list(summary[0])
    return header, [[row[h] for h in header] for row in summary]


def cost_report(result: CampaignResult, cfg: CampaignConfig) -> list[dict]:
    """Per-method evaluation counts, weighted cost and wall time.

    MFMC rows also carry the paired PC comparison: the highest order whose
    basis needs at most half of the high-fidelity runs MFMC allocated.
    """
    rows = []
    d = cfg.space.d
    for c in sorted(result.costs, key=lambda c: (c["method"], c["budget"])):
        row = dict(c)
        row["evaluations"] = list(c["evaluations"])
        if c["method"] == "mfmc":
            n_hf = int(c["evaluations"][0])
            order = paired_pc_order(n_hf, d)
            row["pc_order"] = order
            row["pc_samples"] = n_hf if order is not None else 0
            row["pc_terms"] = expected_count(d, order) if order is not None else 0
        rows.append(row)
    return rows


def run_pilot(config: CampaignConfig, out=None, jobs: int = 1) -> dict:
    return Campaign(config, out, jobs).run_pilot().stats


def run_mfmc(config: CampaignConfig, budget: float, out=None, jobs: int = 1) -> dict:
    camp = Campaign(config, out, jobs)
    camp.run_pilot()
    return camp.run_mfmc(budget)


def run_replicates(config: CampaignConfig, budget, method: str = "mfmc", out=None, jobs: int = 1) -> list[dict]:
    camp = Campaign(config, out, jobs)
    if method == "mfmc":
        camp.run_pilot()
    budgets = budget if isinstance(budget, (list, tuple)) else (budget,)
    return camp.run_replicates(budgets, methods=(method,))


__all__ = [
    "Campaign", "CampaignResult", "PilotRun", "cost_report", "paired_pc_order", "run_mfmc",
    "run_pilot", "run_replicates", "summarize_replicates", "unit_of", "budget_label",
]
