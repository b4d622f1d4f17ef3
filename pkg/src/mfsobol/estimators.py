"""Monte Carlo and multifidelity Monte Carlo estimators of Sobol' indices.

Single-fidelity estimates use the bias-corrected Owen estimators on Saltelli
bundles. The multifidelity estimators combine K nested model levels through
control variates; level ``k`` evaluates the leading ``m_k`` rows of a shared
bundle, with ``m_1 <= m_2 <= ... <= m_K`` and level 1 the highest fidelity.

Variances and means at each level pool the A and B rows (``2 m`` values).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    AllocationError,
    BudgetTooSmallError,
    DegenerateStatisticsError,
    DomainError,
    LeastSquaresError,
)


# ---------------------------------------------------------------------------
# containers


@dataclass(frozen=True)
class EvalTable:
    """Scalar QoI values of K nested models on one Saltelli bundle.

    Parameters
    ----------
    data : sequence of mappings
        ``data[k][tag]`` holds the values of model ``k`` (0-based, highest
        fidelity first) on matrix ``tag`` in ``{"A", "B", "C1", ..., "Cd"}``.
        Every tag of a model has the same length; lengths never decrease
        with ``k``.
    w : array_like
        Cost of one evaluation of each model, in high-fidelity solves.
    qoi : str
        Identifier carried into the estimates.
    """

    data: tuple
    w: np.ndarray
    qoi: str = ""

    def __post_init__(self):
        data = tuple({t: np.asarray(v, dtype=float) for t, v in m.items()} for m in self.data)
        if not data:
            raise DomainError("EvalTable needs at least one model")
        w = np.asarray(self.w, dtype=float).ravel()
        if w.shape[0] != len(data):
            raise DomainError(f"{w.shape[0]} costs for {len(data)} models")
        if np.any(w <= 0):
            raise DomainError("model costs must be > 0")
        tags = _tags_of(data[0])
        prev = 0
        for k, m in enumerate(data):
            if _tags_of(m) != tags:
                raise DomainError(f"model {k + 1} has matrices {sorted(m)}, expected {tags}")
            lengths = {m[t].shape[0] for t in tags}
            if len(lengths) != 1:
                raise DomainError(f"model {k + 1}: matrices have unequal lengths {sorted(lengths)}")
            n = lengths.pop()
            if n < prev:
                raise DomainError("rows per model must be non-decreasing (nested sampling)")
            prev = n
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "w", w)

    @property
    def K(self) -> int:
        return len(self.data)

    @property
    def d(self) -> int:
        return len(self.data[0]) - 2

    def rows(self, k: int) -> int:
        return self.data[k]["A"].shape[0]

    def model(self, k: int) -> dict:
        return self.data[k]


def _tags_of(m: Mapping) -> list[str]:
    if "A" not in m or "B" not in m:
        raise DomainError("evaluations for matrices A and B are required")
    d = len(m) - 2
    tags = ["A", "B"] + [f"C{j + 1}" for j in range(d)]
    if sorted(m) != sorted(tags):
        raise DomainError(f"missing matrices: expected {tags}, got {sorted(m)}")
    return tags


@dataclass(frozen=True)
class PilotStatistics:
    """Moments of each model and correlations with model 1 on shared pilot points.

    ``delta`` is the (biased) fourth central moment, ``tau`` the sample
    standard deviation of ``g = (f - mean f)^2``; ``rho`` and ``q`` are the
    Pearson correlations of ``f`` and ``g`` with model 1.
    """

    mu: np.ndarray
    sigma: np.ndarray
    delta: np.ndarray
    tau: np.ndarray
    rho: np.ndarray
    q: np.ndarray
    n_pilot: int

    @property
    def K(self) -> int:
        return self.mu.shape[0]

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PilotStatistics":
        arr = {k: np.asarray(d[k], dtype=float) for k in ("mu", "sigma", "delta", "tau", "rho", "q")}
        return cls(n_pilot=int(d.get("n_pilot", 0)), **arr)

    @classmethod
    def from_moments(cls, sigma, rho, mu=None, delta=None, tau=None, q=None, n_pilot=0):
        """Statistics from published moments; missing higher moments default to Gaussian values."""
        sigma = np.asarray(sigma, dtype=float)
        K = sigma.shape[0]
        rho = np.asarray(rho, dtype=float)
        delta = 3.0 * sigma**4 if delta is None else np.asarray(delta, dtype=float)
        if tau is None:
            # var[(f - E f)^2] = delta - sigma^4
            tau = np.sqrt(np.clip(delta - sigma**4, 0.0, None))
        return cls(
            mu=np.zeros(K) if mu is None else np.asarray(mu, dtype=float),
            sigma=sigma,
            delta=delta,
            tau=np.asarray(tau, dtype=float),
            rho=rho,
            q=rho**2 if q is None else np.asarray(q, dtype=float),
            n_pilot=n_pilot,
        )


@dataclass(frozen=True)
class AllocationPlan:
    m: np.ndarray
    alpha: np.ndarray
    r: np.ndarray
    p: float
    p_eff: float
    w: np.ndarray
    d: int
    admissible: bool = True
    perturbation_applied: bool = False

    @property
    def K(self) -> int:
        return self.m.shape[0]

    @property
    def evaluations(self) -> np.ndarray:
        """Model evaluations per level across all ``d + 2`` matrices."""
        return (self.d + 2) * self.m

    @property
    def cost(self) -> float:
        return float(np.sum(self.w * self.evaluations))

    def to_dict(self) -> dict:
        return {
            "m": self.m.tolist(), "alpha": self.alpha.tolist(), "r": self.r.tolist(),
            "p": self.p, "p_eff": self.p_eff, "w": self.w.tolist(), "d": self.d,
            "admissible": self.admissible, "perturbation_applied": self.perturbation_applied,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "AllocationPlan":
        return cls(
            m=np.asarray(d["m"], dtype=int), alpha=np.asarray(d["alpha"], dtype=float),
            r=np.asarray(d["r"], dtype=float), p=float(d["p"]), p_eff=float(d["p_eff"]),
            w=np.asarray(d["w"], dtype=float), d=int(d["d"]),
            admissible=bool(d.get("admissible", True)),
            perturbation_applied=bool(d.get("perturbation_applied", False)),
        )


@dataclass(frozen=True)
class SobolEstimate:
    """Variance decomposition of one QoI.

    When the total variance is not positive the estimate is flagged
    ``degenerate`` and ``S``/``ST`` are reported as zeros instead of NaN.
    """

    V_hat: float
    V_j: np.ndarray
    T_j: np.ndarray
    S: np.ndarray
    ST: np.ndarray
    method: str
    qoi: str = ""
    E_hat: float = float("nan")
    degenerate: bool = False
    terms: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class CostRatioCheck:
    admissible: bool
    violations: list


# ---------------------------------------------------------------------------
# single-fidelity building blocks


def sample_mean_var(y) -> tuple[float, float]:
    """Sample mean and unbiased sample variance."""
    y = np.asarray(y, dtype=float).ravel()
    if y.shape[0] < 2:
        raise DomainError(f"variance needs at least 2 values, got {y.shape[0]}")
    E = y.mean()
    return float(E), float(np.sum((y - E) ** 2) / (y.shape[0] - 1))


def _pair(*ys):
    arrs = [np.asarray(y, dtype=float).ravel() for y in ys]
    n = arrs[0].shape[0]
    if any(a.shape[0] != n for a in arrs):
        raise DomainError(f"length mismatch: {[a.shape[0] for a in arrs]}")
    if n < 2:
        raise DomainError("at least 2 samples are required")
    return arrs


def owen_vj(yA, yB, yCj) -> float:
    """Bias-corrected estimator of the first-order contribution ``V_j``.

    ``mean(f(A) f(C_j)) - ((E + E')/2)^2 + (V + V')/(4N)`` with ``E, V`` from
    ``yA`` and ``E', V'`` from ``yB`` (unbiased variances). The correction
    term cancels the bias of the squared mean exactly, so no further
    prefactor is applied. Returns exactly 0 for constant outputs.
    """
    yA, yB, yCj = _pair(yA, yB, yCj)
    N = yA.shape[0]
    if _constant(yA, yB, yCj):
        return 0.0
    E, V = sample_mean_var(yA)
    E2, V2 = sample_mean_var(yB)
    return float(np.mean(yA * yCj) - (0.5 * (E + E2)) ** 2 + (V + V2) / (4.0 * N))


def _constant(*ys) -> bool:
    v = ys[0][0]
    return all(np.all(y == v) for y in ys)


def owen_tj(yB, yCj) -> float:
    """Estimator of the total contribution ``T_j``, ``sum (f(B) - f(C_j))^2 / (2N)``."""
    yB, yCj = _pair(yB, yCj)
    return float(np.sum((yB - yCj) ** 2) / (2.0 * yB.shape[0]))


def _pooled(values: Mapping, m: int) -> np.ndarray:
    return np.concatenate([values["A"][:m], values["B"][:m]])


def _level_terms(values: Mapping, m: int, d: int):
    A, B = values["A"][:m], values["B"][:m]
    E, V = sample_mean_var(_pooled(values, m))
    Vj = np.array([owen_vj(A, B, values[f"C{j + 1}"][:m]) for j in range(d)])
    Tj = np.array([owen_tj(B, values[f"C{j + 1}"][:m]) for j in range(d)])
    return E, V, Vj, Tj


def _ratios(V, Vj, Tj):
    if not (np.isfinite(V) and V > 0):
        return np.zeros_like(Vj), np.zeros_like(Tj), True
    return Vj / V, Tj / V, False


def mc_sobol(values, qoi: str = "") -> SobolEstimate:
    """Single-fidelity Saltelli/Owen estimate from evaluations on one bundle.

    ``values`` is either a mapping ``tag -> vector`` or a one-model ``EvalTable``.
    """
    if isinstance(values, EvalTable):
        if values.K != 1:
            raise DomainError("mc_sobol takes a single-model table")
        qoi = qoi or values.qoi
        values = values.model(0)
    values = {t: np.asarray(v, dtype=float) for t, v in values.items()}
    tags = _tags_of(values)
    m = values["A"].shape[0]
    if any(values[t].shape[0] != m for t in tags):
        raise DomainError("matrices have unequal lengths")
    E, V, Vj, Tj = _level_terms(values, m, len(tags) - 2)
    S, ST, degenerate = _ratios(V, Vj, Tj)
    return SobolEstimate(V, Vj, Tj, S, ST, "mc", qoi, E, degenerate)


# ---------------------------------------------------------------------------
# pilot statistics, admissibility, allocation


def pilot_statistics(Y, n_min: int = 5) -> PilotStatistics:
    """Moments and correlations from pilot evaluations.

    Parameters
    ----------
    Y : array_like, shape (n, K) or sequence of K vectors
        Column ``k`` holds model ``k`` evaluated on the shared pilot points.
    """
    if isinstance(Y, (list, tuple)):
        Y = np.column_stack([np.asarray(y, dtype=float) for y in Y])
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    n, K = Y.shape
    if n < n_min:
        raise DomainError(f"pilot needs at least {n_min} points, got {n}")
    for k in range(K):
        if np.unique(Y[:, k]).shape[0] < 2:
            raise DegenerateStatisticsError(f"model {k + 1} has fewer than 2 distinct pilot values")
    mu = Y.mean(axis=0)
    dev = Y - mu
    sigma = Y.std(axis=0, ddof=1)
    delta = np.mean(dev**4, axis=0)
    G = dev**2
    tau = G.std(axis=0, ddof=1)
    rho = np.array([1.0] + [_pearson(Y[:, 0], Y[:, k]) for k in range(1, K)])
    q = np.array([1.0] + [_pearson(G[:, 0], G[:, k]) for k in range(1, K)])
    return PilotStatistics(mu, sigma, delta, tau, rho, q, n)


def _pearson(x, y) -> float:
    x = x - x.mean()
    y = y - y.mean()
    den = np.sqrt(np.sum(x * x) * np.sum(y * y))
    if den == 0:
        raise DegenerateStatisticsError("correlation undefined for a constant vector")
    return float(np.clip(np.sum(x * y) / den, -1.0, 1.0))


def _rho_of(stats) -> np.ndarray:
    return np.asarray(stats.rho if isinstance(stats, PilotStatistics) else stats, dtype=float)


def check_cost_ratio(stats, w) -> CostRatioCheck:
    """Admissibility of the closed-form allocation.

    Requires ``|rho_11| > |rho_12| > ... > |rho_1K|`` and, for ``k = 2..K``,
    ``w_{k-1}/w_k > (rho_{k-1}^2 - rho_k^2) / (rho_k^2 - rho_{k+1}^2)`` with
    ``rho_{K+1} = 0``. Violations name the offending (1-based) level.
    """
    rho = _rho_of(stats)
    w = np.asarray(w, dtype=float)
    K = rho.shape[0]
    if w.shape[0] != K:
        raise DomainError(f"{w.shape[0]} costs for {K} models")
    a = np.abs(rho)
    r2 = np.append(rho**2, 0.0)
    violations = []
    for k in range(1, K):
        if not a[k - 1] > a[k]:
            violations.append({
                "k": k, "kind": "ordering",
                "message": f"|rho_1,{k}| = {a[k - 1]:.6g} is not above |rho_1,{k + 1}| = {a[k]:.6g}",
            })
    for k in range(1, K):
        lhs = w[k - 1] / w[k]
        num = r2[k - 1] - r2[k]
        den = r2[k] - r2[k + 1]
        ok = den > 0 and lhs > num / den
        if not ok:
            rhs = num / den if den != 0 else float("inf")
            violations.append({
                "k": k + 1, "kind": "cost_ratio",
                "message": f"w_{k}/w_{k + 1} = {lhs:.6g} does not exceed {rhs:.6g}",
            })
    violations.sort(key=lambda v: v["k"])
    return CostRatioCheck(not violations, violations)


def allocation_ratios(stats, w) -> np.ndarray:
    """Ratios ``r_k = m_k / m_1`` of the closed-form allocation (no admissibility gate).

    Negative radicands (inadmissible statistics) are clipped to zero.
    """
    rho = _rho_of(stats)
    w = np.asarray(w, dtype=float)
    K = rho.shape[0]
    if K == 1:
        return np.ones(1)
    r2 = np.append(rho**2, 0.0)
    den = 1.0 - r2[1]
    if den <= 0:
        raise AllocationError("rho_1,2 = 1: the second model is a perfect surrogate, ratios are unbounded")
    rad = w[0] * (r2[:K] - r2[1:K + 1]) / (w * den)
    r = np.sqrt(np.clip(rad, 0.0, None))
    r[0] = 1.0
    return r


def control_weights(stats) -> np.ndarray:
    """``alpha_k = rho_1k sigma_1 / sigma_k``; ``alpha_1 = 1``."""
    rho = np.asarray(stats.rho, dtype=float)
    sigma = np.asarray(stats.sigma, dtype=float)
    alpha = rho * sigma[0] / sigma
    alpha[0] = 1.0
    return alpha


def optimal_allocation(stats: PilotStatistics, w, p: float, d: int,
                       perturbation_applied: bool = False) -> AllocationPlan:
    """Closed-form optimal allocation for budget ``p`` over ``d + 2`` Saltelli matrices.

    ``m_k = floor(p_eff r_k / (w^T r))`` per level with ``p_eff = p / (d + 2)``,
    then made non-decreasing in ``k``.
    """
    w = np.asarray(w, dtype=float)
    if stats.K != w.shape[0]:
        raise DomainError(f"{w.shape[0]} costs for {stats.K} models")
    if d < 1:
        raise DomainError("d must be >= 1")
    if stats.K > 1:
        check = check_cost_ratio(stats, w)
        if not check.admissible:
            msgs = "; ".join(f"k={v['k']}: {v['message']}" for v in check.violations)
            raise AllocationError(
                f"pilot statistics are inadmissible for the closed-form allocation ({msgs}); "
                "perturb the cheapest model (perturb_lowfid) to restore the correlation ordering",
                check.violations,
            )
    r = allocation_ratios(stats, w)
    p_eff = p / (d + 2)
    m = np.floor(p_eff * r / float(w @ r)).astype(int)
    m = np.maximum.accumulate(m)
    if m[0] < 2:
        raise BudgetTooSmallError(
            f"budget {p} gives m_1 = {m[0]} < 2 high-fidelity samples; "
            f"need p >= {2 * (d + 2) * float(w @ r):.4g}"
        )
    return AllocationPlan(m, control_weights(stats), r, float(p), p_eff, w, d, True, perturbation_applied)


# ---------------------------------------------------------------------------
# multifidelity estimators


def _check_plan(table: EvalTable, plan: AllocationPlan):
    if plan.K != table.K:
        raise DomainError(f"plan has {plan.K} levels, table has {table.K}")
    for k in range(table.K):
        if plan.m[k] > table.rows(k):
            raise DomainError(f"level {k + 1} needs {plan.m[k]} rows, table has {table.rows(k)}")
        if plan.m[k] < 2:
            raise DomainError(f"level {k + 1}: at least 2 rows are required")


def mfmc_variance(table: EvalTable, plan: AllocationPlan) -> float:
    _check_plan(table, plan)
    m, a = plan.m, plan.alpha
    V = sample_mean_var(_pooled(table.model(0), m[0]))[1]
    for k in range(1, table.K):
        hi = sample_mean_var(_pooled(table.model(k), m[k]))[1]
        lo = sample_mean_var(_pooled(table.model(k), m[k - 1]))[1]
        V = V + a[k] * (hi - lo)
    return float(V)


def mfmc_mean(table: EvalTable, plan: AllocationPlan) -> float:
    _check_plan(table, plan)
    m, a = plan.m, plan.alpha
    E = float(np.mean(_pooled(table.model(0), m[0])))
    for k in range(1, table.K):
        hi = np.mean(_pooled(table.model(k), m[k]))
        lo = np.mean(_pooled(table.model(k), m[k - 1]))
        E = E + a[k] * (hi - lo)
    return float(E)


def mfmc_sobol(table: EvalTable, plan: AllocationPlan) -> SobolEstimate:
    """Multifidelity Sobol' estimate with per-level diagnostic terms.

    ``terms`` holds, per level ``k``, the single-model indices at ``m_k`` rows
    (``S_hi``, ``ST_hi``) and, for ``k >= 2``, at ``m_{k-1}`` rows (``S_lo``,
    ``ST_lo``), plus the raw ``V``, ``V_j`` and ``T_j`` behind them.
    """
    _check_plan(table, plan)
    d, m, a = table.d, plan.m, plan.alpha
    E, V, Vj, Tj = _level_terms(table.model(0), m[0], d)
    terms = {"levels": [_term_record(1, m[0], (E, V, Vj, Tj), None)]}
    for k in range(1, table.K):
        hi = _level_terms(table.model(k), m[k], d)
        lo = _level_terms(table.model(k), m[k - 1], d)
        E = E + a[k] * (hi[0] - lo[0])
        V = V + a[k] * (hi[1] - lo[1])
        Vj = Vj + a[k] * (hi[2] - lo[2])
        Tj = Tj + a[k] * (hi[3] - lo[3])
        terms["levels"].append(_term_record(k + 1, m[k], hi, (m[k - 1], lo)))
    S, ST, degenerate = _ratios(V, Vj, Tj)
    method = "mc" if table.K == 1 else "mfmc"
    return SobolEstimate(float(V), Vj, Tj, S, ST, method, table.qoi, float(E), degenerate, terms)


def _term_record(k, m, hi, lo):
    rec = {"k": k, "m": int(m), "E_hi": hi[0], "V_hi": hi[1], "Vj_hi": hi[2], "Tj_hi": hi[3]}
    S, ST, _ = _ratios(hi[1], hi[2], hi[3])
    rec.update(S_hi=S, ST_hi=ST)
    if lo is not None:
        m_lo, t = lo
        S, ST, _ = _ratios(t[1], t[2], t[3])
        rec.update(m_lo=int(m_lo), E_lo=t[0], V_lo=t[1], Vj_lo=t[2], Tj_lo=t[3], S_lo=S, ST_lo=ST)
    return rec


def analytic_estimator_variance(stats: PilotStatistics, plan: AllocationPlan, m=None) -> float:
    """Predicted variance of the multifidelity variance estimator.

    Evaluated from the pilot moments with sample counts ``m`` (default
    ``plan.m``); every count must be at least 4.

    Notes
    -----
    The single-model term ``(delta - sigma^4 (m-3)/(m-1)) / m`` is evaluated as
    ``(tau^2 + 2 sigma^4 / (m-1)) / m``, the same quantity since
    ``delta - sigma^4 = tau^2``. With sample moments the two sides differ at
    O(1/n), and only the second form keeps the prediction non-negative when
    the cross terms nearly cancel.

    ``m`` counts the values each level variance is computed from. The
    estimators here pool the A and B rows, so ``m=2 * plan.m`` predicts their
    spread.
    """
    m = np.asarray(plan.m if m is None else m, dtype=float)
    if np.any(m < 4):
        raise DomainError(f"analytic variance needs m_k >= 4 for every level, got {m.astype(int).tolist()}")
    s, tau, q, rho, a = stats.sigma, stats.tau, stats.q, stats.rho, plan.alpha

    def single(k, mk):
        return (tau[k] ** 2 + 2.0 / (mk - 1.0) * s[k] ** 4) / mk

    def cross(k, mk):
        return (q[k] * tau[0] * tau[k] + 2.0 / (mk - 1.0) * rho[k] ** 2 * s[0] ** 2 * s[k] ** 2) / mk

    var = single(0, m[0])
    for k in range(1, m.shape[0]):
        var += a[k] ** 2 * (single(k, m[k - 1]) - single(k, m[k]))
        var += 2.0 * a[k] * (cross(k, m[k]) - cross(k, m[k - 1]))
    return float(var)


# ---------------------------------------------------------------------------
# low-fidelity perturbation


def _design(S, lower, upper):
    S = np.atleast_2d(np.asarray(S, dtype=float))
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if S.shape[1] != lower.shape[0]:
        raise DomainError(f"sample matrix has {S.shape[1]} columns, bounds have {lower.shape[0]}")
    return (S - 0.5 * (lower + upper)) / (0.5 * (upper - lower))


def fit_discrepancy(y_hf, y_lf, S, lower, upper) -> np.ndarray:
    """Linear trend ``d`` of ``y_hf - y_lf`` over bound-normalised inputs (intercept dropped)."""
    y_hf = np.asarray(y_hf, dtype=float).ravel()
    y_lf = np.asarray(y_lf, dtype=float).ravel()
    X = _design(S, lower, upper)
    if not (X.shape[0] == y_hf.shape[0] == y_lf.shape[0]):
        raise DomainError("pilot vectors must align with the sample matrix rows")
    M = np.column_stack([np.ones(X.shape[0]), X])
    coef, _, rank, _ = np.linalg.lstsq(M, y_hf - y_lf, rcond=None)
    if rank < M.shape[1]:
        raise LeastSquaresError(f"pilot sample matrix is rank deficient (rank {rank} < {M.shape[1]})")
    return coef[1:]


def perturb_lowfid(y_hf, y_lf, S, phi: float, s_prod, y_lf_prod, lower, upper) -> np.ndarray:
    """Low-fidelity outputs with the fitted discrepancy trend subtracted.

    Returns ``y_lf_prod - phi * (s_prod @ d)`` where ``d`` is the least-squares
    trend of ``y_hf - y_lf`` on the pilot points ``S`` and both sample
    matrices are normalised to ``[-1, 1]`` by the parameter bounds. This
    lowers the correlation of the low-fidelity model with ``y_hf``.
    """
    y_lf_prod = np.asarray(y_lf_prod, dtype=float).ravel()
    if phi == 0:
        return y_lf_prod.copy()
    d = fit_discrepancy(y_hf, y_lf, S, lower, upper)
    X = _design(s_prod, lower, upper)
    if X.shape[0] != y_lf_prod.shape[0]:
        raise DomainError("production vector must align with the production sample matrix")
    return y_lf_prod - phi * (X @ d)


def budget_for(w: Sequence[float], m: Sequence[int], d: int) -> float:
    """Cost of evaluating allocation ``m`` on all ``d + 2`` matrices."""
    return float(np.dot(np.asarray(w, dtype=float), np.asarray(m, dtype=float)) * (d + 2))
