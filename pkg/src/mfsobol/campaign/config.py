"""Campaign configuration: YAML schema, validation and digests.

Example::

    space:                      # optional, defaults to the carotid (r, E, h) box
      - {name: r, lower: 2.96e-3, upper: 3.62e-3, unit: m}
    models:                     # highest fidelity first
      - {id: 1d, kind: oned, cost: 1.0}
      - {id: 0d, kind: zerod, cost: 0.3}
    qois: [P_sys, PP, dr_max]
    budgets: [500, 1000, 2000, 4000]
    n_pilot: 150
    phi: 1.0
    replicates: 100
    replicate_mode: random      # or sobol_blocks
    seed: 20230101
    pilot_skip: 1
    bundle_skip: 1
    pc_order: 4
    pc_samples: 90
    hemo: {dt_1d: 0.0025}       # any HemoConfig field
    waveform: null              # two-column file, relative to the config file
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ..errors import ConfigError, DomainError
from ..models.analytic import KINDS as ANALYTIC_KINDS
from ..models.physics import HemoConfig
from ..models.qoi import QOI_NAMES
from ..models.waveform import InflowWaveform, carotid_waveform
from ..sampling import ParameterSpace, carotid_space

MODEL_KINDS = ("oned", "zerod", "zerod_perturbed", "analytic", "surrogate_hf")
HEMO_KINDS = ("oned", "zerod", "zerod_perturbed", "surrogate_hf")
ANALYTIC_QOI = "y"
REPLICATE_MODES = ("random", "sobol_blocks")

QOI_ALIASES = {
    "psys": "P_sys", "p_sys": "P_sys", "P_sys": "P_sys",
    "pp": "PP", "PP": "PP",
    "dr": "dr_max", "drmax": "dr_max", "dr_max": "dr_max",
    "y": ANALYTIC_QOI,
}

_TOP_KEYS = {
    "space", "models", "qois", "budgets", "n_pilot", "phi", "replicates", "replicate_mode",
    "seed", "pilot_skip", "bundle_skip", "pc_order", "pc_samples", "hemo", "waveform", "name",
}
_MODEL_KEYS = {"id", "kind", "cost", "function", "params", "nodes", "dt_factor", "hemo", "discrepancy"}


def canonical_qoi(name: str) -> str:
    try:
        return QOI_ALIASES[name]
    except KeyError:
        raise ConfigError("qois", f"unknown QoI {name!r}; choose from {sorted(set(QOI_ALIASES))}") from None


@dataclass(frozen=True)
class ModelSpec:
    """One fidelity level.

    ``analytic`` models take ``function`` (ishigami, linear_additive, constant,
    g_function) and optional ``params``; ``surrogate_hf`` takes ``nodes``
    (default 33), ``dt_factor`` (default 1/8, keeps the Courant number of
    the refined grid below one) and ``discrepancy``, one amplitude per QoI
    (default 0) of a synthetic model-form error: each output is multiplied by
    ``1 + a * g(u)`` with ``g`` the mean-zero quadratic
    ``sum_{i<j} u_i u_j + (sum_i u_i^2 - d/3) / 2`` of the inputs scaled to
    ``[-1, 1]``. ``hemo`` overrides shared HemoConfig fields for this model only.
    """

    id: str
    kind: str
    cost: float
    function: str = ""
    params: dict = field(default_factory=dict)
    nodes: int = 33
    dt_factor: float = 0.125
    hemo: dict = field(default_factory=dict)
    discrepancy: tuple = (0.0, 0.0, 0.0)
    bounds: tuple = ()

    @property
    def qois(self) -> tuple[str, ...]:
        return (ANALYTIC_QOI,) if self.kind == "analytic" else QOI_NAMES

    @property
    def solver_kind(self) -> str:
        # perturbed 0D shares raw evaluations with plain 0D
        return "zerod" if self.kind == "zerod_perturbed" else self.kind

    def solver_spec(self) -> dict:
        spec = {"kind": self.solver_kind}
        if self.kind == "analytic":
            spec.update(function=self.function, params=self.params)
        if self.kind == "surrogate_hf":
            spec.update(nodes=self.nodes, dt_factor=self.dt_factor)
            if any(self.discrepancy):
                spec.update(discrepancy=list(self.discrepancy), bounds=[list(b) for b in self.bounds])
        if self.hemo:
            spec["hemo"] = dict(sorted(self.hemo.items()))
        return spec


@dataclass(frozen=True)
class CampaignConfig:
    space: ParameterSpace
    models: tuple[ModelSpec, ...]
    qois: tuple[str, ...]
    budgets: tuple[float, ...]
    n_pilot: int = 150
    phi: float = 1.0
    replicates: int = 100
    replicate_mode: str = "random"
    seed: int = 20230101
    pilot_skip: int = 1
    bundle_skip: int = 1
    pc_order: int = 4
    pc_samples: int = 90
    hemo: HemoConfig = field(default_factory=HemoConfig)
    waveform_path: str | None = None
    name: str = "campaign"
    raw: dict = field(default_factory=dict, compare=False)

    @property
    def K(self) -> int:
        return len(self.models)

    @property
    def w(self) -> np.ndarray:
        return np.array([m.cost for m in self.models])

    @property
    def perturbed(self) -> list[int]:
        return [k for k, m in enumerate(self.models) if m.kind == "zerod_perturbed"]

    def waveform(self) -> InflowWaveform:
        if self.waveform_path is None:
            return carotid_waveform()
        return InflowWaveform.from_file(self.waveform_path)

    def waveform_digest(self) -> str:
        wf = self.waveform()
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(wf.t).tobytes())
        h.update(np.ascontiguousarray(wf.Q).tobytes())
        h.update(repr(float(wf.period)).encode())
        return h.hexdigest()

    def model_hemo(self, k: int) -> HemoConfig:
        spec = self.models[k]
        return self.hemo.with_(**spec.hemo) if spec.hemo else self.hemo

    def model_digest(self, k: int) -> str:
        """Digest of everything that determines model ``k``'s outputs at a point."""
        spec = self.models[k]
        payload = {"solver": spec.solver_spec()}
        if spec.kind in HEMO_KINDS:
            payload["hemo"] = self.model_hemo(k).to_dict()
            payload["waveform"] = self.waveform_digest()
        return _digest(payload)

    def digest(self) -> str:
        """Digest of the full configuration (traceability of every estimate)."""
        payload = dict(self.raw)
        payload["_models"] = [self.model_digest(k) for k in range(self.K)]
        return _digest(payload)


def _digest(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _require(cond, key, message):
    if not cond:
        raise ConfigError(key, message)


def _as_int(data, key, default, minimum=None):
    value = data.get(key, default)
    try:
        out = int(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected an integer, got {value!r}") from None
    if out != value and not isinstance(value, (int, np.integer)):
        if float(value) != out:
            raise ConfigError(key, f"expected an integer, got {value!r}")
    if minimum is not None:
        _require(out >= minimum, key, f"must be >= {minimum}, got {out}")
    return out


def _as_float(data, key, default):
    value = data.get(key, default)
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(key, f"expected a number, got {value!r}") from None


def parse_config(data: dict, base_dir: Path | None = None) -> CampaignConfig:
    """Validate a config mapping; errors name the offending key."""
    _require(isinstance(data, dict), "<root>", "config must be a mapping")
    unknown = set(data) - _TOP_KEYS
    _require(not unknown, sorted(unknown)[0] if unknown else "", "unknown key")

    if data.get("space") is None:
        space = carotid_space()
    else:
        recs = data["space"]
        _require(isinstance(recs, list) and recs, "space", "expected a non-empty list of parameters")
        for i, r in enumerate(recs):
            _require(isinstance(r, dict), f"space[{i}]", "expected a mapping")
            for k in ("name", "lower", "upper"):
                _require(k in r, f"space[{i}].{k}", "missing")
        try:
            space = ParameterSpace.from_records(recs)
        except (DomainError, ValueError, TypeError) as exc:
            raise ConfigError("space", str(exc)) from None

    _require("models" in data, "models", "missing")
    recs = data["models"]
    _require(isinstance(recs, list) and recs, "models", "expected a non-empty list")
    models = []
    for i, r in enumerate(recs):
        key = f"models[{i}]"
        _require(isinstance(r, dict), key, "expected a mapping")
        extra = set(r) - _MODEL_KEYS
        _require(not extra, f"{key}.{sorted(extra)[0] if extra else ''}", "unknown key")
        for k in ("id", "kind", "cost"):
            _require(k in r, f"{key}.{k}", "missing")
        kind = r["kind"]
        _require(kind in MODEL_KINDS, f"{key}.kind", f"{kind!r} not in {MODEL_KINDS}")
        cost = _as_float(r, "cost", None) if "cost" in r else None
        _require(cost is not None and cost > 0, f"{key}.cost", "must be > 0")
        function = str(r.get("function", ""))
        if kind == "analytic":
            _require(function in ANALYTIC_KINDS, f"{key}.function", f"{function!r} not in {ANALYTIC_KINDS}")
        params = r.get("params") or {}
        _require(isinstance(params, dict), f"{key}.params", "expected a mapping")
        hemo = r.get("hemo") or {}
        _require(isinstance(hemo, dict), f"{key}.hemo", "expected a mapping")
        disc = r.get("discrepancy", 0.0)
        if not isinstance(disc, list):
            disc = [disc] * len(QOI_NAMES)
        try:
            disc = tuple(float(a) for a in disc)
        except (TypeError, ValueError):
            raise ConfigError(f"{key}.discrepancy", "expected a number or a list of numbers") from None
        _require(len(disc) == len(QOI_NAMES), f"{key}.discrepancy", f"expected {len(QOI_NAMES)} amplitudes")
        _require(kind == "surrogate_hf" or not any(disc), f"{key}.discrepancy", "only surrogate_hf models take it")
        models.append(ModelSpec(
            id=str(r["id"]), kind=kind, cost=cost, function=function, params=dict(params),
            nodes=_as_int(r, "nodes", 33, 3), dt_factor=_as_float(r, "dt_factor", 0.125), hemo=dict(hemo),
            discrepancy=disc, bounds=(tuple(space.lower), tuple(space.upper)),
        ))
    ids = [m.id for m in models]
    _require(len(set(ids)) == len(ids), "models", f"duplicate model ids {ids}")
    _require(models[0].kind != "zerod_perturbed", "models[0].kind", "the highest fidelity cannot be perturbed")
    for k in range(1, len(models)):
        _require(models[k].cost <= models[k - 1].cost, f"models[{k}].cost",
                 "models must be listed highest fidelity (largest cost) first")
    hemo_kinds = {m.kind in HEMO_KINDS for m in models}
    _require(len(hemo_kinds) == 1, "models", "cannot mix analytic and haemodynamic models")
    for k, m in enumerate(models):
        if m.kind in HEMO_KINDS:
            _require(space.d == 3, "space", "haemodynamic models take exactly (r, E, h)")

    default_qois = [ANALYTIC_QOI] if models[0].kind == "analytic" else list(QOI_NAMES)
    qois_raw = data.get("qois", default_qois)
    _require(isinstance(qois_raw, list) and qois_raw, "qois", "expected a non-empty list")
    qois = tuple(canonical_qoi(str(q)) for q in qois_raw)
    for k, m in enumerate(models):
        for q in qois:
            _require(q in m.qois, "qois", f"model {m.id!r} does not provide {q!r}")

    budgets = data.get("budgets", [500])
    _require(isinstance(budgets, list) and budgets, "budgets", "expected a non-empty list")
    try:
        budgets = tuple(float(b) for b in budgets)
    except (TypeError, ValueError):
        raise ConfigError("budgets", "expected numbers") from None
    _require(all(b > 0 for b in budgets), "budgets", "must be > 0")

    hemo_raw = data.get("hemo") or {}
    _require(isinstance(hemo_raw, dict), "hemo", "expected a mapping")
    try:
        hemo = HemoConfig.from_dict(hemo_raw)
    except DomainError as exc:
        raise ConfigError("hemo", str(exc)) from None
    for k, m in enumerate(models):
        try:
            hemo.with_(**m.hemo)
        except (TypeError, DomainError) as exc:
            raise ConfigError(f"models[{k}].hemo", str(exc)) from None

    wf = data.get("waveform")
    if wf is not None:
        path = Path(wf)
        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path
        _require(path.is_file(), "waveform", f"file not found: {path}")
        wf = str(path)

    mode = str(data.get("replicate_mode", "random"))
    _require(mode in REPLICATE_MODES, "replicate_mode", f"{mode!r} not in {REPLICATE_MODES}")

    cfg = CampaignConfig(
        space=space, models=tuple(models), qois=qois, budgets=budgets,
        n_pilot=_as_int(data, "n_pilot", 150, 5),
        phi=_as_float(data, "phi", 1.0),
        replicates=_as_int(data, "replicates", 100, 2),
        replicate_mode=mode,
        seed=_as_int(data, "seed", 20230101, 0),
        pilot_skip=_as_int(data, "pilot_skip", 1, 0),
        bundle_skip=_as_int(data, "bundle_skip", 1, 0),
        pc_order=_as_int(data, "pc_order", 4, 0),
        pc_samples=_as_int(data, "pc_samples", 90, 1),
        hemo=hemo, waveform_path=wf, name=str(data.get("name", "campaign")),
        raw=json.loads(json.dumps(data, default=str)),
    )
    if wf is not None:
        try:
            cfg.waveform()
        except (DomainError, ValueError) as exc:
            raise ConfigError("waveform", str(exc)) from None
    return cfg


def load_config(path) -> CampaignConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("<file>", f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"invalid YAML: {exc}") from None
    return parse_config(data or {}, path.parent)


def with_overrides(cfg: CampaignConfig, **changes) -> CampaignConfig:
    """Re-validate a config after overriding top-level keys (CLI flags)."""
    raw = dict(cfg.raw)
    for k, v in changes.items():
        if v is not None:
            raw[k] = v
    if cfg.waveform_path is not None:
        raw["waveform"] = cfg.waveform_path
    return parse_config(raw)
