"""End-to-end sensitivity campaigns: configuration, cached evaluation and stages."""

from .cache import EvalCache
from .config import CampaignConfig, ModelSpec, canonical_qoi, load_config, parse_config, with_overrides
from .evaluate import Evaluator
from .stages import (
    Campaign,
    CampaignResult,
    PilotRun,
    cost_report,
    paired_pc_order,
    run_mfmc,
    run_pilot,
    run_replicates,
    summarize_replicates,
)
from .validation import error_metrics, validate_fidelities

__all__ = [
    "Campaign", "CampaignConfig", "CampaignResult", "EvalCache", "Evaluator", "ModelSpec", "PilotRun",
    "canonical_qoi", "cost_report", "error_metrics", "load_config", "paired_pc_order", "parse_config",
    "run_mfmc", "run_pilot", "run_replicates", "summarize_replicates", "validate_fidelities", "with_overrides",
]
