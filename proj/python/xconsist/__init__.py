"""Cross-task consistency toolkit.

Thin Python layer over the native core; JSON-producing calls are decoded
into plain dicts here.
"""

import json as _json

from ._xconsist import (
    Error,
    NumericError,
    ValidationError,
    closed_form_c1,
    consistency_loss,
    dataset_stats_file as dataset_stats,
    default_toy_config,
    generate,
    normalized_words,
    simulate_c1,
    soft_rank,
    soft_rank_jacobian,
    spearman,
    sweep_csv,
    train_toy,
)
from . import _xconsist

__all__ = [
    "Error",
    "NumericError",
    "ValidationError",
    "closed_form_c1",
    "consistency_loss",
    "dataset_stats",
    "default_toy_config",
    "evaluate",
    "generate",
    "normalized_words",
    "reliability",
    "simulate_c1",
    "soft_rank",
    "soft_rank_jacobian",
    "spearman",
    "sweep_csv",
    "train_toy",
]


def _paths(p):
    return [str(x) for x in p] if isinstance(p, (list, tuple)) else [str(p)]


def evaluate(samples, records, anchor, eval, k_max=5, pooled_rho=False):
    """Consistency report (C_k, preference accuracy, rho_rank) as a dict."""
    text = _xconsist.evaluate_files(_paths(samples), _paths(records), anchor, eval, k_max, pooled_rho)
    return _json.loads(text)


def reliability(loglik, quality, bins=10, temperature=1.0, quantile=0.95):
    """Binned reliability map plus linear and lower-quantile fits, as a dict."""
    text = _xconsist.reliability_json(list(loglik), list(quality), bins, temperature, quantile)
    return _json.loads(text)
