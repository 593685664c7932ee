"""Python bindings for the afshape waveform-shaping library."""

import json as _json

from ._core import (
    AfshapeError,
    ConfigError,
    Constellation,
    InfeasibleAcfError,
    InfeasibleSecurityError,
    SecureAcfSpec,
    SecurityMetrics,
    SolverError,
    expected_sq_acf,
    experiment_ids,
    metrics,
    metrics_closed_form,
    select_kappa,
    snr_loss,
    structured_allocation,
)
from ._core import design as _design
from ._core import run_experiment as _run_experiment

__all__ = [
    "AfshapeError",
    "ConfigError",
    "Constellation",
    "InfeasibleAcfError",
    "InfeasibleSecurityError",
    "SecureAcfSpec",
    "SecurityMetrics",
    "SolverError",
    "design",
    "expected_sq_acf",
    "experiment_ids",
    "metrics",
    "metrics_closed_form",
    "run_experiment",
    "select_kappa",
    "snr_loss",
    "structured_allocation",
]


def design(request):
    """Solve a design request (dict) and return the result as a dict."""
    return _json.loads(_design(_json.dumps(request)))


def run_experiment(config):
    """Run an experiment config (dict). Returns (tables, summary)."""
    tables, summary = _run_experiment(_json.dumps(config))
    return dict(tables), _json.loads(summary)
