"""Python bindings for the mlmcq estimators, schedules and LQG references."""

import json

from ._mlmcq import (
    ContractionViolation,
    ConvergenceError,
    Error,
    InvalidParameter,
    ResourceError,
    benchmark_problem,
    derive_bounds,
    mlmcb_cost,
    mlmcb_error_bound,
    mlmcb_schedule,
    mlmcu_expected_cost,
    plain_constants,
    reference_instance_q,
    reference_q,
    riccati_solve,
    rmsre,
    simple_mc_schedule,
    truncate,
)
from ._mlmcq import run_json as _run_json

__all__ = [
    "ContractionViolation",
    "ConvergenceError",
    "Error",
    "InvalidParameter",
    "ResourceError",
    "benchmark_problem",
    "derive_bounds",
    "mlmcb_cost",
    "mlmcb_error_bound",
    "mlmcb_schedule",
    "mlmcu_expected_cost",
    "plain_constants",
    "reference_instance_q",
    "reference_q",
    "riccati_solve",
    "rmsre",
    "run_experiment",
    "simple_mc_schedule",
    "truncate",
]


def run_experiment(config):
    """Run a config (dict, same schema as the CLI) and return (records, summary)."""
    records, summary = _run_json(json.dumps(config))
    return records, json.loads(summary)
