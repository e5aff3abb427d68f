"""Multifidelity active-learning subset simulation."""

import json
import os
from pathlib import Path

from ._core import (
    AdapterCrashError,
    ConditioningError,
    DeterminismError,
    DomainError,
    Error,
    EvaluationError,
    GaussianProcess,
    ProtocolError,
    QuantileTracker,
    RandomVariable,
    SpecError,
    ValidationError,
    __version__,
    borehole,
    chain_autocorrelation,
    cov_from,
    exceedance_probability,
    four_branch,
    level_cov,
    normal_cdf,
    normal_quantile,
    pf_indicator,
    rastrigin,
    u_value,
)
from . import _core


def _spec_text(spec):
    if isinstance(spec, (str, os.PathLike)) and Path(spec).is_file():
        return Path(spec).read_text()
    if isinstance(spec, dict):
        return json.dumps(spec)
    return str(spec)


def validate(spec):
    """Effective run spec (defaults filled in) as a dict."""
    return json.loads(_core.validate_spec(_spec_text(spec)))


def run(spec, *, seed=None, method=None, output_dir=None, verbosity=None, resume=False):
    """Runs a spec (dict, JSON text or file path) and returns report.json as a dict.

    The dict gains an ``exit_code`` entry: 0 converged, 2 not converged.
    """
    code, out = _core.execute(
        _spec_text(spec), seed, method,
        None if output_dir is None else str(output_dir), verbosity, resume,
    )
    report = json.loads((Path(out) / "report.json").read_text())
    report["exit_code"] = code
    report["output_dir"] = out
    return report


__all__ = [
    "AdapterCrashError", "ConditioningError", "DeterminismError", "DomainError", "Error",
    "EvaluationError", "GaussianProcess", "ProtocolError", "QuantileTracker", "RandomVariable",
    "SpecError", "ValidationError", "__version__", "borehole", "chain_autocorrelation",
    "cov_from", "exceedance_probability", "four_branch", "level_cov", "normal_cdf",
    "normal_quantile", "pf_indicator", "rastrigin", "run", "u_value", "validate",
]
