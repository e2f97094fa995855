"""Python access to the maglab experiments."""

import json

from . import _core
from ._core import DomainError, HypothesisViolation, area, curvature, experiments, orbit

__all__ = [
    "DomainError",
    "HypothesisViolation",
    "area",
    "check_hypotheses",
    "curvature",
    "default_config",
    "experiments",
    "orbit",
    "run",
]


def default_config(experiment):
    return json.loads(_core.default_config(experiment))


def check_hypotheses(experiment, config=None):
    _core.check_hypotheses(experiment, json.dumps(config or {}))


def run(experiment, config=None, out=None):
    """Run one experiment and return its report as a dict.

    With `out`, report.json, config.json and the CSV tables are written there too.
    """
    return json.loads(_core.run(experiment, json.dumps(config or {}), str(out) if out else ""))
