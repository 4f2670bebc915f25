"""Python access to the seqal core."""

import json
import os

from ._core import (
    SeqalError,
    cli,
    cluster_count,
    forward_backward,
    plan_budgets,
    project_2d,
    round_budget,
    score_bald,
    score_entropy,
    score_least_confidence,
    score_margin,
    score_mlc,
    strategy_names,
    viterbi,
)
from . import _core

__all__ = [
    "SeqalError",
    "cli",
    "cluster_count",
    "forward_backward",
    "generate_conll",
    "plan_budgets",
    "project_2d",
    "round_budget",
    "run_experiment",
    "score_bald",
    "score_entropy",
    "score_least_confidence",
    "score_margin",
    "score_mlc",
    "strategy_names",
    "viterbi",
]


def generate_conll(spec=None):
    """Synthetic corpus as CoNLL text per split."""
    return _core.generate_conll(json.dumps(spec or {}))


def run_experiment(config, base_dir="."):
    """Run an experiment from a config dict; returns one dict per round."""
    return _core.run_experiment(json.dumps(config), os.fspath(base_dir))
