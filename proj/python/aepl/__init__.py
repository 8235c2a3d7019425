"""Active prompt learning on frozen vision-language embeddings."""

import json

from ._aepl import (
    ConsistencyError,
    Dataset,
    DegenerateModelError,
    DomainError,
    Error,
    FormatError,
    IoError,
    RoundError,
    TrainingDivergedError,
    adjusted_rand_index,
    class_probs,
    generate_synthetic,
    kmeans,
    load_dataset,
    save_dataset,
)
from . import _aepl

__all__ = [
    "ConsistencyError",
    "Dataset",
    "DegenerateModelError",
    "DomainError",
    "Error",
    "FormatError",
    "IoError",
    "RoundError",
    "TrainingDivergedError",
    "adjusted_rand_index",
    "class_probs",
    "generate_synthetic",
    "kmeans",
    "load_dataset",
    "run_experiment",
    "run_suite",
    "save_dataset",
]


def run_experiment(dataset, config=None, seed=1):
    """Run every round of one experiment; returns one dict per round.

    ``config`` uses the same keys as the CLI's JSON config file.
    """
    return _aepl._run_experiment(dataset, json.dumps(config or {}), seed)


def run_suite(dataset, matrix=None, jobs=1):
    """Cross a config matrix with its seeds.

    Returns ``(rows, summary_csv)``: the per-run report rows and the mean/std table.
    """
    rows, summary = _aepl._run_suite(dataset, json.dumps(matrix or {}), jobs)
    return json.loads(rows), summary
