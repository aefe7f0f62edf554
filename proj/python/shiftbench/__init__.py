"""Label-shift benchmarking and similarity-based training augmentation."""

import json

from ._core import (
    CoverageError,
    IoError,
    Manifest,
    ShiftbenchError,
    ShiftScenario,
    ValidationError,
    average_precision,
    classification_report,
    cosine_similarity,
    keyword_embed,
    label_distribution,
    load_manifest,
    make_scenario,
    make_shift,
    oracle,
    parse_manifest,
    resample,
    save_manifest,
    standard_scenarios,
)
from . import _core

__all__ = [
    "CoverageError",
    "IoError",
    "Manifest",
    "ShiftbenchError",
    "ShiftScenario",
    "ValidationError",
    "average_precision",
    "classification_report",
    "compare_grid",
    "cosine_similarity",
    "keyword_embed",
    "label_distribution",
    "load_manifest",
    "make_scenario",
    "make_shift",
    "oracle",
    "parse_manifest",
    "resample",
    "run_suite",
    "save_manifest",
    "standard_scenarios",
    "t_rain",
]


def t_rain(real, synthetic, eta, beta=210, dims=256, seed=0, iterations=None, embeddings=None):
    """Returns the augmented manifest and the augmentation report as a dict."""
    manifest, report = _core.t_rain(real, synthetic, eta, beta, dims, seed, iterations, embeddings)
    return manifest, json.loads(report)


def run_suite(config, out_dir=None):
    """Runs a shift suite from a config file; returns the results grid as a dict."""
    return json.loads(_core.run_suite(config, out_dir))


def compare_grid(grid, baseline="20", treated="t-RAIN"):
    """Per-shift mean accuracy deltas in percentage points between two split tags."""
    return json.loads(_core.compare_grid(grid, baseline, treated))
