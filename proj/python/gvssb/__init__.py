"""Grouped spike-and-slab variational regression.

Thin wrapper over the native module: reports come back as plain dicts,
mirroring the JSON files written by the command-line tool.
"""

import json

import _gvssb

__all__ = [
    "fit",
    "fit_additive",
    "predict_additive",
    "simulate_linear",
    "simulate_additive",
    "selection_metrics",
]


def fit(X, y, groups=None, **options):
    """Fit the grouped model; returns the report dict.

    `groups` lists one label per design column (columns sharing a label form
    a group); None treats every column as its own group.
    """
    return json.loads(_gvssb.fit_linear(X, y, list(groups or []), **options))


def fit_additive(X, y, d=5, **options):
    """B-spline additive fit; returns (report, basis) dicts."""
    report, basis = _gvssb.fit_additive(X, y, d, **options)
    return json.loads(report), json.loads(basis)


def predict_additive(report, basis, X_new):
    """Predictions from a (report, basis) pair on new covariate rows."""
    return _gvssb.predict_additive(json.dumps(report), json.dumps(basis), X_new)


simulate_linear = _gvssb.simulate_linear
simulate_additive = _gvssb.simulate_additive
selection_metrics = _gvssb.selection_metrics
