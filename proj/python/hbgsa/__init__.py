#
# HBGSA - hydrogen-bond graph affinity toolkit
# SPDX-License-Identifier: Apache-2.0
#
"""Hydrogen-bond graph drug-target affinity toolkit."""

from ._hbgsa import (
    HbgsaError,
    concordance_index,
    detect_hbonds,
    evaluate_metrics,
    hbond_density,
    mae,
    param_count,
    pearson_r,
    rmse,
    run_cli,
    smiles_atom_count,
)

__all__ = [
    "HbgsaError",
    "concordance_index",
    "detect_hbonds",
    "evaluate_metrics",
    "hbond_density",
    "mae",
    "param_count",
    "pearson_r",
    "rmse",
    "run_cli",
    "smiles_atom_count",
]

__version__ = "0.1.0"
