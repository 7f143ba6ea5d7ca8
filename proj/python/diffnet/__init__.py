"""Differential Ising network estimation with debiased KLIEP inference."""

import json as _json

from ._diffnet import (
    ArgumentError,
    DataError,
    edge_count,
    edge_index,
    edge_pair,
    fit_sparklie1,
    gibbs_sample,
    global_test,
    gradient,
    hessian,
    ising_suff_stats,
    loss,
    sparse_kliep,
)
from ._diffnet import run_experiment as _run_experiment

__all__ = [
    "ArgumentError",
    "DataError",
    "edge_count",
    "edge_index",
    "edge_pair",
    "fit_sparklie1",
    "gibbs_sample",
    "global_test",
    "gradient",
    "hessian",
    "ising_suff_stats",
    "loss",
    "run_experiment",
    "sparse_kliep",
]


def run_experiment(config, paper_scale=False):
    """Run an experiment from a dict (or JSON string) config; `info` comes back parsed."""
    text = config if isinstance(config, str) else _json.dumps(config)
    out = _run_experiment(text, paper_scale)
    out["info"] = _json.loads(out["info"])
    return out
