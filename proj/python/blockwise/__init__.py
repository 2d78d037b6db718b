# Copyright 2026 The blockwise Authors
# SPDX-License-Identifier: Apache-2.0
"""Chunked parallel-for with cost-model block sizes."""

from ._blockwise import (
    BlockwiseError,
    Features,
    ThreadPool,
    Weights,
    WorkloadSpec,
    amdahl_speedup,
    detect_topology,
    effective_work,
    estimate_cost,
    fit,
    loss,
    next_chunk_guided,
    normalize,
    parse_comp_literal,
    predict,
    predict_raw,
    random_weights,
    sweep,
    unit_task,
)

__all__ = [
    "BlockwiseError",
    "Features",
    "ThreadPool",
    "Weights",
    "WorkloadSpec",
    "amdahl_speedup",
    "detect_topology",
    "effective_work",
    "estimate_cost",
    "fit",
    "loss",
    "next_chunk_guided",
    "normalize",
    "parse_comp_literal",
    "predict",
    "predict_raw",
    "random_weights",
    "sweep",
    "unit_task",
]
