"""Deterministic Monte Carlo infrastructure.

Reproducibility contract: every random draw comes from a substream keyed by
(seed, purpose tag, chunk index), trials are processed in fixed-size chunks,
and chunk results are reduced in chunk order with exact summation. Results
are therefore bit-identical across reruns and across worker thread counts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

__all__ = ["CHUNK", "substream", "chunk_ranges", "parallel_chunk_stats",
           "parallel_chunk_arrays"]

# fixed chunk size; part of the stream layout, so changing it changes results
CHUNK = 1_000_000

# purpose tags for substreams
TAG_GAINS = 1
TAG_STATUS = 2
TAG_METRIC_NOISE = 3
TAG_THRESHOLDS = 4


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator keyed by a base seed plus integer tags."""
    return np.random.default_rng([int(seed), *[int(k) for k in key]])


def chunk_ranges(n: int, chunk: int) -> list[tuple[int, int, int]]:
    """(chunk_index, start, size) triples covering n trials."""
    if n <= 0:
        raise ValueError("chunk_ranges: n must be positive")
    if chunk <= 0:
        raise ValueError("chunk_ranges: chunk must be positive")
    out = []
    idx = 0
    for start in range(0, n, chunk):
        out.append((idx, start, min(chunk, n - start)))
        idx += 1
    return out


def _run_chunks(worker: Callable, ranges: Sequence[tuple[int, int, int]],
                threads: int) -> list:
    if threads <= 1 or len(ranges) <= 1:
        return [worker(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(worker, *r) for r in ranges]
        return [f.result() for f in futures]


def parallel_chunk_stats(worker: Callable[[int, int, int], np.ndarray],
                         n: int, chunk: int = CHUNK, threads: int = 1):
    """Mean and standard error of per-trial values produced chunk by chunk.

    worker(chunk_index, start, size) returns an array of shape (size,) or
    (size, width). Per-chunk sums are combined with math.fsum in chunk order,
    which keeps the reduction exact and independent of the thread count.
    """
    ranges = chunk_ranges(n, chunk)

    def stats(chunk_idx: int, start: int, size: int):
        vals = np.asarray(worker(chunk_idx, start, size), dtype=float)
        if vals.shape[0] != size:
            raise ValueError("parallel_chunk_stats: worker returned wrong length")
        return (np.sum(vals, axis=0), np.sum(vals * vals, axis=0))

    parts = _run_chunks(stats, ranges, threads)
    width = np.ndim(parts[0][0]) and len(parts[0][0])
    if width:
        total = np.array([math.fsum(p[0][j] for p in parts) for j in range(width)])
        total_sq = np.array([math.fsum(p[1][j] for p in parts) for j in range(width)])
    else:
        total = math.fsum(float(p[0]) for p in parts)
        total_sq = math.fsum(float(p[1]) for p in parts)
    mean = total / n
    var = np.maximum(total_sq / n - mean * mean, 0.0)
    se = np.sqrt(var / n)
    return mean, se, n


def parallel_chunk_arrays(worker: Callable[[int, int, int], np.ndarray],
                          n: int, chunk: int = CHUNK, threads: int = 1) -> np.ndarray:
    """Concatenated per-trial values, chunk order preserved."""
    ranges = chunk_ranges(n, chunk)
    parts = _run_chunks(worker, ranges, threads)
    return np.concatenate([np.asarray(p) for p in parts], axis=0)
