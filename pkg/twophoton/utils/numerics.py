#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""Blocked evaluation helpers for the TWOPHOTON project.

Double sums over a frequency lattice are evaluated one block of rows at a
time. Blocks may run on a thread pool, but partial results are always
combined in block order with a correctly rounded sum, so the outcome does
not depend on how many workers were used.
"""

import math
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Tuple, TypeVar

import numpy as np

logger = logging.getLogger(__name__)

T = TypeVar('T')


def row_blocks(n_rows: int, n_cols: int, block_elements: int) -> List[Tuple[int, int]]:
    """Split n_rows into contiguous half-open ranges of about block_elements cells."""
    rows_per_block = max(1, int(block_elements) // max(1, int(n_cols)))
    return [(start, min(n_rows, start + rows_per_block))
            for start in range(0, n_rows, rows_per_block)]


def map_blocks(func: Callable[[int, int], T], blocks: Sequence[Tuple[int, int]],
               threads: int = 1) -> List[T]:
    """Evaluate func(start, stop) for every block, returning results in block order."""
    if threads <= 1 or len(blocks) <= 1:
        return [func(start, stop) for start, stop in blocks]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(func, start, stop) for start, stop in blocks]
        return [future.result() for future in futures]


def exact_sum(values: Sequence[complex]) -> complex:
    """Correctly rounded sum of real or complex partials."""
    values = np.asarray(values)
    if np.iscomplexobj(values):
        return complex(math.fsum(values.real.tolist()), math.fsum(values.imag.tolist()))
    return math.fsum(values.tolist())


def blocked_sum(func: Callable[[int, int], complex], n_rows: int, n_cols: int,
                block_elements: int, threads: int = 1) -> complex:
    """Sum func over row blocks of an n_rows x n_cols lattice."""
    blocks = row_blocks(n_rows, n_cols, block_elements)
    partials = map_blocks(func, blocks, threads)
    logger.debug(f"Reduced {len(blocks)} block(s) of a {n_rows}x{n_cols} lattice")
    return exact_sum(partials)


def response_factor(omegas: np.ndarray, omega_atom: float, t: float,
                    singular_tolerance: float = 1e-9) -> np.ndarray:
    """Atomic response (1 - exp(-i(w - w_atom)t))/(w - w_atom).

    Points with |w - w_atom|*t below singular_tolerance take the limit i*t.
    """
    x = np.asarray(omegas, dtype=float) - omega_atom
    if t == 0:
        return np.zeros(x.shape, dtype=complex)

    near = np.abs(x) * t < singular_tolerance
    safe = np.where(near, 1.0, x)
    values = -np.expm1(-1j * safe * t) / safe
    return np.where(near, 1j * t, values)
