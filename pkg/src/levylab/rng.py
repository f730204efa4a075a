"""Reproducible random streams for Monte Carlo work.

Paths are grouped into fixed-size blocks and every block owns a stream spawned
from one master :class:`numpy.random.SeedSequence`. The block layout depends
only on the path count, so results do not depend on how blocks are scheduled
across workers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

BLOCK_SIZE = 256


def as_generator(rng) -> np.random.Generator:
    """Coerce a seed, SeedSequence or Generator into a Generator."""
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(rng))
    return np.random.default_rng(rng)


def block_slices(n_paths: int, block_size: int = BLOCK_SIZE) -> list[slice]:
    return [slice(i, min(i + block_size, n_paths)) for i in range(0, n_paths, block_size)]


def block_streams(seed, n_paths: int, block_size: int = BLOCK_SIZE):
    """Return ``[(slice, Generator), ...]`` covering ``range(n_paths)``."""
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, np.random.Generator):
        ss = np.random.SeedSequence(int(seed.integers(2**63)))
    else:
        ss = np.random.SeedSequence(seed)
    slices = block_slices(n_paths, block_size)
    children = ss.spawn(len(slices))
    return [(s, np.random.Generator(np.random.PCG64(c))) for s, c in zip(slices, children)]


def map_blocks(fn, streams, threads: int = 1):
    """Apply ``fn(slice, rng)`` to every block, preserving block order."""
    if threads <= 1 or len(streams) <= 1:
        return [fn(s, g) for s, g in streams]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda sg: fn(*sg), streams))
