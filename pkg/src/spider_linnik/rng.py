"""Seeded random streams and deterministic chunked parallel evaluation."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_SEED = 20070101
SEED_ENV_VAR = "SPIDER_LINNIK_SEED"

_threads = 1


class SeedError(ValueError):
    pass


def default_seed() -> int:
    """Seed from ``SPIDER_LINNIK_SEED`` when set, else the package default."""
    value = os.environ.get(SEED_ENV_VAR)
    if value is None or value.strip() == "":
        return DEFAULT_SEED
    try:
        seed = int(value)
    except ValueError:
        raise SeedError(f"{SEED_ENV_VAR}={value!r} is not an integer") from None
    if not 0 <= seed < 2**64:
        raise SeedError(f"{SEED_ENV_VAR} must be a 64-bit unsigned integer")
    return seed


def set_threads(n: int | None) -> None:
    """Set the worker count used by :func:`map_chunks` (``None`` = all cores)."""
    global _threads
    _threads = max(1, int(n if n is not None else (os.cpu_count() or 1)))


def get_threads() -> int:
    return _threads


@dataclass(frozen=True)
class RandomSource:
    """A reproducible random stream identified by ``(master_seed, stream_index)``.

    Streams are derived with :class:`numpy.random.SeedSequence` spawn keys, so
    distinct stream indices (and distinct substreams) are statistically
    independent. The underlying generator is created lazily and is stateful:
    build a fresh ``RandomSource`` to replay a sequence.
    """

    master_seed: int
    stream_index: int = 0
    path: tuple[int, ...] = ()
    _gen: np.random.Generator | None = field(default=None, init=False, repr=False,
                                             compare=False)

    def __post_init__(self):
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")
        if not 0 <= self.master_seed < 2**64:
            raise ValueError("master_seed must be a 64-bit unsigned integer")

    @property
    def spawn_key(self) -> tuple[int, ...]:
        return (self.stream_index, *self.path)

    @property
    def generator(self) -> np.random.Generator:
        if self._gen is None:
            seq = np.random.SeedSequence(self.master_seed, spawn_key=self.spawn_key)
            object.__setattr__(self, "_gen", np.random.Generator(np.random.PCG64(seq)))
        return self._gen

    def substream(self, index: int) -> "RandomSource":
        """Independent child stream; does not consume draws from the parent."""
        return RandomSource(self.master_seed, self.stream_index, (*self.path, int(index)))

    def substreams(self, count: int) -> list["RandomSource"]:
        return [self.substream(i) for i in range(count)]


def as_generator(rng: RandomSource | np.random.Generator | int | None) -> np.random.Generator:
    if isinstance(rng, RandomSource):
        return rng.generator
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def as_source(rng: RandomSource | int | None) -> RandomSource:
    if isinstance(rng, RandomSource):
        return rng
    if isinstance(rng, (np.random.Generator, np.random.RandomState)):
        raise TypeError("a RandomSource (or integer seed) is required here")
    return RandomSource(default_seed() if rng is None else int(rng))


def chunk_sizes(n: int, chunk_size: int) -> list[int]:
    if n <= 0:
        return []
    full, rest = divmod(n, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def map_chunks(fn: Callable[[int, RandomSource], T], n: int, rng: RandomSource,
               chunk_size: int = 250_000, threads: int | None = None) -> list[T]:
    """Evaluate ``fn(size, substream)`` over fixed-size chunks of ``n`` draws.

    Chunk ``i`` always uses ``rng.substream(i)``, so the concatenated output
    does not depend on the number of worker threads.
    """
    sizes = chunk_sizes(n, chunk_size)
    streams = rng.substreams(len(sizes))
    workers = threads or _threads
    if workers <= 1 or len(sizes) <= 1:
        return [fn(s, r) for s, r in zip(sizes, streams)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, sizes, streams))


def concat_chunks(parts: Sequence[np.ndarray | tuple]) -> np.ndarray | tuple:
    """Concatenate chunk outputs that are arrays or equal-length tuples of arrays."""
    if not parts:
        return np.empty(0)
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[k] for p in parts]) for k in range(len(parts[0])))
    return np.concatenate(parts)
