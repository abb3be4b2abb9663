"""Poissonian photon-number source on a fixed slot clock.

The attenuated beam is modelled as a stream of equally spaced time slots.
Slot j carries n_j photons with n_j ~ Poisson(mean_photon_number) and an
overall optical phase drawn uniformly from [0, 2pi).  The phase is carried
along for completeness; no counting statistic in this package depends on it.

Reproducibility contract: all randomness is drawn from Philox counter-based
generators keyed by (seed, purpose, chunk).  Slot streams are generated in
fixed-size canonical chunks, so any partition of the chunk list across
workers reproduces the serial stream exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import numpy as np

# Canonical chunk length in slots. Changing this constant changes which
# substream each slot draws from, i.e. the realisations for a given seed.
CHUNK_SLOTS = 1 << 22

# Substream purpose tags (first element of the Philox spawn key).
STREAM_SOURCE = 0
STREAM_ROUTING = 1
STREAM_DETECT = 2
STREAM_DARK = 3

TWO_PI = 2.0 * math.pi

# Slot counts above this are not exactly representable as float products and
# would take days to simulate anyway.
_MAX_SLOTS = 2**53


def substream(seed: int, *path: int) -> np.random.Generator:
    """Independent generator derived from (seed, path), stable across runs."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SourceConfig:
    mean_photon_number: float
    slot_rate: float  # slots per second
    duration: float  # seconds
    seed: int

    def __post_init__(self):
        if self.mean_photon_number < 0:
            raise ValueError("mean_photon_number must be >= 0")
        if self.slot_rate <= 0:
            raise ValueError("slot_rate must be > 0")
        if self.duration <= 0:
            raise ValueError("duration must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")


class PhotonSlot(NamedTuple):
    index: int
    n_photons: int
    global_phase: float


def slot_count(config: SourceConfig) -> int:
    """floor(duration * slot_rate), with an explicit overflow failure."""
    product = config.duration * config.slot_rate
    if not math.isfinite(product) or product > _MAX_SLOTS:
        raise OverflowError(f"slot count {product!r} overflows the exact integer range")
    return int(math.floor(product))


def num_chunks(config: SourceConfig) -> int:
    return -(-slot_count(config) // CHUNK_SLOTS)


def poisson_cdf_table(mean: float) -> np.ndarray:
    """Cumulative Poisson probabilities truncated at double precision.

    Inversion sampling: n = searchsorted(table, u, side='right') maps a
    uniform u to the smallest n with CDF(n) > u. One uniform per slot.
    """
    if mean < 0:
        raise ValueError("mean must be >= 0")
    if mean == 0:
        return np.array([1.0])
    term = math.exp(-mean)
    cdf = [term]
    k = 0
    # extend until the remaining tail is below double-precision resolution
    while cdf[-1] < 1.0 - 1e-16 and k < 20 + int(12 * mean):
        k += 1
        term *= mean / k
        cdf.append(cdf[-1] + term)
    return np.asarray(cdf)


def sample_slot(config: SourceConfig, rng: np.random.Generator, index: int = 0) -> PhotonSlot:
    """Draw a single slot from the given generator (one uniform for n, one for phase)."""
    table = poisson_cdf_table(config.mean_photon_number)
    n = int(np.searchsorted(table, rng.random(), side="right"))
    phase = rng.random() * TWO_PI
    return PhotonSlot(index, n, phase)


def chunk_arrays(config: SourceConfig, chunk_index: int) -> tuple[int, np.ndarray, np.ndarray]:
    """(start_index, photon_numbers, phases) for one canonical chunk.

    This is the primitive every stream consumer builds on; the per-chunk
    substream makes the result independent of how chunks are distributed
    over workers.
    """
    total = slot_count(config)
    start = chunk_index * CHUNK_SLOTS
    if not 0 <= start < max(total, 1):
        raise IndexError(f"chunk {chunk_index} out of range")
    m = min(CHUNK_SLOTS, total - start)
    rng = substream(config.seed, STREAM_SOURCE, chunk_index)
    table = poisson_cdf_table(config.mean_photon_number)
    n = np.searchsorted(table, rng.random(m), side="right").astype(np.int64)
    phases = rng.random(m) * TWO_PI
    return start, n, phases


def generate_stream(config: SourceConfig, rng: np.random.Generator | None = None) -> Iterator[PhotonSlot]:
    """Yield slot_count(config) slots in index order.

    With rng=None (the normal case) slots come from the canonical chunked
    substreams and are reproducible for a fixed seed regardless of worker
    partitioning. Passing an explicit generator draws slot-by-slot from it
    instead, which is handy for hand-built streams in tests.
    """
    total = slot_count(config)
    if rng is not None:
        for index in range(total):
            yield sample_slot(config, rng, index)
        return
    for chunk in range(num_chunks(config)):
        start, n, phases = chunk_arrays(config, chunk)
        for offset in range(n.size):
            yield PhotonSlot(start + offset, int(n[offset]), float(phases[offset]))
