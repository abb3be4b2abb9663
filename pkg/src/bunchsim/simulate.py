"""End-to-end slot simulation: source -> splitter -> detectors -> tally.

The stream is processed in fixed canonical chunks (photon_source.CHUNK_SLOTS)
and every random draw comes from a substream keyed by (seed, purpose, chunk),
so the result is byte-identical for any worker count and any chunk schedule.
Worker processes only compute per-chunk candidate clicks; dark counts and the
dead-time filter run once on the merged per-detector streams, because dead
time couples events across chunk boundaries.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .coincidence_unit import CcuConfig, TallyTable, accumulate
from .detector_bank import (
    Detector,
    DetectorConfig,
    apply_dead_time,
    dark_events,
    detect_counts,
    split_counts,
)
from .photon_source import (
    STREAM_DARK,
    STREAM_DETECT,
    STREAM_ROUTING,
    SourceConfig,
    chunk_arrays,
    num_chunks,
    slot_count,
    substream,
)
from .routing_models import RoutingModel, phase_basis_fallback_count, route_counts


@dataclass(frozen=True)
class SimConfig:
    source: SourceConfig
    detectors: DetectorConfig
    model: RoutingModel
    ccu: CcuConfig

    def __post_init__(self):
        acq_ps = int(round(self.ccu.acquisition_s * 1e12))
        dur_ps = int(round(self.source.duration * 1e12))
        if acq_ps > dur_ps:
            raise ValueError(
                f"acquisition ({self.ccu.acquisition_s} s) exceeds the simulated "
                f"stream ({self.source.duration} s)"
            )


def config_metadata(config: SimConfig) -> dict:
    """Flat, JSON-friendly description of a run; deliberately excludes
    anything execution-dependent (worker count, wall clock) so outputs of
    equivalent runs compare byte-for-byte."""
    return {
        "model": config.model.value,
        "mean_photon_number": config.source.mean_photon_number,
        "slot_rate": config.source.slot_rate,
        "duration": config.source.duration,
        "seed": config.source.seed,
        "efficiency": config.detectors.efficiency,
        "dark_rate": config.detectors.dark_rate,
        "dead_time_ps": config.detectors.dead_time_ps,
        "pulse_width_ps": config.detectors.pulse_width_ps,
        "jitter_sigma_ps": config.detectors.jitter_sigma_ps,
        "window_ps": config.ccu.window_ps,
        "acquisition_s": config.ccu.acquisition_s,
    }


def _simulate_chunk(args: tuple) -> tuple[dict, int]:
    """Candidate clicks for one chunk. Top-level so process pools can pickle it."""
    config, chunk_index = args
    src = config.source
    start, n, _ = chunk_arrays(src, chunk_index)
    occupied = np.flatnonzero(n > 0)
    if occupied.size == 0:
        return {det: np.empty(0, dtype=np.int64) for det in Detector}, 0
    k = n[occupied]
    route_rng = substream(src.seed, STREAM_ROUTING, chunk_index)
    port1 = route_counts(config.model, k, route_rng)
    counts = split_counts(port1, k - port1, route_rng)
    # nominal slot centres; exact for any duration below ~9e3 s (2^53 ps)
    times = np.rint((start + occupied) / src.slot_rate * 1e12).astype(np.int64)
    clicks = detect_counts(counts, times, config.detectors, substream(src.seed, STREAM_DETECT, chunk_index))
    return clicks, phase_basis_fallback_count(config.model, k)


def simulate_streams(config: SimConfig, workers: int = 1, progress=None):
    """Run the full pipeline; return (per-detector sorted streams, metadata).

    Streams are dead-time filtered and cut to the configured acquisition.
    progress, if given, is called as progress(done_chunks, total_chunks).
    """
    chunks = num_chunks(config.source)
    tasks = [(config, i) for i in range(chunks)]
    per_detector: dict[Detector, list] = {det: [] for det in Detector}
    fallback_slots = 0

    def consume(i, result):
        nonlocal fallback_slots
        clicks, fallback = result
        fallback_slots += fallback
        for det in Detector:
            per_detector[det].append(clicks[det])
        if progress is not None:
            progress(i + 1, chunks)

    if workers > 1 and chunks > 1:
        with ProcessPoolExecutor(max_workers=min(workers, chunks)) as pool:
            for i, result in enumerate(pool.map(_simulate_chunk, tasks)):
                consume(i, result)
    else:
        for i, task in enumerate(tasks):
            consume(i, _simulate_chunk(task))

    dark = dark_events(config.detectors, config.source.duration, substream(config.source.seed, STREAM_DARK))
    acq_ps = int(round(config.ccu.acquisition_s * 1e12))
    streams = {}
    for det in Detector:
        merged = np.concatenate(per_detector[det] + [dark[det]])
        merged.sort()
        registered = apply_dead_time(merged, config.detectors.dead_time_ps)
        streams[det] = registered[registered <= acq_ps]

    metadata = {
        "config": config_metadata(config),
        "slots": slot_count(config.source),
        "phase_basis_fallback_slots": int(fallback_slots),
    }
    return streams, metadata


def simulate(config: SimConfig, workers: int = 1, progress=None) -> TallyTable:
    """Simulate one acquisition and count every singles/pair/triple channel."""
    streams, metadata = simulate_streams(config, workers=workers, progress=progress)
    return accumulate(
        streams,
        config.ccu,
        stream_duration_ps=int(round(config.source.duration * 1e12)),
        metadata=metadata,
    )
