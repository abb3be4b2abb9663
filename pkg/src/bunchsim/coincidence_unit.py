"""Coincidence counting over per-detector timestamp streams.

Windows use half-width semantics: two clicks coincide when |t1 - t2| <=
window_ps, a triple coincides when max - min <= 2 * window_ps. Matching is
greedy earliest-first with single use per channel, the same behaviour as a
streaming hardware AND gate; on sorted streams this greedy count equals the
brute-force maximum matching.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

import numpy as np

from .detector_bank import Detector, LABEL_TO_DETECTOR

PAIR_KEYS = tuple(itertools.combinations(Detector, 2))
TRIPLE_KEYS = tuple(itertools.combinations(Detector, 3))

# Subset of counters the reference measurement tables report.
REFERENCE_PAIRS = (
    (Detector.A1, Detector.A2),
    (Detector.B1, Detector.B2),
    (Detector.A1, Detector.B1),
    (Detector.A1, Detector.B2),
)
SAME_SIDE_PAIRS = ((Detector.A1, Detector.A2), (Detector.B1, Detector.B2))
CROSS_SIDE_PAIRS = tuple(k for k in PAIR_KEYS if k not in SAME_SIDE_PAIRS)


@dataclass(frozen=True)
class CcuConfig:
    window_ps: int = 5_000
    acquisition_s: float = 1.0

    def __post_init__(self):
        if self.window_ps <= 0:
            raise ValueError("window_ps must be > 0")
        if self.acquisition_s <= 0:
            raise ValueError("acquisition_s must be > 0")


def pair_name(key) -> str:
    return "".join(det.label for det in key)


def counter_name(kind: str, key) -> str:
    if kind == "single":
        return f"single_{key.label}"
    return f"{kind}_{pair_name(key)}"


@dataclass
class TallyTable:
    singles: dict
    pairs: dict
    triples: dict
    acquisition_s: float
    metadata: dict = field(default_factory=dict)

    def rate(self, count: int) -> float:
        return count / self.acquisition_s

    def counters(self):
        """Iterate (name, count, rate) in canonical order."""
        for det in Detector:
            c = self.singles[det]
            yield counter_name("single", det), c, self.rate(c)
        for key in PAIR_KEYS:
            c = self.pairs[key]
            yield counter_name("pair", key), c, self.rate(c)
        for key in TRIPLE_KEYS:
            c = self.triples[key]
            yield counter_name("triple", key), c, self.rate(c)


def _require_sorted(times: np.ndarray, who: str) -> np.ndarray:
    t = np.asarray(times, dtype=np.int64)
    if t.size > 1 and np.any(np.diff(t) < 0):
        raise ValueError(f"{who}: stream is not time-ordered")
    return t


def count_singles(times) -> int:
    """Event count of one detector stream; rejects unordered input."""
    return int(_require_sorted(times, "count_singles").size)


def _with_partner(t: np.ndarray, other: np.ndarray, width: int) -> np.ndarray:
    """Events of t that have at least one event of `other` within +/- width.

    Events dropped here can never be matched, and skipping them does not
    change greedy pointer dynamics, so counting on the filtered streams is
    exact.
    """
    if other.size == 0:
        return t[:0]
    lo = np.searchsorted(other, t - width)
    hi = np.searchsorted(other, t + width, side="right")
    return t[hi > lo]


def _greedy_pairs(x, y, window: int) -> int:
    i = j = c = 0
    nx, ny = len(x), len(y)
    while i < nx and j < ny:
        d = x[i] - y[j]
        if d < -window:
            i += 1
        elif d > window:
            j += 1
        else:
            c += 1
            i += 1
            j += 1
    return c


def _greedy_triples(x, y, z, spread: int) -> int:
    i = j = k = c = 0
    nx, ny, nz = len(x), len(y), len(z)
    while i < nx and j < ny and k < nz:
        a, b, d = x[i], y[j], z[k]
        lo = min(a, b, d)
        if max(a, b, d) - lo <= spread:
            c += 1
            i += 1
            j += 1
            k += 1
        elif a == lo:
            i += 1
        elif b == lo:
            j += 1
        else:
            k += 1
    return c


def pair_coincidences(times_x, times_y, window_ps: int) -> int:
    """Greedy single-use pair count between two sorted streams."""
    tx = _require_sorted(times_x, "pair_coincidences")
    ty = _require_sorted(times_y, "pair_coincidences")
    fx = _with_partner(tx, ty, window_ps)
    fy = _with_partner(ty, tx, window_ps)
    return _greedy_pairs(fx.tolist(), fy.tolist(), int(window_ps))


def triple_coincidences(times_x, times_y, times_z, window_ps: int) -> int:
    """Greedy single-use triple count; spread limit is 2 * window_ps."""
    tx = _require_sorted(times_x, "triple_coincidences")
    ty = _require_sorted(times_y, "triple_coincidences")
    tz = _require_sorted(times_z, "triple_coincidences")
    spread = 2 * int(window_ps)

    def keep(a, b, c):
        return _with_partner(_with_partner(a, b, spread), c, spread)

    fx = keep(tx, ty, tz)
    fy = keep(ty, tx, tz)
    fz = keep(tz, tx, ty)
    return _greedy_triples(fx.tolist(), fy.tolist(), fz.tolist(), spread)


def count_pairs(streams: dict, config: CcuConfig) -> dict:
    return {
        (dx, dy): pair_coincidences(streams[dx], streams[dy], config.window_ps)
        for dx, dy in PAIR_KEYS
    }


def count_triples(streams: dict, config: CcuConfig) -> dict:
    return {
        (dx, dy, dz): triple_coincidences(streams[dx], streams[dy], streams[dz], config.window_ps)
        for dx, dy, dz in TRIPLE_KEYS
    }


def streams_from_events(events) -> dict[Detector, np.ndarray]:
    """Group an interleaved (detector, time) event sequence into sorted streams.

    Only timestamps matter, so any interleaving of the same events yields the
    same streams.
    """
    collected: dict[Detector, list[int]] = {det: [] for det in Detector}
    for det, t in events:
        collected[Detector(det)].append(int(t))
    return {det: np.sort(np.asarray(ts, dtype=np.int64)) for det, ts in collected.items()}


def accumulate(
    streams: dict,
    config: CcuConfig,
    stream_duration_ps: int | None = None,
    metadata: dict | None = None,
) -> TallyTable:
    """Count all singles, pairs and triples for one acquisition.

    stream_duration_ps, when known, must cover the configured acquisition;
    a shorter stream would silently undercount, so it is an explicit error.
    """
    acq_ps = int(round(config.acquisition_s * 1e12))
    if stream_duration_ps is not None and stream_duration_ps < acq_ps:
        raise ValueError(
            f"streams cover {stream_duration_ps} ps but the acquisition needs {acq_ps} ps"
        )
    clean = {}
    for det in Detector:
        t = _require_sorted(streams[det], f"accumulate[{det.label}]")
        if t.size and (t[0] < 0 or t[-1] > acq_ps):
            raise ValueError(f"accumulate[{det.label}]: timestamps outside [0, acquisition]")
        clean[det] = t
    singles = {det: int(clean[det].size) for det in Detector}
    tally = TallyTable(
        singles=singles,
        pairs=count_pairs(clean, config),
        triples=count_triples(clean, config),
        acquisition_s=config.acquisition_s,
        metadata=dict(metadata or {}),
    )
    return tally


# --- serialisation ----------------------------------------------------------

CSV_HEADER = "counter_name,count,rate_per_s"


def tally_to_csv(tally: TallyTable) -> str:
    lines = [CSV_HEADER]
    for name, count, rate in tally.counters():
        lines.append(f"{name},{count},{rate!r}")
    return "\n".join(lines) + "\n"


def tally_to_json(tally: TallyTable) -> str:
    doc = {
        "acquisition_s": tally.acquisition_s,
        "singles": {det.label: tally.singles[det] for det in Detector},
        "pairs": {pair_name(k): tally.pairs[k] for k in PAIR_KEYS},
        "triples": {pair_name(k): tally.triples[k] for k in TRIPLE_KEYS},
        "reference_reported_pairs": [pair_name(k) for k in REFERENCE_PAIRS],
        "reference_reported_triples": [pair_name(k) for k in TRIPLE_KEYS],
        "metadata": tally.metadata,
    }
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _group_name_lookup():
    names = {}
    for det in Detector:
        names[counter_name("single", det)] = ("single", det)
    for key in PAIR_KEYS:
        names[counter_name("pair", key)] = ("pair", key)
    for key in TRIPLE_KEYS:
        names[counter_name("triple", key)] = ("triple", key)
    return names


def tally_from_csv(text: str, acquisition_s: float, metadata: dict | None = None) -> TallyTable:
    """Rebuild a TallyTable from its CSV form (counts are authoritative)."""
    lookup = _group_name_lookup()
    singles, pairs, triples = {}, {}, {}
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a tally CSV: bad header")
    for ln in lines[1:]:
        name, count, _rate = ln.split(",")
        kind, key = lookup[name]
        {"single": singles, "pair": pairs, "triple": triples}[kind][key] = int(count)
    missing = (set(Detector) - singles.keys()) or (set(PAIR_KEYS) - pairs.keys()) or (
        set(TRIPLE_KEYS) - triples.keys()
    )
    if missing:
        raise ValueError(f"tally CSV is missing counters: {sorted(missing)}")
    return TallyTable(singles, pairs, triples, acquisition_s, dict(metadata or {}))
