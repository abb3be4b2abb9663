import math

import numpy as np
import pytest
from scipy import stats

from bunchsim.photon_source import (
    CHUNK_SLOTS,
    STREAM_SOURCE,
    SourceConfig,
    chunk_arrays,
    generate_stream,
    num_chunks,
    poisson_cdf_table,
    sample_slot,
    slot_count,
    substream,
)


def small_config(**kw):
    base = dict(mean_photon_number=0.05, slot_rate=1e6, duration=0.01, seed=123)
    base.update(kw)
    return SourceConfig(**base)


def test_substream_reproducible_and_independent():
    a = substream(99, 0, 4).random(16)
    b = substream(99, 0, 4).random(16)
    assert np.array_equal(a, b)
    c = substream(99, 0, 5).random(16)
    d = substream(99, 1, 4).random(16)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_poisson_table_matches_scipy():
    for mean in (0.0, 0.022, 0.044, 0.5, 3.0):
        table = poisson_cdf_table(mean)
        oracle = stats.poisson.cdf(np.arange(len(table)), mean)
        assert np.max(np.abs(table - oracle)) < 1e-13


def test_zero_mean_yields_empty_slots():
    cfg = small_config(mean_photon_number=0.0)
    _, n, _ = chunk_arrays(cfg, 0)
    assert n.size == slot_count(cfg)
    assert not n.any()


def test_sampled_counts_match_poisson_pmf():
    cfg = small_config(mean_photon_number=0.1, duration=0.2)  # 200k slots
    _, n, phases = chunk_arrays(cfg, 0)
    total = n.size
    for k in range(4):
        p = stats.poisson.pmf(k, 0.1)
        observed = int(np.count_nonzero(n == k))
        sigma = math.sqrt(total * p * (1 - p))
        assert abs(observed - total * p) <= 4 * sigma
    assert phases.min() >= 0.0 and phases.max() < 2 * math.pi


def test_chunks_concatenate_to_stream():
    import itertools

    cfg = small_config(duration=6.0, slot_rate=1e6)  # > 1 chunk
    assert num_chunks(cfg) == 2
    parts = [chunk_arrays(cfg, i) for i in range(2)]
    assert parts[0][0] == 0 and parts[1][0] == CHUNK_SLOTS
    assert sum(p[1].size for p in parts) == slot_count(cfg)
    assert parts[1][1].size == slot_count(cfg) - CHUNK_SLOTS
    # generator view agrees with the raw chunk arrays (indices and counts)
    head = list(itertools.islice(generate_stream(cfg), 5000))
    assert [s.index for s in head] == list(range(5000))
    assert np.array_equal(np.array([s.n_photons for s in head]), parts[0][1][:5000])


def test_chunk_content_independent_of_other_chunks():
    cfg = small_config(duration=6.0, slot_rate=1e6)
    fresh = chunk_arrays(cfg, 1)  # computed without ever touching chunk 0
    chunk_arrays(cfg, 0)
    again = chunk_arrays(cfg, 1)
    assert np.array_equal(fresh[1], again[1]) and np.array_equal(fresh[2], again[2])


def test_sample_slot_uses_two_draws():
    cfg = small_config()
    rng = substream(cfg.seed, STREAM_SOURCE)
    slot = sample_slot(cfg, rng, index=3)
    assert slot.index == 3
    assert slot.n_photons >= 0
    assert 0.0 <= slot.global_phase < 2 * math.pi


def test_slot_count_and_chunk_bounds():
    cfg = small_config(slot_rate=12345.0, duration=1.0)
    assert slot_count(cfg) == 12345
    cfg = small_config(slot_rate=1e6, duration=2.5e-6)
    assert slot_count(cfg) == 2  # floor
    with pytest.raises(IndexError):
        chunk_arrays(small_config(), 99)


def test_overflowing_slot_count_is_an_error():
    cfg = small_config(slot_rate=1e30, duration=1e30)
    with pytest.raises(OverflowError):
        slot_count(cfg)


@pytest.mark.parametrize(
    "field,value",
    [
        ("mean_photon_number", -0.1),
        ("slot_rate", 0.0),
        ("duration", -1.0),
        ("seed", -1),
    ],
)
def test_config_validation(field, value):
    with pytest.raises(ValueError):
        small_config(**{field: value})
