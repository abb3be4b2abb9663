"""Routing of n simultaneous photons into the two output ports of a splitter.

Three interchangeable models:

 * classical: every photon picks a port independently (fair binomial).
 * phase-basis: photons carry one of two reflection-phase labels; for n = 2
   the four equally likely label patterns give bunched (2,0), bunched (0,2)
   and split (1,1) outcomes with probabilities 1/4, 1/4, 1/2. Identical to
   the binomial distribution for n <= 2, which is the whole point of the
   experiment this reproduces. For n >= 3 the pairwise-label picture has no
   defined rule, so the model falls back to binomial routing; callers should
   surface phase_basis_fallback_count() in run metadata.
 * bunching: all n photons exit one port together, fair coin per slot.
"""

from __future__ import annotations

import enum
import math

import numpy as np

ENUM_MAX_N = 12


class RoutingModel(enum.Enum):
    CLASSICAL = "classical"
    PHASE_BASIS = "phase-basis"
    BUNCHING = "bunching"


def route_counts(model: RoutingModel, n, rng: np.random.Generator) -> np.ndarray:
    """Vectorised routing: port-1 occupancy for each entry of n."""
    n = np.asarray(n, dtype=np.int64)
    if np.any(n < 0):
        raise ValueError("photon numbers must be >= 0")
    if model is RoutingModel.BUNCHING:
        return n * rng.integers(0, 2, size=n.shape, dtype=np.int64)
    port1 = rng.binomial(n, 0.5).astype(np.int64)
    if model is RoutingModel.PHASE_BASIS:
        two = np.flatnonzero(n == 2)
        if two.size:
            u = rng.random(two.size)
            port1[two] = np.where(u < 0.25, 2, np.where(u < 0.5, 0, 1))
    return port1


def route(model: RoutingModel, n: int, rng: np.random.Generator) -> tuple[int, int]:
    """Route one slot of n photons; returns (port1, port2) with port1+port2 = n."""
    p1 = int(route_counts(model, np.array([n]), rng)[0])
    return p1, int(n) - p1


def phase_basis_fallback_count(model: RoutingModel, n) -> int:
    """Number of slots routed by the binomial fallback under the phase-basis model."""
    if model is not RoutingModel.PHASE_BASIS:
        return 0
    n = np.asarray(n)
    return int(np.count_nonzero(n >= 3))


def enumerate_distribution(model: RoutingModel, n: int) -> dict[tuple[int, int], float]:
    """Exact outcome probabilities {(port1, port2): p} for an n-photon slot.

    All probabilities are dyadic rationals, hence exact in binary floats.
    Enumeration is capped at n = 12; the regime of interest never reaches it.
    """
    if not 0 <= n <= ENUM_MAX_N:
        raise ValueError(f"n must be in [0, {ENUM_MAX_N}], got {n}")
    if n == 0:
        return {(0, 0): 1.0}
    if model is RoutingModel.BUNCHING:
        return {(n, 0): 0.5, (0, n): 0.5}
    if model is RoutingModel.PHASE_BASIS and n == 2:
        return {(2, 0): 0.25, (0, 2): 0.25, (1, 1): 0.5}
    scale = 2.0**n
    return {(k, n - k): math.comb(n, k) / scale for k in range(n, -1, -1)}
