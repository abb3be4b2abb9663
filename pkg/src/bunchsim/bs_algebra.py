"""Complex amplitude algebra for a lossless 50/50 beam splitter.

A symmetric splitter imprints a +/- pi/2 phase on the reflected amplitude
relative to the transmitted one.  The two sign choices form a two-element
reflection-phase basis.  Overlapping two same-port amplitudes that carry
opposite basis elements steers the combined field out of a single port
(bunching); equal elements reproduce the ordinary 50/50 split with equal
output intensities.  Everything here works on plain complex numpy arrays:
2x2 matrices and length-2 port-amplitude vectors, with the input amplitude
normalised to 1 per photon.
"""

from __future__ import annotations

import enum

import numpy as np

UNITARITY_TOL = 1e-12

_SQRT2 = np.sqrt(2.0)


class PhaseBasis(enum.Enum):
    """Sign of the reflection phase (+i or -i on the off-diagonal)."""

    PLUS = +1
    MINUS = -1


class Combination(enum.Enum):
    """How two opposite-basis amplitudes are superposed."""

    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


def bs_matrix(basis: PhaseBasis) -> np.ndarray:
    """2x2 splitter matrix (1/sqrt2)[[1, s*i], [s*i, 1]] with s = basis sign."""
    r = 1j * basis.value
    return np.array([[1.0, r], [r, 1.0]], dtype=complex) / _SQRT2


def is_unitary(matrix: np.ndarray, tol: float = UNITARITY_TOL) -> bool:
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        return False
    return bool(np.max(np.abs(m @ m.conj().T - np.eye(2))) <= tol)


def apply(matrix: np.ndarray, amplitudes) -> np.ndarray:
    """Propagate port amplitudes (e1, e2) through a unitary splitter matrix.

    Raises ValueError for a non-unitary matrix: losses or gain would silently
    break every intensity bookkeeping step downstream.
    """
    m = np.asarray(matrix, dtype=complex)
    if not is_unitary(m):
        raise ValueError("splitter matrix is not unitary within tolerance")
    a = np.asarray(amplitudes, dtype=complex)
    if a.shape != (2,):
        raise ValueError(f"expected two port amplitudes, got shape {a.shape}")
    return m @ a


def intensity(amplitudes) -> np.ndarray:
    """Per-port intensities |e|^2 of an amplitude pair."""
    a = np.asarray(amplitudes, dtype=complex)
    return np.abs(a) ** 2


def superpose_opposite(amplitude: complex, combination: Combination) -> np.ndarray:
    """Send two port-1 photons with opposite basis elements through the splitter.

    Each photon contributes its own basis's output field, so the result is
    (M_plus +/- M_minus) applied to (E0, 0):

        SYMMETRIC     -> (sqrt2 * E0, 0)        both photons exit port 1
        ANTISYMMETRIC -> (0, sqrt2 * i * E0)    both photons exit port 2

    Total intensity is 2*I0 (two photons) and all of it lands on one port:
    the pair bunches either way; only the exit port differs.
    """
    if not isinstance(combination, Combination):
        raise TypeError(f"combination must be a Combination, got {combination!r}")
    sign = 1.0 if combination is Combination.SYMMETRIC else -1.0
    m = bs_matrix(PhaseBasis.PLUS) + sign * bs_matrix(PhaseBasis.MINUS)
    return m @ np.array([amplitude, 0.0], dtype=complex)


def apply_same_basis(two_photon_amplitude: complex, basis: PhaseBasis) -> np.ndarray:
    """Send a two-photon same-basis amplitude (sqrt2*E0 in port 1) through.

    Output is (E0, +/- i*E0): equal intensities on both ports, so the pair
    splits instead of bunching.
    """
    return apply(bs_matrix(basis), np.array([two_photon_amplitude, 0.0], dtype=complex))


def global_phase_equivalent(m1, m2, tol: float = UNITARITY_TOL) -> bool:
    """True iff m1 = exp(i*theta) * m2 for some real theta, within tol."""
    a = np.asarray(m1, dtype=complex)
    b = np.asarray(m2, dtype=complex)
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) <= tol:
        # m2 is (numerically) zero; equivalent only if m1 is too
        return bool(np.max(np.abs(a)) <= tol)
    c = a[idx] / b[idx]
    if abs(abs(c) - 1.0) > tol:
        return False
    return bool(np.max(np.abs(a - c * b)) <= tol)
