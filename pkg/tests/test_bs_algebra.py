import numpy as np
import pytest

from bunchsim.bs_algebra import (
    UNITARITY_TOL,
    Combination,
    PhaseBasis,
    apply,
    apply_same_basis,
    bs_matrix,
    global_phase_equivalent,
    intensity,
    is_unitary,
    superpose_opposite,
)

SQRT2 = np.sqrt(2.0)


def test_matrix_entries_exact():
    plus = bs_matrix(PhaseBasis.PLUS)
    minus = bs_matrix(PhaseBasis.MINUS)
    expected_plus = np.array([[1, 1j], [1j, 1]]) / SQRT2
    assert np.max(np.abs(plus - expected_plus)) <= UNITARITY_TOL
    assert np.max(np.abs(minus - expected_plus.conj())) <= UNITARITY_TOL


def test_matrices_unitary():
    for basis in PhaseBasis:
        m = bs_matrix(basis)
        assert is_unitary(m, tol=1e-12)
        assert np.max(np.abs(m @ m.conj().T - np.eye(2))) <= 1e-12


def test_single_photon_split_is_50_50():
    for basis, sign in ((PhaseBasis.PLUS, 1j), (PhaseBasis.MINUS, -1j)):
        out = apply(bs_matrix(basis), (1.0, 0.0))
        assert np.max(np.abs(out - np.array([1.0, sign]) / SQRT2)) <= 1e-12
        i1, i2 = intensity(out)
        assert abs(i1 - 0.5) <= 1e-12 and abs(i2 - 0.5) <= 1e-12


def test_opposite_basis_superposition_bunches():
    # symmetric combination: everything exits port 1 with amplitude sqrt(2) E0
    out = superpose_opposite(1.0, Combination.SYMMETRIC)
    assert np.max(np.abs(out - np.array([SQRT2, 0.0]))) <= 1e-12
    # antisymmetric combination: everything exits port 2, quarter-wave shifted
    out = superpose_opposite(1.0, Combination.ANTISYMMETRIC)
    assert np.max(np.abs(out - np.array([0.0, SQRT2 * 1j]))) <= 1e-12


def test_opposite_basis_total_intensity_is_two_photons():
    for comb in Combination:
        i1, i2 = intensity(superpose_opposite(1.0, comb))
        assert abs((i1 + i2) - 2.0) <= 1e-12
        assert min(i1, i2) <= 1e-12  # all of it in one port


def test_same_basis_splits_with_equal_intensities():
    # two photons in the same basis enter as amplitude sqrt(2)*E0 and leave
    # as (E0, +/- i E0): one photon's intensity on each port
    for basis, sign in ((PhaseBasis.PLUS, 1j), (PhaseBasis.MINUS, -1j)):
        out = apply_same_basis(SQRT2, basis)
        assert np.max(np.abs(out - np.array([1.0, sign]))) <= 1e-12
        i1, i2 = intensity(out)
        assert abs(i1 - 1.0) <= 1e-12 and abs(i2 - 1.0) <= 1e-12


def test_intensity_conserved_for_random_inputs():
    rng = np.random.default_rng(7)
    for _ in range(200):
        amps = rng.normal(size=2) + 1j * rng.normal(size=2)
        basis = PhaseBasis.PLUS if rng.random() < 0.5 else PhaseBasis.MINUS
        out = apply(bs_matrix(basis), amps)
        assert abs(np.sum(intensity(out)) - np.sum(intensity(amps))) <= 1e-12 * max(
            1.0, np.sum(intensity(amps))
        )


def test_global_phase_equivalence():
    m = bs_matrix(PhaseBasis.PLUS)
    rng = np.random.default_rng(11)
    for _ in range(50):
        theta = rng.uniform(0, 2 * np.pi)
        assert global_phase_equivalent(m, np.exp(1j * theta) * m)
    assert not global_phase_equivalent(m, bs_matrix(PhaseBasis.MINUS))
    # scaling is not a phase
    assert not global_phase_equivalent(m, 1.5 * m)


def test_apply_rejects_bad_inputs():
    with pytest.raises(ValueError):
        apply(np.array([[1.0, 0.0], [0.0, 2.0]]), (1.0, 0.0))  # not unitary
    with pytest.raises(ValueError):
        apply(bs_matrix(PhaseBasis.PLUS), (1.0, 0.0, 0.0))  # wrong shape
