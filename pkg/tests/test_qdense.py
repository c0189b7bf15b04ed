"""Dense linear-algebra kernel: partitions, traces, eigensystems, propagators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from _oracles import expm_unitary, schmidt_marginals
from scramble.qdense import (
    Bipartition,
    as_complex_matrix,
    check_density_matrix,
    clamp_spectrum,
    eigh,
    evolve_unitary,
    haar_state,
    haar_unitary,
    kron,
    kron_all,
    partial_trace,
    random_density,
    random_hermitian,
    seeded_rng,
)


def test_bipartition_properties():
    part = Bipartition(2, 3)
    assert part.dim_a == 4
    assert part.dim_b == 8
    assert part.dim == 32
    assert part.n_qubits == 5


@pytest.mark.parametrize("n_a,n_b", [(0, 1), (1, 0), (-1, 2)])
def test_bipartition_rejects_empty_sides(n_a, n_b):
    with pytest.raises(ValueError):
        Bipartition(n_a, n_b)


def test_as_complex_matrix_rejects_vectors_and_nonfinite():
    with pytest.raises(ValueError):
        as_complex_matrix(np.zeros(4))
    with pytest.raises(ValueError):
        as_complex_matrix(np.array([[np.nan, 0], [0, 1]]))


def test_check_density_matrix_accepts_valid():
    rho = random_density(4, seeded_rng(0))
    out = check_density_matrix(rho)
    assert out is rho or np.allclose(out, rho)


def test_check_density_matrix_rejects_nonhermitian():
    rho = np.eye(2, dtype=complex) / 2
    rho[0, 1] = 0.1
    with pytest.raises(ValueError, match="[Hh]ermitian"):
        check_density_matrix(rho)


def test_check_density_matrix_rejects_bad_trace():
    with pytest.raises(ValueError, match="trace"):
        check_density_matrix(np.eye(2, dtype=complex))


def test_check_density_matrix_rejects_negative_eigenvalue():
    rho = np.diag([1.5, -0.5]).astype(complex)
    with pytest.raises(ValueError):
        check_density_matrix(rho)


def test_clamp_spectrum_zeroes_roundoff_negatives_only():
    out = clamp_spectrum(np.array([1.0, -1e-14]))
    assert out.min() == 0.0
    untouched = clamp_spectrum(np.array([1.0, -1e-6]))
    assert untouched.min() == -1e-6


@pytest.mark.parametrize("n_a,n_b", [(1, 1), (1, 2), (2, 1), (2, 2), (1, 3)])
def test_partial_trace_matches_schmidt_marginals(n_a, n_b):
    part = Bipartition(n_a, n_b)
    psi = haar_state(part.dim, seeded_rng(42, n_a, n_b))
    rho = np.outer(psi, psi.conj())
    ref_a, ref_b = schmidt_marginals(psi, part.dim_a, part.dim_b)
    np.testing.assert_allclose(partial_trace(rho, part, "A"), ref_a, atol=1e-12)
    np.testing.assert_allclose(partial_trace(rho, part, "B"), ref_b, atol=1e-12)


def test_partial_trace_of_product_state():
    part = Bipartition(1, 2)
    rng = seeded_rng(3)
    rho_a = random_density(2, rng)
    rho_b = random_density(4, rng)
    rho = kron(rho_a, rho_b)
    np.testing.assert_allclose(partial_trace(rho, part, "A"), rho_a, atol=1e-13)
    np.testing.assert_allclose(partial_trace(rho, part, "B"), rho_b, atol=1e-13)


def test_partial_trace_preserves_trace_and_rejects_bad_keep():
    part = Bipartition(2, 2)
    rho = random_density(16, seeded_rng(5))
    assert np.trace(partial_trace(rho, part, "B")) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        partial_trace(rho, part, "c")


def test_kron_all_matches_numpy():
    rng = seeded_rng(9)
    mats = [random_hermitian(2, rng) for _ in range(3)]
    ref = np.kron(np.kron(mats[0], mats[1]), mats[2])
    np.testing.assert_allclose(kron_all(*mats), ref, atol=1e-13)


finite = st.floats(min_value=-5, max_value=5, allow_nan=False, width=32)


@st.composite
def small_complex_matrix(draw, d=2):
    re = draw(st.lists(finite, min_size=d * d, max_size=d * d))
    im = draw(st.lists(finite, min_size=d * d, max_size=d * d))
    return (np.array(re) + 1j * np.array(im)).reshape(d, d)


@settings(max_examples=50, deadline=None)
@given(small_complex_matrix(), small_complex_matrix(), small_complex_matrix(), small_complex_matrix())
def test_kron_mixed_product_property(a, b, c, d):
    left = kron(a, b) @ kron(c, d)
    right = kron(a @ c, b @ d)
    np.testing.assert_allclose(left, right, atol=1e-9)


def test_eigh_reconstructs_and_sorts():
    h = random_hermitian(6, seeded_rng(11))
    evals, vecs = eigh(h)
    assert np.all(np.diff(evals) >= 0)
    np.testing.assert_allclose((vecs * evals) @ vecs.conj().T, h, atol=1e-12)
    np.testing.assert_allclose(vecs.conj().T @ vecs, np.eye(6), atol=1e-12)


def test_eigh_phase_convention_is_deterministic():
    h = random_hermitian(5, seeded_rng(13))
    _, vecs = eigh(h)
    for col in vecs.T:
        pivot = col[np.argmax(np.abs(col))]
        assert abs(pivot.imag) < 1e-12
        assert pivot.real > 0
    _, again = eigh(h.copy())
    np.testing.assert_array_equal(vecs, again)


@pytest.mark.parametrize("t", [0.0, 0.3, 2.7, -1.1])
def test_evolve_unitary_matches_expm(t):
    h = random_hermitian(8, seeded_rng(17))
    u = evolve_unitary(h, t)
    np.testing.assert_allclose(u, expm_unitary(h, t), atol=1e-11)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(8), atol=1e-12)


def test_evolve_unitary_at_zero_is_identity():
    h = random_hermitian(8, seeded_rng(19))
    np.testing.assert_allclose(evolve_unitary(h, 0.0), np.eye(8), atol=1e-13)


def test_evolve_unitary_group_property():
    h = random_hermitian(4, seeded_rng(23))
    u1 = evolve_unitary(h, 0.4)
    u2 = evolve_unitary(h, 0.9)
    np.testing.assert_allclose(u1 @ u2, evolve_unitary(h, 1.3), atol=1e-12)


def test_seeded_rng_branches_are_independent_and_reproducible():
    a = seeded_rng(7, 1).standard_normal(5)
    b = seeded_rng(7, 1).standard_normal(5)
    c = seeded_rng(7, 2).standard_normal(5)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_haar_unitary_is_unitary_and_deterministic():
    u = haar_unitary(6, seeded_rng(29))
    np.testing.assert_allclose(u @ u.conj().T, np.eye(6), atol=1e-12)
    np.testing.assert_array_equal(u, haar_unitary(6, seeded_rng(29)))


def test_haar_state_normalized():
    psi = haar_state(8, seeded_rng(31))
    assert np.linalg.norm(psi) == pytest.approx(1.0, abs=1e-12)


def test_random_density_rank_control():
    rho = random_density(8, seeded_rng(37), rank=2)
    check_density_matrix(rho)
    evals = np.linalg.eigvalsh(rho)
    assert (evals > 1e-10).sum() == 2


def test_random_hermitian_is_hermitian():
    h = random_hermitian(5, seeded_rng(41))
    np.testing.assert_allclose(h, h.conj().T, atol=1e-14)
