import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from schmidt_lrp.errors import ResourceError, ShapeError
from schmidt_lrp.matlin import (
    basis,
    check_alloc,
    is_hermitian,
    kron,
    max_entangled_ket,
    memory_cap,
    partial_trace,
    partial_transpose_B,
    swap_operator,
)

from conftest import random_density, random_hermitian, random_matrix


def test_kron_identity_and_projector():
    assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))
    P = np.diag([1.0, 0.0])
    assert_array_equal(kron(P, P), np.diag([1.0, 0, 0, 0]))


def test_kron_trace_factorizes(rng):
    A, B = random_matrix(rng, 3), random_matrix(rng, 3)
    assert_allclose(np.trace(kron(A, B)), np.trace(A) * np.trace(B), atol=1e-12)


def test_kron_associative(rng):
    A, B, C = random_matrix(rng, 2), random_matrix(rng, 3), random_matrix(rng, 2)
    assert np.abs(kron(kron(A, B), C) - kron(A, kron(B, C))).max() < 1e-13


def test_kron_rejects_vectors():
    with pytest.raises(ShapeError):
        kron(np.ones(3), np.eye(2))


def test_swap_d2_exchanges_01_10():
    S = swap_operator(2)
    expected = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]])
    assert_array_equal(S, expected)


@pytest.mark.parametrize("d", range(2, 11))
def test_swap_trace(d):
    assert np.trace(swap_operator(d)).real == d


@pytest.mark.parametrize("d", range(2, 7))
def test_swap_involution(d):
    S = swap_operator(d)
    assert_array_equal(S @ S, np.eye(d * d))


def test_swap_exchanges_product_kets(rng):
    d = 3
    a, b = random_matrix(rng, d, 1)[:, 0], random_matrix(rng, d, 1)[:, 0]
    assert_allclose(swap_operator(d) @ np.kron(a, b), np.kron(b, a), atol=1e-14)


@pytest.mark.parametrize("d", range(2, 9))
def test_partial_transpose_of_swap_is_scaled_phi_plus(d):
    phi = max_entangled_ket(d)
    assert_allclose(partial_transpose_B(swap_operator(d), d), d * np.outer(phi, phi.conj()), atol=1e-14)
    ST = partial_transpose_B(swap_operator(d), d)
    assert_allclose(phi.conj() @ ST @ phi, d, atol=1e-12)


def test_partial_transpose_involution_and_trace(rng):
    d = 3
    A = random_hermitian(rng, d * d)
    assert_array_equal(partial_transpose_B(partial_transpose_B(A, d), d), A)
    assert_allclose(np.trace(partial_transpose_B(A, d)), np.trace(A), atol=1e-12)


def test_partial_transpose_of_product(rng):
    A, B = random_matrix(rng, 3), random_matrix(rng, 3)
    assert_allclose(partial_transpose_B(np.kron(A, B), 3), np.kron(A, B.T), atol=1e-13)


@pytest.mark.parametrize("d", range(2, 9))
def test_partial_trace_of_phi_plus(d):
    phi = max_entangled_ket(d)
    P = np.outer(phi, phi.conj())
    assert_allclose(partial_trace(P, d, "B"), np.eye(d) / d, atol=1e-14)
    assert_allclose(partial_trace(P, d, "A"), np.eye(d) / d, atol=1e-14)


def test_partial_trace_of_product(rng):
    r1, r2 = random_density(rng, 3), random_matrix(rng, 3)
    rho = np.kron(r1, r2)
    assert_allclose(partial_trace(rho, 3, "B"), r1 * np.trace(r2), atol=1e-13)
    assert_allclose(partial_trace(rho, 3, "A"), r2 * np.trace(r1), atol=1e-13)


def test_partial_trace_preserves_trace(rng):
    A = random_matrix(rng, 16)
    for side in "AB":
        assert_allclose(np.trace(partial_trace(A, 4, side)), np.trace(A), atol=1e-12)


def test_partial_trace_commutes_with_partial_transpose(rng):
    # tracing out B after transposing B equals tracing out B
    d = 3
    A = random_matrix(rng, d * d)
    assert_allclose(partial_trace(partial_transpose_B(A, d), d, "B"), partial_trace(A, d, "B"), atol=1e-13)
    # tracing out A leaves the transposed reduced operator on B
    assert_allclose(partial_trace(partial_transpose_B(A, d), d, "A"), partial_trace(A, d, "A").T, atol=1e-13)


def test_partial_trace_bad_subsystem(rng):
    with pytest.raises(ValueError):
        partial_trace(np.eye(4), 2, "C")


def test_shape_errors():
    with pytest.raises(ShapeError):
        partial_transpose_B(np.eye(5), 2)


def test_memory_cap_refuses_large_allocations():
    with memory_cap(1024):
        with pytest.raises(ResourceError):
            swap_operator(8)
        with pytest.raises(ResourceError):
            kron(np.eye(8), np.eye(8))
    check_alloc((8, 8))


def test_memory_cap_default_guards_d80_intermediates():
    # a d = 80 d^2 x d^2 complex array is ~655 MB; the square of that is far above the cap
    check_alloc((80**2, 80**2))
    with pytest.raises(ResourceError):
        check_alloc((80**4, 80**2))


def test_basis_and_hermitian():
    e = basis(4, 2)
    assert_array_equal(e, [0, 0, 1, 0])
    assert abs(np.linalg.norm(e) - 1) < 1e-12
    assert is_hermitian(np.array([[1, 1j], [-1j, 2]]))
    assert not is_hermitian(np.array([[1, 1j], [1j, 2]]))
