import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from locclab.qcore import (
    HilbertStructure,
    ProductOperator,
    embed,
    inv_sqrt_psd,
    is_local,
    kernel_basis,
    local_factor,
    polar,
    proj,
    sqrt_psd,
    tensor,
)
from locclab.rand import random_psd, random_unitary, rng_of
from locclab.certify import orthogonal_triple_vectors


def random_matrix(d, seed):
    rng = rng_of(seed)
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def test_structure_dims():
    s = HilbertStructure([2, 3, 2])
    assert s.total_dim == 12
    assert s.num_parties == 3
    assert np.abs(s.identity() - np.eye(12)).max() == 0
    with pytest.raises(ValueError):
        HilbertStructure([])
    with pytest.raises(ValueError):
        HilbertStructure([2, 0])


def test_tensor_identity_and_diagonal():
    assert np.abs(tensor([np.eye(2), np.eye(2)]) - np.eye(4)).max() == 0
    out = tensor([np.diag([1.0, -1.0]), np.diag([2.0, 3.0])])
    assert np.abs(out - np.diag([2.0, 3.0, -2.0, -3.0])).max() == 0


def test_tensor_index_formula():
    a, b = random_matrix(2, 1), random_matrix(2, 2)
    out = tensor([a, b])
    for i in range(2):
        for j in range(2):
            for k in range(2):
                for l in range(2):
                    assert abs(out[2 * i + k, 2 * j + l] - a[i, j] * b[k, l]) < 1e-14


def test_tensor_rejects_non_square():
    with pytest.raises(ValueError):
        tensor([np.ones((2, 3))])


@given(st.integers(0, 2**31 - 1))
@settings(max_examples=30, deadline=None)
def test_tensor_associative_and_bilinear(seed):
    a, b, c = (random_matrix(2, seed + i) for i in range(3))
    assert np.abs(tensor([tensor([a, b]), c]) - tensor([a, tensor([b, c])])).max() < 1e-12
    assert np.abs(tensor([a + 2 * b, c]) - tensor([a, c]) - 2 * tensor([b, c])).max() < 1e-12


def test_sqrt_psd_examples():
    assert np.abs(sqrt_psd(np.diag([4.0, 9.0])) - np.diag([2.0, 3.0])).max() < 1e-14
    assert np.abs(sqrt_psd(np.eye(3)) - np.eye(3)).max() < 1e-14
    with pytest.raises(ValueError):
        sqrt_psd(np.diag([1.0, -0.1]))


@given(st.integers(0, 2**31 - 1), st.integers(1, 6))
@settings(max_examples=40, deadline=None)
def test_sqrt_psd_reconstructs(seed, d):
    m = random_psd(d, seed)
    s = sqrt_psd(m)
    assert np.abs(s @ s - m).max() < 1e-10
    assert np.abs(sqrt_psd(s @ s) - s).max() < 1e-10


def test_inv_sqrt_psd():
    assert np.abs(inv_sqrt_psd(np.diag([4.0, 0.0])) - np.diag([0.5, 0.0])).max() < 1e-14
    assert np.abs(inv_sqrt_psd(np.eye(2)) - np.eye(2)).max() < 1e-14
    m = random_psd(4, 3) + 0.1 * np.eye(4)
    x = inv_sqrt_psd(m)
    assert np.abs(x @ m @ x - np.eye(4)).max() < 1e-9


def test_polar_examples():
    u = random_unitary(3, 5)
    v, p = polar(u)
    assert np.abs(v - u).max() < 1e-10 and np.abs(p - np.eye(3)).max() < 1e-10
    v, p = polar(np.diag([2.0, 3.0]))
    assert np.abs(v - np.eye(2)).max() < 1e-12 and np.abs(p - np.diag([2.0, 3.0])).max() < 1e-12


def test_polar_reconstruction_many_seeds():
    worst = 0.0
    for seed in range(1000):
        d = 1 + seed % 5
        a = random_matrix(d, seed)
        if seed % 3 == 0:  # rank-deficient input
            a[:, 0] = 0
        v, p = polar(a)
        worst = max(worst, np.abs(v @ p - a).max(), np.abs(v.conj().T @ v - np.eye(d)).max())
    assert worst < 1e-10


def test_polar_rank_deficient_is_deterministic():
    a = np.array([[1.0, 0.0], [0.0, 0.0]])
    v1, _ = polar(a)
    v2, _ = polar(a.copy())
    assert np.abs(v1 - v2).max() == 0
    assert np.abs(v1.conj().T @ v1 - np.eye(2)).max() < 1e-12


def test_kernel_basis():
    ker = kernel_basis(np.diag([1.0, 0.0]))
    assert len(ker) == 1 and abs(abs(ker[0][1]) - 1) < 1e-12
    assert kernel_basis(np.eye(3)) == []
    r = sum(proj(v) for v in orthogonal_triple_vectors())
    ker = kernel_basis(r)
    assert len(ker) == 1
    assert np.linalg.norm(r @ ker[0]) <= 1e-8


def test_embed_and_local_factor_round_trip():
    dims = [2, 3]
    a = random_matrix(3, 9)
    full = embed(a, 1, dims)
    assert np.abs(full - np.kron(np.eye(2), a)).max() == 0
    assert np.abs(local_factor(full, 1, dims) - a).max() < 1e-12
    assert is_local(full, 1, dims)
    assert not is_local(full, 0, dims)


def test_product_operator_expand_and_psd():
    s = HilbertStructure([2, 2])
    e = ProductOperator(s, [np.diag([1.0, 0.5]), np.diag([0.2, 1.0])])
    assert np.abs(e.expand() - np.kron(np.diag([1.0, 0.5]), np.diag([0.2, 1.0]))).max() == 0
    assert e.factors_psd()
    assert np.abs(e.scaled(3).expand() - 3 * e.expand()).max() < 1e-14
    with pytest.raises(ValueError):
        ProductOperator(s, [np.eye(2)])
