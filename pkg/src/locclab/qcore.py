"""Dense linear algebra on small multipartite Hilbert spaces.

Everything here works on plain complex ``numpy`` arrays.  Hermitian
eigendecomposition is the single backend for square roots, inverse square
roots, kernels and positivity checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

PSD_TOL = 1e-9


@dataclass(frozen=True)
class HilbertStructure:
    """Local dimensions of a tensor-product space, in party order."""

    party_dims: tuple[int, ...]

    def __init__(self, party_dims: Sequence[int]):
        dims = tuple(int(d) for d in party_dims)
        if not dims:
            raise ValueError("party_dims must be non-empty")
        if any(d < 1 for d in dims):
            raise ValueError(f"party dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "party_dims", dims)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.party_dims))

    @property
    def num_parties(self) -> int:
        return len(self.party_dims)

    def identity(self) -> np.ndarray:
        return np.eye(self.total_dim, dtype=complex)


def _check_square(m: np.ndarray, name: str = "matrix") -> np.ndarray:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be square, got shape {m.shape}")
    return m


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def tensor(parts: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of square matrices in party order."""
    if len(parts) == 0:
        raise ValueError("tensor needs at least one factor")
    mats = [_check_square(p, "tensor factor") for p in parts]
    return reduce(np.kron, mats)


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + dagger(m))


def is_hermitian(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.abs(m - dagger(m)).max() <= tol


def psd_margin(m: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of ``m``."""
    return float(np.linalg.eigvalsh(hermitian_part(_check_square(m)))[0])


def is_psd(m: np.ndarray, tol: float = PSD_TOL) -> bool:
    return is_hermitian(m, max(tol, 1e-12)) and psd_margin(m) >= -tol


def _eigh(m: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    m = _check_square(np.asarray(m, dtype=complex))
    if np.abs(m - dagger(m)).max() > max(tol, 1e-12) * max(1.0, np.abs(m).max()):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(hermitian_part(m))


def sqrt_psd(m: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    w, v = _eigh(m, tol)
    if w[0] < -tol:
        raise ValueError(f"matrix is not PSD: smallest eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ dagger(v)


def inv_sqrt_psd(m: np.ndarray, tol: float = PSD_TOL) -> np.ndarray:
    """Pseudo-inverse square root; eigenvalues at or below ``tol`` map to zero."""
    w, v = _eigh(m, tol)
    inv = np.zeros_like(w)
    keep = w > tol
    inv[keep] = 1.0 / np.sqrt(w[keep])
    return (v * inv) @ dagger(v)


def kernel_basis(m: np.ndarray, tol: float = PSD_TOL) -> list[np.ndarray]:
    """Orthonormal basis of the eigenspace with eigenvalue <= tol."""
    w, v = _eigh(m, tol)
    return [v[:, i].copy() for i in range(len(w)) if w[i] <= tol]


def _complete_basis(cols: np.ndarray, dim: int) -> np.ndarray:
    """Extend orthonormal columns to a unitary by Gram-Schmidt over e_0, e_1, ..."""
    basis = [cols[:, i] for i in range(cols.shape[1])]
    for j in range(dim):
        if len(basis) == dim:
            break
        e = np.zeros(dim, dtype=complex)
        e[j] = 1.0
        for _ in range(2):
            for b in basis:
                e = e - np.vdot(b, e) * b
        n = np.linalg.norm(e)
        if n > 1e-8:
            basis.append(e / n)
    return np.column_stack(basis) if basis else np.zeros((dim, 0), dtype=complex)


def polar(a: np.ndarray, tol: float = PSD_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Polar decomposition ``a = V @ P`` with ``P = sqrt(a^dag a)`` and ``V`` unitary.

    On the kernel of ``P`` the unitary is completed deterministically: the
    left and right singular vectors with singular value above ``tol`` are
    kept in descending order, and both bases are completed by Gram-Schmidt
    over the standard basis vectors in index order.
    """
    a = _check_square(np.asarray(a, dtype=complex), "polar input")
    d = a.shape[0]
    w, s, xh = np.linalg.svd(a)
    rank = int(np.sum(s > tol))
    left = _complete_basis(w[:, :rank], d)
    right = _complete_basis(dagger(xh)[:, :rank], d)
    v = left @ dagger(right)
    p = hermitian_part((dagger(xh) * s) @ xh)
    return v, p


def embed(local: np.ndarray, party: int, dims: Sequence[int]) -> np.ndarray:
    """Pad a local operator with identities on every other party."""
    local = _check_square(local, "local operator")
    if local.shape[0] != dims[party]:
        raise ValueError(f"local operator has dim {local.shape[0]}, party {party} has {dims[party]}")
    parts = [np.eye(d, dtype=complex) for d in dims]
    parts[party] = np.asarray(local, dtype=complex)
    return tensor(parts)


def local_factor(op: np.ndarray, party: int, dims: Sequence[int]) -> np.ndarray:
    """Normalised partial trace over all parties except ``party``.

    If ``op`` acts trivially outside ``party`` this recovers the local factor
    exactly.
    """
    dims = list(dims)
    n = len(dims)
    t = np.asarray(op).reshape(dims + dims)
    keep = [i for i in range(n) if i != party]
    # contract row and column index of every other party
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for i in keep:
        cols[i] = rows[i]
    subscripts = "".join(rows) + "".join(cols) + "->" + rows[party] + cols[party]
    other = int(np.prod([dims[i] for i in keep])) if keep else 1
    return np.einsum(subscripts, t) / other


def is_local(op: np.ndarray, party: int, dims: Sequence[int], tol: float = 1e-9) -> bool:
    return np.abs(embed(local_factor(op, party, dims), party, dims) - op).max() <= tol


@dataclass
class ProductOperator:
    """A tensor product of per-party positive factors."""

    structure: HilbertStructure
    factors: list[np.ndarray]

    def __post_init__(self):
        self.factors = [np.asarray(f, dtype=complex) for f in self.factors]
        if len(self.factors) != self.structure.num_parties:
            raise ValueError("need one factor per party")
        for f, d in zip(self.factors, self.structure.party_dims):
            if f.shape != (d, d):
                raise ValueError(f"factor shape {f.shape} does not match local dim {d}")

    def expand(self) -> np.ndarray:
        return tensor(self.factors)

    def factors_psd(self, tol: float = PSD_TOL) -> bool:
        return all(is_psd(f, tol) for f in self.factors)

    def scaled(self, c: float) -> "ProductOperator":
        return ProductOperator(self.structure, [c * self.factors[0]] + self.factors[1:])


def product_vector(locals_: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, [np.asarray(v, dtype=complex) for v in locals_])


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def proj(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())
