"""Seeded random objects for tests, fixtures and search restarts."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group


def rng_of(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def random_unitary(dim: int, seed=None) -> np.ndarray:
    if dim == 1:
        phase = rng_of(seed).uniform(0, 2 * np.pi)
        return np.array([[np.exp(1j * phase)]])
    return unitary_group.rvs(dim, random_state=rng_of(seed))


def random_ket(dim: int, seed=None) -> np.ndarray:
    rng = rng_of(seed)
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def random_density(dim: int, rank: int | None = None, seed=None) -> np.ndarray:
    rng = rng_of(seed)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_psd(dim: int, seed=None, rank: int | None = None) -> np.ndarray:
    return dim * random_density(dim, rank=rank, seed=seed)


def random_kraus(num_ops: int, dim: int, seed=None) -> list[np.ndarray]:
    """Kraus operators cut from a random isometry ``C^dim -> C^(num_ops*dim)``."""
    u = random_unitary(num_ops * dim, seed)
    iso = u[:, :dim]
    return [iso[k * dim:(k + 1) * dim, :].copy() for k in range(num_ops)]


def random_povm_effects(num_outcomes: int, dim: int, seed=None) -> list[np.ndarray]:
    return [a.conj().T @ a for a in random_kraus(num_outcomes, dim, seed)]


def random_probabilities(n: int, seed=None) -> np.ndarray:
    return rng_of(seed).dirichlet(np.ones(n))


def random_stochastic(n_out: int, n_in: int, seed=None) -> np.ndarray:
    """Column-stochastic matrix ``pi[l, k]`` with ``sum_l pi[l, k] = 1``."""
    return rng_of(seed).dirichlet(np.ones(n_out), size=n_in).T
