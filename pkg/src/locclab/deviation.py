"""Deviation-from-perfect-discrimination measures.

Outcome distributions are plain arrays ``p[mu, k]`` holding the joint
probability of state ``mu`` and outcome ``k``.  Entropies are in nats.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .measure import Povm
from .qcore import HilbertStructure, dagger, is_psd, proj

P_A_CUTOFF = 1e-14


class DeviationKind(str, enum.Enum):
    MEAN_FAILURE = "mf"
    CONDITIONAL_ENTROPY = "ce"
    FINITE = "finite"

    @classmethod
    def parse(cls, value) -> "DeviationKind":
        if isinstance(value, cls):
            return value
        aliases = {"mean_failure": "mf", "conditional_entropy": "ce"}
        return cls(aliases.get(value, value))


@dataclass
class WeightedStateFamily:
    """States ``rho_mu`` with prior probabilities ``p_mu``."""

    structure: HilbertStructure
    states: list[np.ndarray]
    priors: np.ndarray
    vectors: list[np.ndarray] | None = None

    def __post_init__(self):
        self.states = [np.asarray(r, dtype=complex) for r in self.states]
        self.priors = np.asarray(self.priors, dtype=float)
        if len(self.states) != len(self.priors):
            raise ValueError("one prior per state required")
        if len(self.states) == 0:
            raise ValueError("empty family")
        dim = self.structure.total_dim
        for r in self.states:
            if r.shape != (dim, dim):
                raise ValueError(f"state shape {r.shape} does not match dimension {dim}")

    @classmethod
    def from_vectors(cls, structure: HilbertStructure, vectors: Sequence[np.ndarray], priors=None):
        kets = []
        for v in vectors:
            v = np.asarray(v, dtype=complex)
            n = np.linalg.norm(v)
            kets.append(v if abs(n - 1) <= 1e-12 else v / n)
        priors = np.full(len(kets), 1.0 / len(kets)) if priors is None else priors
        return cls(structure, [proj(v) for v in kets], priors, kets)

    def __len__(self) -> int:
        return len(self.states)

    def weighted(self) -> list[np.ndarray]:
        return [p * r for p, r in zip(self.priors, self.states)]

    def with_equal_priors(self) -> "WeightedStateFamily":
        n = len(self)
        return WeightedStateFamily(self.structure, self.states, np.full(n, 1.0 / n), self.vectors)

    def validate(self, tol: float = 1e-9) -> list[str]:
        problems = []
        if np.any(self.priors <= 0):
            problems.append("priors must be positive")
        if abs(self.priors.sum() - 1) > tol:
            problems.append(f"priors sum to {self.priors.sum()}")
        for i, r in enumerate(self.states):
            if not is_psd(r, tol):
                problems.append(f"state {i} is not PSD")
            if abs(np.trace(r).real - 1) > tol:
                problems.append(f"state {i} has trace {np.trace(r).real}")
        return problems


def as_distribution(p, tol: float = 1e-9) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise ValueError("outcome distribution must be a 2-d table p[state, outcome]")
    if p.min(initial=0.0) < -1e-12:
        raise ValueError("negative probability in outcome table")
    p = np.clip(p, 0.0, None)
    if abs(p.sum() - 1) > tol:
        raise ValueError(f"outcome table sums to {p.sum()}, not 1")
    return p


def _joint_table(effects: Sequence[np.ndarray], weighted: Sequence[np.ndarray]) -> np.ndarray:
    table = np.array([[np.trace(g @ e).real for e in effects] for g in weighted])
    return np.clip(table, 0.0, None)


def outcome_distribution(povm: Povm, family: WeightedStateFamily) -> np.ndarray:
    if povm.dim != family.structure.total_dim:
        raise ValueError(f"POVM dimension {povm.dim} does not match family {family.structure.total_dim}")
    return _joint_table(povm.effects, family.weighted())


def d_mf(p) -> float:
    """Minimal mean failure probability: ``1 - sum_k max_mu p(mu, k)``."""
    p = np.asarray(p, dtype=float)
    return float(max(0.0, 1.0 - p.max(axis=0).sum()))


def announced_guess(p) -> np.ndarray:
    """Index guessed for each outcome; ties go to the smallest state index."""
    return np.argmax(np.asarray(p), axis=0)


def _plogp(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def d_ce(p) -> float:
    """Conditional entropy ``H(S|K) = H(S,K) - H(K)`` in nats."""
    p = np.clip(np.asarray(p, dtype=float), 0.0, None)
    h_joint = -_plogp(p).sum()
    h_k = -_plogp(p.sum(axis=0)).sum()
    return float(max(0.0, h_joint - h_k))


def d_finite(p, tol: float = 1e-12) -> float:
    p = np.asarray(p, dtype=float)
    shared = ((p > tol).sum(axis=0) > 1).any()
    return 1.0 if shared else 0.0


def evaluate(kind, p) -> float:
    kind = DeviationKind.parse(kind)
    if kind is DeviationKind.MEAN_FAILURE:
        return d_mf(p)
    if kind is DeviationKind.CONDITIONAL_ENTROPY:
        return d_ce(p)
    return d_finite(p)


def deviation(kind, povm: Povm, family: WeightedStateFamily) -> float:
    return evaluate(kind, outcome_distribution(povm, family))


def conditional_deviation(kind, povm: Povm | None, family: WeightedStateFamily, a: np.ndarray) -> float:
    """Deviation of ``povm`` on the family conditioned on the Kraus operator ``a``.

    The conditioned family is ``a gamma_mu a^dag / p_a``.  When ``p_a`` is
    (numerically) zero the trivial measurement on the unconditioned family
    is scored instead.  ``povm=None`` means the trivial measurement.
    """
    a = np.asarray(a, dtype=complex)
    weighted = family.weighted()
    post = [a @ g @ dagger(a) for g in weighted]
    p_a = float(sum(np.trace(x).real for x in post))
    if p_a <= P_A_CUTOFF:
        trivial = np.array([[np.trace(g).real] for g in weighted])
        return evaluate(kind, trivial)
    effects = [np.eye(a.shape[0])] if povm is None else povm.effects
    return evaluate(kind, _joint_table(effects, [x / p_a for x in post]))


def trivial_deviation(kind, family: WeightedStateFamily) -> float:
    return evaluate(kind, np.asarray(family.priors, dtype=float)[:, None])


def post_process(p, pi) -> np.ndarray:
    """Apply a column-stochastic matrix: ``p'(mu, l) = sum_k pi[l, k] p(mu, k)``."""
    p = np.asarray(p, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if pi.ndim != 2 or pi.shape[1] != p.shape[1]:
        raise ValueError(f"post-processing of shape {pi.shape} does not act on {p.shape[1]} outcomes")
    if pi.min() < -1e-12 or np.abs(pi.sum(axis=0) - 1).max() > 1e-9:
        raise ValueError("post-processing matrix is not column-stochastic")
    return p @ pi.T
