"""POVMs, Kraus instruments, and pseudo-weak implementations with recovery.

A pseudo-weak implementation of a POVM ``(E_k)`` mixes every effect with
the identity, ``E_k^pw = beta * (b_k * 1 + E_k)`` where
``beta = 1 / (1 + sum_k b_k)``.  For large ``b_k`` the outcome ``k`` barely
disturbs the state, yet a recovery measurement applied afterwards restores
the statistics and post-measurement states of the original measurement.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .qcore import (
    PSD_TOL,
    HilbertStructure,
    dagger,
    inv_sqrt_psd,
    is_local,
    is_psd,
    polar,
    sqrt_psd,
)


@dataclass
class Povm:
    effects: list[np.ndarray]
    structure: HilbertStructure | None = None

    def __post_init__(self):
        self.effects = [np.asarray(e, dtype=complex) for e in self.effects]
        if not self.effects:
            raise ValueError("a POVM needs at least one effect")
        if self.structure is None:
            self.structure = HilbertStructure([self.dim])

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    def __len__(self) -> int:
        return len(self.effects)

    def completeness_residual(self) -> float:
        return float(np.abs(sum(self.effects) - np.eye(self.dim)).max())

    def is_valid(self, tol: float = 1e-9) -> bool:
        return all(is_psd(e, tol) for e in self.effects) and self.completeness_residual() <= tol

    @classmethod
    def trivial(cls, structure: HilbertStructure) -> "Povm":
        return cls([structure.identity()], structure)


@dataclass
class KrausInstrument:
    """Kraus operators ``A_k`` of a measurement with post-measurement states.

    ``party`` is set when every operator acts non-trivially on that party only.
    """

    kraus_ops: list[np.ndarray]
    structure: HilbertStructure | None = None
    party: int | None = None

    def __post_init__(self):
        self.kraus_ops = [np.asarray(a, dtype=complex) for a in self.kraus_ops]
        if self.structure is None:
            self.structure = HilbertStructure([self.kraus_ops[0].shape[0]])

    @property
    def dim(self) -> int:
        return self.kraus_ops[0].shape[0]

    def effects(self) -> list[np.ndarray]:
        return [dagger(a) @ a for a in self.kraus_ops]

    def povm(self) -> Povm:
        return Povm(self.effects(), self.structure)

    def completeness_residual(self) -> float:
        return float(np.abs(sum(self.effects()) - np.eye(self.dim)).max())

    def is_valid(self, tol: float = 1e-9) -> bool:
        if self.completeness_residual() > tol:
            return False
        if self.party is not None:
            dims = self.structure.party_dims
            return all(is_local(a, self.party, dims, tol) for a in self.kraus_ops)
        return True

    def apply(self, rho: np.ndarray) -> list[np.ndarray]:
        """Unnormalised post-measurement states, one per outcome."""
        return [a @ rho @ dagger(a) for a in self.kraus_ops]

    def channel(self, rho: np.ndarray) -> np.ndarray:
        return sum(self.apply(rho))


@dataclass
class PseudoWeakParams:
    b: np.ndarray
    beta: float = field(init=False)

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        if np.any(self.b < 0):
            raise ValueError("pseudo-weak parameters must be non-negative")
        self.beta = 1.0 / (1.0 + float(self.b.sum()))

    def __len__(self) -> int:
        return len(self.b)


def _as_params(params, n: int) -> PseudoWeakParams:
    if not isinstance(params, PseudoWeakParams):
        params = PseudoWeakParams(params)
    if len(params) != n:
        raise ValueError(f"{len(params)} pseudo-weak parameters for {n} outcomes")
    return params


def pseudo_weak(povm: Povm, params) -> Povm:
    params = _as_params(params, len(povm))
    eye = np.eye(povm.dim)
    return Povm([params.beta * (bk * eye + e) for bk, e in zip(params.b, povm.effects)], povm.structure)


def recovery_povm(povm: Povm, params, k: int, tol: float = PSD_TOL) -> Povm:
    """Recovery measurement to run after pseudo-weak outcome ``k``."""
    params = _as_params(params, len(povm))
    n, dim = len(povm), povm.dim
    if not 0 <= k < n:
        raise IndexError(k)
    if params.b[k] == 0:
        return Povm([np.eye(dim) if l == k else np.zeros((dim, dim)) for l in range(n)], povm.structure)
    pw_k = params.beta * (params.b[k] * np.eye(dim) + povm.effects[k])
    x = inv_sqrt_psd(pw_k, tol)
    effects = []
    for l, e in enumerate(povm.effects):
        c = params.beta * (params.b[k] + (1.0 if l == k else 0.0))
        effects.append(c * x @ e @ x)
    return Povm(effects, povm.structure)


def recovery_identity_check(povm: Povm, params, tol: float = 1e-9) -> tuple[bool, float]:
    """Check ``sqrt(E_k^pw) E^rc_(k),l sqrt(E_k^pw) = beta (b_k + delta_kl) E_l``.

    Returns ``(ok, worst operator-norm residual)`` over all ``k, l``.
    """
    params = _as_params(params, len(povm))
    pw = pseudo_weak(povm, params)
    worst = 0.0
    for k in range(len(povm)):
        root = sqrt_psd(pw.effects[k])
        rc = recovery_povm(povm, params, k)
        for l, e in enumerate(povm.effects):
            c = params.beta * (params.b[k] + (1.0 if l == k else 0.0))
            diff = root @ rc.effects[l] @ root - c * e
            worst = max(worst, float(np.linalg.norm(diff, 2)))
    return worst <= tol, worst


def pseudo_weak_instrument(
    inst: KrausInstrument, params, tol: float = PSD_TOL
) -> tuple[KrausInstrument, list[KrausInstrument]]:
    """Pseudo-weak Kraus operators and one recovery instrument per outcome.

    Running ``pw`` and then ``rc[k]`` after outcome ``k``, while forgetting
    ``k``, reproduces every outcome-``l`` state of ``inst``.
    """
    povm = inst.povm()
    params = _as_params(params, len(povm))
    pw_povm = pseudo_weak(povm, params)
    roots = [sqrt_psd(e, tol) for e in pw_povm.effects]
    isometries = [polar(a, tol)[0] for a in inst.kraus_ops]

    recoveries = []
    for k in range(len(povm)):
        rc_povm = recovery_povm(povm, params, k, tol)
        ops = []
        for l, e_rc in enumerate(rc_povm.effects):
            root_rc = sqrt_psd(e_rc, tol)
            # U maps |sqrt(E_rc) sqrt(E_pw)| back to itself: M = W |M|, U = W^dag
            w, _ = polar(root_rc @ roots[k], tol)
            ops.append(isometries[l] @ dagger(w) @ root_rc)
        recoveries.append(KrausInstrument(ops, inst.structure, inst.party))
    return KrausInstrument(roots, inst.structure, inst.party), recoveries


def recovered_outcome_states(
    pw: KrausInstrument, rc: Sequence[KrausInstrument], rho: np.ndarray
) -> list[np.ndarray]:
    """Outcome-``l`` states after pseudo-weak + recovery with the first outcome forgotten."""
    n = len(rc[0].kraus_ops)
    out = [np.zeros_like(rho, dtype=complex) for _ in range(n)]
    for k, a in enumerate(pw.kraus_ops):
        mid = a @ rho @ dagger(a)
        for l, r in enumerate(rc[k].kraus_ops):
            out[l] += r @ mid @ dagger(r)
    return out
