"""Finite LOCC discrimination of complete orthonormal product bases.

A local measurement that leaves every basis state intact must have each
local vector as an eigenvector, with the same eigenvalue on any two local
vectors that are not orthogonal.  The finest such split on a party is given
by the connected components of the local non-orthogonality graph.  Splitting
recursively either isolates every state, giving a finite protocol, or gets
stuck on a sub-family no party can split.  For complete bases, getting
stuck also rules out discrimination with unbounded rounds.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .deviation import WeightedStateFamily
from .protocol import Node, ProtocolTree, local_node
from .qcore import HilbertStructure, product_vector

OVERLAP_TOL = 1e-9


class Decision(str, enum.Enum):
    FINITE_DISCRIMINABLE = "FINITE_DISCRIMINABLE"
    NOT_DISCRIMINABLE = "NOT_DISCRIMINABLE"


@dataclass
class ProductBasis:
    """``vectors[mu][r]`` is the local unit vector of state ``mu`` on party ``r``."""

    structure: HilbertStructure
    vectors: list[list[np.ndarray]]

    def __post_init__(self):
        dims = self.structure.party_dims
        cleaned = []
        for mu, locs in enumerate(self.vectors):
            if len(locs) != len(dims):
                raise ValueError(f"state {mu} has {len(locs)} local vectors for {len(dims)} parties")
            row = []
            for r, v in enumerate(locs):
                v = np.asarray(v, dtype=complex).ravel()
                if v.shape != (dims[r],):
                    raise ValueError(f"state {mu}, party {r}: expected dimension {dims[r]}")
                n = np.linalg.norm(v)
                if n == 0:
                    raise ValueError(f"state {mu}, party {r}: zero vector")
                row.append(v if abs(n - 1) <= 1e-12 else v / n)
            cleaned.append(row)
        self.vectors = cleaned

    def __len__(self) -> int:
        return len(self.vectors)

    def global_vectors(self) -> list[np.ndarray]:
        return [product_vector(locs) for locs in self.vectors]

    def gram_residual(self) -> float:
        g = np.array(self.global_vectors())
        return float(np.abs(g.conj() @ g.T - np.eye(len(self))).max())

    @property
    def is_complete(self) -> bool:
        return len(self) == self.structure.total_dim

    def family(self) -> WeightedStateFamily:
        return WeightedStateFamily.from_vectors(self.structure, self.global_vectors())


@dataclass
class DissectionResult:
    decision: Decision
    structure: HilbertStructure
    split: "Split | None" = None
    witness: list[int] = field(default_factory=list)

    @property
    def discriminable(self) -> bool:
        return self.decision is Decision.FINITE_DISCRIMINABLE


@dataclass
class Split:
    """One local projective round: ``party`` separates ``indices`` into ``parts``."""

    indices: list[int]
    party: int | None = None
    parts: list[list[int]] = field(default_factory=list)
    children: list["Split"] = field(default_factory=list)


def orthogonality_components(basis: ProductBasis, party: int, indices: Sequence[int],
                             tol: float = OVERLAP_TOL) -> list[list[int]]:
    """Connected components of the local overlap graph on ``party``.

    Components come out ordered by their smallest index.
    """
    indices = list(indices)
    if not indices:
        raise ValueError("indices must be non-empty")
    vecs = [basis.vectors[mu][party] for mu in indices]
    adjacent = np.abs(np.array(vecs).conj() @ np.array(vecs).T) > tol
    seen = [False] * len(indices)
    components = []
    for start in range(len(indices)):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            i = stack.pop()
            comp.append(indices[i])
            for j in np.flatnonzero(adjacent[i]):
                if not seen[j]:
                    seen[j] = True
                    stack.append(j)
        components.append(sorted(comp))
    return components


def _dissect(basis: ProductBasis, indices: list[int], tol: float) -> tuple[Split, list[int] | None]:
    node = Split(indices)
    if len(indices) == 1:
        return node, None
    for r in range(basis.structure.num_parties):
        parts = orthogonality_components(basis, r, indices, tol)
        if len(parts) > 1:
            node.party, node.parts = r, parts
            for part in parts:
                child, stuck = _dissect(basis, part, tol)
                node.children.append(child)
                if stuck is not None:
                    return node, stuck
            return node, None
    return node, indices


def dissect(basis: ProductBasis, tol: float = OVERLAP_TOL) -> DissectionResult:
    """Decide finite LOCC discriminability of a complete orthonormal product basis."""
    if not basis.is_complete:
        raise ValueError(
            f"basis has {len(basis)} states in dimension {basis.structure.total_dim}; "
            "only complete bases are decided"
        )
    resid = basis.gram_residual()
    if resid > 1e-9:
        raise ValueError(f"basis is not orthonormal (Gram residual {resid:.3e})")
    root, stuck = _dissect(basis, list(range(len(basis))), tol)
    if stuck is not None:
        return DissectionResult(Decision.NOT_DISCRIMINABLE, basis.structure, root, stuck)
    return DissectionResult(Decision.FINITE_DISCRIMINABLE, basis.structure, root)


def _span_projector(vectors: Sequence[np.ndarray]) -> np.ndarray:
    m = np.column_stack(vectors)
    u, s, _ = np.linalg.svd(m, full_matrices=False)
    q = u[:, s > 1e-9]
    return q @ q.conj().T


def _emit(basis: ProductBasis, split: Split) -> list[Node]:
    if split.party is None:
        return []
    r = split.party
    dims = basis.structure.party_dims
    projectors = [_span_projector([basis.vectors[mu][r] for mu in part]) for part in split.parts]
    # the unused local subspace rides along with the first outcome
    projectors[0] = projectors[0] + (np.eye(dims[r]) - sum(projectors))
    return [local_node(r, p, dims, _emit(basis, child)) for p, child in zip(projectors, split.children)]


def emit_protocol(result: DissectionResult, basis: ProductBasis) -> ProtocolTree:
    """Tree of local projective measurements realising the dissection."""
    if not result.discriminable:
        raise ValueError("no finite protocol exists for a NOT_DISCRIMINABLE basis")
    return ProtocolTree.from_rounds(basis.structure, _emit(basis, result.split))


def computational_basis(dims: Sequence[int]) -> ProductBasis:
    structure = HilbertStructure(dims)
    vectors = []
    for idx in np.ndindex(*structure.party_dims):
        vectors.append([np.eye(d)[i] for d, i in zip(structure.party_dims, idx)])
    return ProductBasis(structure, vectors)


def domino_basis() -> ProductBasis:
    """The nine-state 3x3 product basis with no perfect LOCC discrimination."""
    e = np.eye(3)

    def pm(i, j, sign):
        return (e[i] + sign * e[j]) / np.sqrt(2)

    vectors = [
        [e[1], e[1]],
        [e[0], pm(0, 1, 1)],
        [e[0], pm(0, 1, -1)],
        [e[2], pm(1, 2, 1)],
        [e[2], pm(1, 2, -1)],
        [pm(1, 2, 1), e[0]],
        [pm(1, 2, -1), e[0]],
        [pm(0, 1, 1), e[2]],
        [pm(0, 1, -1), e[2]],
    ]
    return ProductBasis(HilbertStructure([3, 3]), vectors)


def rotate_locally(basis: ProductBasis, unitaries: Sequence[np.ndarray]) -> ProductBasis:
    return ProductBasis(basis.structure, [[u @ v for u, v in zip(unitaries, locs)] for locs in basis.vectors])


def permute(basis: ProductBasis, state_order: Sequence[int] | None = None,
            party_order: Sequence[int] | None = None) -> ProductBasis:
    state_order = range(len(basis)) if state_order is None else state_order
    party_order = range(basis.structure.num_parties) if party_order is None else party_order
    dims = [basis.structure.party_dims[r] for r in party_order]
    vectors = [[basis.vectors[mu][r] for r in party_order] for mu in state_order]
    return ProductBasis(HilbertStructure(dims), vectors)
