"""Finite LOCC protocols as trees of party-local Kraus operators.

Each non-root node carries the Kraus operator of one outcome of a local
instrument.  All children of a node belong to the same instrument, so they
share a party and satisfy ``sum_c A_c^dag A_c = 1``.  The operator of a
branch is the product along the root path, latest operation leftmost.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .deviation import WeightedStateFamily
from .measure import Povm
from .qcore import HilbertStructure, dagger, embed, is_local, local_factor, tensor


@dataclass(eq=False)
class Node:
    """A protocol node.

    ``op`` is the full-space Kraus operator; ``party`` is the party it acts
    on.  The root has ``party=None`` and the identity as its operator.
    ``local`` optionally keeps the party-local matrix ``op`` was built from.
    ``origin`` and ``tag`` are bookkeeping used by protocol splitting.
    """

    op: np.ndarray
    party: int | None = None
    children: list["Node"] = field(default_factory=list)
    origin: int | None = None
    tag: str = "orig"
    local: np.ndarray | None = None

    @property
    def is_leaf(self) -> bool:
        return not self.children


def local_node(party: int, local: np.ndarray, dims, children=None, **kw) -> Node:
    local = np.asarray(local, dtype=complex)
    return Node(embed(local, party, dims), party, list(children or []), local=local, **kw)


def local_matrix(node: Node, dims) -> np.ndarray:
    return node.local if node.local is not None else local_factor(node.op, node.party, dims)


@dataclass
class ProtocolTree:
    structure: HilbertStructure
    root: Node

    @classmethod
    def trivial(cls, structure: HilbertStructure) -> "ProtocolTree":
        return cls(structure, Node(structure.identity()))

    @classmethod
    def from_rounds(cls, structure: HilbertStructure, children: list[Node]) -> "ProtocolTree":
        return cls(structure, Node(structure.identity(), None, children))

    def walk(self) -> Iterator[tuple[Node, tuple[Node, ...]]]:
        """Depth-first pre-order traversal yielding ``(node, ancestors)``."""
        stack = [(self.root, ())]
        while stack:
            node, anc = stack.pop()
            yield node, anc
            for c in reversed(node.children):
                stack.append((c, anc + (node,)))

    def walk_breadth_first(self) -> Iterator[tuple[Node, tuple[Node, ...]]]:
        queue = deque([(self.root, ())])
        while queue:
            node, anc = queue.popleft()
            yield node, anc
            for c in node.children:
                queue.append((c, anc + (node,)))

    def nodes(self) -> list[Node]:
        return [n for n, _ in self.walk()]

    def leaves(self) -> list[Node]:
        return [n for n, _ in self.walk() if n.is_leaf]

    def path_to(self, node: Node) -> tuple[Node, ...]:
        """Nodes from the root to ``node``, both included."""
        for n, anc in self.walk():
            if n is node:
                return anc + (n,)
        raise KeyError("node is not part of this tree")

    def copy(self) -> "ProtocolTree":
        return copy.deepcopy(self)

    def depth(self) -> int:
        return max(len(anc) for _, anc in self.walk())


def path_operator(path) -> np.ndarray:
    a = path[0].op
    for n in path[1:]:
        a = n.op @ a
    return a


def branch_operator(tree: ProtocolTree, node: Node) -> np.ndarray:
    return path_operator(tree.path_to(node))


def branch_factors(tree: ProtocolTree, node: Node) -> list[np.ndarray]:
    """Per-party factors of the branch operator, each the ordered product of that party's local operators."""
    dims = tree.structure.party_dims
    factors = [np.eye(d, dtype=complex) for d in dims]
    for n in tree.path_to(node)[1:]:
        factors[n.party] = local_matrix(n, dims) @ factors[n.party]
    return factors


def branch_operators(tree: ProtocolTree) -> list[np.ndarray]:
    """Branch operators of all leaves in depth-first order."""
    out = []
    stack = [(tree.root, tree.root.op)]
    while stack:
        node, a = stack.pop()
        if node.is_leaf:
            out.append(a)
        for c in reversed(node.children):
            stack.append((c, c.op @ a))
    return out


@dataclass
class ValidationReport:
    valid: bool
    worst_completeness: float
    violations: list[str]


def validate(tree: ProtocolTree, tol: float = 1e-9) -> ValidationReport:
    dims = tree.structure.party_dims
    dim = tree.structure.total_dim
    violations = []
    worst = 0.0
    if tree.root.op.shape != (dim, dim) or np.abs(tree.root.op - np.eye(dim)).max() > tol:
        violations.append("root operator is not the identity")
    for k, (node, anc) in enumerate(tree.walk()):
        if node.is_leaf:
            continue
        where = f"node #{k} (depth {len(anc)})"
        parties = {c.party for c in node.children}
        if len(parties) != 1 or None in parties:
            violations.append(f"{where}: children act on parties {sorted(parties, key=str)}")
        for c in node.children:
            if c.op.shape != (dim, dim):
                violations.append(f"{where}: child operator has shape {c.op.shape}")
            elif c.party is not None and not (0 <= c.party < len(dims)):
                violations.append(f"{where}: party index {c.party} out of range")
            elif c.party is not None and not is_local(c.op, c.party, dims, tol):
                violations.append(f"{where}: child operator is not local to party {c.party}")
        if any(c.op.shape != (dim, dim) for c in node.children):
            continue
        resid = float(np.abs(sum(dagger(c.op) @ c.op for c in node.children) - np.eye(dim)).max())
        worst = max(worst, resid)
        if resid > tol:
            violations.append(f"{where}: completeness residual {resid:.3e}")
    return ValidationReport(not violations, worst, violations)


def simulate(tree: ProtocolTree, family: WeightedStateFamily) -> np.ndarray:
    """Joint table ``p[mu, leaf] = p_mu tr(A_leaf rho_mu A_leaf^dag)``, leaves depth-first."""
    if family.structure.total_dim != tree.structure.total_dim:
        raise ValueError("family and protocol live on different spaces")
    ops = branch_operators(tree)
    table = np.array([[np.trace(a @ g @ dagger(a)).real for a in ops] for g in family.weighted()])
    return np.clip(table, 0.0, None)


def as_povm(tree: ProtocolTree, tol: float = 1e-9) -> Povm:
    report = validate(tree, tol)
    if not report.valid:
        raise ValueError("invalid protocol: " + "; ".join(report.violations))
    return Povm([dagger(a) @ a for a in branch_operators(tree)], tree.structure)


def local_round(structure: HilbertStructure, party: int, kraus_locals, subtrees=None) -> list[Node]:
    """Children for one local instrument; ``subtrees[i]`` are the children of outcome ``i``."""
    subtrees = subtrees or [[] for _ in kraus_locals]
    return [local_node(party, a, structure.party_dims, sub) for a, sub in zip(kraus_locals, subtrees)]


def branch_is_product(tree: ProtocolTree, node: Node, tol: float = 1e-9) -> bool:
    return np.abs(tensor(branch_factors(tree, node)) - branch_operator(tree, node)).max() <= tol


def random_protocol(structure: HilbertStructure, depth: int = 2, seed=None, max_outcomes: int = 3,
                    projective: float = 0.5, stop: float = 0.25) -> ProtocolTree:
    """Random valid protocol of at most ``depth`` rounds.

    Each round picks a party at random and applies either a rotated
    projective measurement (probability ``projective``) or a random
    instrument; non-root nodes stop early with probability ``stop``.
    """
    from .rand import random_kraus, random_unitary, rng_of

    rng = rng_of(seed)
    dims = structure.party_dims

    def grow(level: int) -> list[Node]:
        if level >= depth or (level > 0 and rng.random() < stop):
            return []
        party = int(rng.integers(len(dims)))
        d = dims[party]
        if rng.random() < projective and d > 1:
            n = int(rng.integers(2, min(d, max_outcomes) + 1))
            u = random_unitary(d, rng)
            groups = np.array_split(rng.permutation(d), n)
            ops = [u[:, g] @ u[:, g].conj().T for g in groups]
        else:
            n = int(rng.integers(2, max_outcomes + 1))
            ops = random_kraus(n, d, rng)
        return [local_node(party, a, dims, grow(level + 1)) for a in ops]

    return ProtocolTree.from_rounds(structure, grow(0))
