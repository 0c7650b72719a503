"""Protocol splitting at a deviation level ``delta``.

Whenever a local round would push the conditional deviation of a branch
below ``delta``, the round is replaced by its pseudo-weak implementation
tuned so that the branch lands exactly on ``delta``.  A recovery round is
inserted below each tuned outcome and the original continuation is
re-attached under every recovery outcome.  Forgetting the pseudo-weak
outcomes gives back the statistics of the original protocol.
"""

from __future__ import annotations

import copy
from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .deviation import DeviationKind, WeightedStateFamily, conditional_deviation, post_process, trivial_deviation
from .measure import KrausInstrument, pseudo_weak_instrument
from .protocol import Node, ProtocolTree, branch_operator, local_matrix, local_node, simulate
from .qcore import HilbertStructure, dagger, sqrt_psd


class SplitError(RuntimeError):
    """Root finding for a pseudo-weak parameter failed."""


@dataclass
class SplitConfig:
    delta: float
    kind: DeviationKind = DeviationKind.MEAN_FAILURE
    level_tol: float = 1e-6
    b_max: float = 1.0
    max_bisect: int = 200
    b_cap: float = 1e12

    def __post_init__(self):
        self.kind = DeviationKind.parse(self.kind)
        if self.level_tol <= 0 or self.b_max <= 0 or self.max_bisect < 1:
            raise ValueError("tolerances and iteration caps must be positive")
        if self.delta <= 0:
            raise ValueError(f"delta={self.delta} must be positive")

    def check_family(self, family: WeightedStateFamily) -> None:
        top = trivial_deviation(self.kind, family)
        if not 0 < self.delta < top:
            raise ValueError(f"delta={self.delta} must lie strictly between 0 and {top}")

    def status(self, d: float) -> int:
        """-1 below delta, 0 at delta (within level_tol), +1 above."""
        if d < self.delta - self.level_tol:
            return -1
        if d > self.delta + self.level_tol:
            return 1
        return 0


@dataclass
class SplitResult:
    modified: ProtocolTree
    stage_one: ProtocolTree
    s_delta: list[Node]
    forget_map: np.ndarray
    iterations: int
    stage_one_deviations: list[float]


def _dev(kind, family, a) -> float:
    return conditional_deviation(kind, None, family, a)


def node_deviation(tree: ProtocolTree, node: Node, kind, family: WeightedStateFamily) -> float:
    return _dev(kind, family, branch_operator(tree, node))


def _below(children, a_s, config, family) -> list[Node]:
    return [c for c in children if _dev(config.kind, family, c.op @ a_s) < config.delta - config.level_tol]


def d_delta_set(tree: ProtocolTree, node: Node, config: SplitConfig, family: WeightedStateFamily) -> list[Node]:
    """Children of ``node`` whose conditional deviation dropped below delta."""
    return _below(node.children, branch_operator(tree, node), config, family)


def _find_b(a_s: np.ndarray, effect: np.ndarray, config: SplitConfig, family) -> float:
    eye = np.eye(effect.shape[0])

    def gap(b):
        return _dev(config.kind, family, sqrt_psd(b * eye + effect) @ a_s) - config.delta

    g0 = gap(0.0)
    if abs(g0) <= config.level_tol:
        return 0.0
    if g0 > 0:
        raise SplitError(f"deviation {g0 + config.delta:.6g} at b=0 is already above delta")
    lo, hi = 0.0, float(config.b_max)
    for _ in range(config.max_bisect):
        if gap(hi) > 0:
            break
        lo, hi = hi, 2 * hi
        if hi > config.b_cap:
            raise SplitError(f"no bracket for delta={config.delta} up to b={config.b_cap:g}")
    else:
        raise SplitError("bracket doubling exceeded max_bisect")
    b = brentq(gap, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=config.max_bisect)
    if abs(gap(b)) > config.level_tol:
        raise SplitError(f"root finding stopped at |d - delta| = {abs(gap(b)):.3e}")
    return float(b)


def find_b(tree: ProtocolTree, s: Node, c: Node, config: SplitConfig, family: WeightedStateFamily) -> float:
    """Pseudo-weak parameter putting child ``c`` of ``s`` exactly at delta."""
    if c not in s.children:
        raise ValueError("c is not a child of s")
    return _find_b(branch_operator(tree, s), dagger(c.op) @ c.op, config, family)


def _first_candidate(tree: ProtocolTree, config: SplitConfig, family):
    """Breadth-first, leftmost node with a below-delta child and every ancestor above delta."""
    queue = deque([(tree.root, tree.root.op)])
    while queue:
        node, a = queue.popleft()
        if config.status(_dev(config.kind, family, a)) <= 0:
            continue
        if node.is_leaf:
            continue
        below = _below(node.children, a, config, family)
        if below:
            return node, a, below
        for c in node.children:
            queue.append((c, c.op @ a))
    return None


def _split_node(node: Node, a_s: np.ndarray, below: list[Node], structure: HilbertStructure, config, family) -> None:
    dims = structure.party_dims
    party = node.children[0].party
    local_struct = HilbertStructure([dims[party]])
    locals_ = [local_matrix(c, dims) for c in node.children]
    b = [_find_b(a_s, dagger(c.op) @ c.op, config, family) if c in below else 0.0 for c in node.children]
    pw, rc = pseudo_weak_instrument(KrausInstrument(locals_, local_struct), b)
    beta = 1.0 / (1.0 + sum(b))
    continuations = [copy.deepcopy(c.children) for c in node.children]
    new_children = []
    for k, c in enumerate(node.children):
        if b[k] == 0:
            # trivial recovery folded in: sqrt(beta) * A_c reproduces V_c sqrt(E_c^pw)
            c.op = np.sqrt(beta) * c.op
            if c.local is not None:
                c.local = np.sqrt(beta) * c.local
            c.tag = "scaled" if c.tag == "orig" else c.tag
            new_children.append(c)
            continue
        recovery = [
            local_node(party, rc[k].kraus_ops[l], dims, copy.deepcopy(continuations[l]), origin=orig.origin, tag="rc")
            for l, orig in enumerate(node.children)
        ]
        new_children.append(local_node(party, pw.kraus_ops[k], dims, recovery, tag="pw"))
    node.children = new_children


def split_protocol(tree: ProtocolTree, config: SplitConfig, family: WeightedStateFamily) -> SplitResult:
    config.check_family(family)
    work = tree.copy()
    for i, (n, _) in enumerate(work.walk()):
        n.origin = i
    orig_leaves = [n.origin for n in work.leaves()]

    iterations = 0
    while True:
        found = _first_candidate(work, config, family)
        if found is None:
            break
        _split_node(*found, work.structure, config, family)
        iterations += 1

    stage_one, s_delta, devs = _truncate(work, config, family)
    index = {o: i for i, o in enumerate(orig_leaves)}
    mod_leaves = work.leaves()
    forget = np.zeros((len(orig_leaves), len(mod_leaves)))
    for j, leaf in enumerate(mod_leaves):
        forget[index[leaf.origin], j] = 1.0
    return SplitResult(work, stage_one, s_delta, forget, iterations, devs)


def _truncate(tree: ProtocolTree, config: SplitConfig, family):
    """Stage one: cut every branch at its first node sitting at delta."""
    stage = tree.copy()
    s_delta = []
    queue = deque([(stage.root, stage.root.op, True)])
    while queue:
        node, a, is_root = queue.popleft()
        if not is_root and config.status(_dev(config.kind, family, a)) == 0:
            node.children = []
            s_delta.append(node)
            continue
        for c in node.children:
            queue.append((c, c.op @ a, False))
    devs = [node_deviation(stage, leaf, config.kind, family) for leaf in stage.leaves()]
    return stage, s_delta, devs


def equivalence_check(original: ProtocolTree, result: SplitResult, family: WeightedStateFamily) -> float:
    """Largest entrywise gap between the original table and the forget-merged modified table."""
    merged = post_process(simulate(result.modified, family), result.forget_map)
    return float(np.abs(merged - simulate(original, family)).max())
