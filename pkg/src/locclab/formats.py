"""JSON file formats.

Complex numbers are ``[re, im]`` pairs; matrices are row-major nested lists
of such pairs.  Every ``dump_*``/``load_*`` pair round-trips byte-stably
through :func:`to_json`.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from .basis import ProductBasis
from .deviation import WeightedStateFamily
from .measure import Povm
from .protocol import Node, ProtocolTree, local_matrix, local_node, validate
from .qcore import HilbertStructure, ProductOperator, is_psd, proj

log = logging.getLogger(__name__)

NORM_TOL = 1e-6


class FormatError(ValueError):
    pass


def to_json(obj) -> str:
    return json.dumps(obj, indent=1, sort_keys=True) + "\n"


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def complex_vec(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex).ravel()]


def complex_mat(m) -> list:
    return [complex_vec(row) for row in np.asarray(m, dtype=complex)]


def parse_vec(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise FormatError("complex vector must be a list of [re, im] pairs")
    return arr[:, 0] + 1j * arr[:, 1]


def parse_mat(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[2] != 2 or arr.shape[0] != arr.shape[1]:
        raise FormatError("complex matrix must be a square nested list of [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


def _structure(data) -> HilbertStructure:
    try:
        return HilbertStructure(data["dims"])
    except (KeyError, TypeError) as exc:
        raise FormatError("missing or malformed 'dims'") from exc


# states ---------------------------------------------------------------------


def load_states(data) -> WeightedStateFamily:
    structure = _structure(data)
    dim = structure.total_dim
    entries = data.get("states")
    if not entries:
        raise FormatError("'states' must be a non-empty list")
    states, priors, kets = [], [], []
    for i, entry in enumerate(entries):
        if "vector" in entry:
            v = parse_vec(entry["vector"])
            if v.shape != (dim,):
                raise FormatError(f"state {i}: vector length {len(v)} != {dim}")
            n = np.linalg.norm(v)
            if n == 0:
                raise FormatError(f"state {i}: zero vector")
            if abs(n - 1) > NORM_TOL:
                log.warning("state %d has norm %.6g; renormalising", i, n)
            if abs(n - 1) > 1e-12:
                v = v / n
            kets.append(v)
            states.append(proj(v))
        elif "density" in entry:
            rho = parse_mat(entry["density"])
            if rho.shape != (dim, dim):
                raise FormatError(f"state {i}: density shape {rho.shape}")
            if not is_psd(rho, NORM_TOL) or abs(np.trace(rho).real - 1) > NORM_TOL:
                raise FormatError(f"state {i}: density is not PSD with unit trace")
            kets.append(None)
            states.append(rho)
        else:
            raise FormatError(f"state {i}: needs 'vector' or 'density'")
        priors.append(entry.get("prior"))
    if all(p is None for p in priors):
        priors = [1.0 / len(states)] * len(states)
    elif any(p is None for p in priors):
        raise FormatError("give a prior for every state or for none")
    priors = np.asarray(priors, dtype=float)
    if np.any(priors <= 0) or abs(priors.sum() - 1) > NORM_TOL:
        raise FormatError("priors must be positive and sum to 1")
    if abs(priors.sum() - 1) > 1e-12:
        priors = priors / priors.sum()
    pure = None if any(k is None for k in kets) else kets
    return WeightedStateFamily(structure, states, priors, pure)


def dump_states(family: WeightedStateFamily) -> dict:
    out = []
    for i, (rho, p) in enumerate(zip(family.states, family.priors)):
        if family.vectors is not None:
            out.append({"prior": float(p), "vector": complex_vec(family.vectors[i])})
        else:
            out.append({"prior": float(p), "density": complex_mat(rho)})
    return {"dims": list(family.structure.party_dims), "states": out}


def dump_state_vectors(structure: HilbertStructure, vectors, priors=None) -> dict:
    n = len(vectors)
    priors = [1.0 / n] * n if priors is None else priors
    return {
        "dims": list(structure.party_dims),
        "states": [{"prior": float(p), "vector": complex_vec(v)} for v, p in zip(vectors, priors)],
    }


# protocols ------------------------------------------------------------------


def _load_node(data, dims) -> Node:
    try:
        party = int(data["party"])
        local = parse_mat(data["op"])
    except KeyError as exc:
        raise FormatError(f"protocol node missing {exc}") from exc
    if not 0 <= party < len(dims):
        raise FormatError(f"party {party} out of range")
    if local.shape != (dims[party], dims[party]):
        raise FormatError(f"local operator shape {local.shape} does not fit party {party}")
    children = [_load_node(c, dims) for c in data.get("children", [])]
    return local_node(party, local, dims, children)


def load_protocol(data) -> ProtocolTree:
    structure = _structure(data)
    root = data.get("tree", {})
    children = [_load_node(c, structure.party_dims) for c in root.get("children", [])]
    tree = ProtocolTree.from_rounds(structure, children)
    report = validate(tree)
    if not report.valid:
        raise FormatError("invalid protocol: " + "; ".join(report.violations))
    return tree


def _dump_node(node: Node, dims) -> dict:
    out = {"party": int(node.party), "op": complex_mat(local_matrix(node, dims))}
    if node.children:
        out["children"] = [_dump_node(c, dims) for c in node.children]
    return out


def dump_protocol(tree: ProtocolTree) -> dict:
    dims = tree.structure.party_dims
    return {"dims": list(dims), "tree": {"children": [_dump_node(c, dims) for c in tree.root.children]}}


def load_povm(data) -> Povm:
    structure = _structure(data)
    effects = [parse_mat(e) for e in data.get("effects", [])]
    if not effects:
        raise FormatError("'effects' must be a non-empty list")
    povm = Povm(effects, structure)
    if any(e.shape != (structure.total_dim,) * 2 for e in effects) or not povm.is_valid(1e-6):
        raise FormatError("effects are not a valid POVM on this space")
    return povm


def dump_povm(povm: Povm) -> dict:
    return {"dims": list(povm.structure.party_dims), "effects": [complex_mat(e) for e in povm.effects]}


# product operators and bases ------------------------------------------------


def load_product_operator(data) -> ProductOperator:
    structure = _structure(data)
    try:
        factors = [parse_mat(f) for f in data["factors"]]
        return ProductOperator(structure, factors)
    except KeyError as exc:
        raise FormatError("certificate needs 'factors'") from exc


def dump_product_operator(op: ProductOperator) -> dict:
    return {"dims": list(op.structure.party_dims), "factors": [complex_mat(f) for f in op.factors]}


def load_basis(data) -> ProductBasis:
    structure = _structure(data)
    try:
        vectors = [[parse_vec(v) for v in locs] for locs in data["vectors"]]
    except KeyError as exc:
        raise FormatError("basis needs 'vectors'") from exc
    return ProductBasis(structure, vectors)


def dump_basis(basis: ProductBasis) -> dict:
    return {
        "dims": list(basis.structure.party_dims),
        "vectors": [[complex_vec(v) for v in locs] for locs in basis.vectors],
    }
