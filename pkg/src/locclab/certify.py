"""Product-operator certificates for asymptotically perfect LOCC discrimination.

If a family of states can be discriminated perfectly in the limit of
unbounded LOCC resources, then for every ``chi`` in ``[1/N, 1]`` there is a
positive product operator ``E`` with

* ``sum_mu tr(E rho_mu) = 1``,
* ``max_mu tr(E rho_mu) = chi``,
* ``tr(E rho_mu E rho_nu) = 0`` for ``mu != nu``,

provided the joint kernel of the states holds no product vector.  This
module checks that precondition, verifies candidate operators, searches
for them numerically, and builds a closed-form family of them for
:func:`orthogonal_triple`.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import least_squares

from .deviation import DeviationKind, WeightedStateFamily, conditional_deviation, trivial_deviation
from .qcore import (
    HilbertStructure,
    ProductOperator,
    dagger,
    hermitian_part,
    kernel_basis,
    psd_margin,
    sqrt_psd,
)
from .rand import rng_of

log = logging.getLogger(__name__)

OVERLAP_MARGIN = 1e-6


class PreconditionError(ValueError):
    """The joint kernel of the family contains a product vector."""


# ---------------------------------------------------------------------------
# Fixture states


def orthogonal_triple_vectors() -> list[np.ndarray]:
    """Three orthogonal two-qubit states without a finite LOCC discrimination protocol.

    They can be told apart perfectly by a separable measurement, and the
    only vector orthogonal to all three is entangled.
    """
    s3 = np.sqrt(3.0)
    q3 = 3.0 ** 0.25
    raw = [
        [1, 0, 0, 0],
        [0, 2, -(s3 + 1), -np.sqrt(6.0) * q3],
        [0, 2, -(s3 - 1), np.sqrt(2.0) * q3],
    ]
    return [np.asarray(v, dtype=complex) / np.linalg.norm(v) for v in raw]


def orthogonal_triple() -> WeightedStateFamily:
    return WeightedStateFamily.from_vectors(HilbertStructure([2, 2]), orthogonal_triple_vectors())


def _chi_tilde(chi: float) -> float:
    s3 = np.sqrt(3.0)
    disc = (115 - 8 * s3) * chi ** 2 - (46 - 10 * s3) * chi - 2 * s3 + 4
    assert disc >= -1e-12, f"negative discriminant {disc} at chi={chi}"
    return float(np.sqrt(max(disc, 0.0)))


def closed_form_factors(chi: float) -> list[np.ndarray]:
    """Unnormalised local factors of the closed-form certificate for :func:`orthogonal_triple`."""
    s3 = np.sqrt(3.0)
    if chi < 0.5:
        ct = _chi_tilde(chi)
        shared = (12 - s3) * chi + ct + s3 - 1
        b = np.diag([20 * chi + 2 * ct - 4, shared])
        c = np.diag([-(4 + 3 * s3) * chi - ct + 3 * s3 + 5, shared])
        return [b.astype(complex), c.astype(complex)]
    off = np.sqrt(2 * s3 - 3) * ((5 * s3 - 3) * chi - 2 * s3)
    a = np.array([
        [-(12 * s3 - 21) * chi + 3 * s3 - 3, off],
        [np.conj(off), (6 * s3 - 12) * chi - 2 * s3 + 6],
    ], dtype=complex)
    return [a, np.diag([0.0, 1.0]).astype(complex)]


def closed_form_certificate(chi: float) -> ProductOperator:
    """Certificate for :func:`orthogonal_triple` at any ``1/3 <= chi <= 1``."""
    if not (1 / 3 - 1e-12 <= chi <= 1 + 1e-12):
        raise ValueError(f"chi={chi} outside [1/3, 1]")
    factors = closed_form_factors(chi)
    raw = ProductOperator(HilbertStructure([2, 2]), factors)
    e = raw.expand()
    norm = sum(np.vdot(v, e @ v).real for v in orthogonal_triple_vectors())
    return raw.scaled(1.0 / norm)


# ---------------------------------------------------------------------------
# Product-vector extrema


@dataclass
class ProductVectorReport:
    value: float
    vectors: list[np.ndarray]
    mode: str
    converged: bool

    @property
    def max_overlap(self) -> float:
        return self.value

    @property
    def eta(self) -> float:
        return self.value

    def recomputed(self, m: np.ndarray) -> float:
        v = reduce(np.kron, self.vectors)
        return float(np.vdot(v, m @ v).real)


def _embedding(vectors: Sequence[np.ndarray], party: int) -> np.ndarray:
    """Columns map a local vector of ``party`` into the product with the other fixed vectors."""
    parts = [v.reshape(-1, 1) for v in vectors]
    parts[party] = np.eye(len(vectors[party]), dtype=complex)
    return reduce(np.kron, parts)


def product_vector_extremum(
    m: np.ndarray,
    structure: HilbertStructure,
    mode: str = "max",
    restarts: int = 64,
    max_iters: int = 500,
    tol: float = 1e-12,
    seed=0,
) -> ProductVectorReport:
    """Extremise ``<xi|M|xi>`` over product unit vectors by alternating eigenproblems.

    With every party but one fixed, the best local vector is an extremal
    eigenvector of the contracted local matrix.  The result is the best of
    ``restarts`` random product starts, so it is a lower bound on the true
    maximum (upper bound on the minimum).
    """
    if mode not in ("max", "min"):
        raise ValueError(f"mode must be 'max' or 'min', got {mode!r}")
    m = hermitian_part(np.asarray(m, dtype=complex))
    dims = structure.party_dims
    rng = rng_of(seed)
    pick = -1 if mode == "max" else 0
    best = None
    for _ in range(max(1, restarts)):
        vecs = []
        for d in dims:
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            vecs.append(v / np.linalg.norm(v))
        value = np.inf if mode == "min" else -np.inf
        converged = False
        for _ in range(max_iters):
            old = value
            for r in range(len(dims)):
                x = _embedding(vecs, r)
                w, u = np.linalg.eigh(hermitian_part(dagger(x) @ m @ x))
                vecs[r] = u[:, pick]
                value = float(w[pick])
            if abs(value - old) < tol:
                converged = True
                break
        better = best is None or (value > best.value if mode == "max" else value < best.value)
        if better:
            best = ProductVectorReport(value, [v.copy() for v in vecs], mode, converged)
    return best


# ---------------------------------------------------------------------------
# Precondition


@dataclass
class PreconditionReport:
    passed: bool
    kernel_dim: int
    max_overlap: float
    witness: list[np.ndarray] | None


def precondition_check(family: WeightedStateFamily, restarts: int = 64, seed=0, tol: float = 1e-9) -> PreconditionReport:
    """Does the joint kernel of the states avoid every product vector?"""
    r = sum(family.weighted())
    kernel = kernel_basis(r, tol)
    if not kernel:
        return PreconditionReport(True, 0, 0.0, None)
    p_k = sum(np.outer(k, k.conj()) for k in kernel)
    rep = product_vector_extremum(p_k, family.structure, "max", restarts=restarts, seed=seed)
    passed = rep.max_overlap < 1 - OVERLAP_MARGIN
    return PreconditionReport(passed, len(kernel), rep.max_overlap, None if passed else rep.vectors)


def eta_r(family: WeightedStateFamily, restarts: int = 64, seed=0) -> ProductVectorReport:
    """Minimum of ``<xi| sum_mu rho_mu |xi>`` over product unit vectors.

    The sum is unweighted, matching the ``sum_mu tr(E rho_mu) = 1``
    normalisation of certificates, so certificate eigenvalues are at most
    ``1 / eta``.
    """
    return product_vector_extremum(sum(family.states), family.structure, "min", restarts=restarts, seed=seed)


# ---------------------------------------------------------------------------
# Verification


@dataclass
class Certificate:
    E: ProductOperator
    chi: float
    residuals: dict
    passed: bool
    traces: list[float] = field(default_factory=list)


def _pair_overlaps(e: np.ndarray, states: Sequence[np.ndarray]) -> float:
    worst = 0.0
    for i, ri in enumerate(states):
        for j, rj in enumerate(states):
            if i != j:
                worst = max(worst, abs(np.trace(e @ ri @ e @ rj)))
    return float(worst)


def verify_certificate(E: ProductOperator, family: WeightedStateFamily, chi: float, tol: float = 1e-8,
                       psd_tol: float = 1e-9) -> Certificate:
    """Recompute every certificate condition for ``E`` on the family's states (priors ignored)."""
    n = len(family)
    if n < 2:
        raise ValueError("need at least two states")
    if not (1 / n - 1e-12 <= chi <= 1 + 1e-12):
        raise ValueError(f"chi={chi} outside [1/{n}, 1]")
    if E.structure.total_dim != family.structure.total_dim:
        raise ValueError("certificate and family dimensions differ")
    e = E.expand()
    traces = [float(np.trace(e @ r).real) for r in family.states]
    residuals = {
        "normalization": abs(sum(traces) - 1.0),
        "max_trace": abs(max(traces) - chi),
        "orthogonality": _pair_overlaps(e, family.states),
        "psd_margin": psd_margin(e),
        "hermiticity": float(np.abs(e - dagger(e)).max()),
    }
    passed = (
        residuals["normalization"] <= tol
        and residuals["max_trace"] <= tol
        and residuals["orthogonality"] <= tol
        and residuals["hermiticity"] <= tol
        and residuals["psd_margin"] >= -psd_tol
    )
    return Certificate(E, chi, residuals, bool(passed), traces)


def max_residual(cert: Certificate) -> float:
    r = cert.residuals
    return max(r["normalization"], r["max_trace"], r["orthogonality"], r["hermiticity"], max(0.0, -r["psd_margin"]))


# ---------------------------------------------------------------------------
# Search


@dataclass
class SearchConfig:
    restarts: int = 64
    seed: int = 0
    max_iters: int = 500
    sweeps: int = 30
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)
    tol: float = 1e-12
    verify_tol: float = 1e-8

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1 or self.sweeps < 0:
            raise ValueError("restart and iteration counts must be positive")
        if any(w <= 0 for w in self.weights):
            raise ValueError("penalty weights must be positive")


@dataclass
class SearchResult:
    status: str  # "found" or "inconclusive"
    certificate: Certificate
    restarts_used: int
    objective: float


def _state_roots(states: Sequence[np.ndarray]) -> list[np.ndarray]:
    roots = []
    for r in states:
        w, v = np.linalg.eigh(hermitian_part(r))
        keep = w > 1e-12
        roots.append(v[:, keep] * np.sqrt(w[keep]))
    return roots


class _Penalty:
    """Residual vector whose squared norm is the certificate penalty.

    The max-trace condition is split as ``t_m = chi`` plus ``t_mu <= chi``
    for a chosen index ``m``; the orthogonality residuals are the entries of
    ``B_mu^dag E B_nu`` with ``rho_mu = B_mu B_mu^dag``, whose squared norm is
    ``tr(E rho_mu E rho_nu)``.
    """

    def __init__(self, family: WeightedStateFamily, chi: float, target: int, weights):
        self.dims = family.structure.party_dims
        self.roots = _state_roots(family.states)
        self.chi = chi
        self.target = target
        self.w = np.sqrt(np.asarray(weights, dtype=float))
        self.sizes = [2 * d * d for d in self.dims]

    def unpack(self, x: np.ndarray) -> list[np.ndarray]:
        out, i = [], 0
        for d, s in zip(self.dims, self.sizes):
            block = x[i:i + s]
            out.append((block[: d * d] + 1j * block[d * d:]).reshape(d, d))
            i += s
        return out

    def pack(self, ls: Sequence[np.ndarray]) -> np.ndarray:
        return np.concatenate([np.concatenate([l.real.ravel(), l.imag.ravel()]) for l in ls])

    def operator(self, x: np.ndarray) -> ProductOperator:
        factors = [dagger(l) @ l for l in self.unpack(x)]
        return ProductOperator(HilbertStructure(self.dims), factors)

    def residuals(self, x: np.ndarray) -> np.ndarray:
        e = self.operator(x).expand()
        t = np.array([np.trace(dagger(b) @ e @ b).real for b in self.roots])
        res = [self.w[0] * (t.sum() - 1.0), self.w[1] * (t[self.target] - self.chi)]
        res += [self.w[1] * max(0.0, t[mu] - self.chi) for mu in range(len(t)) if mu != self.target]
        for i in range(len(self.roots)):
            for j in range(i + 1, len(self.roots)):
                block = dagger(self.roots[i]) @ e @ self.roots[j]
                # pair (i, j) and (j, i) carry equal overlaps
                res.extend(np.sqrt(2) * self.w[2] * block.real.ravel())
                res.extend(np.sqrt(2) * self.w[2] * block.imag.ravel())
        return np.asarray(res, dtype=float)


def _lsq(fun, x0, max_nfev):
    method = "lm" if len(fun(x0)) >= len(x0) else "trf"
    return least_squares(fun, x0, method=method, xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_nfev)


def _run_restart(pen: _Penalty, x0: np.ndarray, config: SearchConfig) -> np.ndarray:
    x = x0.copy()
    offsets = np.cumsum([0] + pen.sizes)
    prev = np.inf
    for _ in range(config.sweeps):
        for r in range(len(pen.dims)):
            lo, hi = offsets[r], offsets[r + 1]

            def block(y, lo=lo, hi=hi):
                z = x.copy()
                z[lo:hi] = y
                return pen.residuals(z)

            x[lo:hi] = _lsq(block, x[lo:hi], config.max_iters).x
        obj = float(np.sum(pen.residuals(x) ** 2))
        if prev - obj < config.tol:
            break
        prev = obj
    return _lsq(pen.residuals, x, config.max_iters).x


def search_certificate(family: WeightedStateFamily, chi: float, config: SearchConfig | None = None,
                       check_precondition: bool = True) -> SearchResult:
    """Penalty search for a certificate at ``chi``.

    Each restart alternates least-squares solves over one party's factor at
    a time, then polishes jointly.  Restart ``i`` pins the maximum trace to
    state ``i mod N``.  Failure is reported as ``"inconclusive"``; it never
    means that no certificate exists.
    """
    config = config or SearchConfig()
    if check_precondition:
        pre = precondition_check(family, seed=config.seed)
        if not pre.passed:
            raise PreconditionError(f"joint kernel contains a product vector (overlap {pre.max_overlap:.6f})")
    rng = rng_of(config.seed)
    n = len(family)
    best = None
    for i in range(config.restarts):
        pen = _Penalty(family, chi, i % n, config.weights)
        x0 = pen.pack([rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)) for d in pen.dims])
        x = _run_restart(pen, x0, config)
        obj = float(np.sum(pen.residuals(x) ** 2))
        cert = verify_certificate(pen.operator(x), family, chi, tol=config.verify_tol)
        if best is None or cert.passed and not best[1].passed or (cert.passed == best[1].passed and obj < best[0]):
            best = (obj, cert)
        if cert.passed:
            log.debug("chi=%.4f: certificate after %d restarts", chi, i + 1)
            return SearchResult("found", cert, i + 1, obj)
    return SearchResult("inconclusive", best[1], config.restarts, best[0])


# ---------------------------------------------------------------------------
# M_delta membership


@dataclass
class MembershipReport:
    passed: bool
    residuals: dict


def mdelta_check(E: ProductOperator, family: WeightedStateFamily, delta: float,
                 kind=DeviationKind.MEAN_FAILURE, tol: float = 1e-8) -> MembershipReport:
    """Is ``E`` a normalised product operator whose conditioned trivial deviation equals ``delta``?

    Uses the weighted states: ``sum_mu tr(gamma_mu E) = 1`` and
    ``d(trivial | sqrt(E)) = delta``.
    """
    top = trivial_deviation(kind, family)
    if not 0 < delta < top - 1e-12:
        raise ValueError(f"delta={delta} must lie strictly between 0 and {top}")
    e = E.expand()
    margin = psd_margin(e)
    norm = sum(np.trace(g @ e).real for g in family.weighted())
    dev = conditional_deviation(kind, None, family, sqrt_psd(hermitian_part(e), tol=max(tol, 1e-9)))
    residuals = {"psd_margin": margin, "normalization": abs(norm - 1.0), "deviation": abs(dev - delta)}
    passed = margin >= -1e-9 and residuals["normalization"] <= tol and residuals["deviation"] <= tol
    return MembershipReport(bool(passed), residuals)


# ---------------------------------------------------------------------------
# Scanning chi


@dataclass
class ScanReport:
    verdict: str  # "satisfied" or "inconclusive"
    points: list[dict]

    @property
    def inconclusive_at(self) -> list[float]:
        return [p["chi"] for p in self.points if p["status"] != "pass"]


def chi_grid(n_states: int, grid: int) -> np.ndarray:
    return np.linspace(1.0 / n_states, 1.0, grid)


def scan_chi(family: WeightedStateFamily, grid: int, config: SearchConfig | None = None,
             closed_form: Callable[[float], ProductOperator] | None = None) -> ScanReport:
    """Look for a certificate on a uniform ``chi`` grid over ``[1/N, 1]``.

    A supplied ``closed_form`` builder is tried first at every point; the
    numerical search is the fallback.  Since no infeasibility witness can be
    produced, the verdict is either ``"satisfied"`` or ``"inconclusive"``.
    """
    config = config or SearchConfig()
    pre = precondition_check(family, seed=config.seed)
    if not pre.passed:
        raise PreconditionError(f"joint kernel contains a product vector (overlap {pre.max_overlap:.6f})")
    points = []
    for chi in chi_grid(len(family), grid):
        chi = float(chi)
        cert = None
        source = "closed_form"
        if closed_form is not None:
            cert = verify_certificate(closed_form(chi), family, chi, tol=config.verify_tol)
        if cert is None or not cert.passed:
            source = "search"
            cert = search_certificate(family, chi, config, check_precondition=False).certificate
        points.append({
            "chi": chi,
            "status": "pass" if cert.passed else "inconclusive",
            "source": source,
            "max_residual": max_residual(cert),
        })
    verdict = "satisfied" if all(p["status"] == "pass" for p in points) else "inconclusive"
    return ScanReport(verdict, points)


def eigen_bound_holds(cert: Certificate, eta: float, slack: float = 1e-6) -> tuple[bool, float, float]:
    """Check ``max eig(E) <= 1/eta``; returns ``(ok, max_eig, 1/eta)``."""
    top = float(np.linalg.eigvalsh(hermitian_part(cert.E.expand()))[-1])
    bound = 1.0 / eta
    return top <= bound + slack, top, bound
