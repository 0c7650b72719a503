"""Acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from locclab.basis import Decision, computational_basis, dissect, domino_basis, emit_protocol, rotate_locally
from locclab.certify import (
    SearchConfig,
    closed_form_certificate,
    eigen_bound_holds,
    eta_r,
    orthogonal_triple,
    precondition_check,
    search_certificate,
    verify_certificate,
)
from locclab.deviation import (
    WeightedStateFamily,
    conditional_deviation,
    d_ce,
    d_mf,
    deviation,
    post_process,
)
from locclab.measure import KrausInstrument, Povm, pseudo_weak_instrument, recovered_outcome_states, recovery_identity_check
from locclab.protocol import ProtocolTree, local_round, random_protocol, simulate, validate
from locclab.qcore import HilbertStructure, ProductOperator, dagger, ket, proj
from locclab.rand import (
    random_density,
    random_kraus,
    random_povm_effects,
    random_probabilities,
    random_stochastic,
    random_unitary,
    rng_of,
)
from locclab.splitting import SplitConfig, equivalence_check, split_protocol

pytestmark = pytest.mark.acceptance

TWO = HilbertStructure([2, 2])


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line


def test_criterion_1_closed_form_reproduction():
    fam = orthogonal_triple()
    start = time.perf_counter()
    worst, all_passed = 0.0, True
    for chi in np.linspace(1 / 3, 1, 101):
        cert = verify_certificate(closed_form_certificate(chi), fam, chi, tol=1e-8, psd_tol=1e-9)
        all_passed &= cert.passed
        r = cert.residuals
        worst = max(worst, r["normalization"], r["max_trace"], r["orthogonality"])
        all_passed &= r["psd_margin"] >= -1e-9
    elapsed = time.perf_counter() - start
    ok = all_passed and worst <= 1e-8 and elapsed < 1.0
    report(1, ok, f"101 chi values, worst residual {worst:.2e}, {elapsed:.3f}s")


def test_criterion_2_recovery_identity():
    rng = rng_of(20240)
    start = time.perf_counter()
    worst_identity, worst_channel = 0.0, 0.0
    for _ in range(200):
        d, n = int(rng.integers(2, 7)), int(rng.integers(2, 5))
        b = rng.exponential(size=n) * (rng.random(n) > 0.2)
        inst = KrausInstrument(random_kraus(n, d, rng))
        worst_identity = max(worst_identity, recovery_identity_check(inst.povm(), b)[1])
        pw, rc = pseudo_weak_instrument(inst, b)
        for _ in range(20):
            rho = random_density(d, seed=rng)
            got = sum(recovered_outcome_states(pw, rc, rho))
            worst_channel = max(worst_channel, np.abs(got - inst.channel(rho)).max())
    elapsed = time.perf_counter() - start
    ok = worst_identity <= 1e-9 and worst_channel <= 1e-9 and elapsed < 10
    report(2, ok, f"identity {worst_identity:.2e}, channel {worst_channel:.2e}, {elapsed:.2f}s")


def random_table(rng):
    n, k = int(rng.integers(2, 6)), int(rng.integers(1, 6))
    p = rng.random((n, k)) * (rng.random((n, k)) > 0.3)
    if p.sum() == 0:
        p[0, 0] = 1.0
    return p / p.sum()


def test_criterion_3_measure_axioms():
    rng = rng_of(303)
    start = time.perf_counter()
    dominance = all(d_ce(p) >= d_mf(p) - 1e-12 for p in (random_table(rng) for _ in range(10_000)))
    monotone = True
    for _ in range(1000):
        p = random_table(rng)
        q = post_process(p, random_stochastic(int(rng.integers(1, 6)), p.shape[1], rng))
        monotone &= d_mf(q) >= d_mf(p) - 1e-12 and d_ce(q) >= d_ce(p) - 1e-12
    worst = 0.0
    for _ in range(100):
        d, n, m = int(rng.integers(2, 5)), int(rng.integers(2, 4)), int(rng.integers(2, 5))
        fam = WeightedStateFamily(HilbertStructure([d]), [random_density(d, seed=rng) for _ in range(m)],
                                  random_probabilities(m, rng))
        first = random_kraus(n, d, rng)
        follow = [Povm(random_povm_effects(int(rng.integers(1, 4)), d, rng)) for _ in range(n)]
        whole = Povm([dagger(a) @ f @ a for a, povm in zip(first, follow) for f in povm.effects])
        for kind in ("mf", "ce"):
            total = 0.0
            for a, povm in zip(first, follow):
                p_a = sum(np.trace(a @ g @ dagger(a)).real for g in fam.weighted())
                total += p_a * conditional_deviation(kind, povm, fam, a)
            worst = max(worst, abs(deviation(kind, whole, fam) - total))
    elapsed = time.perf_counter() - start
    ok = dominance and monotone and worst <= 1e-10 and elapsed < 30
    report(3, ok, f"dominance {dominance}, monotone {monotone}, two-stage {worst:.2e}, {elapsed:.2f}s")


def stage_one_ok(result, config, tol):
    for leaf, d in zip(result.stage_one.leaves(), result.stage_one_deviations):
        at_delta = any(leaf is s for s in result.s_delta)
        if at_delta and abs(d - config.delta) > tol:
            return False
        if not at_delta and not d > config.delta:
            return False
    return True


def test_criterion_4_protocol_splitting():
    start = time.perf_counter()
    pair = WeightedStateFamily.from_vectors(TWO, [ket(0, 4), ket(2, 4)])
    triple = WeightedStateFamily.from_vectors(TWO, [ket(0, 4), ket(2, 4), ket(3, 4)])
    perfect = ProtocolTree.from_rounds(TWO, local_round(TWO, 0, [np.diag([1.0, 0.0]), np.diag([0.0, 1.0])]))
    cases = [(perfect, pair)] + [(random_protocol(TWO, depth=2, seed=s), triple) for s in range(50)]
    worst_eq, bad, runs = 0.0, 0, 0
    for tree, fam in cases:
        for delta in (0.1, 0.2, 0.3):
            config = SplitConfig(delta)
            result = split_protocol(tree, config, fam)
            runs += 1
            worst_eq = max(worst_eq, equivalence_check(tree, result, fam))
            if not stage_one_ok(result, config, 1e-6) or not validate(result.modified).valid:
                bad += 1
    elapsed = time.perf_counter() - start
    ok = bad == 0 and worst_eq <= 1e-8 and elapsed < 60
    report(4, ok, f"{runs} splits, {bad} boundary failures, equivalence {worst_eq:.2e}, {elapsed:.2f}s")


def test_criterion_5_product_basis_decisions():
    worst, wrong = 0.0, 0
    for dims in ([2, 2], [3, 3], [2, 2, 2]):
        basis = computational_basis(dims)
        result = dissect(basis)
        if result.decision is not Decision.FINITE_DISCRIMINABLE:
            wrong += 1
            continue
        worst = max(worst, d_mf(simulate(emit_protocol(result, basis), basis.family())))
    bases = [computational_basis([2, 2]), computational_basis([3, 3]), computational_basis([2, 2, 2]), domino_basis()]
    expected = [Decision.FINITE_DISCRIMINABLE] * 3 + [Decision.NOT_DISCRIMINABLE]
    wrong += dissect(domino_basis()).decision is not Decision.NOT_DISCRIMINABLE
    for seed in range(20):
        rng = rng_of(seed)
        for basis, want in zip(bases, expected):
            rotated = rotate_locally(basis, [random_unitary(d, rng) for d in basis.structure.party_dims])
            result = dissect(rotated)
            wrong += result.decision is not want
            if result.discriminable:
                worst = max(worst, d_mf(simulate(emit_protocol(result, rotated), rotated.family())))
    ok = wrong == 0 and worst <= 1e-10
    report(5, ok, f"{wrong} wrong decisions, worst emitted d_mf {worst:.2e}")


def test_criterion_6_precondition_and_eta():
    fam = orthogonal_triple()
    pre = precondition_check(fam)
    eta = eta_r(fam).eta
    certs = [verify_certificate(closed_form_certificate(chi), fam, chi) for chi in np.linspace(1 / 3, 1, 101)]
    for chi in (1 / 3, 0.6, 0.9):
        certs.append(search_certificate(fam, chi, SearchConfig(restarts=64, seed=0)).certificate)
    verified = [c for c in certs if c.passed]
    checks = [eigen_bound_holds(c, eta, 1e-6) for c in verified]
    worst_gap = max(top - bound for _, top, bound in checks)
    ok = pre.passed and pre.max_overlap < 1 - 1e-6 and all(c[0] for c in checks)
    report(6, ok, f"kernel overlap {pre.max_overlap:.6f}, eta {eta:.6f}, "
                  f"{len(verified)} certificates, max(eig - 1/eta) {worst_gap:.3e}")


def test_criterion_7_search_feasibility():
    fam = orthogonal_triple()
    start = time.perf_counter()
    config = SearchConfig(restarts=64, seed=0)
    details, ok = [], True
    for chi in (1 / 3, 0.45, 0.6, 0.75, 0.9, 1.0):
        first = search_certificate(fam, chi, config)
        again = search_certificate(fam, chi, config)
        same = np.abs(first.certificate.E.expand() - again.certificate.E.expand()).max() == 0
        ok &= first.status == "found" and first.restarts_used <= 64 and same
        details.append(f"{chi:.3f}:{first.restarts_used}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120
    report(7, ok, f"restarts used {' '.join(details)}, {elapsed:.1f}s (two deterministic runs)")


def test_criterion_8_boundary_cases():
    families = {
        "triple": orthogonal_triple(),
        "pair": WeightedStateFamily.from_vectors(TWO, [ket(0, 4), ket(2, 4)]),
        "basis 2x2": computational_basis([2, 2]).family(),
        "basis 3x3": computational_basis([3, 3]).family(),
        "basis 2x2x2": computational_basis([2, 2, 2]).family(),
        "domino": domino_basis().family(),
    }
    failed = []
    for name, fam in families.items():
        n = len(fam)
        dims = fam.structure.party_dims
        e = ProductOperator(fam.structure, [np.eye(dims[0]) / n] + [np.eye(d) for d in dims[1:]])
        if not verify_certificate(e, fam, 1 / n).passed:
            failed.append(name)
    e00 = ProductOperator(TWO, [proj(ket(0, 2)), proj(ket(0, 2))])
    if not verify_certificate(e00, orthogonal_triple(), 1.0).passed:
        failed.append("|00><00|")
    report(8, not failed, f"{len(families)} identity/N families and |00><00|, failures: {failed or 'none'}")
