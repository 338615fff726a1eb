"""End-to-end acceptance checks, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line (visible even under output
capture) and then asserts the tolerance and the runtime budget.  Shared
work (spectra, N = 32 systems, convergence sweeps) lives in module
fixtures whose cost is charged to every criterion that uses it.
"""

import math
import time

import numpy as np
import pytest

from nonlocal_gap import band, galerkin, gap, quadrature
from nonlocal_gap.domain import Domain
from nonlocal_gap.kernel import gaussian, generalized_exponential, tent
from nonlocal_gap.linalg import restrict

from conftest import DOMAINS, kernels_for

N_MAX = 32
N_SWEEP = [4, 8, 16, 32]
K_SWEEP = 3
ETA0_P2 = 0.7630598314725285

PAIRS = [(d, k) for d, dom in DOMAINS.items() for k in kernels_for(dom.dimension)]


def pair_id(pair):
    return f"{pair[1]}-{pair[0]}"


def report(capsys, number, title, ok, detail, elapsed, budget):
    ok = ok and elapsed < budget
    line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail} [{elapsed:.2f} s / {budget:g} s]"
    with capsys.disabled():
        print("\n" + line)
    return ok


class Timed(dict):
    """Results keyed by pair, plus the wall time spent producing them."""

    elapsed = 0.0


def _timed(build):
    out = Timed()
    for pair in PAIRS:
        dom = DOMAINS[pair[0]]
        kern = kernels_for(dom.dimension)[pair[1]]
        t0 = time.perf_counter()
        out[pair] = build(kern, dom, pair)
        out.elapsed += time.perf_counter() - t0
    return out


@pytest.fixture(scope="module")
def spectra():
    return _timed(lambda kern, dom, _: band.continuous_spectrum(kern, dom))


@pytest.fixture(scope="module")
def systems():
    return _timed(lambda kern, dom, _: galerkin.assemble(kern, dom, galerkin.build_basis(dom, N_MAX)))


@pytest.fixture(scope="module")
def sweeps(spectra):
    return _timed(lambda kern, dom, pair: galerkin.converge(kern, dom, N_SWEEP, K_SWEEP, spectrum=spectra[pair]))


def test_01_trivial_eigenpair(capsys, systems):
    t0 = time.perf_counter()
    worst_beta, worst_me0 = 0.0, 0.0
    for sys_ in systems.values():
        for N in N_SWEEP:
            sub = sys_.truncate(N)
            pairs = galerkin.solve(sub, 0, residuals=False)
            worst_beta = max(worst_beta, abs(pairs[0].value))
            worst_me0 = max(worst_me0, sub.constant_defect)
    elapsed = systems.elapsed + time.perf_counter() - t0
    ok = worst_beta <= 1e-8 and worst_me0 <= 1e-8
    assert report(capsys, 1, "trivial eigenpair", ok,
                  f"max |beta_0| = {worst_beta:.2e}, max ||M e0|| = {worst_me0:.2e}", elapsed, 10)


def test_02_beta1_between_band_edge_and_zero(capsys, systems, spectra):
    t0 = time.perf_counter()
    ok, lowest_margin, highest = True, math.inf, -math.inf
    for pair, sys_ in systems.items():
        sup = spectra[pair].sup_sigma_c
        for N in N_SWEEP:
            beta1 = galerkin.solve(sys_.truncate(N), 1, residuals=False)[1].value
            ok &= sup - 1e-8 <= beta1 < 0
            lowest_margin = min(lowest_margin, beta1 - sup)
            highest = max(highest, beta1)
    elapsed = systems.elapsed + spectra.elapsed + time.perf_counter() - t0
    assert report(capsys, 2, "sup sigma_c <= beta_1 < 0", ok,
                  f"min beta_1 - sup sigma_c = {lowest_margin:.3e}, max beta_1 = {highest:.3e}", elapsed, 60)


def test_03_monotone_convergence(capsys, sweeps, spectra):
    ok, worst = True, math.inf
    for table in sweeps.values():
        for k in range(1, K_SWEEP + 1):
            steps = np.diff(table.beta(k))
            ok &= bool(np.all(steps >= -1e-10))
            worst = min(worst, steps.min())
    gauss = sweeps[("interval", "gaussian")]
    ratios = []
    for k in range(1, K_SWEEP + 1):
        d = np.diff(gauss.beta(k))
        ratios.extend(d[1:] / d[:-1])
    ok &= max(ratios) <= 0.5
    elapsed = sweeps.elapsed + spectra.elapsed
    assert report(capsys, 3, "monotone Galerkin convergence", ok,
                  f"min step = {worst:.2e}, max Gaussian shrink ratio = {max(ratios):.2e}", elapsed, 300)


def test_04_residual_decay(capsys, sweeps, spectra):
    ok, checked = True, 0
    for table in sweeps.values():
        for k in range(1, K_SWEEP + 1):
            res, margin = table.residual(k), table.margin(k)
            keep = margin > 0.05
            steps = np.diff(res[keep])
            checked += steps.size
            ok &= bool(np.all(steps < 0))
    elapsed = sweeps.elapsed + spectra.elapsed
    assert report(capsys, 4, "residual decay", ok and checked > 0,
                  f"{checked} consecutive decreases checked", elapsed, 300)


def test_05_symmetrization_identity(capsys, systems):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for pair, sys_ in systems.items():
        basis, dom, kern = sys_.basis, sys_.domain, sys_.kernel
        coeffs = rng.standard_normal((basis.size, 50))
        quad = np.einsum("ij,ik,kj->j", coeffs, sys_.M.dense(), coeffs)
        deg = galerkin.max_degree(dom, basis.N, basis.kind)
        _, z_order = galerkin.overlap_order(dom, basis.N, basis.kind)
        sym = galerkin.dirichlet_energy(kern, dom, lambda p: basis(p) @ coeffs,
                                        inner_order=deg + 1, z_order=z_order + 6)
        worst = max(worst, float(np.max(np.abs(quad - sym) / (1 + np.abs(quad)))))
        if dom.dimension == 1:
            direct = galerkin.adaptive_sampler(kern, dom, basis.N, basis.kind).operator_form(basis)
            form = np.einsum("ij,ik,kj->j", coeffs, direct, coeffs)
            worst = max(worst, float(np.max(np.abs(form - sym) / (1 + np.abs(form)))))
    elapsed = systems.elapsed + time.perf_counter() - t0
    assert report(capsys, 5, "symmetrization identity", worst <= 1e-8,
                  f"max relative defect = {worst:.2e} over {50 * len(systems)} functions", elapsed, 120)


def test_06_unconditional_case(capsys):
    t0 = time.perf_counter()
    grid = np.geomspace(0.1, 10.0, 5)
    min_delta, worst = math.inf, 0.0
    for p in (0.5, 1.0):
        for L in grid:
            for lam in grid:
                r = gap.example_exp_delta(p, lam, L, validate=True)
                min_delta = min(min_delta, r.delta)
                worst = max(worst, r.discrepancy)
    elapsed = time.perf_counter() - t0
    ok = min_delta > 0 and worst <= 1e-8
    assert report(capsys, 6, "Delta > 0 for p <= 1", ok,
                  f"min Delta = {min_delta:.3e}, max |reduced - primitive| = {worst:.2e}", elapsed, 60)


def test_07_threshold_is_lambda_invariant(capsys):
    t0 = time.perf_counter()
    etas = {lam: gap.example_exp_threshold(2.0, lam) for lam in (0.5, 1.0, 2.0)}
    spread = max(etas.values()) - min(etas.values())
    signs = all(gap.delta_of_eta(2.0, lam, 0.5 * e) < 0 < gap.delta_of_eta(2.0, lam, 2.0 * e)
                for lam, e in etas.items())
    drift = abs(etas[1.0] - ETA0_P2)
    elapsed = time.perf_counter() - t0
    ok = spread <= 1e-6 and signs and drift <= 1e-6
    assert report(capsys, 7, "p = 2 threshold", ok,
                  f"eta_0 = {etas[1.0]:.10f}, spread over lambda = {spread:.1e}", elapsed, 60)


def test_08_retained_mass_scaling(capsys):
    t0 = time.perf_counter()
    scales = [1, 2, 4, 8, 16, 32, 64]
    table = band.retained_mass_scaling_study(gaussian(1.0), Domain.interval(-0.5, 0.5), scales)
    values = table[:, 1]
    elapsed = time.perf_counter() - t0
    ok = values[-1] >= 0.5 - 1e-3 and bool(np.all(np.diff(values) >= 0))
    assert report(capsys, 8, "retained-mass scaling", ok,
                  f"min b at 64 = {values[-1]:.6f}", elapsed, 60)


CHAIN_CONFIGS = {
    "tent0.1-interval": (tent(0.1), Domain.interval(-1.0, 1.0)),
    "exp-p1-interval": (generalized_exponential(1.0, 1.0), Domain.interval(-1.0, 1.0)),
    "gauss8-interval": (gaussian(8.0), Domain.interval(-1.0, 1.0)),
    "exp-p2-wide": (generalized_exponential(2.0, 1.0), Domain.interval(-3.0, 3.0)),
    "tent0.5-two-intervals": (tent(0.5), DOMAINS["two_intervals"]),
    "gauss16-square": (gaussian(16.0, 2), Domain.box([0.0, 0.0], [1.0, 1.0])),
}


def test_09_gap_condition_implication_chain(capsys):
    t0 = time.perf_counter()
    ok, held, slack = True, 0, math.inf
    for kern, dom in CHAIN_CONFIGS.values():
        spec = band.continuous_spectrum(kern, dom)
        reports = [gap.check_cross_mass(kern, dom, spectrum=spec), gap.check_variance(kern, dom, spectrum=spec)]
        holding = [r for r in reports if r.holds]
        if not holding:
            continue
        sys_ = galerkin.assemble(kern, dom, galerkin.build_basis(dom, N_MAX))
        beta1 = galerkin.solve(sys_, 1, residuals=False)[1].value
        margin = beta1 - spec.sup_sigma_c
        ok &= margin > 0
        for r in holding:
            held += 1
            gap_ = margin - (r.energy_lower_bound - spec.sup_sigma_c)
            slack = min(slack, gap_)
            ok &= gap_ >= -1e-8
    elapsed = time.perf_counter() - t0
    assert report(capsys, 9, "gap-condition implication chain", ok and held > 0,
                  f"{held} holding conditions, min slack = {slack:.3e}", elapsed, 300)


def test_10_inverse_square_scaling(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for dname, dom in DOMAINS.items():
        kern = kernels_for(dom.dimension)["gaussian"]
        ref = gap.linear_testfunction_bound(kern, dom, energy=False).bound
        for s in (2.0, 5.0, 13.0):
            b = gap.linear_testfunction_bound(kern, dom.scaled(s), energy=False).bound
            worst = max(worst, abs(b * s**2 - ref) / abs(ref))
    elapsed = time.perf_counter() - t0
    assert report(capsys, 10, "inverse-square scaling of the linear bound", worst < 1e-10,
                  f"max relative error = {worst:.1e}", elapsed, 10)


def test_11_rayleigh_dominance(capsys, systems):
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = -math.inf
    for sys_ in systems.values():
        top = galerkin.solve(sys_, 1, residuals=False)[1]
        beta1 = top.value
        m = restrict(sys_.M, 1).dense()
        u = rng.standard_normal((m.shape[0], 10_000))
        u /= np.linalg.norm(u, axis=0)
        # half the samples sit near the maximizer, where the bound is tight
        eps = 10.0 ** rng.uniform(-8, 0, 5_000)
        u[:, :5_000] = top.coefficients[1:, None] + eps * u[:, :5_000]
        u /= np.linalg.norm(u, axis=0)
        q = np.einsum("ij,ik,kj->j", u, m, u)
        worst = max(worst, float(q.max() - beta1))
    elapsed = systems.elapsed + time.perf_counter() - t0
    assert report(capsys, 11, "Rayleigh dominance", worst <= 1e-12,
                  f"max (R(c) - beta_1) = {worst:.3e}", elapsed, 30)


def test_12_orthogonality(capsys, sweeps, spectra):
    t0 = time.perf_counter()
    worst = 0.0
    for pair, table in sweeps.items():
        dom = DOMAINS[pair[0]]
        deg = galerkin.max_degree(dom, N_MAX)
        rule = quadrature.tensor_rule(dom, deg + 3, panels=2)
        for N in N_SWEEP:
            v = np.column_stack([p(rule.nodes) for p in table.pairs[N]])
            gram = v.T @ (rule.weights[:, None] * v)
            worst = max(worst, float(np.max(np.abs(gram - np.eye(gram.shape[0])))))
    elapsed = sweeps.elapsed + spectra.elapsed + time.perf_counter() - t0
    assert report(capsys, 12, "orthonormality of v_0 .. v_3", worst <= 1e-8,
                  f"max |G - I| = {worst:.2e}", elapsed, 300)
