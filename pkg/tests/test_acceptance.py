"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

The growth experiment and the identity suite are session fixtures (see
conftest.py), so the expensive runs happen once.
"""
import time

import numpy as np
import pytest

from modlab.counterexample import pairing_terms, term_I_formula
from modlab.grid import SampledField, inner_product, make_grid, sample
from modlab.harness import action_residual, adjoint_residuals, fit_slope
from modlab.quantize import apply_dense, apply_separable
from modlab.spectral import FrequencyGrid, fourier, inverse_fourier
from modlab.symbols import CounterexampleParams, multi_indices, seminorm_table, tau_pointwise, tau_symbol
from modlab.tfa import MixedNormParams, StftPlan, moyal_constant, moyal_constant_oracle, moyal_pairing, mpq_norm

PRM = CounterexampleParams()


@pytest.fixture
def verdict(capsys):
    def emit(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {title} -- {detail}")
        assert ok, f"criterion {number} failed: {detail}"

    return emit


def rel(a, b):
    return float(np.linalg.norm(np.ravel(a) - np.ravel(b)) / np.linalg.norm(np.ravel(b)))


def schwartz_fields(grid, count, seed):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c, w, k = rng.uniform(-3, 3), rng.uniform(0.6, 1.6), rng.uniform(-3, 3)
        a = rng.standard_normal(4)
        out.append(sample(grid, lambda p: (a[0] + 1j * a[1] + (a[2] + 1j * a[3]) * p[..., 0])
                          * np.exp(-0.5 * ((p[..., 0] - c) / w) ** 2 + 1j * k * p[..., 0])))
    return out


def test_01_transform_conventions(verdict):
    t0 = time.perf_counter()
    g = make_grid(1, 16, 14)
    gauss = sample(g, lambda p: np.exp(-0.5 * p[..., 0] ** 2))
    S = fourier(gauss)
    xi = S.fgrid.axis
    m = np.abs(xi) <= 8
    errs = {"gaussian": rel(S.values[m], np.sqrt(2 * np.pi) * np.exp(-0.5 * xi[m] ** 2))}
    errs["round trip"] = (inverse_fourier(S) - gauss).norm() / gauss.norm()
    a = 1.5
    shifted = fourier(sample(g, lambda p: np.exp(-0.5 * (p[..., 0] - a) ** 2)))
    errs["translation"] = rel(shifted.values, np.exp(-1j * a * xi) * S.values)
    k = 40
    w = k * S.fgrid.dxi
    mod = fourier(sample(g, lambda p: np.exp(1j * w * p[..., 0] - 0.5 * p[..., 0] ** 2)))
    errs["modulation"] = rel(mod.values, np.roll(S.values, k))
    dt = time.perf_counter() - t0
    worst = max(errs.values())
    verdict(1, "transform conventions", worst <= 1e-10 and dt < 5.0,
            f"worst relative error {worst:.2e} (tol 1e-10), {dt:.2f} s (limit 5 s)")


def test_02_moyal_constant_and_pairing(verdict):
    ratio = moyal_constant_oracle(1, L=16.0, log2_N=8) / (2 * np.pi)
    g = make_grid(1, 32, 10)
    plan = StftPlan()
    fs = schwartz_fields(g, 20, 11)
    worst = 0.0
    for f, h in zip(fs[:10], fs[10:]):
        ref = inner_product(f, h)
        worst = max(worst, abs(moyal_pairing(f, h, plan) - ref) / abs(ref))
    ok = abs(ratio - 1) <= 1e-6 and worst <= 1e-8
    verdict(2, "Moyal constant and pairing", ok,
            f"kappa/(2 pi) - 1 = {ratio - 1:.2e} (tol 1e-6), pairing error {worst:.2e} over 10 pairs (tol 1e-8)")


def test_03_closed_form_transform(verdict, identity_checks):
    rows = [c for c in identity_checks if c.name.startswith("closed-form transform")]
    worst = max(c.value for c in rows)
    secs = sum(c.seconds for c in rows)
    verdict(3, "closed-form transform j = 10..14", len(rows) == 5 and worst <= 1e-8 and secs < 60,
            f"worst {worst:.2e} (tol 1e-8), {secs:.1f} s (limit 60 s)")


def test_04_closed_form_action(verdict, identity_checks):
    rows = [c for c in identity_checks if c.name.startswith("closed-form action")]
    worst = max(c.value for c in rows)
    # tail study at j0 on a finer grid; larger R reaches the roundoff floor
    r8 = action_residual(10, PRM, R=8.0, extra_log2=2)
    r16 = action_residual(10, PRM, R=16.0, extra_log2=2)
    ok = len(rows) == 5 and worst <= 1e-4 and r16 < r8
    verdict(4, "closed-form action j = 10..14", ok,
            f"worst {worst:.2e} (tol 1e-4); residual R=8 {r8:.2e} -> R=16 {r16:.2e}")


def test_05_cross_terms(verdict):
    parts = []
    ok = True
    for j in (PRM.j0, PRM.j0 + 4):
        I, II, pairs, _ = pairing_terms(j, PRM)
        formula = term_I_formula(j, PRM)
        r_II, r_I = abs(II) / I, abs(I - formula) / formula
        ok &= r_II <= 1e-8 and r_I <= 1e-10
        parts.append(f"j={j}: |II|/I {r_II:.1e}, I vs formula {r_I:.1e} ({pairs} pairs)")
    verdict(5, "cross terms vanish, term I formula", ok, "; ".join(parts) + " (tols 1e-8, 1e-10)")


def test_06_adjoint_identity(verdict):
    sep, dense = adjoint_residuals(pairs=20, log2_N=8)
    verdict(6, "discrete adjoint identity", max(sep, dense) <= 1e-12,
            f"separable {sep:.2e}, dense {dense:.2e} over 20 pairs at N = 256 (tol 1e-12)")


def test_07_path_equivalence(verdict):
    prm = CounterexampleParams(delta=0.25, j_lo=2, j_hi=3, strict=False)
    g = make_grid(1, 32, 9)
    rng = np.random.default_rng(7)
    f = SampledField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    fast = apply_separable(tau_symbol(prm, g), f, skip_negligible=False)
    dense = apply_dense(tau_pointwise(prm), f)
    err = (fast - dense).norm() / dense.norm()
    verdict(7, "dense versus separable quantization", err <= 1e-10, f"relative L2 {err:.2e} at N = 512 (tol 1e-10)")


def test_08_input_norm_exponent(verdict, growth_report):
    s = growth_report.slopes["input"]
    ok = abs(s["slope"] + 0.225) <= 0.10 and s["r_squared"] >= 0.9
    verdict(8, "input-norm exponent", ok, f"slope {s['slope']:.4f} (target -0.225 +- 0.10), R^2 {s['r_squared']:.4f}")


def test_09_output_lower_bound_exponent(verdict, growth_report):
    s = growth_report.slopes["output_lower"]
    ok = s["slope"] >= 0.30 and s["r_squared"] >= 0.9
    verdict(9, "output lower-bound exponent", ok, f"slope {s['slope']:.4f} (>= 0.30, theory 0.41), R^2 {s['r_squared']:.4f}")


def test_10_unboundedness(verdict, growth_report):
    s = growth_report.slopes["ratio"]
    rows = growth_report.rows
    growth = rows[-1].ratio / rows[0].ratio
    ctrl = growth_report.control["ratio_slope"]["slope"]
    elapsed = getattr(growth_report, "elapsed", 0.0)
    ok = s["slope"] >= 0.50 and growth >= 4.0 and abs(ctrl) <= 0.05 and elapsed <= 600
    verdict(10, "unboundedness demonstration", ok,
            f"ratio slope {s['slope']:.4f} (>= 0.50), growth x{growth:.2f} (>= 4), control slope {ctrl:.1e} (+-0.05), "
            f"experiment {elapsed:.0f} s (limit 600 s)")


def test_11_symbol_class(verdict):
    rows = seminorm_table(PRM)
    worst, where = 0.0, None
    for a in multi_indices(1):
        for b in multi_indices(1):
            pts = [(j, r) for j, al, be, r, *_ in rows if al == a and be == b]
            s = fit_slope(pts).slope
            if abs(s) > abs(worst):
                worst, where = s, (a, b)
    verdict(11, "symbol-class seminorm trend", abs(worst) <= 0.1,
            f"largest |slope| {worst:.3f} at (alpha, beta) = {where} (tol 0.1)")


def test_12_norm_invariances(verdict):
    g = make_grid(1, 32, 10)
    plan = StftPlan()
    prm = MixedNormParams(2.0, 4.0)
    fs = schwartz_fields(g, 10, 12)
    f = fs[0]
    base = mpq_norm(f, prm, plan)
    w = 16 * FrequencyGrid(g).dxi
    mod = mpq_norm(f * np.exp(1j * w * g.axis), prm, plan)
    shift = int(round(2.0 / g.dx))
    tra = mpq_norm(SampledField(g, np.roll(f.values, shift)), prm, plan)
    inv = max(abs(mod / base - 1), abs(tra / base - 1))
    ratios = np.array([mpq_norm(h, MixedNormParams(2.0, 2.0), plan) / h.norm() for h in fs])
    spread = float((ratios.max() - ratios.min()) / ratios.mean())
    ok = inv <= 1e-10 and spread <= 1e-4
    verdict(12, "norm invariances", ok, f"modulation/translation {inv:.1e} (tol 1e-10), M^(2,2)/L2 spread {spread:.1e} (tol 1e-4)")
