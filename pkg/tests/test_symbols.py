import numpy as np
import pytest

from modlab.errors import ParameterError
from modlab.grid import make_grid
from modlab.spectral import FrequencyGrid
from modlab.symbols import (CounterexampleParams, annulus_overlap_count, finite_difference, k_lattice,
                            min_j0, multi_indices, profile_at, profile_y, shell_samples, sigma_from_tau,
                            symbol_class_seminorm, tau_pointwise, tau_symbol, x_profile)
from modlab.windows import eval_Phi, window_set


def brute_j0(delta, n):
    for j in range(200):
        e = 2.0 ** (j * (2 * delta - 1) + 1)
        if 1 + e <= 2**0.25 and 1 - e >= 2**-0.25 and 2.0 ** (-j * delta) * np.sqrt(n) <= 2.0**-3:
            return j


def test_min_j0_examples():
    assert min_j0(0.3, 1) == 10
    assert min_j0(0.25, 1) == 12
    with pytest.raises(ParameterError, match="j0"):
        min_j0(0.5, 1)


def test_min_j0_matches_scan_and_is_monotone_in_n():
    deltas = [0.1, 0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.45]
    for n in range(1, 5):
        assert [min_j0(d, n) for d in deltas] == [brute_j0(d, n) for d in deltas]
    for d in deltas:
        assert all(min_j0(d, n) <= min_j0(d, n + 1) for n in range(1, 4))


def test_min_j0_in_delta_turns_around():
    # decreasing while the dilation condition binds, increasing once 2 delta - 1 nears 0
    low = [min_j0(d, 1) for d in (0.1, 0.15, 0.2, 0.25, 0.3)]
    high = [min_j0(d, 1) for d in (0.3, 0.35, 0.4, 0.45)]
    assert low == sorted(low, reverse=True)
    assert high == sorted(high)
    assert min_j0(0.45, 1) > min_j0(0.3, 1)


def test_params_invariants():
    prm = CounterexampleParams()
    assert prm.j0 == 10 and prm.j_lo == 10 and prm.js == [10, 11, 12, 13, 14]
    assert prm.theorem_condition
    with pytest.raises(ParameterError):
        CounterexampleParams(j_lo=9)
    with pytest.raises(ParameterError):
        CounterexampleParams(epsilon=0.0)
    with pytest.raises(ParameterError):
        CounterexampleParams(j_hi=9)
    assert CounterexampleParams(delta=0.25, j_lo=2, j_hi=3, strict=False).js == [2, 3]


def test_sigma_relabelling():
    s = sigma_from_tau(CounterexampleParams())
    assert s.delta_sigma == pytest.approx(0.6) and s.form == "sigma"
    assert sigma_from_tau(CounterexampleParams(delta=0.25)).delta_sigma == 0.5
    assert s.class_claim == "S^0.5_{1,0.6}"


def test_k_lattice_counts():
    assert len(k_lattice(8.0, 1)) == 16
    assert len(k_lattice(2 ** 0.5, 2)) == 8
    assert len(k_lattice(0.9, 1)) == 0


def test_profile_matches_literal_sum_at_lattice_points():
    prm = CounterexampleParams()
    ks = k_lattice(prm.dilation(10), 1)
    for k in (1.0, -3.0, 8.0):
        lit = sum(np.exp(-1j * kp[0] * (k - kp[0])) * eval_Phi(np.array([[k - kp[0]]]))[0] for kp in ks)
        assert profile_y(10, prm, np.array([[k]]))[0] == pytest.approx(lit, rel=1e-12, abs=1e-16)
    # the k' = k term contributes Phi(0) exactly
    assert window_set(1).Phi_table(0.0) == pytest.approx(1 / (2 * np.pi), rel=1e-13)


def test_profile_is_bounded_by_lattice_sum():
    prm = CounterexampleParams()
    K = prm.dilation(10)
    y = np.linspace(-40, 40, 8001)[:, None]
    a = np.abs(profile_y(10, prm, y))
    t = np.linspace(0, 256, 20001)
    c = np.max((1 + t) ** 2 * np.abs(window_set(1).Phi_table(t)))
    ks = k_lattice(K, 1)[:, 0]
    lattice = np.max(np.sum((1 + np.abs(y - ks[None, :])) ** -2.0, axis=1))
    assert a.max() <= lattice * c


def test_x_profile_needs_resolution():
    prm = CounterexampleParams()
    from modlab.errors import NyquistError
    with pytest.raises(NyquistError):
        x_profile(10, prm, make_grid(1, 64, 10))


def test_tau_on_plateau_and_outside():
    prm = CounterexampleParams()
    tau = tau_pointwise(prm)
    x = np.array([[0.013], [0.4]])
    for j in (10, 12):
        xi = np.full((2, 1), 2.0**j)
        assert np.allclose(tau(x, xi), 2.0 ** (j * prm.m) * profile_at(j, prm, x), rtol=1e-14)
        edge = np.full((2, 1), 2.0 ** (j + 0.5))
        assert np.all(tau(x, edge) == 0)
    assert np.all(tau(x, np.full((2, 1), 2.0**9)) == 0)


def test_cutoffs_disjoint_on_grid():
    g = make_grid(1, 32, 17)
    prm = CounterexampleParams()
    assert annulus_overlap_count(FrequencyGrid(g).radius(), range(0, 16)) == 1
    S = tau_symbol(prm, g)
    xi = FrequencyGrid(g).points()
    cuts = [t.cutoff(xi) for t in S.terms]
    for a in range(len(cuts)):
        for b in range(a + 1, len(cuts)):
            assert np.all(cuts[a] * cuts[b] == 0)


def test_seminorm_trivial_symbols():
    prm = CounterexampleParams()
    (x, xi), hx, hxi = shell_samples(10, prm, n_xi=8, n_x=8)
    zero = lambda X, XI: np.zeros(X.shape[:-1], dtype=complex)
    assert symbol_class_seminorm(zero, (1,), (2,), 0.5, 1.0, 0.6, (x, xi), hx, hxi).value == 0.0
    m = 0.5
    bessel = lambda X, XI: (1 + (XI * XI).sum(axis=-1)) ** (m / 2)
    ratios = []
    for j in range(0, 15):
        (x, xi), hx, hxi = shell_samples(j, prm, n_xi=8, n_x=2)
        ratios.append(symbol_class_seminorm(bessel, (0,), (0,), m, 1.0, 0.6, (x, xi), hx, hxi).value)
    assert max(ratios) / min(ratios) <= 2.0 and 0.5 <= min(ratios) and max(ratios) <= 2.0


def test_finite_difference_on_polynomial():
    sym = lambda X, XI: X[..., 0] ** 2 * XI[..., 0] ** 2
    x = np.array([[1.5]])
    xi = np.array([[2.0]])
    d = finite_difference(sym, x, xi, (2,), (1,), 1e-2, 1e-2)
    assert d[0] == pytest.approx(2 * 2 * 1.5, rel=1e-10)
    with pytest.raises(ParameterError):
        finite_difference(sym, x, xi, (3,), (0,), 1e-2, 1e-2)


def test_tau_zero_order_ratio_spread():
    prm = CounterexampleParams()
    tau = tau_pointwise(prm)
    vals = []
    for j in prm.js:
        samples, hx, hxi = shell_samples(j, prm, n_xi=16, n_x=64)
        v = symbol_class_seminorm(tau, (0,), (0,), prm.m, 1.0, prm.delta_sigma, samples, hx, hxi).value
        assert np.isfinite(v) and v > 0
        vals.append(v)
    assert max(vals) / min(vals) <= 10.0


def test_multi_indices():
    assert multi_indices(1) == [(0,), (1,), (2,)]
    assert len(multi_indices(2)) == 6
