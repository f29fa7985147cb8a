"""Test families for the counterexample and their closed forms.

In the undilated variable ``y``:

    f_j(y) = sum_{0<|k'|<=K} |k'|^{-n/q-eps} exp(i k'.(y - k')) Psi(y - k')
    g_j(y) = a(y) f_j(y),   a(y) = sum_{0<|k|<=K} exp(-i k.(y - k)) Phi(y - k)

with ``K = 2^{j delta}``.  The experiment input is
``u_j(x) = exp(i 2^j x_1) f_j(2^{j delta} x)``; the symbol maps it to
``2^{jm} exp(i 2^j x_1) g_j(2^{j delta} x)``.
"""
from __future__ import annotations

import numpy as np

from .errors import CoverageError, ParameterError
from .grid import Grid, SampledField
from .spectral import FrequencyGrid, Spectrum, check_band
from .symbols import DEFAULT_RADIUS, CounterexampleParams, _shifted_sum, k_lattice, profile_y
from .windows import PSI_OUTER, inv_fourier_B, window_set

II_SAMPLE_SEED = 0x5EED
II_SAMPLE_COUNT = 50
II_FULL_LIMIT = 400


def coefficients(j: int, prm: CounterexampleParams):
    ks = k_lattice(prm.dilation(j), prm.n)
    if len(ks) == 0:
        raise ParameterError(f"j = {j}: 2^(j delta) < 1 leaves no frequencies")
    c = np.sqrt((ks * ks).sum(axis=1)) ** prm.coefficient_exponent()
    return ks, c


def f_y(j: int, prm: CounterexampleParams, y, R: float = DEFAULT_RADIUS) -> np.ndarray:
    ks, c = coefficients(j, prm)
    return _shifted_sum(np.asarray(y, float), ks, c, 1.0, window_set(prm.n).Psi_table, R)


def g_y(j: int, prm: CounterexampleParams, y, R: float = DEFAULT_RADIUS) -> np.ndarray:
    """``g_j`` through the factorisation ``a * f_j``."""
    return profile_y(j, prm, y, R) * f_y(j, prm, y, R)


def g_y_double_sum(j: int, prm: CounterexampleParams, y, R: float = DEFAULT_RADIUS) -> np.ndarray:
    """``g_j`` as the literal double sum over ``(k, k')``; quadratic cost, for checks."""
    y = np.asarray(y, float)
    ks, c = coefficients(j, prm)
    ws = window_set(prm.n)
    Phi, Psi = ws.Phi_table.truncated(R), ws.Psi_table.truncated(R)
    out = np.zeros(y.shape[:-1], dtype=complex)
    for k in ks:
        dk = y - k
        a = np.exp(-1j * (dk @ k)) * Phi(np.sqrt((dk * dk).sum(axis=-1)))
        for kp, cp in zip(ks, c):
            dp = y - kp
            out += a * cp * np.exp(1j * (dp @ kp)) * Psi(np.sqrt((dp * dp).sum(axis=-1)))
    return out


def _coverage(grid: Grid, reach: float, what: str) -> None:
    if reach > grid.L:
        raise CoverageError(f"{what}: needs |x| <= {reach:.4g} but the box half-width is {grid.L}")


def build_f(j: int, prm: CounterexampleParams, grid: Grid, R: float = DEFAULT_RADIUS) -> SampledField:
    K = prm.dilation(j)
    _coverage(grid, K + R, "f")
    check_band(grid, np.floor(K) * np.sqrt(prm.n) + PSI_OUTER, "f")
    return SampledField(grid, f_y(j, prm, grid.points(), R))


def modulation_frequency(j: int, prm: CounterexampleParams) -> float:
    """``2^{j(1 - delta)}``, the shift carried by ``f_j`` before dilation."""
    return 2.0 ** (j * (1.0 - prm.delta))


def build_modulated_f(j: int, prm: CounterexampleParams, grid: Grid, R: float = DEFAULT_RADIUS) -> SampledField:
    """``exp(i 2^{j(1-delta)} y_1) f_j(y)``."""
    K = prm.dilation(j)
    w = modulation_frequency(j, prm)
    _coverage(grid, K + R, "modulated f")
    check_band(grid, w + np.floor(K) * np.sqrt(prm.n) + PSI_OUTER, "modulated f")
    y = grid.points()
    return SampledField(grid, np.exp(1j * w * y[..., 0]) * f_y(j, prm, y, R))


def fhat_at(j: int, prm: CounterexampleParams, xi) -> np.ndarray:
    """``sum c_k' exp(-i k'.(xi - w e_1)) psi(xi - w e_1 - k')`` with ``w = 2^{j(1-delta)}``."""
    ks, c = coefficients(j, prm)
    ws = window_set(prm.n)
    xi = np.array(xi, dtype=float)
    xi[..., 0] -= modulation_frequency(j, prm)
    out = np.zeros(xi.shape[:-1], dtype=complex)
    for k, ck in zip(ks, c):
        d = xi - k
        r = np.sqrt((d * d).sum(axis=-1))
        live = r < PSI_OUTER
        out[live] += ck * np.exp(-1j * (xi[live] @ k)) * ws.psi_radial(r[live])
    return out


def fhat_closed_form(j: int, prm: CounterexampleParams, fgrid: FrequencyGrid) -> Spectrum:
    return Spectrum(fgrid, fhat_at(j, prm, fgrid.points()))


def shell_band(j: int, prm: CounterexampleParams) -> float:
    K = prm.dilation(j)
    return 2.0**j + K * (np.floor(K) * np.sqrt(prm.n) + PSI_OUTER)


def build_input(j: int, prm: CounterexampleParams, grid: Grid, R: float = DEFAULT_RADIUS) -> SampledField:
    """``u_j(x) = exp(i 2^j x_1) f_j(2^{j delta} x)``."""
    K = prm.dilation(j)
    _coverage(grid, (K + R) / K, "input")
    check_band(grid, shell_band(j, prm), "input")
    x = grid.points()
    return SampledField(grid, np.exp(1j * 2.0**j * x[..., 0]) * f_y(j, prm, K * x, R))


def build_g(j: int, prm: CounterexampleParams, grid: Grid, R: float = DEFAULT_RADIUS,
            dilated: bool = False) -> SampledField:
    """``g_j`` on the grid, or ``g_j(2^{j delta} x)`` when ``dilated``."""
    K = prm.dilation(j)
    s = K if dilated else 1.0
    _coverage(grid, (K + R) / s, "g")
    check_band(grid, s * (2 * np.floor(K) * np.sqrt(prm.n) + PSI_OUTER + 0.125), "g")
    return SampledField(grid, g_y(j, prm, s * grid.points(), R))


def closed_form_action(j: int, prm: CounterexampleParams, grid: Grid, R: float = DEFAULT_RADIUS) -> SampledField:
    """``2^{jm} exp(i 2^j x_1) g_j(2^{j delta} x)``."""
    K = prm.dilation(j)
    _coverage(grid, (K + R) / K, "closed-form action")
    x = grid.points()
    vals = 2.0 ** (j * prm.m) * np.exp(1j * 2.0**j * x[..., 0]) * g_y(j, prm, K * x, R)
    return SampledField(grid, vals)


def shell_mass_fraction(field_: SampledField, j: int) -> float:
    """Share of spectral energy inside ``2^{j-1/4} <= |xi| <= 2^{j+1/4}``."""
    from .spectral import fourier

    s = fourier(field_)
    r = s.fgrid.radius()
    e = np.abs(s.values) ** 2
    inside = (r >= 2.0 ** (j - 0.25)) & (r <= 2.0 ** (j + 0.25))
    return float(e[inside].sum() / e.sum())


# --- the I / II split of the B-spline pairing -------------------------------------

def pairing_constant(n: int) -> float:
    """``C_n = (2 pi)^{-2n}``."""
    return (2.0 * np.pi) ** (-2 * n)


def term_I_formula(j: int, prm: CounterexampleParams) -> float:
    ks, c = coefficients(j, prm)
    K = prm.dilation(j)
    u = ks / (2.0 * K)
    sinc2 = np.prod(np.sinc(u / np.pi) ** 2, axis=1)
    return float(pairing_constant(prm.n) * K ** (-prm.n) * np.sum(c * sinc2))


def _y_lattice(centre, R: float, step: float, n: int) -> np.ndarray:
    ax = step * np.arange(-int(R / step), int(R / step) + 1)
    if n == 1:
        return (centre + ax)[:, None] if np.ndim(centre) == 0 else (centre[0] + ax)[:, None]
    mesh = np.meshgrid(*[centre[i] + ax for i in range(n)], indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, n)


def _pair_integral(k, kp, cp, j, prm, R, step) -> complex:
    """``2^{-j delta n} int e^{-ik.(y-k)} Phi(y-k) cp e^{ik'.(y-k')} Psi(y-k') F^{-1}B(y/K) dy``."""
    ws = window_set(prm.n)
    K = prm.dilation(j)
    y = _y_lattice(np.asarray(k, float), R, step, prm.n)
    dk, dp = y - k, y - kp
    rk = np.sqrt((dk * dk).sum(axis=1))
    rp = np.sqrt((dp * dp).sum(axis=1))
    a = np.exp(-1j * (dk @ k)) * ws.Phi_table.truncated(R)(rk)
    b = cp * np.exp(1j * (dp @ kp)) * ws.Psi_table.truncated(R)(rp)
    w = inv_fourier_B(y / K)
    return complex(step**prm.n * np.sum(a * b * w) * K ** (-prm.n))


def pairing_terms(j: int, prm: CounterexampleParams, R: float = DEFAULT_RADIUS,
                  step_I: float = 0.25, step_II: float = 1.0 / 16.0, seed: int = II_SAMPLE_SEED):
    """Numerical ``(I, II)`` for ``integral g_j(2^{j delta} x) F^{-1}B(x) dx``.

    ``I`` collects the diagonal ``k = k'`` terms, ``II`` the cross terms
    (all of them up to 400 pairs, else 50 pairs drawn with a fixed seed).
    Returns ``(I, II, pairs_used, max_pair)``.
    """
    ks, c = coefficients(j, prm)
    I = sum(_pair_integral(k, k, ck, j, prm, R, step_I) for k, ck in zip(ks, c))
    pairs = [(a, b) for a in range(len(ks)) for b in range(len(ks)) if a != b]
    if len(pairs) > II_FULL_LIMIT:
        rng = np.random.default_rng(seed)
        pick = rng.choice(len(pairs), size=II_SAMPLE_COUNT, replace=False)
        pairs = [pairs[i] for i in sorted(pick)]
    terms = [_pair_integral(ks[a], ks[b], c[b], j, prm, R, step_II) for a, b in pairs]
    II = complex(sum(terms)) if terms else 0j
    biggest = max((abs(t) for t in terms), default=0.0)
    return float(I.real), II, len(pairs), biggest
