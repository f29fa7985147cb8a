"""Dyadic separable symbols and the counterexample symbol.

The symbol is

    tau(x, xi) = sum_j 2^{jm} a_j(x) eta(2^{-j} xi),
    a_j(x)     = sum_{0<|k|<=K_j} exp(-i k.(2^{j delta} x - k)) Phi(2^{j delta} x - k),

with ``K_j = 2^{j delta}``.  Each ``a_j`` is evaluated in the dilated
variable ``y = 2^{j delta} x``; tails of ``Phi`` beyond a truncation radius
are dropped.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import NonFiniteError, ParameterError
from .grid import Grid, SampledField
from .spectral import check_band
from .tfa import MixedNormParams
from .windows import ETA_OUTER, window_set

DEFAULT_RADIUS = 256.0


def min_j0(delta: float, n: int) -> int:
    """Smallest ``j0 >= 0`` with

    ``1 + 2^{j0(2 delta - 1) + 1} <= 2^{1/4}``, ``1 - 2^{j0(2 delta - 1) + 1} >= 2^{-1/4}``
    and ``2^{-j0 delta} sqrt(n) <= 1/8``.
    """
    if not 0.0 < delta < 0.5:
        raise ParameterError(
            f"delta = {delta}: no admissible j0 exists unless 0 < delta < 1/2 "
            "(the exponent 2*delta - 1 must be negative)"
        )
    if n < 1:
        raise ParameterError(f"dimension must be >= 1, got {n}")
    j = 0
    while True:
        e = 2.0 ** (j * (2.0 * delta - 1.0) + 1.0)
        if 1.0 + e <= 2.0**0.25 and 1.0 - e >= 2.0**-0.25 and 2.0 ** (-j * delta) * np.sqrt(n) <= 0.125:
            return j
        j += 1


@dataclass(frozen=True)
class CounterexampleParams:
    """Parameters of the counterexample family (``delta`` in the tau form).

    ``strict`` enforces ``j_lo >= j0``; reduced configurations used by the
    verification suite switch it off.
    """

    n: int = 1
    m: float = 0.5
    delta: float = 0.3
    epsilon: float = 0.05
    p: float = 2.0
    q: float = 4.0
    j_lo: int | None = None
    j_hi: int = 14
    strict: bool = True
    form: str = "tau"
    j0: int = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"n must be >= 1, got {self.n}")
        if not self.epsilon > 0:
            raise ParameterError(f"epsilon must be positive, got {self.epsilon}")
        MixedNormParams(self.p, self.q)
        j0 = min_j0(self.delta, self.n)
        object.__setattr__(self, "j0", j0)
        if self.j_lo is None:
            object.__setattr__(self, "j_lo", j0)
        if self.strict and self.j_lo < j0:
            raise ParameterError(f"j_lo = {self.j_lo} is below the admissible j0 = {j0}")
        if self.j_hi < self.j_lo:
            raise ParameterError(f"j_hi = {self.j_hi} is below j_lo = {self.j_lo}")
        if self.form not in ("tau", "sigma"):
            raise ParameterError(f"unknown form {self.form!r}")

    @property
    def norm_params(self) -> MixedNormParams:
        return MixedNormParams(self.p, self.q)

    @property
    def js(self) -> list[int]:
        return list(range(self.j_lo, self.j_hi + 1))

    @property
    def delta_sigma(self) -> float:
        return 2.0 * self.delta

    @property
    def theorem_condition(self) -> bool:
        """``m > -|1/q - 1/2| * delta_sigma * n``."""
        return self.m > -abs(1.0 / self.q - 0.5) * self.delta_sigma * self.n

    @property
    def class_claim(self) -> str:
        return f"S^{self.m:g}_{{1,{self.delta_sigma:g}}}"

    def dilation(self, j: int) -> float:
        return 2.0 ** (j * self.delta)

    def coefficient_exponent(self) -> float:
        return -self.n / self.q - self.epsilon


def sigma_from_tau(prm: CounterexampleParams) -> CounterexampleParams:
    """Same construction, labelled with ``delta_sigma = 2 delta``."""
    return replace(prm, form="sigma")


def k_lattice(K: float, n: int) -> np.ndarray:
    """Integer vectors ``k`` with ``0 < |k| <= K``, shape ``(count, n)``, lexicographic."""
    r = int(np.floor(K + 1e-12))
    rows = [k for k in itertools.product(range(-r, r + 1), repeat=n)
            if 0 < sum(c * c for c in k) <= K * K * (1 + 1e-12)]
    return np.array(rows, dtype=float).reshape(-1, n)


def _shifted_sum(y: np.ndarray, ks: np.ndarray, coeffs: np.ndarray, sign: float,
                 table, R: float) -> np.ndarray:
    """``sum_k c_k exp(sign*i k.(y - k)) P(|y - k|)`` with ``P`` tapered to zero at ``R``.

    ``y`` has shape ``(..., n)``.  For a sorted 1D lattice each term touches
    only a contiguous slice.
    """
    profile = table.truncated(R)
    shape = y.shape[:-1]
    n = y.shape[-1]
    flat = y.reshape(-1, n)
    out = np.zeros(len(flat), dtype=complex)
    sorted_1d = n == 1 and len(flat) > 1 and np.all(np.diff(flat[:, 0]) > 0)
    for k, c in zip(ks, coeffs):
        if sorted_1d:
            i0 = np.searchsorted(flat[:, 0], k[0] - R, side="left")
            i1 = np.searchsorted(flat[:, 0], k[0] + R, side="right")
            sl = slice(i0, i1)
            d = flat[sl] - k
            out[sl] += c * np.exp(sign * 1j * d[:, 0] * k[0]) * profile(np.abs(d[:, 0]))
        else:
            d = flat - k
            r = np.sqrt((d * d).sum(axis=1))
            sel = r <= R
            out[sel] += c * np.exp(sign * 1j * (d[sel] @ k)) * profile(r[sel])
    return out.reshape(shape)


def profile_y(j: int, prm: CounterexampleParams, y, R: float = DEFAULT_RADIUS) -> np.ndarray:
    """``sum_k exp(-i k.(y - k)) Phi(y - k)`` at points ``y`` of shape ``(..., n)``."""
    K = prm.dilation(j)
    ks = k_lattice(K, prm.n)
    if len(ks) == 0:
        raise ParameterError(f"j = {j}: 2^(j delta) = {K:.4g} < 1 leaves no frequencies k")
    ws = window_set(prm.n)
    return _shifted_sum(np.asarray(y, float), ks, np.ones(len(ks)), -1.0, ws.Phi_table, R)


def profile_at(j: int, prm: CounterexampleParams, x, R: float = DEFAULT_RADIUS) -> np.ndarray:
    """``a_j(x)`` at arbitrary points ``x`` of shape ``(..., n)``."""
    return profile_y(j, prm, prm.dilation(j) * np.asarray(x, float), R)


def profile_bandwidth(j: int, prm: CounterexampleParams) -> float:
    K = prm.dilation(j)
    kmax = np.sqrt((k_lattice(K, prm.n) ** 2).sum(axis=1)).max()
    return K * (kmax + 0.125)


def x_profile(j: int, prm: CounterexampleParams, grid: Grid, R: float = DEFAULT_RADIUS) -> SampledField:
    check_band(grid, profile_bandwidth(j, prm), f"x-profile j={j}")
    return SampledField(grid, profile_at(j, prm, grid.points(), R))


@dataclass(frozen=True, eq=False)
class SymbolTerm:
    """``scale * a(x) * cutoff(xi)``; the profile is built on first use."""

    j: int
    scale: float
    build_profile: Callable[[], SampledField] = field(repr=False)
    cutoff: Callable = field(repr=False)

    @cached_property
    def profile(self) -> SampledField:
        return self.build_profile()


@dataclass(frozen=True, eq=False)
class DyadicSeparableSymbol:
    grid: Grid
    terms: tuple
    m: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        js = [t.j for t in self.terms]
        if len(set(js)) != len(js):
            raise ParameterError("dyadic terms must have distinct j")

    def term(self, j: int) -> SymbolTerm:
        for t in self.terms:
            if t.j == j:
                return t
        raise KeyError(j)

    def without(self, j: int) -> "DyadicSeparableSymbol":
        return DyadicSeparableSymbol(self.grid, tuple(t for t in self.terms if t.j != j), self.m, self.delta)


def dyadic_cutoff(j: int, n: int = 1) -> Callable:
    ws = window_set(n)
    return lambda xi: ws.eta(np.asarray(xi, float) * 2.0 ** (-j))


def tau_symbol(prm: CounterexampleParams, grid: Grid, R: float = DEFAULT_RADIUS,
               js=None) -> DyadicSeparableSymbol:
    terms = []
    for j in (prm.js if js is None else js):
        terms.append(SymbolTerm(j, 2.0 ** (j * prm.m),
                                (lambda j=j: x_profile(j, prm, grid, R)),
                                dyadic_cutoff(j, prm.n)))
    return DyadicSeparableSymbol(grid, tuple(terms), prm.m, prm.delta)


def unit_symbol(prm: CounterexampleParams, grid: Grid) -> DyadicSeparableSymbol:
    """Control symbol ``sum_j eta(2^{-j} xi)``: unit profiles, order 0."""
    ones = SampledField(grid, np.ones(grid.shape))
    terms = tuple(SymbolTerm(j, 1.0, (lambda: ones), dyadic_cutoff(j, prm.n)) for j in prm.js)
    return DyadicSeparableSymbol(grid, terms, 0.0, prm.delta)


def tau_pointwise(prm: CounterexampleParams, R: float = DEFAULT_RADIUS, js=None) -> Callable:
    """Evaluator ``(x, xi) -> tau(x, xi)`` for matching point arrays of shape ``(..., n)``."""
    ws = window_set(prm.n)
    jlist = prm.js if js is None else list(js)

    def tau(x, xi):
        x = np.asarray(x, float)
        xi = np.asarray(xi, float)
        x, xi = np.broadcast_arrays(x, xi)
        out = np.zeros(x.shape[:-1], dtype=complex)
        r = np.sqrt((xi * xi).sum(axis=-1))
        for j in jlist:
            e = ws.eta_radial(r * 2.0 ** (-j))
            live = e != 0.0
            if live.any():
                out[live] += 2.0 ** (j * prm.m) * e[live] * profile_at(j, prm, x[live], R)
        return out

    return tau


def annulus_overlap_count(fgrid_radius: np.ndarray, js, n: int = 1) -> int:
    """Largest number of cutoffs simultaneously nonzero at any sampled frequency."""
    ws = window_set(n)
    count = np.zeros(fgrid_radius.shape, dtype=int)
    for j in js:
        count += ws.eta_radial(fgrid_radius * 2.0 ** (-j)) != 0.0
    return int(count.max()) if count.size else 0


# --- seminorm estimator ----------------------------------------------------------

_STENCILS = {0: ((0, 1.0),), 1: ((-1, -0.5), (1, 0.5)), 2: ((-1, 1.0), (0, -2.0), (1, 1.0))}


def finite_difference(symbol: Callable, x: np.ndarray, xi: np.ndarray, alpha, beta,
                      hx: float, hxi: float) -> np.ndarray:
    """Central second-order ``d_xi^alpha d_x^beta symbol`` at the sample pairs."""
    x = np.atleast_2d(np.asarray(x, float))
    xi = np.atleast_2d(np.asarray(xi, float))
    n = x.shape[1]
    alpha, beta = tuple(alpha), tuple(beta)
    if len(alpha) != n or len(beta) != n or max(alpha + beta) > 2 or min(alpha + beta) < 0:
        raise ParameterError("multi-indices must have length n and entries in {0, 1, 2}")
    stencils = [_STENCILS[b] for b in beta] + [_STENCILS[a] for a in alpha]
    total = np.zeros(len(x), dtype=complex)
    for combo in itertools.product(*stencils):
        w = 1.0
        dx = np.zeros(n)
        dxi = np.zeros(n)
        for ax, (off, wt) in enumerate(combo):
            w *= wt
            if ax < n:
                dx[ax] = off * hx
            else:
                dxi[ax - n] = off * hxi
        total += w * symbol(x + dx, xi + dxi)
    total /= hx ** sum(beta) * hxi ** sum(alpha)
    if not np.all(np.isfinite(total)):
        raise NonFiniteError("finite difference produced non-finite values")
    return total


@dataclass(frozen=True)
class SeminormEstimate:
    value: float
    argmax_x: tuple
    argmax_xi: tuple


def symbol_class_seminorm(symbol: Callable, alpha, beta, m: float, rho: float, delta: float,
                          samples, hx: float, hxi: float) -> SeminormEstimate:
    """``max |d_xi^alpha d_x^beta symbol| / (1 + |xi|)^{m - rho|alpha| + delta|beta|}`` over samples."""
    x, xi = samples
    x = np.atleast_2d(np.asarray(x, float))
    xi = np.atleast_2d(np.asarray(xi, float))
    d = np.abs(finite_difference(symbol, x, xi, alpha, beta, hx, hxi))
    weight = (1.0 + np.sqrt((xi * xi).sum(axis=1))) ** (m - rho * sum(alpha) + delta * sum(beta))
    ratio = d / weight
    i = int(np.argmax(ratio))
    return SeminormEstimate(float(ratio[i]), tuple(x[i]), tuple(xi[i]))


def shell_samples(j: int, prm: CounterexampleParams, n_xi: int = 64, n_x: int = 128):
    """Sample pairs for shell ``j`` with the matching finite-difference steps.

    Frequencies are log-uniform along ``e_1`` inside the annulus, kept two
    steps away from its edges; positions cover one period of the fastest
    oscillation of ``a_j`` next to the origin.
    """
    n = prm.n
    hx = 2.0 ** (-j * prm.delta) / 64.0
    hxi = 2.0**j / 1024.0
    lo = 2.0 ** (j - ETA_OUTER) + 2 * hxi
    hi = 2.0 ** (j + ETA_OUTER) - 2 * hxi
    r = np.exp(np.linspace(np.log(lo), np.log(hi), n_xi))
    period = 2.0 * np.pi / profile_bandwidth(j, prm)
    xs = period * np.arange(n_x) / n_x
    X = np.zeros((n_xi * n_x, n))
    XI = np.zeros((n_xi * n_x, n))
    X[:, 0] = np.tile(xs, n_xi)
    XI[:, 0] = np.repeat(r, n_x)
    return (X, XI), hx, hxi


def multi_indices(n: int, order: int = 2):
    return [a for a in itertools.product(range(order + 1), repeat=n) if sum(a) <= order]


def seminorm_table(prm: CounterexampleParams, R: float = DEFAULT_RADIUS, js=None):
    """Rows ``(j, alpha, beta, sup_ratio, argmax_x, argmax_xi)`` over all ``|alpha|, |beta| <= 2``."""
    tau = tau_pointwise(prm, R)
    rows = []
    for j in (prm.js if js is None else js):
        samples, hx, hxi = shell_samples(j, prm)
        for alpha in multi_indices(prm.n):
            for beta in multi_indices(prm.n):
                est = symbol_class_seminorm(tau, alpha, beta, prm.m, 1.0, prm.delta_sigma, samples, hx, hxi)
                rows.append((j, alpha, beta, est.value, est.argmax_x, est.argmax_xi))
    return rows
