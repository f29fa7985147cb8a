"""Smooth cutoffs, their inverse transforms, the B-spline and the STFT window.

Every cutoff derives from one bump ``b(s) = exp(-a / (1 - s^2))`` on
``|s| < 1``.  ``a`` (the *sharpness*) trades width of the core against tail
decay of the inverse transforms; see :data:`DEFAULT_SHARPNESS`.

* ``phi``  -- normalised bump supported in ``|xi| <= 1/8`` with unit mass;
* ``psi``  -- 1 on ``|xi| <= 1/4``, 0 for ``|xi| >= 1/2``;
* ``eta``  -- 1 on ``2^{-1/4} <= |xi| <= 2^{1/4}``, 0 outside
  ``(2^{-1/2}, 2^{1/2})``, built in the variable ``log2|xi|``.

``Phi = F^{-1} phi`` and ``Psi = F^{-1} psi`` are radial and real.  They are
tabulated once per (n, sharpness) on a fine radial lattice and evaluated by
6-point Lagrange interpolation; :func:`direct_inverse_transform` is the
tensorised quadrature used to validate the tables.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache
from math import gamma as _gamma_fn

import numpy as np
from scipy import special

from .errors import NyquistError, ParameterError
from .grid import Grid, SampledField, sample

DEFAULT_SHARPNESS = 8.0
PHI_RADIUS = 1.0 / 8.0
PSI_INNER, PSI_OUTER = 0.25, 0.5
ETA_INNER, ETA_OUTER = 0.25, 0.5  # in log2 |xi|

TABLE_STEP = 1.0 / 32.0
TABLE_RADIUS = 2048.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(64)


def bump(s, a: float = DEFAULT_SHARPNESS) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    si = s[inside]
    out[inside] = np.exp(-a / (1.0 - si * si))
    return out


def _bump_integral_from_zero(v: np.ndarray, a: float) -> np.ndarray:
    # int_0^v b(s) ds for 0 <= v <= 1; 64-point Gauss-Legendre is at roundoff here
    v = np.asarray(v, dtype=float)
    nodes = 0.5 * (_GL_X + 1.0)
    s = v[..., None] * nodes
    return 0.5 * v * (bump(s, a) @ _GL_W)


def _bump_tail(v: np.ndarray, a: float) -> np.ndarray:
    # int_v^1 b(s) ds, nonnegative by construction
    v = np.asarray(v, dtype=float)
    w = 1.0 - v
    s = v[..., None] + w[..., None] * 0.5 * (_GL_X + 1.0)
    return 0.5 * w * (bump(s, a) @ _GL_W)


@lru_cache(maxsize=None)
def bump_mass(a: float = DEFAULT_SHARPNESS) -> float:
    return 2.0 * float(_bump_integral_from_zero(np.array(1.0), a))


def smooth_step(u, a: float = DEFAULT_SHARPNESS) -> np.ndarray:
    """C-infinity step: 1 for ``u <= 0``, 0 for ``u >= 1``.

    It is ``1 - C(2u - 1)`` where ``C`` is the normalised antiderivative of
    the bump, hence symmetric about ``(1/2, 1/2)``.
    """
    u = np.asarray(u, dtype=float)
    out = np.where(u <= 0.0, 1.0, 0.0)
    mid = (u > 0.0) & (u < 1.0)
    if mid.any():
        v = 2.0 * u[mid] - 1.0
        tail = _bump_tail(np.abs(v), a) / bump_mass(a)
        out[mid] = np.where(v >= 0.0, tail, 1.0 - tail)
    return out


def _radius(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    return np.sqrt((p * p).sum(axis=-1))


def _sphere_area(n: int) -> float:
    return 2.0 * np.pi ** (n / 2) / _gamma_fn(n / 2)


class RadialTable:
    """Uniformly tabulated even profile ``r -> P(r)``, zero beyond ``radius``."""

    def __init__(self, step: float, values: np.ndarray, radius: float):
        # values[i] = P(i*step) for i = 0..M; mirrored so the stencil never leaves the table
        self.step = step
        self.radius = radius
        self._t0 = -3 * step
        self._vals = np.concatenate([values[3:0:-1], values, np.zeros(4)])

    def __call__(self, r) -> np.ndarray:
        r = np.abs(np.asarray(r, dtype=float))
        out = np.zeros_like(r)
        ok = r <= self.radius
        u = (r[ok] - self._t0) / self.step
        i = np.floor(u).astype(np.int64)
        fr = u - i
        v = self._vals
        # Lagrange weights on nodes i-2 .. i+3 at offset fr
        d = [fr + 2.0, fr + 1.0, fr, fr - 1.0, fr - 2.0, fr - 3.0]
        acc = np.zeros_like(fr)
        denoms = (-120.0, 24.0, -12.0, 12.0, -24.0, 120.0)
        for m in range(6):
            w = np.ones_like(fr)
            for l in range(6):
                if l != m:
                    w = w * d[l]
            acc += v[i + m - 2] * w / denoms[m]
        out[ok] = acc
        return out

    def truncated(self, R: float, taper: float = 0.25):
        """Profile rolled off smoothly over ``[(1 - taper) R, R]`` and zero beyond ``R``.

        A hard cut would leave a jump whose spectrum decays only like ``1/xi``.
        """
        w = taper * R
        start = R - w

        def prof(r):
            r = np.abs(np.asarray(r, dtype=float))
            return self(r) * smooth_step((r - start) / w)

        return prof

    def tail_level(self, r0: float) -> float:
        """``max |P(r)|`` over tabulated ``r >= r0``."""
        i0 = int(np.ceil(r0 / self.step)) + 3
        tail = self._vals[i0:]
        return float(np.abs(tail).max()) if tail.size else 0.0


def direct_inverse_transform(func, support: float, points, n: int, nodes: int = 512) -> np.ndarray:
    """``(2 pi)^{-n} int exp(i t.xi) func(xi) dxi`` by tensor Riemann sums.

    ``func`` must vanish outside ``[-support, support]^n``.  Returns complex
    values; callers check the imaginary residue.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float)).reshape(-1, n)
    h = 2.0 * support / nodes
    ax = -support + h * (np.arange(nodes) + 0.5)
    if n == 1:
        xi = ax[:, None]
    else:
        xi = np.stack(np.meshgrid(*([ax] * n), indexing="ij"), axis=-1).reshape(-1, n)
    fv = func(xi).reshape(-1)
    keep = fv != 0.0
    xi, fv = xi[keep], fv[keep]
    out = np.empty(len(pts), dtype=complex)
    for start in range(0, len(pts), 256):
        phase = np.exp(1j * pts[start:start + 256] @ xi.T)
        out[start:start + 256] = phase @ fv
    return out * h**n / (2.0 * np.pi) ** n


def _radial_table_fft(profile, support: float, step: float, radius: float) -> np.ndarray:
    # n = 1: Phi(t_i) = (dxi/2pi) sum_k f(xi_k) exp(i xi_k t_i) on a lattice with period >> radius
    M = 1 << int(np.ceil(np.log2(8.0 * radius / step)))
    dxi = 2.0 * np.pi / (M * step)
    k = np.arange(-M // 2, M // 2)
    fv = profile(np.abs(k * dxi))
    fv[np.abs(k * dxi) > support] = 0.0
    vals = np.fft.fft(np.fft.ifftshift(fv)).real * dxi / (2.0 * np.pi)
    # fft computes sum exp(-i...); profile is even so the sign is immaterial
    count = int(round(radius / step)) + 1
    return vals[:count]


def _radial_table_hankel(profile, n: int, breaks, step: float, radius: float) -> np.ndarray:
    # P(r) = (2pi)^{-n/2} r^{1-n/2} int f(rho) J_{n/2-1}(r rho) rho^{n/2} drho
    x, w = np.polynomial.legendre.leggauss(512)
    rho, wts = [], []
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        rho.append(lo + (hi - lo) * 0.5 * (x + 1.0))
        wts.append(0.5 * (hi - lo) * w)
    rho = np.concatenate(rho)
    wts = np.concatenate(wts) * profile(rho)
    r = step * np.arange(int(round(radius / step)) + 1)
    nu = n / 2.0 - 1.0
    out = np.empty_like(r)
    out[0] = _sphere_area(n) * np.sum(wts * rho ** (n - 1)) / (2.0 * np.pi) ** n
    for start in range(1, len(r), 2048):
        rr = r[start:start + 2048]
        z = rr[:, None] * rho[None, :]
        out[start:start + 2048] = (special.jv(nu, z) @ (wts * rho ** (n / 2.0))) * rr ** (1.0 - n / 2.0)
    out[1:] /= (2.0 * np.pi) ** (n / 2.0)
    return out


@dataclass(frozen=True)
class WindowSet:
    """The cutoffs ``phi, psi, eta`` and the profiles ``Phi, Psi`` in dimension ``n``."""

    n: int = 1
    sharpness: float = DEFAULT_SHARPNESS
    table_radius: float = TABLE_RADIUS

    # --- frequency-side cutoffs -------------------------------------------------

    @cached_property
    def phi_constant(self) -> float:
        n, a = self.n, self.sharpness
        x, w = np.polynomial.legendre.leggauss(256)
        s = 0.5 * (x + 1.0)
        mass = 0.5 * np.sum(w * bump(s, a) * s ** (n - 1)) * _sphere_area(n) / 8.0**n
        return 1.0 / mass

    def phi_radial(self, r) -> np.ndarray:
        return self.phi_constant * bump(8.0 * np.asarray(r, dtype=float), self.sharpness)

    def psi_radial(self, r) -> np.ndarray:
        return smooth_step((np.asarray(r, dtype=float) - PSI_INNER) / (PSI_OUTER - PSI_INNER), self.sharpness)

    def phi(self, xi) -> np.ndarray:
        return self.phi_radial(_radius(xi))

    def psi(self, xi) -> np.ndarray:
        return self.psi_radial(_radius(xi))

    def eta_radial(self, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        pos = r > 0.0
        v = np.abs(np.log2(r[pos]))
        out[pos] = smooth_step((v - ETA_INNER) / (ETA_OUTER - ETA_INNER), self.sharpness)
        return out

    def eta(self, xi) -> np.ndarray:
        return self.eta_radial(_radius(xi))

    # --- spatial profiles ------------------------------------------------------

    def _table(self, profile, support: float, breaks) -> RadialTable:
        if self.n == 1:
            vals = _radial_table_fft(profile, support, TABLE_STEP, self.table_radius)
        else:
            vals = _radial_table_hankel(profile, self.n, breaks, TABLE_STEP, self.table_radius)
        return RadialTable(TABLE_STEP, vals, self.table_radius)

    @cached_property
    def Phi_table(self) -> RadialTable:
        return self._table(self.phi_radial, PHI_RADIUS, (0.0, PHI_RADIUS))

    @cached_property
    def Psi_table(self) -> RadialTable:
        return self._table(self.psi_radial, PSI_OUTER, (0.0, PSI_INNER, PSI_OUTER))

    def eval_Phi(self, points, method: str = "table") -> np.ndarray:
        if method == "direct":
            return _real_checked(direct_inverse_transform(self.phi, PHI_RADIUS, points, self.n), self.Phi0)
        return self.Phi_table(_radius(points))

    def eval_Psi(self, points, method: str = "table") -> np.ndarray:
        if method == "direct":
            return _real_checked(direct_inverse_transform(self.psi, PSI_OUTER, points, self.n), self.Psi0)
        return self.Psi_table(_radius(points))

    @property
    def Phi0(self) -> float:
        return (2.0 * np.pi) ** (-self.n)

    @cached_property
    def psi_mass(self) -> float:
        x, w = np.polynomial.legendre.leggauss(256)
        total = 0.0
        for lo, hi in ((0.0, PSI_INNER), (PSI_INNER, PSI_OUTER)):
            r = lo + (hi - lo) * 0.5 * (x + 1.0)
            total += 0.5 * (hi - lo) * np.sum(w * self.psi_radial(r) * r ** (self.n - 1))
        return _sphere_area(self.n) * total

    @property
    def Psi0(self) -> float:
        return self.psi_mass / (2.0 * np.pi) ** self.n

    def decay_constant(self, which: str = "Psi", power: float = 8.0, r_max: float = 256.0) -> float:
        """Smallest ``C`` with ``|P(r)| <= C (1 + r)^{-power}`` on ``r <= r_max``."""
        table = self.Psi_table if which == "Psi" else self.Phi_table
        r = np.arange(0.0, r_max, table.step)
        return float(np.max(np.abs(table(r)) * (1.0 + r) ** power))

    def truncation_radius(self, rel_tol: float) -> float:
        """Smallest tabulated radius beyond which both profiles stay below ``rel_tol`` (relative)."""
        r = 0.0
        for table, ref in ((self.Phi_table, self.Phi0), (self.Psi_table, self.Psi0)):
            lvl = np.abs(table._vals[3:]) / ref
            above = np.nonzero(lvl > rel_tol)[0]
            if above.size:
                r = max(r, (above[-1] + 1) * table.step)
        return float(r)


def _real_checked(vals: np.ndarray, ref: float) -> np.ndarray:
    resid = np.abs(vals.imag).max() if vals.size else 0.0
    if resid > 1e-12 * abs(ref):
        raise ArithmeticError(f"imaginary residue {resid:.3e} in a real profile")
    return vals.real


@lru_cache(maxsize=None)
def window_set(n: int = 1, sharpness: float = DEFAULT_SHARPNESS) -> WindowSet:
    return WindowSet(n, sharpness)


# module-level conveniences on the default set ---------------------------------

def bump_phi(xi, n: int = 1) -> np.ndarray:
    return window_set(n).phi(xi)


def cutoff_psi(xi, n: int = 1) -> np.ndarray:
    return window_set(n).psi(xi)


def annulus_eta(xi, n: int = 1) -> np.ndarray:
    return window_set(n).eta(xi)


def eval_Phi(points, n: int = 1) -> np.ndarray:
    return window_set(n).eval_Phi(points)


def eval_Psi(points, n: int = 1) -> np.ndarray:
    return window_set(n).eval_Psi(points)


def bspline_B(t) -> np.ndarray:
    """Tensor product of the hat function ``chi * chi`` (support ``[-1, 1]^n``)."""
    t = np.asarray(t, dtype=float)
    return np.prod(np.clip(1.0 - np.abs(t), 0.0, None), axis=-1)


def inv_fourier_B(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    n = t.shape[-1]
    return np.prod(np.sinc(t / (2.0 * np.pi)) ** 2, axis=-1) / (2.0 * np.pi) ** n


@dataclass(frozen=True)
class GaussianWindow:
    """``gamma(t) = exp(-|t|^2 / (2 w^2))``."""

    n: int = 1
    scale: float = 1.0

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return np.exp(-(t * t).sum(axis=-1) / (2.0 * self.scale**2))

    def profile(self, r) -> np.ndarray:
        return np.exp(-np.asarray(r, dtype=float) ** 2 / (2.0 * self.scale**2))

    @property
    def l2_norm_sq(self) -> float:
        return (np.pi * self.scale**2) ** (self.n / 2.0)

    @property
    def radius(self) -> float:
        # gamma < 1e-16 beyond this
        return 8.6 * self.scale

    @property
    def spectral_radius(self) -> float:
        return 8.6 / self.scale


def gauss_window(grid: Grid, scale: float = 1.0) -> SampledField:
    if np.pi / grid.dx < 16.0 / scale:
        raise NyquistError(f"grid spacing {grid.dx} does not resolve the Gaussian window")
    return sample(grid, GaussianWindow(grid.n, scale))


def dump_table(which: str, start: float, stop: float, step: float, n: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Values of one of ``phi, psi, eta, Phi, Psi`` along the first axis."""
    ws = window_set(n)
    funcs = {"phi": ws.phi, "psi": ws.psi, "eta": ws.eta, "Phi": ws.eval_Phi, "Psi": ws.eval_Psi}
    if which not in funcs:
        raise ParameterError(f"unknown table {which!r}; choose from {sorted(funcs)}")
    if step <= 0 or stop < start:
        raise ParameterError("range must satisfy start <= stop and step > 0")
    t = np.arange(start, stop + 0.5 * step, step)
    pts = np.zeros((len(t), n))
    pts[:, 0] = t
    return t, np.asarray(funcs[which](pts), dtype=float)
