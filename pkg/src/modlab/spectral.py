"""Continuous-convention Fourier pair on sampled fields.

Conventions::

    F f(xi)      = integral exp(-i xi.x) f(x) dx
    F^{-1} s(x)  = (2 pi)^{-n} integral exp(+i x.xi) s(xi) dxi

On a grid with spacing ``dx`` the frequencies are ``xi_k = pi k / L`` for
``k = -N/2 .. N/2-1`` (centred order).  Because ``x_0 = -L`` the DFT picks
up the phase ``exp(i xi_k L) = (-1)^k``; it is folded in here so spectra
approximate the continuous transform directly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, NonFiniteError, NyquistError, ParameterError
from .grid import Grid, SampledField

NYQUIST_MARGIN = 0.8


@dataclass(frozen=True)
class FrequencyGrid:
    source: Grid

    @property
    def dxi(self) -> float:
        return np.pi / self.source.L

    @property
    def nyquist(self) -> float:
        return np.pi / self.source.dx

    @cached_property
    def axis(self) -> np.ndarray:
        N = self.source.N
        return self.dxi * np.arange(-N // 2, N // 2)

    def points(self) -> np.ndarray:
        n = self.source.n
        if n == 1:
            return self.axis[:, None]
        mesh = np.meshgrid(*([self.axis] * n), indexing="ij")
        return np.stack(mesh, axis=-1)

    def radius(self) -> np.ndarray:
        """``|xi|`` on the full grid, shape ``(N,)*n``."""
        if self.source.n == 1:
            return np.abs(self.axis)
        return np.sqrt((self.points() ** 2).sum(axis=-1))

    def index_of(self, xi: float) -> int:
        """Centred index of a lattice frequency (per axis); raises if off-lattice."""
        k = xi / self.dxi
        kr = round(k)
        if abs(k - kr) > 1e-9 * max(1.0, abs(k)):
            raise ParameterError(f"frequency {xi} is not on the lattice (step {self.dxi})")
        return int(kr)


@dataclass(frozen=True, eq=False)
class Spectrum:
    fgrid: FrequencyGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        g = self.fgrid.source
        if v.size != g.size:
            raise ParameterError(f"spectrum has {v.size} values, grid needs {g.size}")
        v = v.reshape(g.shape)
        if not np.all(np.isfinite(v)):
            raise NonFiniteError("spectrum contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)


def _sign_pattern(grid: Grid) -> np.ndarray:
    k = np.arange(-grid.N // 2, grid.N // 2)
    s = np.where(k % 2 == 0, 1.0, -1.0)
    out = s
    for _ in range(grid.n - 1):
        out = np.multiply.outer(out, s)
    return out


def _forward(values: np.ndarray, grid: Grid) -> np.ndarray:
    spec = np.fft.fftshift(np.fft.fftn(values))
    return grid.dx**grid.n * _sign_pattern(grid) * spec


def _inverse(values: np.ndarray, grid: Grid) -> np.ndarray:
    raw = np.fft.ifftn(np.fft.ifftshift(values * _sign_pattern(grid)))
    return raw / grid.dx**grid.n


def fourier(f: SampledField) -> Spectrum:
    return Spectrum(FrequencyGrid(f.grid), _forward(f.values, f.grid))


def inverse_fourier(s: Spectrum) -> SampledField:
    g = s.fgrid.source
    return SampledField(g, _inverse(s.values, g))


def apply_multiplier(f: SampledField, m) -> SampledField:
    """``F^{-1}[ m(xi) * F f ]`` with ``m`` evaluated on the frequency grid.

    ``m`` is either a callable taking points of shape ``(..., n)`` or an
    array already sampled on the centred frequency grid.
    """
    fg = FrequencyGrid(f.grid)
    mult = m if isinstance(m, np.ndarray) else np.asarray(m(fg.points()))
    mult = np.broadcast_to(mult, f.grid.shape)
    if not np.all(np.isfinite(mult)):
        raise NonFiniteError("multiplier is not finite on the frequency grid")
    return SampledField(f.grid, _inverse(mult * _forward(f.values, f.grid), f.grid))


def check_band(grid: Grid, max_frequency: float, what: str = "content") -> None:
    """Raise :class:`NyquistError` unless ``max_frequency <= 0.8 * pi/dx``."""
    limit = NYQUIST_MARGIN * np.pi / grid.dx
    if max_frequency > limit:
        raise NyquistError(
            f"{what}: max frequency {max_frequency:.6g} exceeds "
            f"{NYQUIST_MARGIN} * Nyquist = {limit:.6g} (dx = {grid.dx:.3g})"
        )


def frequency_inner_product(s: Spectrum, t: Spectrum) -> complex:
    if s.fgrid.source != t.fgrid.source:
        raise GridMismatchError("spectra live on different grids")
    w = s.fgrid.dxi ** s.fgrid.source.n
    return complex(w * np.vdot(t.values, s.values))
