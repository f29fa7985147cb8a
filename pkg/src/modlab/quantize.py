"""Kohn-Nirenberg quantization on sampled fields.

    T f(x) = (2 pi)^{-n} integral exp(i x.xi) sigma(x, xi) F f(xi) dxi

Two independent paths: :func:`apply_separable` for dyadic separable symbols
(one FFT, one inverse FFT per live term) and :func:`apply_dense`, which
builds the full quadrature matrix on small grids.  Adjoints are the exact
conjugate transposes with respect to :func:`modlab.grid.inner_product`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import GridMismatchError, ParameterError
from .grid import Grid, SampledField
from .spectral import FrequencyGrid, _forward, _inverse, check_band
from .symbols import DyadicSeparableSymbol

DENSE_CAP = 4096
NEGLIGIBLE = 1e-14


def _cutoff_values(term, fg: FrequencyGrid) -> np.ndarray:
    return np.asarray(term.cutoff(fg.points()), dtype=float)


def _content_band(masked: np.ndarray, fg: FrequencyGrid) -> float:
    # highest frequency carrying non-negligible content after the cutoff
    mag = np.abs(masked)
    live = mag > NEGLIGIBLE * mag.max() if mag.size and mag.max() > 0 else np.zeros(mag.shape, bool)
    return float(fg.radius()[live].max()) if live.any() else 0.0


def apply_separable(S: DyadicSeparableSymbol, f: SampledField, skip_negligible: bool = True) -> SampledField:
    """``sum_j scale_j a_j(x) [eta_j(D) f](x)``.

    Terms whose cutoff leaves at most ``1e-14`` of the spectrum's norm are
    skipped when ``skip_negligible`` is set; their profiles are then never
    built.
    """
    if f.grid != S.grid:
        raise GridMismatchError("symbol and field live on different grids")
    g = f.grid
    fg = FrequencyGrid(g)
    spec = _forward(np.asarray(f.values), g)
    ref = np.linalg.norm(spec)
    out = np.zeros(g.shape, dtype=complex)
    for term in S.terms:
        cut = _cutoff_values(term, fg)
        masked = cut * spec
        if skip_negligible and np.linalg.norm(masked) <= NEGLIGIBLE * ref:
            continue
        check_band(g, _content_band(masked, fg), f"cutoff j={term.j}")
        out += term.scale * term.profile.values * _inverse(masked, g)
    return SampledField(g, out)


def adjoint_separable(S: DyadicSeparableSymbol, g_field: SampledField) -> SampledField:
    """``sum_j scale_j [conj(eta_j)(D) (conj(a_j) g)]``."""
    if g_field.grid != S.grid:
        raise GridMismatchError("symbol and field live on different grids")
    g = g_field.grid
    fg = FrequencyGrid(g)
    out = np.zeros(g.shape, dtype=complex)
    for term in S.terms:
        cut = _cutoff_values(term, fg)
        tmp = np.conj(term.profile.values) * g_field.values
        out += np.conj(term.scale) * _inverse(np.conj(cut) * _forward(tmp, g), g)
    return SampledField(g, out)


@dataclass(frozen=True, eq=False)
class DenseSymbolMatrix:
    """``K[i, k] = (2 pi)^{-n} exp(i x_i.xi_k) sigma(x_i, xi_k) dxi^n`` acting on spectra."""

    grid: Grid
    entries: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, grid: Grid, sym: Callable) -> "DenseSymbolMatrix":
        if grid.size > DENSE_CAP:
            raise ParameterError(f"dense quantization is capped at {DENSE_CAP} points, grid has {grid.size}")
        n = grid.n
        x = grid.points().reshape(-1, n)
        xi = FrequencyGrid(grid).points().reshape(-1, n)
        X = np.repeat(x[:, None, :], len(xi), axis=1)
        XI = np.repeat(xi[None, :, :], len(x), axis=0)
        vals = np.asarray(sym(X, XI), dtype=complex).reshape(len(x), len(xi))
        dxi = np.pi / grid.L
        K = np.exp(1j * x @ xi.T) * vals * dxi**n / (2.0 * np.pi) ** n
        return cls(grid, K)

    def apply(self, f: SampledField) -> SampledField:
        spec = _forward(np.asarray(f.values), self.grid).reshape(-1)
        return SampledField(self.grid, self.entries @ spec)

    def adjoint(self, g_field: SampledField) -> SampledField:
        grid = self.grid
        v = (self.entries.conj().T @ g_field.values.reshape(-1)).reshape(grid.shape)
        # adjoint of the scaled, phase-folded DFT: dx^n * N^n * inverse
        return SampledField(grid, _inverse(v, grid) * (grid.dx * grid.N) ** grid.n * grid.dx**grid.n)


def apply_dense(sym: Callable, f: SampledField) -> SampledField:
    return DenseSymbolMatrix.build(f.grid, sym).apply(f)


def discrete_adjoint(op, g_field: SampledField) -> SampledField:
    """Adjoint of either a :class:`DyadicSeparableSymbol` or a pointwise symbol (dense path)."""
    if isinstance(op, DyadicSeparableSymbol):
        return adjoint_separable(op, g_field)
    if isinstance(op, DenseSymbolMatrix):
        return op.adjoint(g_field)
    return DenseSymbolMatrix.build(g_field.grid, op).adjoint(g_field)
