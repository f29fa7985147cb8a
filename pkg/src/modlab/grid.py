"""Uniform grids on centred boxes, sampled fields, and quadrature.

A :class:`Grid` is the lattice ``x_i = -L + i*dx`` (``i = 0..N-1``) on every
axis, with ``dx = 2L/N`` and ``N`` a power of two.  Sampled values are kept
as an ``n``-dimensional array of shape ``(N,)*n`` in C order (axis 0 slowest),
so ``values.ravel()`` is the row-major flattening.

Pointwise functions handed to :func:`sample` take a single array of shape
``(..., n)`` holding coordinates in the last axis and return an array of
shape ``(...)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import GridMismatchError, NonFiniteError, ParameterError

MAX_LOG2_N = 24


@dataclass(frozen=True)
class Grid:
    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError(f"dimension must be >= 1, got {self.n}")
        if not self.L > 0:
            raise ParameterError(f"half extent L must be positive, got {self.L}")
        if self.N < 2 or self.N & (self.N - 1):
            raise ParameterError(f"N must be a power of two >= 2, got {self.N}")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def log2_N(self) -> int:
        return self.N.bit_length() - 1

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def size(self) -> int:
        return self.N**self.n

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.N)

    def points(self) -> np.ndarray:
        """All lattice points, shape ``(N,)*n + (n,)``."""
        if self.n == 1:
            return self.axis[:, None]
        mesh = np.meshgrid(*([self.axis] * self.n), indexing="ij")
        return np.stack(mesh, axis=-1)

    def fingerprint(self) -> dict:
        return {"n": self.n, "L": self.L, "log2_N": self.log2_N, "dx": self.dx}


@dataclass(frozen=True, eq=False)
class SampledField:
    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.size != self.grid.size:
            raise ParameterError(
                f"field has {v.size} values, grid needs {self.grid.size}"
            )
        v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise NonFiniteError("field contains non-finite values")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "SampledField":
        return SampledField(self.grid, values)

    def __add__(self, other):
        _check_same_grid(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        _check_same_grid(self, other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, SampledField):
            _check_same_grid(self, c)
            return self.with_values(self.values * c.values)
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def conj(self) -> "SampledField":
        return self.with_values(self.values.conj())

    def norm(self) -> float:
        """L2 norm by the same Riemann rule as :func:`integrate`."""
        return float(np.sqrt(self.grid.dx**self.grid.n * np.vdot(self.values, self.values).real))

    def sup(self) -> float:
        return float(np.abs(self.values).max())


def make_grid(n: int, L: float, log2_N: int) -> Grid:
    if not 1 <= log2_N <= MAX_LOG2_N:
        raise ParameterError(f"log2_N must lie in [1, {MAX_LOG2_N}], got {log2_N}")
    if not L > 0:
        raise ParameterError(f"half extent L must be positive, got {L}")
    return Grid(int(n), float(L), 1 << int(log2_N))


def sample(grid: Grid, f) -> SampledField:
    values = np.asarray(f(grid.points()), dtype=complex)
    if values.shape != grid.shape:
        values = np.broadcast_to(values, grid.shape)
    bad = ~np.isfinite(values)
    if bad.any():
        idx = np.unravel_index(np.argmax(bad), grid.shape)
        point = tuple(float(grid.axis[i]) for i in idx)
        raise NonFiniteError(f"non-finite sample {values[idx]!r} at x = {point}")
    return SampledField(grid, values)


def _pairwise_sum(a: np.ndarray) -> complex:
    # numpy's add.reduce is already blocked pairwise for contiguous data; keep the
    # order fixed by always reducing the C-ordered flat view
    return complex(np.add.reduce(np.ascontiguousarray(a).ravel()))


def integrate(f: SampledField) -> complex:
    """Left-endpoint Riemann sum ``dx**n * sum(values)``."""
    return f.grid.dx**f.grid.n * _pairwise_sum(f.values)


def _check_same_grid(f: SampledField, g: SampledField):
    if f.grid != g.grid:
        raise GridMismatchError(f"grid mismatch: {f.grid} vs {g.grid}")


def inner_product(f: SampledField, g: SampledField) -> complex:
    """``(f, g) = integral of f * conj(g)``."""
    _check_same_grid(f, g)
    return f.grid.dx**f.grid.n * _pairwise_sum(f.values * g.values.conj())
