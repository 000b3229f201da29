"""Exponentially weighted signals and the discrete Fourier-Laplace transform.

A :class:`WeightedSignal` holds ``n`` uniform samples of a ``C^d``-valued
trajectory together with its weight ``nu``.  The transform pair

    F(xi_m) = dt / sqrt(2 pi) * sum_k exp(-i xi_m t_k - nu t_k) f(t_k)

uses left-endpoint weights on a zero-padded window of length ``n + pad``, so
that the discrete pair is exactly unitary and exactly invertible.  Only
:func:`weighted_inner` uses trapezoid weights.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import jsonio
from .errors import DomainError, IncompatibleSignalsError, ParseError, ShapeError

SQRT_2PI = math.sqrt(2.0 * math.pi)


def _is_pow2(k: int) -> bool:
    return k > 0 and (k & (k - 1)) == 0


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.complex128, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TimeGrid:
    """Uniform sampling ``t_k = t0 + k*dt``, ``k < n``, with ``pad`` zero samples appended."""

    t0: float
    dt: float
    n: int
    pad: int | None = None

    def __post_init__(self):
        if not _is_pow2(int(self.n)) or int(self.n) != self.n:
            raise DomainError(f"n must be a power of two, got {self.n}")
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt}")
        pad = self.n if self.pad is None else int(self.pad)
        if pad < 0:
            raise DomainError(f"pad must be nonnegative, got {pad}")
        if not _is_pow2(self.n + pad):
            raise DomainError(f"n + pad = {self.n + pad} is not a power of two")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "pad", pad)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def from_window(cls, tmax: float, nt: int, t0: float = 0.0, pad: int | None = None) -> "TimeGrid":
        return cls(t0=t0, dt=tmax / nt, n=nt, pad=pad)

    @property
    def length(self) -> int:
        """Transform length ``n + pad``."""
        return self.n + self.pad

    @property
    def tmax(self) -> float:
        return self.n * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def extended_times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.length)

    @property
    def xi(self) -> np.ndarray:
        """Signed DFT frequencies in radians per unit time, FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.length, d=self.dt)

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / (self.length * self.dt)

    def refined(self) -> "TimeGrid":
        """Same window at half the step."""
        return TimeGrid(self.t0, self.dt / 2, 2 * self.n, 2 * self.pad)


@dataclass(frozen=True)
class WeightedSignal:
    """Samples of an element of the weighted space, shape ``(n, d)``."""

    grid: TimeGrid
    nu: float
    values: np.ndarray

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError(f"weight nu must be positive, got {self.nu}")
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] != self.grid.n:
            raise ShapeError(f"values must have shape ({self.grid.n}, d), got {np.shape(self.values)}")
        object.__setattr__(self, "values", _readonly(v))
        object.__setattr__(self, "nu", float(self.nu))

    @classmethod
    def zeros(cls, grid: TimeGrid, nu: float, dim: int) -> "WeightedSignal":
        return cls(grid, nu, np.zeros((grid.n, dim), dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: TimeGrid, nu: float, fn: Callable[[np.ndarray], np.ndarray]) -> "WeightedSignal":
        """Sample ``fn(t)``; ``fn`` receives the time array and returns ``(n,)`` or ``(n, d)``."""
        return cls(grid, nu, fn(grid.times))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def like(self, values: np.ndarray) -> "WeightedSignal":
        return WeightedSignal(self.grid, self.nu, values)

    def __add__(self, other: "WeightedSignal") -> "WeightedSignal":
        _check_compatible(self, other)
        return self.like(self.values + other.values)

    def __sub__(self, other: "WeightedSignal") -> "WeightedSignal":
        _check_compatible(self, other)
        return self.like(self.values - other.values)

    def __mul__(self, c: complex) -> "WeightedSignal":
        return self.like(c * self.values)

    __rmul__ = __mul__

    def norm(self) -> float:
        return weighted_norm(self)


@dataclass(frozen=True)
class Spectrum:
    """Image of a signal under :func:`fourier_laplace`, shape ``(n + pad, d)``."""

    grid: TimeGrid
    nu: float
    values: np.ndarray
    xi: np.ndarray = field(default=None)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] != self.grid.length:
            raise ShapeError(f"spectrum length {v.shape[0]} != n + pad = {self.grid.length}")
        object.__setattr__(self, "values", _readonly(v))
        xi = self.grid.xi if self.xi is None else np.asarray(self.xi, dtype=float)
        xi = xi.copy()
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def zinv(self) -> np.ndarray:
        """``i xi + nu`` at every node; the symbol of the time derivative."""
        return 1j * self.xi + self.nu

    def like(self, values: np.ndarray) -> "Spectrum":
        return Spectrum(self.grid, self.nu, values, self.xi)

    def norm(self) -> float:
        """Discrete L2 norm with the frequency spacing as quadrature weight."""
        return math.sqrt(self.grid.dxi * float(np.sum(np.abs(self.values) ** 2)))


def _check_compatible(f: WeightedSignal, g: WeightedSignal) -> None:
    if f.grid != g.grid or f.nu != g.nu:
        raise IncompatibleSignalsError("signals must share grid and nu")
    if f.dim != g.dim:
        raise IncompatibleSignalsError(f"signal dimensions differ: {f.dim} vs {g.dim}")


def _trapezoid_weights(grid: TimeGrid, nu: float) -> np.ndarray:
    w = grid.dt * np.exp(-2.0 * nu * grid.times)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def weighted_inner(f: WeightedSignal, g: WeightedSignal) -> complex:
    """Weighted scalar product, trapezoid rule over the sampled window.

    Linear in ``f``, conjugate-linear in ``g``.
    """
    _check_compatible(f, g)
    w = _trapezoid_weights(f.grid, f.nu)
    return complex(np.sum(w * np.sum(f.values * np.conj(g.values), axis=1)))


def weighted_norm(f: WeightedSignal) -> float:
    w = _trapezoid_weights(f.grid, f.nu)
    return math.sqrt(float(np.sum(w * np.sum(np.abs(f.values) ** 2, axis=1))))


def fourier_laplace(f: WeightedSignal) -> Spectrum:
    """Discrete Fourier-Laplace transform of ``f``."""
    grid = f.grid
    w = np.zeros((grid.length, f.dim), dtype=np.complex128)
    w[: grid.n] = f.values * np.exp(-f.nu * grid.times)[:, None]
    xi = grid.xi
    phase = np.exp(-1j * xi * grid.t0)
    spec = (grid.dt / SQRT_2PI) * phase[:, None] * np.fft.fft(w, axis=0)
    return Spectrum(grid, f.nu, spec, xi)


def _inverse_full(s: Spectrum) -> np.ndarray:
    """Inverse transform on the whole padded window, still weighted by exp(-nu t)."""
    grid = s.grid
    phase = np.exp(1j * s.xi * grid.t0)
    return np.fft.ifft(s.values * phase[:, None], axis=0) * (SQRT_2PI / grid.dt)


def inverse_fourier_laplace(s: Spectrum) -> WeightedSignal:
    """Exact inverse of :func:`fourier_laplace`; padding samples are dropped."""
    grid = s.grid
    w = _inverse_full(s)[: grid.n]
    return WeightedSignal(grid, s.nu, w * np.exp(s.nu * grid.times)[:, None])


def scalar_multiplier(f: WeightedSignal, symbol: np.ndarray) -> WeightedSignal:
    """Multiply the spectrum of ``f`` by a scalar array sampled at ``f.grid.xi``."""
    s = fourier_laplace(f)
    return inverse_fourier_laplace(s.like(s.values * np.asarray(symbol)[:, None]))


def yosida(f: WeightedSignal, eps: float) -> WeightedSignal:
    """Apply ``(1 + eps d/dt)^-1``, a contraction for every ``eps > 0``."""
    if not eps > 0:
        raise DomainError(f"eps must be positive, got {eps}")
    zinv = 1j * f.grid.xi + f.nu
    return scalar_multiplier(f, 1.0 / (1.0 + eps * zinv))


# -- serialization -----------------------------------------------------------

def save_signal(path: str | Path, f: WeightedSignal) -> None:
    """Write ``path`` (CSV) and ``path`` with suffix ``.json`` (grid metadata)."""
    path = Path(path)
    header = ["t"]
    for j in range(f.dim):
        header += [f"re_{j}", f"im_{j}"]
    table = np.empty((f.grid.n, 1 + 2 * f.dim))
    table[:, 0] = f.times
    table[:, 1::2] = f.values.real
    table[:, 2::2] = f.values.imag
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(header), comments="")
    meta = {"t0": f.grid.t0, "dt": f.grid.dt, "n": f.grid.n, "pad": f.grid.pad, "nu": f.nu}
    jsonio.write(path.with_suffix(".json"), meta)


def load_signal(path: str | Path) -> WeightedSignal:
    path = Path(path)
    try:
        meta = json.loads(path.with_suffix(".json").read_text())
        grid = TimeGrid(meta["t0"], meta["dt"], meta["n"], meta["pad"])
        nu = meta["nu"]
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad sidecar for {path}: {exc}") from exc
    with path.open(newline="") as fh:
        head = next(csv.reader(fh), None)
    if not head or head[0] != "t" or len(head) % 2 != 1:
        raise ParseError("expected header t,re_0,im_0,...", line=1)
    d = (len(head) - 1) // 2
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except ValueError:
        table = None
    if table is not None and table.shape[1] == 2 * d + 1:
        data = table[:, 1::2] + 1j * table[:, 2::2]
        if data.shape[0] != grid.n:
            raise ShapeError(f"{path}: {data.shape[0]} rows but sidecar says n={grid.n}")
        return WeightedSignal(grid, nu, data)
    # slow path, for a precise error location
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    data = np.empty((len(rows) - 1, d), dtype=np.complex128)
    for i, row in enumerate(rows[1:]):
        if len(row) != 2 * d + 1:
            raise ParseError(f"expected {2 * d + 1} columns, got {len(row)}", line=i + 2)
        try:
            vals = [float(x) for x in row[1:]]
        except ValueError as exc:
            raise ParseError(str(exc), line=i + 2) from exc
        data[i] = np.array(vals[0::2]) + 1j * np.array(vals[1::2])
    if data.shape[0] != grid.n:
        raise ShapeError(f"{path}: {data.shape[0]} rows but sidecar says n={grid.n}")
    return WeightedSignal(grid, nu, data)
