"""Functional calculus of the inverse time derivative.

An analytic symbol ``S`` acts on a weighted signal by multiplying its
Fourier-Laplace transform by ``S(z)`` at ``z = 1/(i xi + nu)``.  Material
laws are matrix-valued symbols split into the five blocks
``M, N00, N01, N10, N11``; they are evaluated in vectorized batches of
frequency points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple

import numpy as np

from .errors import AnalyticityDomainError, BranchCutError, DomainError, ShapeError
from .weighted_time import Spectrum, WeightedSignal, fourier_laplace, inverse_fourier_laplace

BLOCK_NAMES = ("M", "N00", "N01", "N10", "N11")

# complex entries per law-evaluation chunk (about 64 MB)
_CHUNK_ENTRIES = 4_000_000


@dataclass(frozen=True)
class FrequencyPoint:
    xi: float
    nu: float
    z: complex = field(init=False)

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")
        object.__setattr__(self, "z", 1.0 / complex(self.nu, self.xi))

    @property
    def radius(self) -> float:
        """Radius ``1/(2 nu)`` of the circle the point lies on."""
        return 0.5 / self.nu


class LawBlocks(NamedTuple):
    """Blocks of a material law at ``K`` points; each entry has shape ``(K, rows, cols)``."""

    M: np.ndarray
    N00: np.ndarray
    N01: np.ndarray
    N10: np.ndarray
    N11: np.ndarray


@dataclass(frozen=True)
class SteppingData:
    """Time-domain realization of a law for the implicit Euler oracle.

    The first four blocks are constant.  ``N11(z)`` must be invertible with
    ``N11(z)^-1 = S0 + z*S1 + z*Lk(1/z)`` where ``Lk`` is the Laplace
    transform of ``kernel`` (``None`` for no memory term).
    """

    M: np.ndarray
    N00: np.ndarray
    N01: np.ndarray
    N10: np.ndarray
    S0: np.ndarray
    S1: np.ndarray
    kernel: object | None = None


@dataclass(frozen=True)
class MaterialLaw:
    """Matrix-valued analytic symbol on the ball ``B(r, r)``.

    ``evaluate`` maps an array of ``K`` points ``z`` to :class:`LawBlocks`.
    It must not mutate shared state: the solver and the certifier call it on
    disjoint chunks in any order.

    ``diagonal`` is an optional structure hint for laws whose ``M``, ``N00``
    and ``N11`` are diagonal and whose ``N01``, ``N10`` vanish.  It returns
    the three diagonals, shapes ``(K, d0)``, ``(K, d0)``, ``(K, d1)``, and
    lets callers avoid dense batches.
    """

    name: str
    dims: tuple[int, int]
    evaluate: Callable[[np.ndarray], LawBlocks]
    r: float = math.inf
    beta: float = 1.0
    n11_inverse: Callable[[np.ndarray], np.ndarray] | None = None
    stepping: SteppingData | None = None
    meta: dict = field(default_factory=dict)
    diagonal: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray]] | None = None

    def __post_init__(self):
        if not self.r > 0:
            raise DomainError(f"analyticity radius must be positive, got {self.r}")
        if not 0 < self.beta <= 1:
            raise DomainError(f"beta must lie in (0, 1], got {self.beta}")

    @property
    def d0(self) -> int:
        return self.dims[0]

    @property
    def d1(self) -> int:
        return self.dims[1]

    @property
    def time_steppable(self) -> bool:
        return self.stepping is not None

    def blocks(self, z: np.ndarray) -> LawBlocks:
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        out = self.evaluate(z)
        d0, d1 = self.dims
        k = z.shape[0]
        want = {"M": (d0, d0), "N00": (d0, d0), "N01": (d0, d1), "N10": (d1, d0), "N11": (d1, d1)}
        for name, arr in zip(BLOCK_NAMES, out):
            if arr.shape != (k,) + want[name]:
                raise ShapeError(f"law {self.name!r}: block {name} has shape {arr.shape}, expected {(k,) + want[name]}")
        return LawBlocks(*out)

    @property
    def is_diagonal(self) -> bool:
        return self.diagonal is not None

    def diagonal_blocks(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.diagonal is None:
            raise ShapeError(f"law {self.name!r} provides no diagonal form")
        z = np.atleast_1d(np.asarray(z, dtype=np.complex128))
        d0, d1 = self.dims
        out = tuple(np.broadcast_to(np.asarray(a, dtype=np.complex128), (z.shape[0], d))
                    for a, d in zip(self.diagonal(z), (d0, d0, d1)))
        return out

    def inverse_n11(self, z: np.ndarray, n11: np.ndarray | None = None) -> np.ndarray:
        if self.n11_inverse is not None:
            return self.n11_inverse(np.atleast_1d(z))
        if n11 is None:
            n11 = self.blocks(z).N11
        return batch_inv(n11)

    @classmethod
    def constant(cls, M, N00, N01, N10, N11, beta: float = 1.0, name: str = "custom") -> "MaterialLaw":
        """Law whose blocks do not depend on ``z``; time-steppable when ``N11`` is invertible."""
        M, N00, N11 = (np.atleast_2d(np.asarray(a, dtype=np.complex128)) for a in (M, N00, N11))
        d0, d1 = M.shape[0], N11.shape[0]
        N01 = np.asarray(N01, dtype=np.complex128).reshape(d0, d1)
        N10 = np.asarray(N10, dtype=np.complex128).reshape(d1, d0)
        mats = (M, N00, N01, N10, N11)

        def evaluate(z):
            return LawBlocks(*(const_batch(a, z.shape[0]) for a in mats))

        stepping = None
        n11_inverse = None
        if d1 == 0 or abs(np.linalg.det(N11)) > 0:
            S0 = np.linalg.inv(N11) if d1 else N11
            stepping = SteppingData(M, N00, N01, N10, S0, np.zeros_like(S0))
            n11_inverse = lambda z: const_batch(S0, z.shape[0])  # noqa: E731
        diagonal = None
        if all(is_diagonal(a[None]) for a in mats):
            diags = tuple(np.diagonal(a).copy() for a in (M, N00, N11))

            def diagonal(z):
                return tuple(np.broadcast_to(a, (z.shape[0], a.shape[0])) for a in diags)
        return cls(name, (d0, d1), evaluate, beta=beta, n11_inverse=n11_inverse, stepping=stepping,
                   diagonal=diagonal)


# -- batched matrix helpers ----------------------------------------------------

def const_batch(a: np.ndarray, k: int) -> np.ndarray:
    """Read-only view repeating ``a`` ``k`` times along a new leading axis."""
    return np.broadcast_to(a, (k,) + a.shape)


def scalar_batch(s: np.ndarray, n: int) -> np.ndarray:
    """``s[k] * I_n`` for every ``k``."""
    s = np.asarray(s, dtype=np.complex128)
    out = np.zeros((s.shape[0], n, n), dtype=np.complex128)
    idx = np.arange(n)
    out[:, idx, idx] = s[:, None]
    return out


def is_diagonal(x: np.ndarray) -> bool:
    """True when every matrix in the batch is diagonal (rectangular: zero)."""
    if x.shape[-1] == 0 or x.shape[-2] == 0:
        return True
    if x.ndim == 3 and x.shape[0] > 1 and x.strides[0] == 0:
        return is_diagonal(x[:1])
    if x.shape[-1] != x.shape[-2]:
        return not np.any(x)
    return np.count_nonzero(x) == np.count_nonzero(np.diagonal(x, axis1=-2, axis2=-1))


def batch_inv(x: np.ndarray) -> np.ndarray:
    if x.shape[-1] == 0:
        return np.array(x, dtype=np.complex128)
    if is_diagonal(x):
        n = x.shape[-1]
        return scalar_batch(np.ones(x.shape[0]), n) / np.diagonal(x, axis1=-2, axis2=-1)[:, None, :]
    return np.linalg.inv(x)


def batch_opnorm(x: np.ndarray) -> np.ndarray:
    """Spectral norm of each matrix in the batch."""
    if x.shape[-1] == 0 or x.shape[-2] == 0:
        return np.zeros(x.shape[0])
    if is_diagonal(x):
        if x.shape[-1] != x.shape[-2]:
            return np.zeros(x.shape[0])
        return np.max(np.abs(np.diagonal(x, axis1=-2, axis2=-1)), axis=-1)
    return np.linalg.norm(x, 2, axis=(-2, -1))


def batch_apply(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``x[k] @ v[k]`` for every ``k``."""
    if x.shape[-1] == 0 or x.shape[-2] == 0:
        return np.zeros(v.shape[:1] + x.shape[-2:-1], dtype=np.complex128)
    if x.shape[-1] == x.shape[-2] and is_diagonal(x):
        return np.diagonal(x, axis1=-2, axis2=-1) * v
    return np.einsum("kij,kj->ki", x, v)


def chunks(total: int, dims: tuple[int, int]) -> Iterator[slice]:
    d = max(1, (dims[0] + dims[1]) ** 2)
    size = max(1, min(total, _CHUNK_ENTRIES // d))
    for start in range(0, total, size):
        yield slice(start, min(total, start + size))


# -- scalar calculus -----------------------------------------------------------

def frac_power(zinv, beta: float):
    """Principal power ``zinv**beta`` for ``Re zinv > 0``.

    Integer exponents are computed by repeated multiplication so that
    ``beta = 0`` and ``beta = 1`` are exact.
    """
    zinv = np.asarray(zinv, dtype=np.complex128)
    if np.any(zinv.real <= 0):
        raise BranchCutError("fractional power needs Re(zinv) > 0")
    beta = float(beta)
    if beta.is_integer():
        out = zinv ** int(beta) if beta >= 0 else 1.0 / zinv ** int(-beta)
    else:
        out = np.exp(beta * np.log(zinv))
    return out[()] if out.ndim == 0 else out


def apply_multiplier(f: WeightedSignal, symbol: Callable[[np.ndarray], np.ndarray]) -> WeightedSignal:
    """Multiply the spectrum of ``f`` by ``symbol(xi)`` and transform back.

    ``symbol`` receives the whole frequency array and returns either one
    scalar per node, shape ``(N,)``, or one ``d x d`` matrix per node.
    """
    s = fourier_laplace(f)
    sym = np.asarray(symbol(s.xi))
    if sym.ndim == 1 and sym.shape[0] == s.values.shape[0]:
        out = s.values * sym[:, None]
    elif sym.ndim == 3 and sym.shape == (s.values.shape[0], f.dim, f.dim):
        out = np.einsum("kij,kj->ki", sym, s.values)
    else:
        raise ShapeError(f"symbol returned shape {sym.shape} for a {f.dim}-dimensional signal on {s.values.shape[0]} nodes")
    return inverse_fourier_laplace(s.like(out))


def fractional_derivative(f: WeightedSignal, beta: float) -> WeightedSignal:
    """``(d/dt)**beta`` on the weighted space, ``beta`` in ``[-1, 2]``."""
    if not -1.0 <= beta <= 2.0:
        raise DomainError(f"beta must lie in [-1, 2], got {beta}")
    return apply_multiplier(f, lambda xi: frac_power(1j * xi + f.nu, beta))


def adjoint_fractional_derivative(f: WeightedSignal, beta: float) -> WeightedSignal:
    """Adjoint of ``(d/dt)**beta``: the multiplier ``(-i xi + nu)**beta``."""
    return apply_multiplier(f, lambda xi: frac_power(-1j * xi + f.nu, beta))


# -- material laws on spectra --------------------------------------------------

def in_ball(z, r: float) -> np.ndarray:
    """Membership of ``z`` in the closed ball ``|z - r| <= r``."""
    z = np.asarray(z, dtype=np.complex128)
    if math.isinf(r):
        return z.real >= 0
    return np.abs(z - r) <= r * (1 + 1e-12)


def eval_law(law: MaterialLaw, p: FrequencyPoint) -> LawBlocks:
    """The five blocks at a single frequency point, each a plain matrix."""
    if not in_ball(p.z, law.r):
        raise AnalyticityDomainError(
            f"z = {p.z} lies outside B(r, r) with r = {law.r}; not evaluating law {law.name!r}"
        )
    b = law.blocks(np.array([p.z]))
    return LawBlocks(*(np.array(a[0]) for a in b))


def apply_law_block(law: MaterialLaw, s: Spectrum, block: str, scale_by_zinv: bool = False) -> Spectrum:
    """Multiply ``s`` by one law block at every node (optionally times ``1/z``)."""
    idx = BLOCK_NAMES.index(block)
    rows = {"M": law.d0, "N00": law.d0, "N01": law.d0, "N10": law.d1, "N11": law.d1}[block]
    out = np.zeros((s.values.shape[0], rows), dtype=np.complex128)
    zinv = s.zinv
    if law.is_diagonal:
        if block in ("N01", "N10"):
            return s.like(out)
        y = law.diagonal_blocks(1.0 / zinv)[("M", "N00", "N11").index(block)] * s.values
        return s.like(y * zinv[:, None] if scale_by_zinv else y)
    for sl in chunks(len(zinv), law.dims):
        b = law.blocks(1.0 / zinv[sl])[idx]
        y = batch_apply(b, s.values[sl])
        out[sl] = y * zinv[sl, None] if scale_by_zinv else y
    return s.like(out)


def law_sup_norm(law: MaterialLaw, xi: np.ndarray, nu: float, block: str) -> float:
    """Supremum over the nodes of the spectral norm of one block."""
    idx = BLOCK_NAMES.index(block)
    zinv = 1j * np.asarray(xi) + nu
    if law.is_diagonal:
        if block in ("N01", "N10"):
            return 0.0
        d = law.diagonal_blocks(1.0 / zinv)[("M", "N00", "N11").index(block)]
        return float(np.max(np.abs(d), initial=0.0))
    best = 0.0
    for sl in chunks(len(zinv), law.dims):
        b = law.blocks(1.0 / zinv[sl])[idx]
        if b.size:
            best = max(best, float(np.max(batch_opnorm(b))))
    return best
