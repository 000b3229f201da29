"""Sampled certification of the positivity constants of a material law.

All three constants are lower bounds of numerical ranges,
``Re <T x, x> >= lambda_min((T + T*)/2) |x|^2``, taken over a finite set of
points ``z = 1/(i xi + nu')``.  The result is a sampled estimate, not a proof;
reports carry ``sampled_only = True``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, ShapeError, SingularBlockError
from .symbols import MaterialLaw, batch_opnorm, chunks, frac_power, is_diagonal

SINGULAR_RTOL = 1e-12


def hermitian_min_eig(T: np.ndarray):
    """Smallest eigenvalue of the Hermitian part ``(T + T*)/2``.

    Accepts one square matrix (returns a float) or a batch of shape
    ``(K, n, n)`` (returns an array).  An empty matrix gives ``+inf``.
    """
    T = np.asarray(T)
    single = T.ndim == 2
    if single:
        T = T[None]
    if T.ndim != 3 or T.shape[1] != T.shape[2]:
        raise ShapeError(f"hermitian_min_eig needs square matrices, got shape {T.shape[-2:]}")
    n = T.shape[1]
    if n == 0:
        out = np.full(T.shape[0], np.inf)
    else:
        H = 0.5 * (T + np.conj(np.swapaxes(T, 1, 2)))
        if is_diagonal(H):
            out = np.min(np.diagonal(H, axis1=1, axis2=2).real, axis=1)
        else:
            out = np.linalg.eigvalsh(H)[:, 0]
    return float(out[0]) if single else out


def sample_grid(nu: float, k: int = 6, nu_steps: int = 9, xi_span: tuple[float, float] = (1e-3, 1e6),
                limit_factor: float = 1e6) -> tuple[np.ndarray, np.ndarray]:
    """Default sampling: ``2**k`` log-spaced |xi| on each side plus 0; nu' in [nu, 16 nu] plus a large proxy."""
    mags = np.geomspace(xi_span[0] * nu, xi_span[1] * nu, 2 ** k)
    xi = np.concatenate([-mags[::-1], [0.0], mags])
    nus = np.concatenate([nu * np.geomspace(1.0, 16.0, nu_steps), [limit_factor * nu]])
    return xi, nus


def _points(law: MaterialLaw, xi_grid, nu_grid) -> np.ndarray:
    xi = np.atleast_1d(np.asarray(xi_grid, dtype=float))
    nus = np.atleast_1d(np.asarray(nu_grid, dtype=float))
    if xi.size == 0 or nus.size == 0:
        raise DomainError("sampling grids must be nonempty")
    lower = 0.0 if math.isinf(law.r) else 0.5 / law.r
    if np.any(nus <= lower):
        raise DomainError(f"nu grid must lie in ({lower}, inf) for law {law.name!r}")
    zinv = (1j * xi[None, :] + nus[:, None]).ravel()
    return 1.0 / zinv


def c0_from_blocks(top: np.ndarray, b) -> np.ndarray:
    """Hermitian lower bound of ``[[top, N01], [N10, N11]]`` per point, with ``top = z^-1 M + N00``."""
    if is_diagonal(b.N01) and is_diagonal(b.N10):
        return np.minimum(hermitian_min_eig(top), hermitian_min_eig(b.N11))
    d0, d1 = top.shape[1], b.N11.shape[1]
    full = np.zeros((top.shape[0], d0 + d1, d0 + d1), dtype=np.complex128)
    full[:, :d0, :d0] = top
    full[:, :d0, d0:] = b.N01
    full[:, d0:, :d0] = b.N10
    full[:, d0:, d0:] = b.N11
    return hermitian_min_eig(full)


def c0_values(law: MaterialLaw, z: np.ndarray) -> np.ndarray:
    """Per-point lower bound of ``Re <(z^-1 diag(M, 0) + N) x, x>``."""
    if law.is_diagonal:
        Md, N00d, N11d = law.diagonal_blocks(z)
        top = (Md / z[:, None] + N00d).real
        return np.minimum(np.min(top, axis=1, initial=np.inf), np.min(N11d.real, axis=1, initial=np.inf))
    out = np.empty(len(z))
    for sl in chunks(len(z), law.dims):
        b = law.blocks(z[sl])
        out[sl] = c0_from_blocks(b.M / z[sl, None, None] + b.N00, b)
    return out


def certify_c0(law: MaterialLaw, xi_grid, nu_grid) -> float:
    return float(np.min(c0_values(law, _points(law, xi_grid, nu_grid))))


def c1_values(law: MaterialLaw, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if law.is_diagonal:
        q = frac_power(z, law.beta - 1.0)[:, None] * law.diagonal_blocks(z)[0]
        return np.min(q.real, axis=1, initial=np.inf), np.max(np.abs(q), axis=1, initial=0.0)
    lo = np.empty(len(z))
    hi = np.empty(len(z))
    for sl in chunks(len(z), law.dims):
        q = frac_power(z[sl], law.beta - 1.0)[:, None, None] * law.blocks(z[sl]).M
        lo[sl] = hermitian_min_eig(q)
        hi[sl] = batch_opnorm(q)
    return lo, hi


def certify_c1(law: MaterialLaw, xi_grid, nu_grid) -> tuple[float, float]:
    """``(c1, sup_zbm)``: infimum of the Hermitian part and supremum of the norm of ``z**(beta-1) M(z)``."""
    lo, hi = c1_values(law, _points(law, xi_grid, nu_grid))
    return float(np.min(lo)), float(np.max(hi))


def _check_invertible(n11: np.ndarray, z: np.ndarray) -> None:
    if n11.shape[-1] == 0:
        return
    if is_diagonal(n11):
        mag = np.abs(np.diagonal(n11, axis1=1, axis2=2))
        smin, smax = mag.min(axis=1), mag.max(axis=1)
    else:
        s = np.linalg.svd(n11, compute_uv=False)
        smin, smax = s[:, -1], s[:, 0]
    bad = np.flatnonzero(smin < SINGULAR_RTOL * smax)
    if bad.size:
        k = bad[0]
        raise SingularBlockError(f"N11(z) is singular at z = {z[k]} (xi = {(1 / z[k]).imag}, nu' = {(1 / z[k]).real})")


def c2_values(law: MaterialLaw, z: np.ndarray) -> np.ndarray:
    if law.is_diagonal:
        n11 = law.diagonal_blocks(z)[2]
        if n11.shape[1]:
            mag = np.abs(n11)
            bad = np.flatnonzero(mag.min(axis=1) < SINGULAR_RTOL * mag.max(axis=1))
            if bad.size:
                k = bad[0]
                raise SingularBlockError(f"N11(z) is singular at z = {z[k]} (xi = {(1 / z[k]).imag}, nu' = {(1 / z[k]).real})")
        t = frac_power(np.conj(z), -law.beta)[:, None] / n11
        return np.min(t.real, axis=1, initial=np.inf)
    out = np.empty(len(z))
    for sl in chunks(len(z), law.dims):
        zs = z[sl]
        if law.n11_inverse is not None:
            inv = law.n11_inverse(zs)
        else:
            n11 = law.blocks(zs).N11
            _check_invertible(n11, zs)
            inv = law.inverse_n11(zs, n11)
        t = frac_power(np.conj(zs), -law.beta)[:, None, None] * inv
        out[sl] = hermitian_min_eig(t)
    return out


def certify_c2(law: MaterialLaw, xi_grid, nu_grid) -> float:
    """Infimum of the Hermitian part of ``((conj z)**beta N11(z))**-1``."""
    return float(np.min(c2_values(law, _points(law, xi_grid, nu_grid))))


def neumann_margin(opnorm_perturbation: float) -> float:
    """``1 - q``; a Neumann series for ``1 + P`` with ``|P| <= q`` converges iff this is positive."""
    return 1.0 - float(opnorm_perturbation)


def _norm(a) -> float:
    a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def neumann_perturbation(nu: float, A, B, kernel_bound: float | Callable[[float], float] = 0.0) -> float:
    """``(1/nu) |A^-1| (|B| + |k|)``; ``kernel_bound`` may depend on ``nu``."""
    a_inv = _norm(np.linalg.inv(np.atleast_2d(np.asarray(A, dtype=np.complex128))))
    kb = kernel_bound(nu) if callable(kernel_bound) else kernel_bound
    return a_inv * (_norm(B) + kb) / nu


def min_nu_for_margin(A, B, kernel_bound: float | Callable[[float], float] = 0.0, target: float = 0.0) -> float:
    """Smallest ``nu`` with ``neumann_margin(neumann_perturbation(nu, ...)) >= target``.

    With a constant ``kernel_bound`` this is closed form; otherwise the bound
    must be nonincreasing in ``nu`` and the root is bracketed numerically.
    """
    if not 0 <= target < 1:
        raise DomainError(f"target margin must lie in [0, 1), got {target}")
    if not callable(kernel_bound):
        return neumann_perturbation(1.0, A, B, kernel_bound) / (1.0 - target)

    def excess(nu):
        return neumann_perturbation(nu, A, B, kernel_bound) - (1.0 - target)

    lo, hi = 1e-12, 1.0
    if excess(lo) <= 0:
        return lo
    while excess(hi) > 0:
        hi *= 2.0
    return brentq(excess, lo, hi, xtol=1e-14, rtol=1e-14)


@dataclass(frozen=True)
class ConditionReport:
    c0: float
    c1: float
    c2: float
    sup_zbm: float
    neumann_margin: float
    samples: int
    nu_range: tuple[float, float]
    c0_arc: float | None = None
    sampled_only: bool = True

    @property
    def passed(self) -> bool:
        return self.c0 > 0 and self.c1 > 0 and math.isfinite(self.sup_zbm) and self.c2 > -math.inf

    @property
    def c0_bound(self) -> float:
        """Constant used in a-priori estimates: the smaller of the two infima."""
        return self.c0 if self.c0_arc is None else min(self.c0, self.c0_arc)

    def to_dict(self) -> dict:
        return {
            "c0": self.c0,
            "c1": self.c1,
            "c2": self.c2,
            "sup_zbm": self.sup_zbm,
            "neumann_margin": self.neumann_margin,
            "samples": self.samples,
            "nu_range": list(self.nu_range),
            "sampled_only": self.sampled_only,
            "c0_arc": self.c0_arc,
            "pass": self.passed,
        }


def check_conditions(law: MaterialLaw, nu: float, k: int = 6, nu_steps: int = 9,
                     xi_arc: np.ndarray | None = None) -> ConditionReport:
    """Certify all constants for ``law`` at weight ``nu``.

    ``c0`` is the infimum over the whole sample set (ball interior included);
    ``c0_arc`` only over the circle at ``nu`` itself, at the sampled
    frequencies and at ``xi_arc`` when given.
    """
    xi, nus = sample_grid(nu, k=k, nu_steps=nu_steps)
    z = _points(law, xi, nus)
    c0v = c0_values(law, z)
    lo, hi = c1_values(law, z)
    c2v = c2_values(law, z)
    arc_xi = xi if xi_arc is None else np.concatenate([xi, np.asarray(xi_arc, dtype=float)])
    c0_arc = float(np.min(c0_values(law, _points(law, arc_xi, [nu]))))
    return ConditionReport(
        c0=float(np.min(c0v)),
        c1=float(np.min(lo)),
        c2=float(np.min(c2v)),
        sup_zbm=float(np.max(hi)),
        neumann_margin=neumann_margin(law.meta.get("neumann_perturbation", 0.0)),
        samples=len(z),
        nu_range=(float(nus.min()), float(nus.max())),
        c0_arc=c0_arc,
    )
