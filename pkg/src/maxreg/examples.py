"""Builders for the four model problems and their manufactured data.

* heat: ``d/dt theta + C* k C theta = f``
* second order: ``d/dt^2 theta + C* (A + B d/dt) C theta = f``, solved for ``w = d/dt theta``
* integro-differential: ``d/dt^2 u + C* (A d/dt + B + k*) C u = f``, solved for ``w = d/dt u``
* fractional: ``d/dt^beta u + C* C u = f``

Coefficients ``k, A, B`` and kernel weights act on the ``H1`` (edge) space
and may be given as scalars (multiples of the identity), vectors
(diagonals) or full matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad_vec

from .conditions import hermitian_min_eig, min_nu_for_margin, neumann_perturbation
from .errors import DivergenceError, DomainError, ModelError, NeedsLargerNuError, ShapeError
from .solver import EvolutionaryProblem
from .spatial import SpatialOperator, dirichlet_gradient_1d, dirichlet_gradient_2d, interior_nodes
from .symbols import LawBlocks, MaterialLaw, SteppingData, batch_inv, const_batch, frac_power, scalar_batch
from .weighted_time import TimeGrid, WeightedSignal

EXAMPLES = ("heat", "second-order", "integro", "fractional")

DEFAULTS = {
    "heat": {"nu": 1.0, "k_coeff": 1.0},
    "second-order": {"nu": 2.0, "A": 1.0, "B": 1.0},
    "integro": {"nu": 2.0, "A": 1.0, "B": 0.5, "kernel_a": 1.0, "kernel_K": 1.0},
    "fractional": {"nu": 1.0, "beta": 0.5},
}


def _as_matrix(a, d: int, name: str) -> np.ndarray:
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim == 0:
        return a * np.eye(d, dtype=np.complex128)
    if a.ndim == 1 and a.shape[0] == d:
        return np.diag(a)
    if a.shape == (d, d):
        return a.copy()
    raise ShapeError(f"{name} must be a scalar, a length-{d} diagonal or a {d}x{d} matrix, got shape {a.shape}")


def _opnorm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a, 2)) if a.size else 0.0


def _require_hermitian_positive(a: np.ndarray, name: str) -> float:
    if not np.allclose(a, a.conj().T, rtol=0, atol=1e-12 * max(1.0, _opnorm(a))):
        raise ModelError(f"{name} must be Hermitian")
    lo = hermitian_min_eig(a) if a.size else math.inf
    if not lo > 0:
        raise ModelError(f"{name} must be positive definite (smallest eigenvalue {lo:.3g})")
    return lo


# -- kernels ---------------------------------------------------------------------

@dataclass(frozen=True)
class Kernel:
    """Memory kernel ``k: [0, inf) -> L(H1)``.

    ``exponential``: ``k(t) = K exp(-a t)``.  ``sampled``: values at
    ``times`` (starting at 0), linearly interpolated and zero after the last
    sample, integrated with the trapezoid rule on the given nodes.
    """

    form: str
    d1: int
    a: float = 0.0
    K: np.ndarray | None = None
    times: np.ndarray | None = None
    matrices: np.ndarray | None = None
    rho0: float = 0.0

    def __post_init__(self):
        if self.form == "exponential":
            if not self.a > 0:
                raise DomainError(f"exponential kernel needs a > 0, got {self.a}")
            object.__setattr__(self, "rho0", -float(self.a))
        elif self.form == "sampled":
            t = np.asarray(self.times, dtype=float)
            if t.ndim != 1 or t.size < 2 or t[0] != 0 or np.any(np.diff(t) <= 0):
                raise DomainError("sampled kernel times must be increasing and start at 0")
            if self.matrices.shape != (t.size, self.d1, self.d1):
                raise ShapeError(f"kernel samples must have shape {(t.size, self.d1, self.d1)}")
            if not math.isfinite(self.l1_norm(self.rho0)):
                raise DomainError("kernel is not integrable at rho0")
        else:
            raise DomainError(f"unknown kernel form {self.form!r}")

    @classmethod
    def exponential(cls, a: float, K, d1: int) -> "Kernel":
        return cls("exponential", d1, a=float(a), K=_as_matrix(K, d1, "K"))

    @classmethod
    def sampled(cls, times, matrices, rho0: float = 0.0) -> "Kernel":
        m = np.asarray(matrices, dtype=np.complex128)
        if m.ndim == 1:
            m = m[:, None, None]
        return cls("sampled", m.shape[1], times=np.asarray(times, dtype=float), matrices=m, rho0=float(rho0))

    @classmethod
    def zero(cls, d1: int) -> "Kernel":
        return cls.exponential(1.0, 0.0, d1)

    def _weights(self) -> np.ndarray:
        dt = np.diff(self.times)
        w = np.zeros(self.times.size)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
        return w

    def l1_norm(self, rho: float) -> float:
        """``int_0^inf |k(t)| exp(-rho t) dt`` (closed form or trapezoid)."""
        if self.form == "exponential":
            return _opnorm(self.K) / (self.a + rho)
        norms = np.linalg.norm(self.matrices, 2, axis=(1, 2)) if self.d1 else np.zeros(self.times.size)
        return float(np.sum(self._weights() * norms * np.exp(-rho * self.times)))

    def matrix_at(self, t: np.ndarray) -> np.ndarray:
        """``k(t)`` for an array of nonnegative times, shape ``(len(t), d1, d1)``."""
        t = np.asarray(t, dtype=float)
        if self.form == "exponential":
            return np.exp(-self.a * t)[:, None, None] * self.K
        out = np.zeros((t.size, self.d1, self.d1), dtype=np.complex128)
        inside = (t >= 0) & (t <= self.times[-1])
        ti = t[inside]
        j = np.clip(np.searchsorted(self.times, ti, side="right") - 1, 0, self.times.size - 2)
        w = ((ti - self.times[j]) / (self.times[j + 1] - self.times[j]))[:, None, None]
        out[inside] = (1 - w) * self.matrices[j] + w * self.matrices[j + 1]
        return out

    def entry_at(self, t, i: int = 0, j: int = 0):
        """One entry of ``k(t)``, real part, for scalar or array ``t``."""
        t = np.asarray(t, dtype=float)
        if self.form == "exponential":
            return np.exp(-self.a * t) * self.K[i, j].real
        vals = np.interp(t, self.times, self.matrices[:, i, j].real, right=0.0)
        return np.where(t >= 0, vals, 0.0)


def _laplace_weights(k: Kernel, zinv: np.ndarray):
    """Chunks ``(slice, exp(-zinv t_j) w_j)`` of the trapezoid Laplace sum."""
    w = k._weights()
    step = max(1, 2_000_000 // max(1, k.times.size))
    for s in range(0, zinv.size, step):
        yield slice(s, s + step), np.exp(-np.outer(zinv[s:s + step], k.times)) * w


def _check_abscissa(k: Kernel, zinv) -> np.ndarray:
    zinv = np.atleast_1d(np.asarray(zinv, dtype=np.complex128))
    if np.any(zinv.real <= k.rho0):
        raise DivergenceError(f"Laplace integral of the kernel diverges for Re(zinv) <= {k.rho0}")
    return zinv


def kernel_symbol(k: Kernel, zinv) -> np.ndarray:
    """``int_0^inf k(t) exp(-zinv t) dt`` at each ``zinv``, shape ``(K, d1, d1)``."""
    zinv = _check_abscissa(k, zinv)
    if k.form == "exponential":
        return (1.0 / (zinv + k.a))[:, None, None] * k.K
    out = np.empty((zinv.size, k.d1, k.d1), dtype=np.complex128)
    for sl, e in _laplace_weights(k, zinv):
        out[sl] = np.einsum("kt,tij->kij", e, k.matrices)
    return out


def kernel_symbol_diagonal(k: Kernel, zinv) -> np.ndarray:
    """Diagonal of :func:`kernel_symbol` for a kernel with diagonal values, shape ``(K, d1)``."""
    zinv = _check_abscissa(k, zinv)
    if k.form == "exponential":
        return (1.0 / (zinv + k.a))[:, None] * np.diagonal(k.K)
    diag = np.diagonal(k.matrices, axis1=1, axis2=2)
    out = np.empty((zinv.size, k.d1), dtype=np.complex128)
    for sl, e in _laplace_weights(k, zinv):
        out[sl] = e @ diag
    return out


def _kernel_is_diagonal(k: Kernel) -> bool:
    mats = k.K[None] if k.form == "exponential" else k.matrices
    return all(np.count_nonzero(a - np.diag(np.diagonal(a))) == 0 for a in mats)


# -- laws and problems -----------------------------------------------------------

def _diagonals(*mats: np.ndarray):
    """Diagonals of the matrices when all of them are diagonal, else ``None``."""
    if all(np.count_nonzero(a - np.diag(np.diagonal(a))) == 0 for a in mats):
        return tuple(np.diagonal(a).copy() for a in mats)
    return None


def _diag_form(d0: int, m_diag=None, n11_diag=None):
    """Diagonal hint with ``M = I`` (unless ``m_diag`` given) and ``N00 = 0``."""
    ones = np.ones(d0, dtype=np.complex128)
    zeros = np.zeros(d0, dtype=np.complex128)

    def diagonal(z):
        n = z.shape[0]
        m = np.broadcast_to(ones, (n, d0)) if m_diag is None else m_diag(z)
        return m, np.broadcast_to(zeros, (n, d0)), n11_diag(z)

    return diagonal

def _identity_M(d0: int):
    eye = np.eye(d0, dtype=np.complex128)
    return lambda k: const_batch(eye, k)


def _zeros(k: int, rows: int, cols: int) -> np.ndarray:
    return const_batch(np.zeros((rows, cols), dtype=np.complex128), k)


def heat_law(k_coeff, d0: int, d1: int) -> MaterialLaw:
    k = _as_matrix(k_coeff, d1, "k_coeff")
    _require_hermitian_positive(k, "k_coeff")
    kinv = np.linalg.inv(k)
    eye = _identity_M(d0)

    def evaluate(z):
        n = z.shape[0]
        return LawBlocks(eye(n), _zeros(n, d0, d0), _zeros(n, d0, d1), _zeros(n, d1, d0), const_batch(kinv, n))

    diagonal = None
    dg = _diagonals(k)
    if dg is not None:
        kinv_d = 1.0 / dg[0]
        diagonal = _diag_form(d0, n11_diag=lambda z: np.broadcast_to(kinv_d, (z.shape[0], d1)))
    zero = np.zeros((d0, d0))
    stepping = SteppingData(np.eye(d0), zero, np.zeros((d0, d1)), np.zeros((d1, d0)), k, np.zeros_like(k))
    return MaterialLaw("heat", (d0, d1), evaluate, beta=1.0,
                       n11_inverse=lambda z: const_batch(k, z.shape[0]), stepping=stepping,
                       meta={"k_coeff_min_eig": hermitian_min_eig(k)}, diagonal=diagonal)


def heat_problem(k_coeff, C: SpatialOperator, nu: float, grid: TimeGrid) -> EvolutionaryProblem:
    """``M = I``, ``N = diag(0, k^-1)``."""
    return EvolutionaryProblem(heat_law(k_coeff, C.d0, C.d1), C, nu, grid, name="heat")


def second_order_threshold(A, B) -> float:
    """Smallest admissible weight: ``|B^-1 A|``."""
    return _opnorm(np.linalg.solve(B, A))


def second_order_law(A, B, d0: int, d1: int, nu: float) -> MaterialLaw:
    A = _as_matrix(A, d1, "A")
    B = _as_matrix(B, d1, "B")
    cprime = _require_hermitian_positive(B, "B")
    threshold = second_order_threshold(A, B)
    if not nu > threshold:
        raise NeedsLargerNuError(f"second-order law needs nu > |B^-1 A| = {threshold:.17g}, got {nu}", threshold)
    r = math.inf if threshold == 0 else 0.5 / threshold
    eye = _identity_M(d0)

    def evaluate(z):
        n = z.shape[0]
        n11 = batch_inv(z[:, None, None] * A + B)
        return LawBlocks(eye(n), _zeros(n, d0, d0), _zeros(n, d0, d1), _zeros(n, d1, d0), n11)

    diagonal = None
    dg = _diagonals(A, B)
    if dg is not None:
        a_d, b_d = dg
        diagonal = _diag_form(d0, n11_diag=lambda z: 1.0 / (z[:, None] * a_d + b_d))
    stepping = SteppingData(np.eye(d0), np.zeros((d0, d0)), np.zeros((d0, d1)), np.zeros((d1, d0)), B, A)
    meta = {
        "neumann_perturbation": threshold / nu,
        "nu_threshold": threshold,
        "c2_certificate": -_opnorm(A) + cprime * nu,
    }
    return MaterialLaw("second-order", (d0, d1), evaluate, r=r, beta=1.0,
                       n11_inverse=lambda z: z[:, None, None] * A + B, stepping=stepping, meta=meta,
                       diagonal=diagonal)


def second_order_problem(A, B, C: SpatialOperator, nu: float, grid: TimeGrid) -> EvolutionaryProblem:
    """``N11(z) = (A z + B)^-1``; the solver unknown is ``w = d/dt theta``."""
    law = second_order_law(A, B, C.d0, C.d1, nu)
    return EvolutionaryProblem(law, C, nu, grid, name="second-order", integrate_u=True)


def integro_threshold(A, B, k: Kernel) -> float:
    """Smallest weight at which ``|A^-1| (|B| + |k|_{L1_nu}) / nu < 1``."""
    return min_nu_for_margin(A, B, kernel_bound=k.l1_norm, target=0.0)


def integro_law(A, B, k: Kernel, d0: int, d1: int, nu: float) -> MaterialLaw:
    A = _as_matrix(A, d1, "A")
    B = _as_matrix(B, d1, "B")
    _require_hermitian_positive(A, "A")
    if k.d1 != d1:
        raise ShapeError(f"kernel acts on dimension {k.d1}, expected {d1}")
    q = neumann_perturbation(nu, A, B, k.l1_norm)
    threshold = integro_threshold(A, B, k)
    if not q < 1:
        raise NeedsLargerNuError(f"integro law needs nu > {threshold:.17g} (perturbation {q:.6g} >= 1 at nu = {nu})",
                                 threshold)
    r = 0.5 / max(threshold, k.rho0, 1e-300)
    eye = _identity_M(d0)

    def n11_inverse(z):
        return A + z[:, None, None] * (B + kernel_symbol(k, 1.0 / z))

    def evaluate(z):
        n = z.shape[0]
        return LawBlocks(eye(n), _zeros(n, d0, d0), _zeros(n, d0, d1), _zeros(n, d1, d0), batch_inv(n11_inverse(z)))

    diagonal = None
    dg = _diagonals(A, B) if _kernel_is_diagonal(k) else None
    if dg is not None:
        a_d, b_d = dg

        def n11_diag(z):
            zc = z[:, None]
            return 1.0 / (a_d + zc * (b_d + kernel_symbol_diagonal(k, 1.0 / z)))

        diagonal = _diag_form(d0, n11_diag=n11_diag)
    stepping = SteppingData(np.eye(d0), np.zeros((d0, d0)), np.zeros((d0, d1)), np.zeros((d1, d0)), A, B, kernel=k)
    meta = {"neumann_perturbation": q, "nu_threshold": threshold, "young_bound": k.l1_norm(nu)}
    return MaterialLaw("integro", (d0, d1), evaluate, r=r, beta=1.0, n11_inverse=n11_inverse,
                       stepping=stepping, meta=meta, diagonal=diagonal)


def integro_problem(A, B, k: Kernel, C: SpatialOperator, nu: float, grid: TimeGrid) -> EvolutionaryProblem:
    """``N11(z) = (A + z (B + k_hat))^-1``; the solver unknown is ``w = d/dt u``."""
    law = integro_law(A, B, k, C.d0, C.d1, nu)
    return EvolutionaryProblem(law, C, nu, grid, name="integro", integrate_u=True)


def fractional_law(beta: float, d0: int, d1: int) -> MaterialLaw:
    if not 0 < beta < 1:
        raise DomainError(f"fractional order must lie in (0, 1), got {beta}")
    eye1 = np.eye(d1, dtype=np.complex128)

    def evaluate(z):
        n = z.shape[0]
        m = scalar_batch(frac_power(1.0 / z, beta - 1.0), d0)
        return LawBlocks(m, _zeros(n, d0, d0), _zeros(n, d0, d1), _zeros(n, d1, d0), const_batch(eye1, n))

    ones1 = np.ones(d1, dtype=np.complex128)
    diagonal = _diag_form(
        d0,
        m_diag=lambda z: np.broadcast_to(frac_power(1.0 / z, beta - 1.0)[:, None], (z.shape[0], d0)),
        n11_diag=lambda z: np.broadcast_to(ones1, (z.shape[0], d1)),
    )
    return MaterialLaw("fractional", (d0, d1), evaluate, beta=beta,
                       n11_inverse=lambda z: const_batch(eye1, z.shape[0]), diagonal=diagonal)


def fractional_problem(beta: float, C: SpatialOperator, nu: float, grid: TimeGrid) -> EvolutionaryProblem:
    """``M(z) = z^(1 - beta)``, ``N11 = I``: ``d/dt^beta u + C* C u = f``."""
    return EvolutionaryProblem(fractional_law(beta, C.d0, C.d1), C, nu, grid, name="fractional")


# -- manufactured data -------------------------------------------------------------

BUMP_CENTER = 6.0
BUMP_HALF_WIDTH = 4.0


def bump(t, center: float = BUMP_CENTER, half: float = BUMP_HALF_WIDTH):
    """Smooth compactly supported ``eta(t) = exp(-1/(1 - s^2))``, ``s = (t - center)/half``.

    Returns ``(eta, eta', eta'')`` as arrays.
    """
    s = (np.asarray(t, dtype=float) - center) / half
    inside = np.abs(s) < 1
    eta = np.zeros_like(s)
    d1 = np.zeros_like(s)
    d2 = np.zeros_like(s)
    si = s[inside]
    q = 1.0 - si ** 2
    phi = np.exp(-1.0 / q)
    g = -2.0 * si / q ** 2
    gp = -2.0 / q ** 2 - 8.0 * si ** 2 / q ** 3
    eta[inside] = phi
    d1[inside] = phi * g / half
    d2[inside] = phi * (g ** 2 + gp) / half ** 2
    return eta, d1, d2


def convolve_kernel(k_scalar, t: np.ndarray, fn, epsabs: float = 1e-13, breaks=()) -> np.ndarray:
    """``int_0^t k(s) fn(t - s) ds`` at every ``t`` by adaptive quadrature; ``fn`` vanishes for negative arguments.

    ``breaks`` are extra kinks of ``k`` handed to the quadrature.
    """
    t = np.asarray(t, dtype=float)

    def integrand(s):
        arg = t - s
        val = np.where(arg >= 0, fn(np.maximum(arg, 0.0)), 0.0)
        return k_scalar(s) * val

    lo = BUMP_CENTER - BUMP_HALF_WIDTH
    pts = sorted({p for p in (lo, BUMP_CENTER, BUMP_CENTER + BUMP_HALF_WIDTH, *np.asarray(breaks, dtype=float))
                  if 0 < p < t.max()})
    res, _ = quad_vec(integrand, 0.0, max(t.max(), 1e-12), epsabs=epsabs, epsrel=1e-12, points=pts or None, limit=2000)
    return res


@dataclass(frozen=True)
class ExampleCase:
    """A built problem with its right-hand side and, when known, the exact original unknown."""

    problem: EvolutionaryProblem
    f: WeightedSignal
    g: WeightedSignal
    exact: WeightedSignal | None = None
    params: dict = field(default_factory=dict)


def spatial_setup(m: int, dim: int = 1):
    """Gradient on ``(0, pi)^dim`` and the sampled principal mode ``prod sin(x_i)`` with its eigenvalue."""
    x, h = interior_nodes(m)
    if dim == 1:
        return dirichlet_gradient_1d(m, h), np.sin(x), 1.0
    if dim == 2:
        s = np.sin(x)
        return dirichlet_gradient_2d(m, h), np.outer(s, s).ravel(), 2.0
    raise DomainError(f"dim must be 1 or 2, got {dim}")


def _scalar(value, name: str) -> float:
    a = np.asarray(value)
    if a.ndim != 0 or a.imag != 0:
        raise ShapeError(f"manufactured data needs a real scalar {name}")
    return float(a.real)


def rough_profile(t: np.ndarray, dt: float) -> np.ndarray:
    """Lacunary series ``eta(t) sum_j 2^(-j/4) cos(2^j t)`` up to half the Nyquist frequency.

    Its samples lie in ``H^s`` uniformly in ``dt`` only for ``s < 1/4``.
    """
    nyq = math.pi / dt
    out = np.zeros_like(t)
    j = 0
    while 2.0 ** j <= nyq / 2:
        out += 2.0 ** (-j / 4) * np.cos(2.0 ** j * t)
        j += 1
    return bump(t)[0] * out


def build_example(name: str, m: int = 200, nt: int = 2048, tmax: float = 20.0, nu: float | None = None,
                  beta: float | None = None, rhs: str = "manufactured", dim: int = 1, pad: int | None = None,
                  k_coeff=None, A=None, B=None, kernel: Kernel | None = None, t0: float = 0.0) -> ExampleCase:
    """Assemble one of the model problems on ``(0, pi)^dim`` with a built-in right-hand side.

    ``rhs`` is ``manufactured`` (exact solution ``eta(t) sin x``; for the
    fractional problem the same as ``bump``), ``bump`` (``f = eta(t) sin x``)
    or ``rough`` (:func:`rough_profile` times ``sin x``).
    """
    if name not in EXAMPLES:
        raise DomainError(f"unknown example {name!r}; choose from {', '.join(EXAMPLES)}")
    d = DEFAULTS[name]
    nu = d["nu"] if nu is None else float(nu)
    grid = TimeGrid.from_window(tmax, nt, t0=t0, pad=pad)
    C, mode, lam = spatial_setup(m, dim)
    params = {"example": name, "m": m, "nt": nt, "tmax": tmax, "nu": nu, "dim": dim, "rhs": rhs}

    if name == "heat":
        k_coeff = d["k_coeff"] if k_coeff is None else k_coeff
        p = heat_problem(k_coeff, C, nu, grid)
        params["k_coeff"] = k_coeff
    elif name == "second-order":
        A = d["A"] if A is None else A
        B = d["B"] if B is None else B
        p = second_order_problem(A, B, C, nu, grid)
        params.update(A=A, B=B)
    elif name == "integro":
        A = d["A"] if A is None else A
        B = d["B"] if B is None else B
        kernel = Kernel.exponential(d["kernel_a"], d["kernel_K"], C.d1) if kernel is None else kernel
        p = integro_problem(A, B, kernel, C, nu, grid)
        params.update(A=A, B=B, kernel=_kernel_params(kernel))
    else:
        beta = d["beta"] if beta is None else float(beta)
        p = fractional_problem(beta, C, nu, grid)
        params["beta"] = beta

    t = grid.times
    eta, deta, d2eta = bump(t)
    exact = None
    if rhs == "rough":
        prof = rough_profile(t, grid.dt)
    elif rhs == "bump" or (rhs == "manufactured" and name == "fractional"):
        prof = eta
    elif rhs == "manufactured":
        if name == "heat":
            prof = deta + lam * _scalar(k_coeff, "k_coeff") * eta
        elif name == "second-order":
            prof = d2eta + lam * (_scalar(A, "A") * eta + _scalar(B, "B") * deta)
        else:
            mats = kernel.K[None] if kernel.form == "exponential" else kernel.matrices
            if not np.allclose(mats, mats[:, :1, :1] * np.eye(kernel.d1)) or np.any(mats[:, 0, 0].imag):
                raise ShapeError("manufactured data needs a real scalar kernel")
            breaks = () if kernel.form == "exponential" else kernel.times
            conv = convolve_kernel(kernel.entry_at, t, lambda s: bump(s)[0], breaks=breaks)
            prof = d2eta + lam * (_scalar(A, "A") * deta + _scalar(B, "B") * eta + conv)
        exact = WeightedSignal(grid, nu, np.outer(eta, mode))
    else:
        raise DomainError(f"unknown built-in rhs {rhs!r}")
    f = WeightedSignal(grid, nu, np.outer(prof, mode))
    g = WeightedSignal.zeros(grid, nu, C.d1)
    return ExampleCase(p, f, g, exact, params)


def _kernel_params(k: Kernel) -> dict:
    if k.form == "exponential":
        return {"form": "exponential", "a": k.a, "K_norm": _opnorm(k.K)}
    return {"form": "sampled", "samples": int(k.times.size), "rho0": k.rho0}


def refine_case(case: ExampleCase) -> ExampleCase:
    """Rebuild the same example with the time step halved."""
    p = dict(case.params)
    kernel = None
    if p["example"] == "integro":
        kernel = case.problem.law.stepping.kernel
    return build_example(p["example"], m=p["m"], nt=2 * p["nt"], tmax=p["tmax"], nu=p["nu"],
                         beta=p.get("beta"), rhs=p["rhs"], dim=p["dim"], pad=2 * case.problem.grid.pad,
                         k_coeff=p.get("k_coeff"), A=p.get("A"), B=p.get("B"), kernel=kernel,
                         t0=case.problem.grid.t0)
