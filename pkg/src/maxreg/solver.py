"""Solvers for the block evolutionary system.

The operator acts on ``(u, v)`` as

    d/dt M u + N00 u + N01 v - C* v = f
    N10 u + N11 v + C u            = g

with every ``M``/``N`` block a function of the inverse time derivative.
:func:`solve_spectral` inverts it frequency by frequency; the implicit Euler
path :func:`solve_time_stepping` is an independent oracle for laws with a
time-domain realization.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .conditions import c0_from_blocks
from .errors import (
    DomainError,
    InconsistencyError,
    PreconditionError,
    ShapeError,
    SolverError,
    UnsupportedLawError,
)
from .spatial import SpatialOperator, skew_block
from .symbols import MaterialLaw, batch_apply, chunks, is_diagonal
from .weighted_time import (
    Spectrum,
    TimeGrid,
    WeightedSignal,
    fourier_laplace,
    inverse_fourier_laplace,
    scalar_multiplier,
    weighted_norm,
)

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class EvolutionaryProblem:
    """Material law, spatial operator, weight and time grid.

    ``integrate_u`` marks problems obtained through the substitution
    ``u = d/dt (original unknown)``; :func:`original_unknown` undoes it.
    """

    law: MaterialLaw
    C: SpatialOperator
    nu: float
    grid: TimeGrid
    name: str = ""
    integrate_u: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.nu > 0:
            raise DomainError(f"nu must be positive, got {self.nu}")
        if not math.isinf(self.law.r) and not self.nu > 0.5 / self.law.r:
            raise DomainError(f"nu = {self.nu} must exceed 1/(2r) = {0.5 / self.law.r}")
        if self.law.dims != (self.C.d0, self.C.d1):
            raise ShapeError(f"law dims {self.law.dims} do not match C: {self.C.d1} x {self.C.d0}")

    @property
    def d0(self) -> int:
        return self.law.d0

    @property
    def d1(self) -> int:
        return self.law.d1

    def with_grid(self, grid: TimeGrid) -> "EvolutionaryProblem":
        return EvolutionaryProblem(self.law, self.C, self.nu, grid, self.name, self.integrate_u, self.meta)

    def zero_rhs(self) -> tuple[WeightedSignal, WeightedSignal]:
        return (WeightedSignal.zeros(self.grid, self.nu, self.d0),
                WeightedSignal.zeros(self.grid, self.nu, self.d1))


@dataclass(frozen=True)
class Solution:
    u: WeightedSignal
    v: WeightedSignal
    residual_rel: float = math.nan
    c0_nodes: float = math.nan


def _check_rhs(p: EvolutionaryProblem, f: WeightedSignal, g: WeightedSignal | None):
    if g is None:
        g = WeightedSignal.zeros(p.grid, p.nu, p.d1)
    for name, s, d in (("f", f, p.d0), ("g", g, p.d1)):
        if s.grid != p.grid or s.nu != p.nu:
            raise ShapeError(f"{name} is not sampled on the problem grid with nu = {p.nu}")
        if s.dim != d:
            raise ShapeError(f"{name} has dimension {s.dim}, expected {d}")
    return f, g


class _SparseAssembler:
    """Per-frequency CSC matrices ``skew + diag(d)`` sharing one sparsity pattern."""

    def __init__(self, skew: sp.csr_matrix):
        n = skew.shape[0]
        pat = (skew + sp.identity(n, dtype=np.complex128, format="csr")).tocsc()
        pat.sort_indices()
        self.n = n
        self.indices = pat.indices
        self.indptr = pat.indptr
        self.diagpos = np.empty(n, dtype=np.int64)
        for j in range(n):
            rows = pat.indices[pat.indptr[j]:pat.indptr[j + 1]]
            self.diagpos[j] = pat.indptr[j] + np.searchsorted(rows, j)
        self.base = pat.data.copy()
        self.base[self.diagpos] -= 1.0

    def matrix(self, diag: np.ndarray) -> sp.csc_matrix:
        data = self.base.copy()
        data[self.diagpos] += diag
        return sp.csc_matrix((data, self.indices, self.indptr), shape=(self.n, self.n))


def solve_spectral(p: EvolutionaryProblem, f: WeightedSignal, g: WeightedSignal | None = None,
                   require_c0: bool = True, workers: int = 1) -> Solution:
    """Solve by per-frequency inversion of ``z^-1 diag(M, 0) + N(z) + skew(C)``.

    Each node is an independent LU solve with partial pivoting followed by
    one step of iterative refinement.  When the law blocks are diagonal and
    the off-diagonal law blocks vanish (declared through the law's diagonal
    form or detected per chunk), the matrix is the sparse skew block plus a
    diagonal and is factored with SuperLU; otherwise a dense batched LAPACK
    solve is used.
    ``workers > 1`` distributes chunks of nodes over threads; the result does
    not depend on the number of workers.

    Raises :class:`PreconditionError` if the Hermitian part of some node
    matrix is not positive definite (unless ``require_c0`` is False) and
    :class:`SolverError` if a node matrix is singular or the relative
    residual exceeds ``1e-10``.
    """
    f, g = _check_rhs(p, f, g)
    d0, d1 = p.d0, p.d1
    F = fourier_laplace(f)
    G = fourier_laplace(g)
    rhs = np.concatenate([F.values, G.values], axis=1)
    xi = F.xi
    zinv = 1j * xi + p.nu
    skew = skew_block(p.C)
    assembler = _SparseAssembler(skew)
    skew_dense = None

    def factor_solve(diag: np.ndarray, r: np.ndarray, xis: np.ndarray):
        x = np.zeros_like(r)
        res = np.zeros_like(r)
        for k in range(r.shape[0]):
            if not np.any(r[k]):
                continue
            A = assembler.matrix(diag[k])
            try:
                lu = spla.splu(A)
            except RuntimeError as exc:
                raise SolverError(f"singular system at xi = {xis[k]}: {exc}") from exc
            xk = lu.solve(r[k])
            xk = xk + lu.solve(r[k] - A @ xk)
            x[k] = xk
            res[k] = r[k] - A @ xk
        return x, res

    def check_c0(c0: float) -> None:
        if require_c0 and not c0 > 0:
            raise PreconditionError(f"Hermitian part of the node matrices is not positive (min {c0:.3g})")

    def run_diagonal(sl: slice):
        Md, N00d, N11d = p.law.diagonal_blocks(1.0 / zinv[sl])
        top = Md * zinv[sl, None] + N00d
        c0 = min(np.min(top.real, initial=np.inf), np.min(N11d.real, initial=np.inf))
        check_c0(c0)
        x, res = factor_solve(np.concatenate([top, N11d], axis=1), rhs[sl], xi[sl])
        return x, float(np.sum(np.abs(res) ** 2)), float(c0)

    def run(sl: slice):
        nonlocal skew_dense
        z = 1.0 / zinv[sl]
        b = p.law.blocks(z)
        top = b.M * zinv[sl, None, None] + b.N00
        c0 = float(np.min(c0_from_blocks(top, b)))
        check_c0(c0)
        r = rhs[sl]
        if is_diagonal(top) and is_diagonal(b.N11) and is_diagonal(b.N01) and is_diagonal(b.N10):
            diag = np.concatenate([np.diagonal(top, axis1=1, axis2=2), np.diagonal(b.N11, axis1=1, axis2=2)], axis=1)
            x, res = factor_solve(diag, r, xi[sl])
        else:
            if skew_dense is None:
                skew_dense = skew.toarray()
            A = np.empty((r.shape[0], d0 + d1, d0 + d1), dtype=np.complex128)
            A[:] = skew_dense
            A[:, :d0, :d0] += top
            A[:, :d0, d0:] += b.N01
            A[:, d0:, :d0] += b.N10
            A[:, d0:, d0:] += b.N11
            try:
                x = np.linalg.solve(A, r[..., None])[..., 0]
                x = x + np.linalg.solve(A, (r - np.einsum("kij,kj->ki", A, x))[..., None])[..., 0]
            except np.linalg.LinAlgError as exc:
                raise SolverError(f"singular system for xi in [{xi[sl].min()}, {xi[sl].max()}]: {exc}") from exc
            res = r - np.einsum("kij,kj->ki", A, x)
        return x, float(np.sum(np.abs(res) ** 2)), c0

    if p.law.is_diagonal:
        step = max(1, min(len(zinv), 1 << 18) // max(1, workers))
        slices = [slice(s, min(len(zinv), s + step)) for s in range(0, len(zinv), step)]
        job = run_diagonal
    else:
        slices = list(chunks(len(zinv), p.law.dims))
        job = run
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, slices))
    else:
        results = [job(sl) for sl in slices]

    c0_nodes = min(r[2] for r in results)
    X = np.concatenate([r[0] for r in results], axis=0)
    res2 = sum(r[1] for r in results)
    rhs2 = float(np.sum(np.abs(rhs) ** 2))
    rel = math.sqrt(res2 / rhs2) if rhs2 > 0 else math.sqrt(res2)
    if rel > RESIDUAL_TOL:
        raise SolverError(f"per-frequency residual {rel:.3e} exceeds {RESIDUAL_TOL:.0e}")
    u = inverse_fourier_laplace(F.like(X[:, :d0]))
    v = inverse_fourier_laplace(G.like(X[:, d0:]))
    return Solution(u, v, residual_rel=rel, c0_nodes=c0_nodes)


def _interp_rows(values: np.ndarray, idx: int, frac: float) -> np.ndarray:
    if frac == 0.0 or idx + 1 >= values.shape[0]:
        return values[idx]
    return (1.0 - frac) * values[idx] + frac * values[idx + 1]


def solve_time_stepping(p: EvolutionaryProblem, f: WeightedSignal, g: WeightedSignal | None = None,
                        substeps: int = 10) -> Solution:
    """Implicit Euler oracle with step ``dt / substeps`` and zero state at ``t0``.

    The algebraic second row is eliminated each step through the time-domain
    realization ``v = S(d/dt^-1) (g - (N10 + C) u)`` supplied by the law.  The
    inverse time derivative is integrated with backward Euler and a memory
    kernel with trapezoid history sums; exponential kernels use the exact
    recursion of that sum.  The right-hand side is interpolated linearly
    between grid samples.  First-order accurate in the step.
    """
    st = p.law.stepping
    if st is None:
        raise UnsupportedLawError(f"law {p.law.name!r} has no time-domain realization")
    if substeps < 1:
        raise DomainError("substeps must be >= 1")
    f, g = _check_rhs(p, f, g)
    tau = p.grid.dt / substeps
    C = p.C.c.tocsr()
    Cs = p.C.adjoint
    M, N00, N01, N10 = (sp.csr_matrix(np.asarray(a, dtype=np.complex128)) for a in (st.M, st.N00, st.N01, st.N10))
    S0 = np.asarray(st.S0, dtype=np.complex128)
    S1 = np.asarray(st.S1, dtype=np.complex128)
    kernel = st.kernel
    d1 = p.d1
    k0 = np.zeros((d1, d1), dtype=np.complex128) if kernel is None else np.asarray(kernel.matrix_at(np.array([0.0]))[0])
    P = sp.csr_matrix(S0 + tau * S1 + 0.5 * tau ** 2 * k0)
    S1s = sp.csr_matrix(S1)
    D = (N10 + C).tocsr()
    E = (N01 - Cs).tocsr()
    L = (M / tau + N00 - E @ P @ D).tocsc()
    try:
        lu = spla.splu(L)
    except RuntimeError as exc:
        raise SolverError(f"implicit Euler matrix is singular: {exc}") from exc

    steps = (p.grid.n - 1) * substeps
    exp_kernel = kernel is not None and getattr(kernel, "form", None) == "exponential"
    if exp_kernel:
        decay = math.exp(-kernel.a * tau)
        Kmat = sp.csr_matrix(kernel.K)
        H = np.zeros(d1, dtype=np.complex128)
    elif kernel is not None:
        lags = kernel.matrix_at(tau * np.arange(steps + 1))
        ys = np.zeros((steps + 1, d1), dtype=np.complex128)
        wts = np.ones(steps + 1)
        wts[0] = 0.5

    fv, gv = f.values, g.values
    u_out = np.zeros((p.grid.n, p.d0), dtype=np.complex128)
    v_out = np.zeros((p.grid.n, d1), dtype=np.complex128)
    u_prev = np.zeros(p.d0, dtype=np.complex128)
    I = np.zeros(d1, dtype=np.complex128)
    J = np.zeros(d1, dtype=np.complex128)
    y_prev = gv[0].copy()
    v_out[0] = S0 @ y_prev
    if kernel is not None and not exp_kernel:
        ys[0] = y_prev
    w_prev = 0.5
    for j in range(1, steps + 1):
        idx, rem = divmod(j, substeps)
        frac = rem / substeps
        fj = _interp_rows(fv, idx, frac)
        gj = _interp_rows(gv, idx, frac)
        if exp_kernel:
            H = decay * (H + w_prev * y_prev)
            hist = Kmat @ H
        elif kernel is not None:
            hist = np.einsum("kij,kj->i", lags[j:0:-1], (wts[:j, None] * ys[:j]))
        else:
            hist = 0.0
        rest = S1s @ I + J + tau ** 2 * hist
        u = lu.solve(fj + (M @ u_prev) / tau - E @ (P @ gj + rest))
        y = gj - D @ u
        v = P @ y + rest
        I = I + tau * y
        J = J + 0.5 * tau ** 2 * (k0 @ y) + tau ** 2 * hist
        if kernel is not None and not exp_kernel:
            ys[j] = y
        u_prev, y_prev, w_prev = u, y, 1.0
        if rem == 0:
            u_out[idx] = u
            v_out[idx] = v
    return Solution(WeightedSignal(p.grid, p.nu, u_out), WeightedSignal(p.grid, p.nu, v_out))


def flux_from_u(p: EvolutionaryProblem, u: WeightedSignal, g: WeightedSignal | None = None) -> WeightedSignal:
    """``N11^-1 (g - (C + N10) u)`` evaluated per frequency."""
    if g is None:
        g = WeightedSignal.zeros(p.grid, p.nu, p.d1)
    U = fourier_laplace(u)
    G = fourier_laplace(g)
    zinv = U.zinv
    W = np.zeros((len(zinv), p.d1), dtype=np.complex128)
    Cd = p.C.c
    for sl in chunks(len(zinv), p.law.dims):
        z = 1.0 / zinv[sl]
        b = p.law.blocks(z)
        y = G.values[sl] - (Cd @ U.values[sl].T).T - batch_apply(b.N10, U.values[sl])
        W[sl] = batch_apply(p.law.inverse_n11(z, b.N11), y)
    return inverse_fourier_laplace(G.like(W))


def reduce_second_order(p: EvolutionaryProblem, sol: Solution, g: WeightedSignal | None = None,
                        rtol: float = 1e-8) -> WeightedSignal:
    """Recompute the second unknown from the first and return the first.

    Checks ``v = N11^-1 (g - (C + N10) u)``; a mismatch beyond ``rtol``
    (relative to ``|v|``) raises :class:`InconsistencyError`.  The returned
    ``u`` then solves the reduced single equation for the first unknown.
    """
    w = flux_from_u(p, sol.u, g)
    err = weighted_norm(w - sol.v)
    scale = weighted_norm(sol.v)
    if err > rtol * max(scale, np.finfo(float).tiny):
        raise InconsistencyError(f"recomputed flux differs from the solver's by {err / max(scale, 1e-300):.3e} (relative)")
    return sol.u


def original_unknown(p: EvolutionaryProblem, sol: Solution) -> WeightedSignal:
    """Undo the substitution ``u = d/dt theta`` when the problem used it."""
    if not p.integrate_u:
        return sol.u
    return scalar_multiplier(sol.u, 1.0 / (1j * p.grid.xi + p.nu))


def relative_error(a: WeightedSignal, b: WeightedSignal) -> float:
    """``|a - b| / |b|`` in the weighted norm."""
    nb = weighted_norm(b)
    return weighted_norm(a - b) / nb if nb > 0 else weighted_norm(a)


def stack_norm(*signals: WeightedSignal) -> float:
    return math.sqrt(sum(weighted_norm(s) ** 2 for s in signals))


__all__ = [
    "EvolutionaryProblem",
    "Solution",
    "Spectrum",
    "solve_spectral",
    "solve_time_stepping",
    "reduce_second_order",
    "flux_from_u",
    "original_unknown",
    "relative_error",
    "stack_norm",
]
