"""Maximal-regularity verifier for solved problems.

Discrete signals always have finite fractional norms, so membership of ``u``
in ``H^beta_nu`` is read off two stability tests: the Yosida sequence
``|d/dt^beta (1 + eps d/dt)^-1 u|`` must settle as ``eps -> 0`` and its limit
must not move when the time step is halved.

Bound checks (a-priori estimate, ``|Cu|`` estimate) compare spectral norms on
the padded transform window, where the per-frequency inequalities hold
exactly.  The literal residual is measured in the time domain.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .conditions import ConditionReport, check_conditions
from .errors import DomainError, PreconditionError
from .solver import EvolutionaryProblem, Solution
from .symbols import apply_law_block, frac_power, law_sup_norm
from .weighted_time import WeightedSignal, fourier_laplace, inverse_fourier_laplace, weighted_norm

DEFAULT_EPS = tuple(2.0 ** -j for j in range(1, 31))
CAUCHY_RTOL = 1e-6
CAUCHY_TAIL = 3
REFINE_RANGE = (0.9, 1.1)
RESIDUAL_TOL = 1e-6
BOUND_SLACK = 1e-8
RATIO_SLACK = 1e-10


def spectral_norm(s: WeightedSignal) -> float:
    """Norm of the transform, i.e. the weighted norm on the padded window."""
    return fourier_laplace(s).norm()


@dataclass(frozen=True)
class WtSup:
    pairs: list
    increments: list
    cauchy: bool
    bounded: bool

    @property
    def member(self) -> bool:
        return self.cauchy and self.bounded

    @property
    def final(self) -> float:
        return self.pairs[-1][1]


def wt_sup_check(u: WeightedSignal, beta: float, eps_list=None) -> WtSup:
    """``|d/dt^beta yosida(u, eps)|`` for each ``eps`` and the Cauchy test.

    The sequence is Cauchy when the relative increments between the last
    three values are below ``1e-6``.
    """
    eps = np.asarray(DEFAULT_EPS if eps_list is None else eps_list, dtype=float)
    if eps.ndim != 1 or eps.size < 2 or np.any(eps <= 0) or np.any(np.diff(eps) >= 0):
        raise DomainError("eps_list must be strictly decreasing, positive and of length >= 2")
    s = fourier_laplace(u)
    zinv = s.zinv
    weights = np.abs(frac_power(zinv, beta)) ** 2 * np.sum(np.abs(s.values) ** 2, axis=1)
    vals = [math.sqrt(s.grid.dxi * float(np.sum(weights / np.abs(1.0 + e * zinv) ** 2))) for e in eps]
    inc = []
    for a, b in zip(vals[:-1], vals[1:]):
        inc.append(abs(b - a) / b if b > 0 else (0.0 if a == 0 else math.inf))
    tail = inc[-(CAUCHY_TAIL - 1):]
    bounded = all(math.isfinite(v) for v in vals)
    return WtSup([[float(e), v] for e, v in zip(eps, vals)], inc, all(x < CAUCHY_RTOL for x in tail), bounded)


def _require_c0(constants: ConditionReport | None) -> float:
    if constants is None or not constants.c0_bound > 0:
        raise PreconditionError("a certified positive c0 is required")
    return constants.c0_bound


def cu_bound_check(p: EvolutionaryProblem, sol: Solution, f: WeightedSignal, g: WeightedSignal,
                   constants: ConditionReport | None) -> tuple[float, float, bool]:
    """``|Cu| <= (1 + (|N11| + |N10|)/c0) (|f| + |g|)`` with suprema over the grid frequencies."""
    c = _require_c0(constants)
    xi = p.grid.xi
    n11 = law_sup_norm(p.law, xi, p.nu, "N11")
    n10 = law_sup_norm(p.law, xi, p.nu, "N10")
    lhs = spectral_norm(sol.u.like(p.C.apply(sol.u.values)))
    rhs = (1.0 + (n11 + n10) / c) * (spectral_norm(f) + spectral_norm(g))
    return lhs, rhs, lhs <= rhs * (1 + BOUND_SLACK)


def apriori_check(sol: Solution, f: WeightedSignal, g: WeightedSignal,
                  constants: ConditionReport | None) -> tuple[float, float, bool]:
    """``|(u, v)| <= |(f, g)| / c0``."""
    c = _require_c0(constants)
    lhs = math.hypot(spectral_norm(sol.u), spectral_norm(sol.v))
    rhs = math.hypot(spectral_norm(f), spectral_norm(g)) / c
    return lhs, rhs, lhs <= rhs * (1 + BOUND_SLACK)


def _block_term(p: EvolutionaryProblem, s, block: str, scale: bool = False) -> np.ndarray:
    return inverse_fourier_laplace(apply_law_block(p.law, s, block, scale_by_zinv=scale)).values


def literal_residual(p: EvolutionaryProblem, sol: Solution, f: WeightedSignal, g: WeightedSignal) -> float:
    """Relative weighted distance between the operator applied to ``(u, v)`` and ``(f, g)``.

    Every term is transformed back separately and the sum is formed in the
    time domain, in a different order from the solver.
    """
    su = fourier_laplace(sol.u)
    sv = fourier_laplace(sol.v)
    r0 = (_block_term(p, su, "M", scale=True) + _block_term(p, su, "N00") + _block_term(p, sv, "N01")
          - p.C.apply_adjoint(sol.v.values) - f.values)
    r1 = _block_term(p, su, "N10") + _block_term(p, sv, "N11") + p.C.apply(sol.u.values) - g.values
    num = math.hypot(weighted_norm(f.like(r0)), weighted_norm(g.like(r1)))
    den = math.hypot(weighted_norm(f), weighted_norm(g))
    return num / den if den > 0 else num


@dataclass
class RegularityReport:
    problem: dict
    norms: dict
    residual_rel: float
    constants: ConditionReport
    wt_sup: WtSup
    beta: float
    refinement_ratio: float | None
    cu_bound: tuple[float, float, bool]
    apriori: tuple[float, float, bool]
    norm_ratio: dict
    timing_ms: float = 0.0
    extra: dict = field(default_factory=dict)
    residual_tol: float = RESIDUAL_TOL

    @property
    def refinement_ok(self) -> bool:
        r = self.refinement_ratio
        return r is None or REFINE_RANGE[0] <= r <= REFINE_RANGE[1]

    @property
    def member(self) -> bool:
        return self.wt_sup.member and self.refinement_ok

    @property
    def passed(self) -> bool:
        return (self.member and self.residual_rel <= self.residual_tol
                and self.cu_bound[2] and self.apriori[2])

    def to_dict(self) -> dict:
        lhs, rhs, ok = self.cu_bound
        alhs, arhs, aok = self.apriori
        constants = self.constants.to_dict()
        constants["c0_bound"] = self.constants.c0_bound
        out = {
            "pass": self.passed,
            "residual_rel": self.residual_rel,
            "problem": self.problem,
            "norms": self.norms,
            "constants": constants,
            "wt_sup": self.wt_sup.pairs,
            "membership": {
                "beta": self.beta,
                "cauchy": self.wt_sup.cauchy,
                "bounded": self.wt_sup.bounded,
                "increments_tail": self.wt_sup.increments[-(CAUCHY_TAIL - 1):],
                "refinement_ratio": self.refinement_ratio,
                "refinement_ok": self.refinement_ok,
                "member": self.member,
            },
            "cu_bound": {"lhs": lhs, "rhs": rhs, "ok": ok},
            "apriori": {"lhs": alhs, "rhs": arhs, "ok": aok},
            "norm_ratio": self.norm_ratio,
            "timing_ms": self.timing_ms,
        }
        out.update(self.extra)
        return out


def _frac_norm(u: WeightedSignal, beta: float) -> float:
    s = fourier_laplace(u)
    return s.like(s.values * frac_power(s.zinv, beta)[:, None]).norm()


def build_report(p: EvolutionaryProblem, sol: Solution, f: WeightedSignal, g: WeightedSignal | None = None,
                 constants: ConditionReport | None = None, refined: Solution | None = None,
                 beta: float | None = None, eps_list=None, timing_ms: float | None = None,
                 k: int = 9, residual_tol: float = RESIDUAL_TOL) -> RegularityReport:
    """Measure everything about one solve.

    ``beta`` is the order tested for membership (default: the law's own).
    ``refined`` is the solution of the same problem with the time step halved;
    when given, the limit of the Yosida sequence must agree within
    ``[0.9, 1.1]`` across the two grids.  Without ``constants`` the law is
    certified here with ``2**k`` frequency magnitudes per side.
    """
    start = time.perf_counter()
    if g is None:
        g = WeightedSignal.zeros(p.grid, p.nu, p.d1)
    if constants is None:
        constants = check_conditions(p.law, p.nu, k=k, xi_arc=p.grid.xi)
    beta = p.law.beta if beta is None else float(beta)
    wt = wt_sup_check(sol.u, beta, eps_list)
    ratio = None
    if refined is not None:
        wr = wt_sup_check(refined.u, beta, eps_list)
        if wt.final == 0:
            ratio = 1.0 if wr.final == 0 else math.inf
        else:
            ratio = wr.final / wt.final
    residual = literal_residual(p, sol, f, g)
    frac_u = _frac_norm(sol.u, beta)
    law_frac = _frac_norm(sol.u, p.law.beta)
    dm = spectral_norm(inverse_fourier_laplace(apply_law_block(p.law, fourier_laplace(sol.u), "M", True)))
    value = dm / law_frac if law_frac > 0 else 1.0
    lo, hi = constants.c1, constants.sup_zbm
    norm_ratio = {"value": value, "lower": lo, "upper": hi,
                  "ok": lo * (1 - RATIO_SLACK) <= value <= hi * (1 + RATIO_SLACK) or law_frac == 0}
    norms = {
        "u": spectral_norm(sol.u),
        "v": spectral_norm(sol.v),
        "frac_u": frac_u,
        "Cu": spectral_norm(sol.u.like(p.C.apply(sol.u.values))),
        "Cstar_v": spectral_norm(sol.v.like(p.C.apply_adjoint(sol.v.values))),
        "f": spectral_norm(f),
        "g": spectral_norm(g),
    }
    problem = {"name": p.name, "nu": p.nu, "law_beta": p.law.beta, "d0": p.d0, "d1": p.d1,
               "t0": p.grid.t0, "dt": p.grid.dt, "n": p.grid.n, "pad": p.grid.pad}
    report = RegularityReport(
        problem=problem,
        norms=norms,
        residual_rel=residual,
        constants=constants,
        wt_sup=wt,
        beta=beta,
        refinement_ratio=ratio,
        cu_bound=cu_bound_check(p, sol, f, g, constants),
        apriori=apriori_check(sol, f, g, constants),
        norm_ratio=norm_ratio,
        residual_tol=residual_tol,
    )
    report.timing_ms = (time.perf_counter() - start) * 1e3 if timing_ms is None else float(timing_ms)
    return report
