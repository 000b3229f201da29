from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.integrate import quad

from maxreg.conditions import check_conditions
from maxreg.errors import DivergenceError, DomainError, ModelError, NeedsLargerNuError, ShapeError
from maxreg.examples import (
    Kernel,
    build_example,
    bump,
    convolve_kernel,
    fractional_law,
    fractional_problem,
    heat_law,
    integro_law,
    integro_threshold,
    kernel_symbol,
    refine_case,
    rough_profile,
    second_order_law,
    second_order_threshold,
    spatial_setup,
)
from maxreg.regularity import build_report
from maxreg.solver import original_unknown, relative_error, solve_spectral
from maxreg.spatial import SpatialOperator
from maxreg.symbols import fractional_derivative
from maxreg.weighted_time import TimeGrid, WeightedSignal, weighted_norm

Z = 1.0 / (1.0 + 1j * np.geomspace(1e-3, 1e3, 25))


def test_heat_law_blocks():
    law = heat_law(1.0, 3, 4)
    b = law.blocks(Z)
    assert np.allclose(b.N11, np.eye(4)) and np.allclose(b.M, np.eye(3))
    assert not np.any(b.N00) and not np.any(b.N01) and not np.any(b.N10)
    law = heat_law([2.0, 0.5], 1, 2)
    assert np.allclose(law.blocks(Z).N11, np.diag([0.5, 2.0]))
    assert law.is_diagonal


def test_heat_law_rejects_non_positive():
    with pytest.raises(ModelError):
        heat_law([1.0, -1.0], 1, 2)
    with pytest.raises(ModelError):
        heat_law(np.array([[1.0, 2.0], [0.0, 1.0]]), 1, 2)
    with pytest.raises(ShapeError):
        heat_law(np.ones(3), 1, 2)


def test_second_order_examples():
    law = second_order_law(1.0, 2.0, 1, 1, 1.0)
    assert law.blocks(np.array([0.25])).N11[0, 0, 0] == pytest.approx(4 / 9, rel=1e-15)
    law = second_order_law(0.0, 1.0, 2, 3, 0.1)
    assert np.allclose(law.blocks(Z).N11, np.eye(3))
    assert math.isinf(law.r)


def test_second_order_threshold():
    A = np.array([[1.0, 2.0], [0.0, 1.0]])
    B = np.diag([2.0, 4.0])
    thr = second_order_threshold(A, B)
    assert thr == pytest.approx(np.linalg.norm(np.linalg.solve(B, A), 2))
    with pytest.raises(NeedsLargerNuError) as info:
        second_order_law(A, B, 1, 2, 0.9 * thr)
    assert info.value.threshold == pytest.approx(thr)
    law = second_order_law(A, B, 1, 2, 1.1 * thr)
    assert law.r == pytest.approx(0.5 / thr)
    assert law.meta["c2_certificate"] == pytest.approx(-np.linalg.norm(A, 2) + 2.0 * 1.1 * thr)
    with pytest.raises(ModelError):
        second_order_law(1.0, -1.0, 1, 1, 5.0)


def test_kernel_symbol_examples():
    k = Kernel.exponential(1.0, 1.0, 2)
    assert np.allclose(kernel_symbol(k, 1.0)[0], 0.5 * np.eye(2))
    assert not np.any(kernel_symbol(Kernel.zero(2), [1.0, 3 + 2j]))

    t = np.arange(0, 40 + 1e-12, 1e-3)
    ks = Kernel.sampled(t, np.exp(-t))
    assert abs(kernel_symbol(ks, 2.0)[0, 0, 0] - 1 / 3) <= 1e-5
    assert ks.l1_norm(0.0) == pytest.approx(1.0, abs=1e-6)


def test_kernel_symbol_matches_quadrature():
    t = np.linspace(0, 8, 4001)
    ks = Kernel.sampled(t, t * np.exp(-t))
    for zinv in (0.5, 1 + 2j, 3 - 1j):
        re = quad(lambda s: s * np.exp(-s) * np.exp(-zinv.real * s) * np.cos(-np.imag(zinv) * s), 0, 8)[0]
        im = quad(lambda s: s * np.exp(-s) * np.exp(-zinv.real * s) * np.sin(-np.imag(zinv) * s), 0, 8)[0]
        assert abs(kernel_symbol(ks, zinv)[0, 0, 0] - (re + 1j * im)) <= 1e-5


def test_kernel_divergence():
    k = Kernel.exponential(2.0, 1.0, 1)
    with pytest.raises(DivergenceError):
        kernel_symbol(k, -2.0)
    t = np.linspace(0, 5, 101)
    ks = Kernel.sampled(t, np.ones_like(t), rho0=0.5)
    with pytest.raises(DivergenceError):
        kernel_symbol(ks, 0.5 + 3j)
    kernel_symbol(ks, 0.51)


def test_kernel_validation():
    with pytest.raises(DomainError):
        Kernel.exponential(0.0, 1.0, 1)
    with pytest.raises(DomainError):
        Kernel.sampled([0.5, 1.0], [1.0, 1.0])
    with pytest.raises(DomainError):
        Kernel.sampled([0.0, 1.0, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(DomainError):
        Kernel.sampled([0.0, 1.0], [np.inf, 1.0])
    with pytest.raises(DomainError):
        Kernel("weird", 1)


@pytest.mark.parametrize("kernel", [
    Kernel.exponential(1.5, np.array([[1.0, 0.3], [0.2, 2.0]]), 2),
    Kernel.sampled(np.linspace(0, 6, 601), np.cos(np.linspace(0, 6, 601)) * np.exp(-np.linspace(0, 6, 601))),
])
def test_kernel_symbol_cauchy_riemann(kernel):
    h = 1e-5
    for zinv in (0.7 + 0.2j, 2.0 - 3j, 5.0 + 10j):
        dx = (kernel_symbol(kernel, zinv + h) - kernel_symbol(kernel, zinv - h)) / (2 * h)
        dy = (kernel_symbol(kernel, zinv + 1j * h) - kernel_symbol(kernel, zinv - 1j * h)) / (2j * h)
        assert np.max(np.abs(dx - dy)) <= 1e-6


def test_kernel_matrix_at():
    t = np.array([0.0, 1.0, 2.0])
    ks = Kernel.sampled(t, [1.0, 3.0, 1.0])
    vals = ks.matrix_at(np.array([0.5, 1.5, 2.0, 2.5]))[:, 0, 0]
    assert np.allclose(vals, [2.0, 2.0, 1.0, 0.0])
    k = Kernel.exponential(2.0, 3.0, 1)
    assert k.matrix_at(np.array([0.5]))[0, 0, 0] == pytest.approx(3 * math.exp(-1))
    assert k.l1_norm(1.0) == pytest.approx(1.0)


def test_kernel_entry_matches_matrix():
    t = np.linspace(0, 3, 31)
    mats = np.exp(-t)[:, None, None] * np.array([[1.0, 0.5], [0.2, 2.0]])
    ks = Kernel.sampled(t, mats)
    probe = np.array([-0.5, 0.0, 0.17, 1.234, 2.99, 3.0, 4.0])
    full = ks.matrix_at(probe)
    for i in range(2):
        for j in range(2):
            assert np.allclose(ks.entry_at(probe, i, j), full[:, i, j].real, rtol=1e-14, atol=0)
    assert np.all(full[[0, -1]] == 0)
    assert ks.entry_at(1.234, 1, 1) == pytest.approx(2 * np.interp(1.234, t, np.exp(-t)))


def test_integro_sampled_kernel_manufactured():
    t = np.linspace(0, 30, 3001)
    ks = Kernel.sampled(t, np.exp(-t)[:, None, None] * np.eye(41))
    case = build_example("integro", m=40, nt=1024, kernel=ks)
    ref = build_example("integro", m=40, nt=1024)
    assert relative_error(case.f, ref.f) <= 1e-4
    sol = solve_spectral(case.problem, case.f, case.g)
    assert relative_error(original_unknown(case.problem, sol), case.exact) <= 1e-3


def test_integro_examples():
    law = integro_law(1.0, 0.0, Kernel.exponential(1.0, 1.0, 1), 1, 1, 2.0)
    assert law.blocks(np.array([0.5])).N11[0, 0, 0] == pytest.approx(6 / 7, rel=1e-14)

    A = np.array([[2.0, 0.5], [0.5, 1.0]])
    law = integro_law(A, 0.0, Kernel.zero(2), 1, 2, 1.0)
    assert np.allclose(law.blocks(Z).N11, np.linalg.inv(A))


def test_integro_without_memory_is_second_order():
    rng = np.random.default_rng(3)
    a = rng.standard_normal((3, 3))
    a = a @ a.T + 3 * np.eye(3)
    b = 0.3 * rng.standard_normal((3, 3))
    b = b @ b.T + np.eye(3)
    nu = 2 * max(second_order_threshold(a, b), integro_threshold(a, a * 0 + b, Kernel.zero(3)))
    integro = integro_law(a, b, Kernel.zero(3), 2, 3, nu)
    second = second_order_law(b, a, 2, 3, nu)
    z = 1.0 / (nu + 1j * np.linspace(-50, 50, 41))
    assert np.allclose(integro.blocks(z).N11, second.blocks(z).N11, rtol=1e-13, atol=1e-15)


def test_integro_threshold_and_meta():
    k = Kernel.exponential(1.0, 2.0, 1)
    thr = integro_threshold(1.0, 1.0, k)
    # 1/nu (1 + 2/(1 + nu)) = 1  =>  nu^2 - 3 = 0
    assert thr == pytest.approx(math.sqrt(3), rel=1e-9)
    with pytest.raises(NeedsLargerNuError):
        integro_law(1.0, 1.0, k, 1, 1, 0.95 * thr)
    law = integro_law(1.0, 1.0, k, 1, 1, 3.0)
    assert law.meta["young_bound"] == pytest.approx(0.5)
    assert law.meta["neumann_perturbation"] == pytest.approx((1 + 0.5) / 3)
    with pytest.raises(ShapeError):
        integro_law(1.0, 1.0, Kernel.exponential(1.0, 1.0, 2), 1, 1, 3.0)
    with pytest.raises(ModelError):
        integro_law(-1.0, 0.0, Kernel.zero(1), 1, 1, 3.0)


@pytest.mark.parametrize("k", [
    Kernel.exponential(0.7, [1.0, 2.0], 2),
    Kernel.sampled(np.linspace(0, 5, 501), np.exp(-np.linspace(0, 5, 501))[:, None, None] * np.diag([1.0, 2.0])),
])
def test_integro_diagonal_hint_matches_blocks(k):
    law = integro_law([1.0, 3.0], [0.5, 0.2], k, 1, 2, 4.0)
    assert law.is_diagonal
    z = 1.0 / (4.0 + 1j * np.linspace(-20, 20, 17))
    n11 = law.blocks(z).N11
    assert np.allclose(law.diagonal_blocks(z)[2], np.diagonal(n11, axis1=1, axis2=2), rtol=1e-14)
    full = Kernel.sampled(np.linspace(0, 1, 11), np.ones((11, 2, 2)))
    assert not integro_law([1.0, 3.0], [0.5, 0.2], full, 1, 2, 40.0).is_diagonal


def test_fractional_law():
    for beta in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(DomainError):
            fractional_law(beta, 1, 1)
    law = fractional_law(0.5, 2, 3)
    z = np.array([0.25, 1 / (1 + 1j)])
    b = law.blocks(z)
    assert np.allclose(b.M[:, 0, 0], z ** 0.5) and np.allclose(b.N11, np.eye(3))
    assert law.beta == 0.5


def test_fractional_limit_is_heat():
    grid = TimeGrid.from_window(20.0, 2048)
    z = 1.0 / (1.0 + 1j * grid.xi)
    frac = fractional_law(0.999, 2, 3).blocks(z)
    heat = heat_law(1.0, 2, 3).blocks(z)
    # the law's M is z^(1-beta); the heat law scaled by 1/z gives z^0 = I
    diff = max(np.max(np.linalg.norm(a - b, 2, axis=(1, 2))) for a, b in zip(frac, heat))
    assert diff <= 1e-2


def test_fractional_scalar_inversion():
    grid = TimeGrid.from_window(40.0, 4096)
    nu = 1.0
    p = fractional_problem(0.5, SpatialOperator.zero(1, 1), nu, grid)
    f = WeightedSignal(grid, nu, bump(grid.times)[0][:, None])
    sol = solve_spectral(p, f)
    back = fractional_derivative(sol.u, 0.5)
    assert relative_error(back, f) <= 1e-8
    direct = fractional_derivative(f, -0.5)
    assert relative_error(sol.u, direct) <= 1e-8


def test_bump_derivatives():
    t = np.linspace(0, 12, 120001)
    eta, d1, d2 = bump(t)
    assert np.max(np.abs(np.gradient(eta, t) - d1)) <= 1e-6
    assert np.max(np.abs(np.gradient(d1, t) - d2)) <= 1e-5
    assert eta[0] == 0 and eta[-1] == 0 and bump(np.array([6.0]))[0][0] == pytest.approx(math.exp(-1))


def test_convolve_kernel_solves_ode():
    # y = int_0^t exp(-s) eta(t - s) ds solves y' + y = eta, y(0) = 0
    t = np.linspace(0, 14, 1401)
    y = convolve_kernel(lambda s: np.exp(-s), t, lambda s: bump(s)[0])
    eta = bump(t)[0]
    dy = np.gradient(y, t, edge_order=2)
    assert np.max(np.abs(dy + y - eta)) <= 1e-4
    check = quad(lambda s: math.exp(-s) * bump(np.array([9.0 - s]))[0][0], 0, 9, points=[3.0, 7.0], limit=200)[0]
    assert y[900] == pytest.approx(check, abs=1e-10)


def test_spatial_setup():
    C, mode, lam = spatial_setup(100)
    x = (C.adjoint @ C.c @ mode).real
    assert np.max(np.abs(x - lam * mode)) <= 1e-3
    C, mode, lam = spatial_setup(30, dim=2)
    x = (C.adjoint @ C.c @ mode).real
    assert lam == 2.0 and np.max(np.abs(x - lam * mode)) <= 5e-3
    with pytest.raises(DomainError):
        spatial_setup(10, dim=3)


def test_rough_profile():
    grid = TimeGrid.from_window(20.0, 2048)
    r = rough_profile(grid.times, grid.dt)
    eta = bump(grid.times)[0]
    assert np.all(r[eta == 0] == 0)
    spec = np.abs(np.fft.rfft(r)) / r.size
    freqs = 2 * np.pi * np.fft.rfftfreq(r.size, grid.dt)
    assert np.max(spec[freqs > 0.75 * np.pi / grid.dt]) <= 1e-6 * np.max(spec)
    finer = rough_profile(TimeGrid.from_window(20.0, 4096).times, grid.dt / 2)
    assert np.max(np.abs(finer)) > np.max(np.abs(r))


def test_build_example_errors():
    with pytest.raises(DomainError):
        build_example("wave")
    with pytest.raises(DomainError):
        build_example("heat", m=10, nt=64, rhs="smooth")
    with pytest.raises(ShapeError):
        build_example("heat", m=10, nt=64, k_coeff=np.ones(11))


def test_refine_case():
    case = build_example("integro", m=20, nt=256, tmax=20.0, B=0.3)
    fine = refine_case(case)
    assert fine.problem.grid.n == 512 and fine.problem.grid.dt == pytest.approx(case.problem.grid.dt / 2)
    assert fine.params["B"] == 0.3 and fine.problem.law.stepping.kernel is case.problem.law.stepping.kernel


def test_default_laws_certify():
    for name in ("heat", "second-order", "integro", "fractional"):
        case = build_example(name, m=20, nt=256)
        rep = check_conditions(case.problem.law, case.problem.nu, k=6)
        assert rep.passed, name


@pytest.mark.parametrize("name, tol", [("heat", 1e-3), ("second-order", 1e-3), ("integro", 1e-3)])
def test_manufactured_solutions(name, tol):
    case = build_example(name, m=100, nt=2048)
    p = case.problem
    sol = solve_spectral(p, case.f, case.g)
    u = original_unknown(p, sol)
    assert relative_error(u, case.exact) <= tol
    rep = build_report(p, sol, case.f, case.g, k=6)
    assert rep.residual_rel <= 1e-3 and rep.cu_bound[2] and rep.apriori[2]


def test_fractional_pipeline_passes():
    case = build_example("fractional", m=100, nt=2048)
    sol = solve_spectral(case.problem, case.f)
    fine = refine_case(case)
    sol_fine = solve_spectral(fine.problem, fine.f)
    rep = build_report(case.problem, sol, case.f, refined=sol_fine, k=6)
    assert rep.passed, rep.to_dict()["membership"]
    assert weighted_norm(sol.u) > 0
