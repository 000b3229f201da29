from __future__ import annotations

import numpy as np
import pytest
import scipy.sparse as sp

from maxreg.errors import DomainError, ParseError, ShapeError
from maxreg.spatial import (
    SpatialOperator,
    dirichlet_gradient_1d,
    dirichlet_gradient_2d,
    interior_nodes,
    load_operator,
    save_operator,
    skew_block,
)


def test_gradient_stencil():
    C = dirichlet_gradient_1d(2, 1.0).toarray()
    assert np.array_equal(C, np.array([[1, 0], [-1, 1], [0, -1]]))
    C = dirichlet_gradient_1d(3, 0.5)
    assert (C.d1, C.d0) == (4, 3)
    u = np.array([1.0, 4.0, 9.0])
    padded = np.concatenate([[0.0], u, [0.0]])
    assert np.allclose(C.apply(u[None])[0], np.diff(padded) / 0.5)


def test_gradient_domain():
    with pytest.raises(DomainError):
        dirichlet_gradient_1d(1, 0.1)
    with pytest.raises(DomainError):
        dirichlet_gradient_1d(4, 0.0)


def test_laplacian_eigenvalues():
    m = 200
    _, h = interior_nodes(m)
    C = dirichlet_gradient_1d(m, h)
    L = (C.adjoint @ C.c).toarray().real
    eig = np.linalg.eigvalsh(L)
    k = np.arange(1, m + 1)
    oracle = 2 / h ** 2 * (1 - np.cos(k * np.pi / (m + 1)))
    assert np.allclose(eig, np.sort(oracle), rtol=1e-10, atol=1e-8)
    assert abs(eig[0] - 1) <= 1e-3
    assert np.allclose(L, L.T) and eig[0] > 0


def test_gradient_2d():
    m = 5
    _, h = interior_nodes(m)
    C = dirichlet_gradient_2d(m, h)
    assert (C.d1, C.d0) == (2 * m * (m + 1), m * m)
    eig = np.linalg.eigvalsh((C.adjoint @ C.c).toarray().real)
    lam1 = 2 / h ** 2 * (1 - np.cos(np.pi / (m + 1)))
    assert eig[0] == pytest.approx(2 * lam1, rel=1e-12)


def test_skew_block_action_and_skewness():
    rng = np.random.default_rng(0)
    C = dirichlet_gradient_1d(6, 0.3)
    S = skew_block(C)
    x = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    y = S @ np.concatenate([x, np.zeros(7)])
    assert np.allclose(y[:6], 0) and np.allclose(y[6:], C.c @ x)
    assert (S + S.conj().T).count_nonzero() == 0
    for _ in range(100):
        v = rng.standard_normal(13) + 1j * rng.standard_normal(13)
        assert abs(np.vdot(v, S @ v).real) <= 1e-12 * np.vdot(v, v).real
    eig = np.linalg.eigvals(S.toarray())
    assert np.max(np.abs(eig.real)) <= 1e-10


def test_skew_block_of_zero():
    S = skew_block(SpatialOperator.zero(3, 2))
    assert S.shape == (5, 5) and S.count_nonzero() == 0


def test_adjoint_identity():
    rng = np.random.default_rng(1)
    ops = [dirichlet_gradient_1d(10, 0.1), dirichlet_gradient_2d(4, 0.2),
           SpatialOperator.dense(rng.standard_normal((3, 4)) + 1j * rng.standard_normal((3, 4)))]
    for C in ops:
        x = rng.standard_normal(C.d0) + 1j * rng.standard_normal(C.d0)
        y = rng.standard_normal(C.d1) + 1j * rng.standard_normal(C.d1)
        lhs = np.vdot(y, C.apply(x[None])[0])
        rhs = np.vdot(C.apply_adjoint(y[None])[0], x)
        assert abs(lhs - rhs) <= 1e-13 * max(1.0, abs(lhs))


def test_operator_files(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("1 1 1\n1 1 2.0\n")
    C = load_operator(p)
    assert C.toarray().tolist() == [[2.0]]

    C = dirichlet_gradient_1d(8, 0.1)
    save_operator(p, C)
    back = load_operator(p)
    assert (back.c != C.c).nnz == 0

    p.write_text("% comment\n2 2 3\n1 1 1.0 0\n1 1 2.5 1\n2 2 -1 0\n")
    C = load_operator(p)
    assert np.array_equal(C.toarray(), np.array([[3.5 + 1j, 0], [0, -1]]))


@pytest.mark.parametrize("text, line", [
    ("2 2\n", 1),
    ("2 2 1\n1 x 1.0 0\n", 2),
    ("2 2 2\n1 1 1.0\n1 1 1.0 0 9\n", 3),
])
def test_operator_parse_errors(tmp_path, text, line):
    p = tmp_path / "c.txt"
    p.write_text(text)
    with pytest.raises(ParseError) as info:
        load_operator(p)
    assert info.value.line == line


def test_operator_shape_errors(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("2 2 1\n3 1 1.0 0\n")
    with pytest.raises(ShapeError):
        load_operator(p)
    p.write_text("2 2 2\n1 1 1.0 0\n")
    with pytest.raises(ShapeError):
        load_operator(p)


def test_sparse_input_kept_sparse():
    C = SpatialOperator(sp.eye(4, format="csr"))
    assert sp.issparse(C.c) and C.c.dtype == np.complex128
