"""Finite-dimensional spatial operators ``C`` and the skew block ``[[0, -C*], [C, 0]]``.

Sign convention: ``C`` is the Dirichlet gradient, so ``C* = -div`` and
``C*C`` is the (positive) Dirichlet Laplacian.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DomainError, ParseError, ShapeError


@dataclass(frozen=True)
class SpatialOperator:
    c: sp.csr_matrix
    name: str = "C"

    def __post_init__(self):
        object.__setattr__(self, "c", sp.csr_matrix(self.c, dtype=np.complex128))

    @property
    def d0(self) -> int:
        return self.c.shape[1]

    @property
    def d1(self) -> int:
        return self.c.shape[0]

    @property
    def adjoint(self) -> sp.csr_matrix:
        return self.c.conj().T.tocsr()

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Act on row-stacked samples, ``x`` of shape ``(n, d0)``."""
        return (self.c @ np.asarray(x).T).T

    def apply_adjoint(self, y: np.ndarray) -> np.ndarray:
        return (self.adjoint @ np.asarray(y).T).T

    def toarray(self) -> np.ndarray:
        return self.c.toarray()

    @classmethod
    def zero(cls, d1: int, d0: int) -> "SpatialOperator":
        return cls(sp.csr_matrix((d1, d0), dtype=np.complex128), name="zero")

    @classmethod
    def dense(cls, c, name: str = "C") -> "SpatialOperator":
        return cls(sp.csr_matrix(np.atleast_2d(np.asarray(c, dtype=np.complex128))), name=name)


def _gradient_matrix(m: int, h: float) -> sp.csr_matrix:
    main = np.ones(m) / h
    return sp.diags([main, -main], [0, -1], shape=(m + 1, m), format="csr")


def dirichlet_gradient_1d(m: int, h: float) -> SpatialOperator:
    """Forward differences from ``m`` interior nodes to ``m + 1`` edges.

    Row ``j`` is ``(u[j+1] - u[j]) / h`` with the boundary values
    ``u[0] = u[m+1] = 0`` eliminated, so for ``m = 2, h = 1`` the rows are
    ``(1, 0), (-1, 1), (0, -1)``.
    """
    if m < 2 or int(m) != m:
        raise DomainError(f"need m >= 2 interior points, got {m}")
    if not h > 0:
        raise DomainError(f"h must be positive, got {h}")
    return SpatialOperator(_gradient_matrix(int(m), float(h)), name=f"grad1d(m={m})")


def dirichlet_gradient_2d(m: int, h: float) -> SpatialOperator:
    """Tensor-product gradient on an ``m x m`` node grid.

    Nodes are flattened row-major (index ``iy * m + ix``).  The output stacks
    the ``m (m+1)`` x-edges above the ``(m+1) m`` y-edges.
    """
    g = dirichlet_gradient_1d(m, h).c
    eye = sp.identity(m, format="csr")
    gx = sp.kron(eye, g)
    gy = sp.kron(g, eye)
    return SpatialOperator(sp.vstack([gx, gy]).tocsr(), name=f"grad2d(m={m})")


def interior_nodes(m: int, length: float = np.pi) -> tuple[np.ndarray, float]:
    """Interior nodes of ``(0, length)`` and the spacing."""
    h = length / (m + 1)
    return h * np.arange(1, m + 1), h


def skew_block(C: SpatialOperator) -> sp.csr_matrix:
    """``[[0, -C*], [C, 0]]`` as a sparse ``(d0 + d1)`` square matrix."""
    d0, d1 = C.d0, C.d1
    top = sp.hstack([sp.csr_matrix((d0, d0)), -C.adjoint])
    bottom = sp.hstack([C.c, sp.csr_matrix((d1, d1))])
    return sp.vstack([top, bottom]).tocsr().astype(np.complex128)


# -- triplet file format -------------------------------------------------------

def save_operator(path: str | Path, C: SpatialOperator) -> None:
    """Header ``d1 d0 nnz`` then 1-indexed ``i j re im`` triplets."""
    coo = C.c.tocoo()
    lines = [f"{C.d1} {C.d0} {coo.nnz}"]
    for i, j, v in zip(coo.row, coo.col, coo.data):
        lines.append(f"{i + 1} {j + 1} {v.real:.17g} {v.imag:.17g}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_operator(path: str | Path) -> SpatialOperator:
    """Parse the triplet format; duplicate entries are summed.

    Blank lines and lines starting with ``%`` or ``#`` are ignored.  The
    imaginary column may be omitted.
    """
    path = Path(path)
    header = None
    rows, cols, vals = [], [], []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "%#":
            continue
        parts = line.split()
        if header is None:
            if len(parts) != 3:
                raise ParseError("header must be 'd1 d0 nnz'", line=lineno)
            try:
                header = tuple(int(p) for p in parts)
            except ValueError as exc:
                raise ParseError(f"non-integer header: {exc}", line=lineno) from exc
            if min(header) < 0:
                raise ParseError("negative size in header", line=lineno)
            continue
        if len(parts) not in (3, 4):
            raise ParseError(f"expected 'i j re [im]', got {len(parts)} fields", line=lineno)
        try:
            i, j = int(parts[0]), int(parts[1])
            v = complex(float(parts[2]), float(parts[3]) if len(parts) == 4 else 0.0)
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from exc
        if not (1 <= i <= header[0] and 1 <= j <= header[1]):
            raise ShapeError(f"{path}:{lineno}: index ({i}, {j}) outside {header[0]} x {header[1]}")
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
    if header is None:
        raise ParseError("empty operator file", line=1)
    if len(vals) != header[2]:
        raise ShapeError(f"{path}: header declares {header[2]} entries, found {len(vals)}")
    c = sp.coo_matrix((np.array(vals, dtype=np.complex128), (rows, cols)), shape=header[:2])
    return SpatialOperator(c.tocsr(), name=path.stem)
