"""Exact integer linear algebra (Smith normal form via sympy)."""

from __future__ import annotations

from dataclasses import dataclass

from sympy import ZZ, Matrix
from sympy.matrices.normalforms import smith_normal_decomp


@dataclass(frozen=True)
class Smith:
    """``U * A * V = D`` with ``U``, ``V`` unimodular and ``D`` diagonal."""

    A: Matrix
    D: Matrix
    U: Matrix
    V: Matrix

    @property
    def diagonal(self) -> list[int]:
        k = min(self.D.shape)
        return [int(self.D[i, i]) for i in range(k)]

    def verify(self) -> bool:
        return (self.U * self.A * self.V == self.D and abs(self.U.det()) == 1 and abs(self.V.det()) == 1
                and all(self.D[i, j] == 0 for i in range(self.D.rows) for j in range(self.D.cols) if i != j))


def smith(rows) -> Smith:
    A = Matrix(rows)
    if A.rows == 0 or A.cols == 0:
        return Smith(A, A, Matrix.eye(A.rows), Matrix.eye(A.cols))
    D, U, V = smith_normal_decomp(A, domain=ZZ)
    # make the diagonal non-negative by flipping columns of V
    for i in range(min(D.shape)):
        if D[i, i] < 0:
            D[:, i] = -D[:, i]
            V[:, i] = -V[:, i]
    return Smith(A, D, U, V)


def in_row_lattice(rows, v) -> bool:
    """Is the integer vector ``v`` an integer combination of ``rows``?"""
    v = Matrix([list(v)])
    if not rows:
        return all(x == 0 for x in v)
    S = smith(rows)
    # v = x A  <=>  v V = (x U^-1) D
    w = v * S.V
    d = S.diagonal
    for j in range(w.cols):
        dj = d[j] if j < len(d) else 0
        if dj == 0:
            if w[0, j] != 0:
                return False
        elif w[0, j] % dj:
            return False
    return True
