"""
Exact integer linear algebra for positive definite quadratic forms.

Determinants, leading minors and adjugates are computed with fraction-free
(Bareiss) elimination over Python integers. Only the Cholesky factor is
floating point; it guides enumeration bounds and never decides membership.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Integral, Rational
from typing import List, NamedTuple, Sequence, Tuple, Union

import numpy as np

from ellipsum.errors import (
    DimensionMismatch,
    DimensionTooLarge,
    DimensionZero,
    MatrixSyntaxError,
    NotPositiveDefinite,
    NotSymmetric,
)

MAX_DIM = 12
# chol chol^T must reproduce M to this, relative to max |M_ij|
CHOL_TOL = 1e-12

IntMatrix = Tuple[Tuple[int, ...], ...]
Scalar = Union[int, Fraction, float]


def ball_volume(n: int) -> float:
    """
    Volume of the Euclidean unit ball in dimension n.

    :param n: Dimension.
    :type n: int
    :return: pi^(n/2) / Gamma(n/2 + 1).
    :rtype: float
    """
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def _bareiss_leading_minors(rows: Sequence[Sequence[int]]) -> List[int]:
    """
    Leading principal minors via Bareiss elimination without pivoting.
    Stops at the first nonpositive minor (the remaining ones are not needed
    to reject the matrix).
    """
    n = len(rows)
    a = [list(r) for r in rows]
    minors: List[int] = []
    prev = 1
    for k in range(n):
        pivot = a[k][k]
        minors.append(pivot)
        if pivot <= 0:
            return minors
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * pivot - a[i][k] * a[k][j]) // prev
        prev = pivot
    return minors


def det_int(rows: Sequence[Sequence[int]]) -> int:
    """
    Exact determinant of an integer matrix (Bareiss with row pivoting).

    :param rows: Square integer matrix.
    :type rows: Sequence[Sequence[int]]
    :return: Determinant.
    :rtype: int
    """
    n = len(rows)
    if n == 0:
        return 1
    a = [list(r) for r in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            swap = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if swap is None:
                return 0
            a[k], a[swap] = a[swap], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    return sign * a[n - 1][n - 1]


def adjugate_int(rows: Sequence[Sequence[int]]) -> IntMatrix:
    """
    Exact adjugate (transposed cofactor matrix) of an integer matrix.

    :param rows: Square integer matrix.
    :type rows: Sequence[Sequence[int]]
    :return: Adjugate matrix.
    :rtype: IntMatrix
    """
    n = len(rows)
    if n == 1:
        return ((1,),)
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [rows[r][c] for c in range(n) if c != j]
                for r in range(n)
                if r != i
            ]
            # adj[j][i] is the (i, j) cofactor
            adj[j][i] = (-1) ** (i + j) * det_int(minor)
    return tuple(tuple(r) for r in adj)


def _matmul_int(a: IntMatrix, b: IntMatrix) -> IntMatrix:
    n = len(a)
    return tuple(
        tuple(sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n))
        for i in range(n)
    )


def _to_int_matrix(M: Sequence[Sequence[object]]) -> IntMatrix:
    if len(M) == 0:
        raise DimensionZero("Matrix has dimension 0")
    n = len(M)
    out = []
    for i, row in enumerate(M):
        if len(row) != n:
            raise NotSymmetric(f"Row {i} has length {len(row)}, expected {n}")
        conv = []
        for j, v in enumerate(row):
            if isinstance(v, (Integral, np.integer)):
                conv.append(int(v))
            elif isinstance(v, Rational) and Fraction(v).denominator == 1:
                conv.append(int(Fraction(v)))
            elif isinstance(v, float) and v.is_integer():
                conv.append(int(v))
            else:
                raise NotSymmetric(
                    f"Entry ({i},{j})={v!r} is not an integer; "
                    "use rationalize() for rational forms"
                )
        out.append(tuple(conv))
    for i in range(n):
        for j in range(i + 1, n):
            if out[i][j] != out[j][i]:
                raise NotSymmetric(
                    f"M[{i}][{j}]={out[i][j]} differs from "
                    f"M[{j}][{i}]={out[j][i]}"
                )
    return tuple(out)


@dataclass(frozen=True)
class QuadFormCtx:
    """
    Positive definite integral quadratic form with cached invariants.

    :ivar n (int): Dimension.
    :ivar M (IntMatrix): Symmetric integer matrix.
    :ivar detM (int): Exact determinant.
    :ivar adjM (IntMatrix): Exact adjugate, M * adjM = detM * I.
    :ivar chol (np.ndarray): Lower triangular factor with chol @ chol.T = M.
    :ivar volume (float): Volume of the ellipsoid {x : Q_M(x) <= 1}.
    """

    n: int
    M: IntMatrix
    detM: int
    adjM: IntMatrix
    chol: np.ndarray = field(compare=False, repr=False)
    volume: float = field(compare=False)

    @property
    def digest(self) -> str:
        """Hex digest identifying the matrix."""
        text = ";".join(",".join(str(v) for v in row) for row in self.M)
        return hashlib.sha256(f"M:{text}".encode("utf-8")).hexdigest()

    @property
    def is_diagonal(self) -> bool:
        """Whether all off-diagonal entries vanish."""
        return all(
            self.M[i][j] == 0
            for i in range(self.n)
            for j in range(self.n)
            if i != j
        )

    def as_array(self) -> np.ndarray:
        """Matrix as an int64 numpy array."""
        return np.array(self.M, dtype=np.int64)

    def adjugate(self) -> "QuadFormCtx":
        """
        Context of the adjugate form, which is again positive definite.

        :return: build_ctx(adjM).
        :rtype: QuadFormCtx
        """
        return build_ctx(self.adjM)


def build_ctx(M: Sequence[Sequence[object]]) -> QuadFormCtx:
    """
    Validate an integer symmetric matrix and cache its invariants.

    :param M: Square integer symmetric matrix.
    :type M: Sequence[Sequence[object]]
    :return: Populated context.
    :rtype: QuadFormCtx
    :raises DimensionZero: For an empty matrix.
    :raises NotSymmetric: For non-square, non-integer or asymmetric input.
    :raises NotPositiveDefinite: If some leading principal minor is <= 0.
    :raises DimensionTooLarge: Above MAX_DIM.
    :raises ArithmeticError: If the adjugate is not positive definite or
        the Cholesky factor does not reproduce M.
    """
    rows = _to_int_matrix(M)
    n = len(rows)
    if n > MAX_DIM:
        raise DimensionTooLarge(f"Dimension {n} exceeds the cap {MAX_DIM}")

    minors = _bareiss_leading_minors(rows)
    if minors[-1] <= 0 or len(minors) < n:
        raise NotPositiveDefinite(
            f"Leading principal minor of order {len(minors)} is "
            f"{minors[-1]} <= 0"
        )
    det = minors[-1]
    adj = adjugate_int(rows)
    prod = _matmul_int(rows, adj)
    for i in range(n):
        for j in range(n):
            if prod[i][j] != (det if i == j else 0):
                raise ArithmeticError("M * adj(M) != det(M) * I")

    adj_minors = _bareiss_leading_minors(adj)
    if len(adj_minors) < n or adj_minors[-1] <= 0:
        raise ArithmeticError(
            f"adj(M) leading minor of order {len(adj_minors)} is "
            f"{adj_minors[-1]} <= 0"
        )

    dense = np.array(rows, dtype=np.float64)
    chol = np.linalg.cholesky(dense)
    drift = float(np.max(np.abs(chol @ chol.T - dense)))
    if drift > CHOL_TOL * float(np.max(np.abs(dense))):
        raise ArithmeticError(
            f"chol * chol^T misses M by {drift:.3g} (tolerance {CHOL_TOL:g} "
            "relative)"
        )
    chol.setflags(write=False)
    volume = ball_volume(n) / math.sqrt(det)
    return QuadFormCtx(
        n=n, M=rows, detM=det, adjM=adj, chol=chol, volume=volume
    )


def _check_len(ctx: QuadFormCtx, x: Sequence[object]):
    if len(x) != ctx.n:
        raise DimensionMismatch(
            f"Vector of length {len(x)} for a form of dimension {ctx.n}"
        )


def _quad(rows: IntMatrix, x: Sequence[Scalar]) -> Scalar:
    n = len(rows)
    total: Scalar = 0
    for i in range(n):
        if x[i] == 0:
            continue
        acc: Scalar = rows[i][i] * x[i]
        for j in range(i + 1, n):
            acc = acc + 2 * rows[i][j] * x[j]
        total = total + acc * x[i]
    return total


def qform_value(ctx: QuadFormCtx, x: Sequence[object]) -> Scalar:
    """
    Evaluate Q_M(x) = <Mx, x>.

    Integer input gives an exact int, rational input an exact Fraction,
    anything else a float.

    :param ctx: Quadratic form.
    :type ctx: QuadFormCtx
    :param x: Vector of length n.
    :type x: Sequence[object]
    :return: Q_M(x).
    :rtype: int | Fraction | float
    :raises DimensionMismatch: If len(x) != n.
    """
    _check_len(ctx, x)
    if all(isinstance(v, (Integral, np.integer)) for v in x):
        return int(_quad(ctx.M, [int(v) for v in x]))
    if all(isinstance(v, (Rational, np.integer)) for v in x):
        return Fraction(_quad(ctx.M, [Fraction(v) for v in x]))
    xv = np.asarray(x, dtype=np.float64)
    return float(xv @ np.asarray(ctx.M, dtype=np.float64) @ xv)


def dual_norm_sq(ctx: QuadFormCtx, m: Sequence[int]) -> Fraction:
    """
    |m|^2 in the adjugate form divided by det M, exactly.

    :param ctx: Quadratic form.
    :type ctx: QuadFormCtx
    :param m: Integer vector.
    :type m: Sequence[int]
    :return: Q_adj(m) / det M.
    :rtype: Fraction
    :raises DimensionMismatch: If len(m) != n.
    """
    _check_len(ctx, m)
    return Fraction(int(_quad(ctx.adjM, [int(v) for v in m])), ctx.detM)


class Rationalized(NamedTuple):
    """
    Integral form obtained by clearing the denominators of a rational one.

    The ellipsoid of the rational form with radius R is the ellipsoid of
    the integral form with radius sqrt(scale) * R.
    """

    scale: int
    ctx: QuadFormCtx

    def map_radius(self, R: float) -> float:
        """Radius for the integral form corresponding to R."""
        return math.sqrt(self.scale) * R


def rationalize(Q: Sequence[Sequence[object]]) -> Rationalized:
    """
    Scale a rational symmetric matrix by the lcm of its denominators.

    :param Q: Square symmetric matrix with rational entries (ints,
        Fractions or "p/q" strings).
    :type Q: Sequence[Sequence[object]]
    :return: (c, context of c * Q).
    :rtype: Rationalized
    :raises NotPositiveDefinite: If Q is not positive definite.
    """
    if len(Q) == 0:
        raise DimensionZero("Matrix has dimension 0")
    try:
        rows = [[Fraction(v) for v in row] for row in Q]  # type: ignore
    except (TypeError, ValueError) as exc:
        raise MatrixSyntaxError(f"Non-rational entry: {exc}") from exc
    c = 1
    for row in rows:
        for v in row:
            c = c * v.denominator // math.gcd(c, v.denominator)
    scaled = [[int(v * c) for v in row] for row in rows]
    return Rationalized(scale=c, ctx=build_ctx(scaled))


def _split_entries(body: str) -> List[str]:
    entries = body.split(",")
    if any(tok == "" for tok in entries):
        raise MatrixSyntaxError(f"Empty entry in {body!r}")
    return entries


def _parse_nested(body: str) -> List[List[str]]:
    if not (body.startswith("[[") and body.endswith("]]")):
        raise MatrixSyntaxError(f"Expected [[...],...] but got {body!r}")
    inner = body[2:-2]
    return [_split_entries(row) for row in inner.split("],[")]


def _int_token(tok: str) -> int:
    try:
        return int(tok)
    except ValueError as exc:
        raise MatrixSyntaxError(f"Not an integer entry: {tok!r}") from exc


def _frac_token(tok: str) -> Fraction:
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError) as exc:
        raise MatrixSyntaxError(f"Not a rational entry: {tok!r}") from exc


def _diag(values: Sequence[object]) -> List[List[object]]:
    n = len(values)
    return [[values[i] if i == j else 0 for j in range(n)] for i in range(n)]


def parse_matrix(spec: str) -> Rationalized:
    """
    Parse a matrix spec.

    Grammar: ``diag:a1,...,an`` and ``full:[[m11,...],[...]]`` with
    integer entries, or ``qdiag:`` / ``qfull:`` with integer or ``p/q``
    entries (routed through :func:`rationalize`). Integer specs come back
    with scale 1.

    :param spec: Matrix spec string.
    :type spec: str
    :return: Scale and integral form.
    :rtype: Rationalized
    :raises MatrixSyntaxError: On grammar violations.
    :raises DimensionTooLarge: Above MAX_DIM.
    """
    text = "".join(spec.split())
    kind, sep, body = text.partition(":")
    if not sep or not body:
        raise MatrixSyntaxError(
            f"Matrix spec {spec!r} must look like diag:..., full:[[...]], "
            "qdiag:... or qfull:[[...]]"
        )
    if kind == "diag":
        rows = _diag([_int_token(t) for t in _split_entries(body)])
    elif kind == "full":
        rows = [[_int_token(t) for t in r] for r in _parse_nested(body)]
    elif kind == "qdiag":
        rows = _diag([_frac_token(t) for t in _split_entries(body)])
    elif kind == "qfull":
        rows = [[_frac_token(t) for t in r] for r in _parse_nested(body)]
    else:
        raise MatrixSyntaxError(f"Unknown matrix kind {kind!r}")

    if len(rows) > MAX_DIM:
        raise DimensionTooLarge(
            f"Dimension {len(rows)} exceeds the cap {MAX_DIM}"
        )
    if kind in ("diag", "full"):
        return Rationalized(scale=1, ctx=build_ctx(rows))
    return rationalize(rows)
