"""
Vectorized double-double arithmetic on numpy arrays.

A double-double value is a pair (hi, lo) of float64 arrays whose exact sum
carries about 31 significant digits. Only the operations the lattice
kernels need are provided: error-free sums and products, phase reduction
modulo 1 of integer combinations, and quadratic forms of shifted vectors.
"""

from __future__ import annotations

from typing import Sequence, Tuple

import numpy as np

DD = Tuple[np.ndarray, np.ndarray]

_SPLITTER = 134217729.0  # 2^27 + 1


def two_sum(a: np.ndarray, b: np.ndarray) -> DD:
    """s + err == a + b exactly."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: np.ndarray) -> DD:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def two_prod(a: np.ndarray, b: np.ndarray) -> DD:
    """p + err == a * b exactly (Dekker)."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def dd_add(x: DD, y: DD) -> DD:
    """Double-double addition."""
    s, e = two_sum(x[0], y[0])
    t, f = two_sum(x[1], y[1])
    e = e + t
    s, e = two_sum(s, e)
    e = e + f
    return two_sum(s, e)


def dd_mul(x: DD, y: DD) -> DD:
    """Double-double multiplication."""
    p, e = two_prod(x[0], y[0])
    e = e + (x[0] * y[1] + x[1] * y[0])
    return two_sum(p, e)


def _frac_centered(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """x - rint(x), exact in binary64, plus the removed integer."""
    k = np.rint(x)
    return x - k, k


def phase_mod1(
    m: np.ndarray, alpha_hi: Sequence[float], alpha_lo: Sequence[float]
) -> np.ndarray:
    """
    Reduce m . alpha modulo 1 to [-1/2, 1/2] with ~1e-16 absolute error.

    :param m: Integer points, shape (k, n), |m_i| < 2^53.
    :type m: np.ndarray
    :param alpha_hi: Leading parts of alpha.
    :type alpha_hi: Sequence[float]
    :param alpha_lo: Trailing parts of alpha.
    :type alpha_lo: Sequence[float]
    :return: Reduced phases, shape (k,).
    :rtype: np.ndarray
    """
    k, n = m.shape
    acc_hi = np.zeros(k, dtype=np.float64)
    acc_lo = np.zeros(k, dtype=np.float64)
    for i in range(n):
        if alpha_hi[i] == 0.0 and alpha_lo[i] == 0.0:
            continue
        mi = m[:, i].astype(np.float64)
        p, e = two_prod(mi, np.full(k, alpha_hi[i]))
        p, _ = _frac_centered(p)
        e = e + mi * alpha_lo[i]
        acc_hi, err = two_sum(acc_hi, p)
        acc_lo = acc_lo + err + e
        acc_hi, _ = _frac_centered(acc_hi)
    total, _ = _frac_centered(acc_hi + acc_lo)
    return total


def shifted_qform(
    M: np.ndarray,
    m: np.ndarray,
    alpha_hi: Sequence[float],
    alpha_lo: Sequence[float],
) -> np.ndarray:
    """
    Q_M(m - alpha) in double-double, rounded to binary64.

    :param M: Symmetric matrix, shape (n, n).
    :type M: np.ndarray
    :param m: Integer points, shape (k, n).
    :type m: np.ndarray
    :param alpha_hi: Leading parts of alpha.
    :type alpha_hi: Sequence[float]
    :param alpha_lo: Trailing parts of alpha.
    :type alpha_lo: Sequence[float]
    :return: Quadratic form values, shape (k,).
    :rtype: np.ndarray
    """
    k, n = m.shape
    xs = []
    for i in range(n):
        hi, lo = two_sum(
            m[:, i].astype(np.float64), np.full(k, -float(alpha_hi[i]))
        )
        xs.append((hi, lo - float(alpha_lo[i])))
    total: DD = (np.zeros(k), np.zeros(k))
    for i in range(n):
        if M[i, i] != 0:
            sq = dd_mul(xs[i], xs[i])
            coef = (np.full(k, float(M[i, i])), np.zeros(k))
            total = dd_add(total, dd_mul(coef, sq))
        for j in range(i + 1, n):
            if M[i, j] == 0:
                continue
            cross = dd_mul(xs[i], xs[j])
            coef = (np.full(k, 2.0 * float(M[i, j])), np.zeros(k))
            total = dd_add(total, dd_mul(coef, cross))
    return total[0] + total[1]
