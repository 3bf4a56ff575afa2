from __future__ import annotations

import numpy as np
from mpmath import mp, mpf

from ellipsum.arith.ddmath import (
    dd_add,
    dd_mul,
    phase_mod1,
    shifted_qform,
    two_prod,
    two_sum,
)
from ellipsum.arith.diophantine import parse_shift


def test_error_free_transforms_are_exact() -> None:
    a = np.array([0.1, 1e16, 3.0])
    b = np.array([0.2, 1.0, 1e-17])

    s, e = two_sum(a, b)
    p, f = two_prod(a, b)
    with mp.workdps(60):
        for i in range(3):
            assert mpf(s[i]) + mpf(e[i]) == mpf(a[i]) + mpf(b[i])
            assert mpf(p[i]) + mpf(f[i]) == mpf(a[i]) * mpf(b[i])


def test_double_double_products_carry_thirty_digits() -> None:
    with mp.workdps(50):
        hi = 1.0 / 3.0
        lo = float(mpf(1) / 3 - mpf(hi))
    third = (np.array([hi]), np.array([lo]))
    x = dd_mul(third, (np.array([3.0]), np.array([0.0])))
    y = dd_add(x, (np.array([-1.0]), np.array([0.0])))

    assert abs(y[0][0] + y[1][0]) < 1e-30


def test_phase_mod1_matches_extended_precision() -> None:
    alpha = parse_shift("sqrt2-1,sqrt3-1", 2)
    hi, lo = alpha.hi_lo()
    rng = np.random.default_rng(3)
    m = rng.integers(-(10**6), 10**6, size=(200, 2))

    got = phase_mod1(m, hi, lo)

    assert np.all(np.abs(got) <= 0.5)
    with mp.workdps(50):
        for row, value in zip(m, got):
            exact = mp.fsum(int(k) * c for k, c in zip(row, alpha.comps))
            exact -= mp.nint(exact)
            assert abs(float(exact) - value) < 1e-12


def test_phase_mod1_is_odd() -> None:
    alpha = parse_shift("sqrt2-1,sqrt3-1", 2)
    hi, lo = alpha.hi_lo()
    m = np.array([[3, -7], [12345, 678], [1, 0]])

    assert np.array_equal(phase_mod1(-m, hi, lo), -phase_mod1(m, hi, lo))


def test_shifted_qform_against_mpmath() -> None:
    alpha = parse_shift("sqrt2-1,sqrt3-1", 2)
    hi, lo = alpha.hi_lo()
    M = np.array([[2, 1], [1, 3]], dtype=np.int64)
    m = np.array([[0, 0], [5, -2], [1000, 999]], dtype=np.int64)

    got = shifted_qform(M, m, hi, lo)

    with mp.workdps(50):
        for row, value in zip(m, got):
            y = [int(k) - c for k, c in zip(row, alpha.comps)]
            exact = 2 * y[0] ** 2 + 2 * y[0] * y[1] + 3 * y[1] ** 2
            assert abs(float(exact) - value) <= 1e-15 * max(1.0, value)
