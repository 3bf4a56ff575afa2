from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from ellipsum.spectral import (
    BumpMollifier,
    GaussianMollifier,
    make_mollifier,
    mollifier_hat,
)


def _bump_cos_transform(bump: BumpMollifier, s: float) -> float:
    value, _ = integrate.quad(
        lambda r: bump.profile(r) * math.cos(2 * math.pi * s * r),
        0.0,
        1.0,
        limit=200,
        epsabs=1e-13,
    )
    return 2.0 * value


def _bump_sin_transform(bump: BumpMollifier, s: float) -> float:
    value, _ = integrate.quad(
        lambda r: bump.profile(r) * r * math.sin(2 * math.pi * s * r),
        0.0,
        1.0,
        limit=200,
        epsabs=1e-13,
    )
    return 2.0 * value / s


def test_gaussian_transform() -> None:
    g = GaussianMollifier()

    assert g.hat(0.0) == 1.0
    assert g.hat(1.0) == pytest.approx(math.exp(-math.pi))
    assert isinstance(g.hat(0.5), float)
    assert mollifier_hat(np.array([0.0, 2.0]))[1] == pytest.approx(
        math.exp(-4 * math.pi)
    )


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_bump_has_unit_mass(n: int) -> None:
    bump = BumpMollifier(n)
    sphere = 2 * math.pi ** (n / 2) / math.gamma(n / 2)

    mass, _ = integrate.quad(
        lambda r: bump.profile(r) * r ** (n - 1),
        0.0,
        1.0,
        limit=200,
        epsabs=1e-13,
    )

    assert sphere * mass == pytest.approx(1.0, rel=1e-8)
    assert bump.hat(0.0) == 1.0


def test_bump_transform_in_one_dimension() -> None:
    bump = BumpMollifier(1)

    for s in (0.3, 1.7, 4.2):
        assert bump.hat(s) == pytest.approx(
            _bump_cos_transform(bump, s), abs=1e-9
        )


def test_bump_transform_in_three_dimensions() -> None:
    bump = BumpMollifier(3)

    for s in (0.3, 1.7, 4.2):
        assert bump.hat(s) == pytest.approx(
            _bump_sin_transform(bump, s), abs=1e-9
        )


def test_bump_array_matches_scalars() -> None:
    bump = BumpMollifier(2)
    s = np.array([0.0, 0.25, 1.0, 3.0])

    values = bump.hat(s)

    assert values[0] == 1.0
    for si, vi in zip(s[1:], values[1:]):
        assert vi == pytest.approx(bump.hat(float(si)), rel=1e-14)
    assert np.all(np.abs(values) <= 1.0 + 1e-12)


def test_bump_profile_vanishes_outside_ball() -> None:
    bump = BumpMollifier(2)

    assert bump.profile(1.0) == 0.0
    assert bump.profile(0.0) == pytest.approx(bump.c * math.exp(-1.0))


def test_make_mollifier() -> None:
    assert isinstance(make_mollifier("gaussian", 3), GaussianMollifier)
    bump = make_mollifier("bump", 3)
    assert isinstance(bump, BumpMollifier) and bump.n == 3
    with pytest.raises(ValueError, match="Unknown mollifier"):
        make_mollifier("box", 3)
