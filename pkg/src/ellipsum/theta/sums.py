"""
Jacobi theta sums

    Theta_f(z, phi; xi, t) = (v_1 ... v_n)^{1/4} e(-t + x.y/2)
        * sum_m f_phi((m - y) sqrt(v)) e(sum_k (m_k - y_k)^2 u_k / 2 - m.x)

with e(s) = exp(2 pi i s). The lattice sum runs over a box around y;
for a Gaussian it is cut where the profile has fallen below
exp(-pi Lambda^2), for compactly supported profiles at the support.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Tuple

import numpy as np

from ellipsum.errors import (
    BudgetExceeded,
    PhiUnsupportedForProfile,
    TruncationTooSmall,
)
from ellipsum.theta.group import GroupPoint, Generator, apply_generator
from ellipsum.theta.profiles import Gaussian, ThetaProfile, gaussian_rotation
from ellipsum.utils.logging import logger
from ellipsum.utils.workers import ShardPool

MIN_TRUNCATION = 8.0
MAX_TERMS = 1 << 25
CHUNK_TERMS = 1 << 18


def _evaluator(
    profile: ThetaProfile, g: GroupPoint
) -> Tuple[Callable[[np.ndarray], np.ndarray], float]:
    if isinstance(profile, Gaussian):
        if not g.has_rotation:
            return profile, profile.decay
        rotated = gaussian_rotation(profile, g.phi)
        return rotated, rotated.decay
    if g.has_rotation:
        raise PhiUnsupportedForProfile(
            f"{profile!r} is only available at phi = 0, got phi={g.phi}"
        )
    return profile, math.sqrt(profile.support_sq)


def _box(
    g: GroupPoint, half_width: float
) -> Tuple[np.ndarray, Tuple[int, ...]]:
    lo = []
    shape = []
    for yk, vk in zip(g.y, g.v):
        reach = half_width / math.sqrt(vk)
        a = math.ceil(yk - reach)
        b = math.floor(yk + reach)
        lo.append(a)
        shape.append(max(0, b - a + 1))
    return np.array(lo, dtype=np.int64), tuple(shape)


def _chunk_sum(
    f: Callable[[np.ndarray], np.ndarray],
    g: GroupPoint,
    lo: np.ndarray,
    shape: Tuple[int, ...],
) -> Callable[[Tuple[int, int]], complex]:
    y = np.array(g.y)
    u = np.array(g.u)
    x = np.array(g.x)
    sv = np.sqrt(np.array(g.v))

    def run(span: Tuple[int, int]) -> complex:
        flat = np.arange(span[0], span[1], dtype=np.int64)
        idx = np.unravel_index(flat, shape)
        m = np.stack(idx, axis=1) + lo[None, :]
        d = m - y[None, :]
        vals = f(d * sv[None, :])
        arg = 0.5 * (d * d) @ u - m @ x
        arg = arg - np.floor(arg)
        return complex(np.sum(vals * np.exp(2j * math.pi * arg)))

    return run


def theta_sum(
    profile: ThetaProfile,
    g: GroupPoint,
    truncation: float = MIN_TRUNCATION,
    workers: int = 1,
) -> complex:
    """
    Theta_f at a group point.

    :param profile: Test profile f.
    :type profile: ThetaProfile
    :param g: Group point.
    :type g: GroupPoint
    :param truncation: Lambda (>= 8), in units of the profile decay.
    :type truncation: float
    :param workers: Worker threads.
    :type workers: int
    :return: Theta_f(g).
    :rtype: complex
    :raises PhiUnsupportedForProfile: For phi != 0 without a closed-form
        rotation.
    :raises TruncationTooSmall: If Lambda < 8.
    :raises BudgetExceeded: If the box holds too many terms.
    """
    if truncation < MIN_TRUNCATION:
        raise TruncationTooSmall(
            f"Truncation {truncation:g} is below {MIN_TRUNCATION:g}"
        )
    f, decay = _evaluator(profile, g)
    if isinstance(profile, Gaussian):
        half_width = truncation * decay
    else:
        half_width = decay
    lo, shape = _box(g, half_width)
    total = math.prod(shape)
    if total > MAX_TERMS:
        raise BudgetExceeded(
            f"Theta box holds {total} terms (cap {MAX_TERMS})"
        )
    spans = [
        (s, min(s + CHUNK_TERMS, total))
        for s in range(0, total, CHUNK_TERMS)
    ]
    pool: ShardPool = ShardPool(
        _chunk_sum(f, g, lo, shape), workers=workers, name="theta"
    )
    parts: List[complex] = pool.map(spans)
    inner = sum(parts, 0j)
    xy = sum(a * b for a, b in zip(g.x, g.y))
    pref = math.prod(g.v) ** 0.25 * np.exp(2j * math.pi * (-g.t + 0.5 * xy))
    logger.debug(f"Theta over {total} terms in box {shape}")
    return complex(pref * inner)


@dataclass(frozen=True)
class PhaseCheck:
    """
    Theta at gen . g against factor * Theta at g.

    :ivar generator (str): Generator label.
    :ivar lhs (complex): Theta(gen . g).
    :ivar rhs (complex): factor * Theta(g).
    :ivar factor (complex): Expected factor.
    :ivar max_err (float): |lhs - rhs|.
    """

    generator: str
    lhs: complex
    rhs: complex
    factor: complex
    max_err: float

    def to_dict(self) -> dict:
        """JSON-ready mapping."""
        return {
            "generator": self.generator,
            "lhs": [self.lhs.real, self.lhs.imag],
            "rhs": [self.rhs.real, self.rhs.imag],
            "factor": [self.factor.real, self.factor.imag],
            "max_err": self.max_err,
        }


def phase_check(
    profile: ThetaProfile,
    g: GroupPoint,
    gen: Generator,
    hold_center: bool = False,
    truncation: float = MIN_TRUNCATION,
) -> PhaseCheck:
    """
    Evaluate Theta on both sides of a generator identity.

    :param profile: Test profile.
    :type profile: ThetaProfile
    :param g: Group point.
    :type g: GroupPoint
    :param gen: Generator.
    :type gen: Generator
    :param hold_center: Keep t fixed under U_k.
    :type hold_center: bool
    :param truncation: Lambda.
    :type truncation: float
    :return: Both sides and their distance.
    :rtype: PhaseCheck
    :raises PhiUnsupportedForProfile: For F_k with a profile that has no
        closed-form rotation.
    """
    if gen.kind == "F" and not isinstance(profile, Gaussian):
        raise PhiUnsupportedForProfile(
            f"F_k rotates the profile; {profile!r} cannot be rotated"
        )
    factor = gen.phase(g, hold_center)
    moved = apply_generator(gen, g, hold_center)
    lhs = theta_sum(profile, moved, truncation)
    rhs = factor * theta_sum(profile, g, truncation)
    return PhaseCheck(
        generator=str(gen),
        lhs=lhs,
        rhs=rhs,
        factor=factor,
        max_err=abs(lhs - rhs),
    )
