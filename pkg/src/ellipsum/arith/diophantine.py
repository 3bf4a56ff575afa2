"""
Shift vectors and empirical diophantine diagnostics.

Shift components live as mpmath numbers at ``WORK_DPS`` digits; every
consumer that needs binary64 takes the double-double split from
:meth:`ShiftVector.hi_lo`.
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass, field
from itertools import product
from typing import List, Optional, Sequence, Tuple

import numpy as np
from mpmath import mp, mpf

from ellipsum.errors import (
    BadToken,
    DimensionMismatch,
    SearchSpaceTooLarge,
    ValidationError,
)
from ellipsum.utils.logging import logger

WORK_DPS = 50
RATIONAL_HIT_TOL = mpf("1e-25")
RELATION_TOL = mpf("1e-24")
RELATION_SPACE_CAP = 10**9

# Record-regression parameters of estimate_type.
RECORD_FLOOR = 10
MIN_RECORDS = 6

_SQRT_TOKEN = re.compile(r"^sqrt(\d+)(?:-(\d+))?$")
_DECIMAL_TOKEN = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_RATIONAL_TOKEN = re.compile(r"^[+-]?\d+/\d+$")


def _eval_token(token: str, dps: int) -> mpf:
    with mp.workdps(dps):
        if token == "phi-1":
            return (1 + mp.sqrt(5)) / 2 - 1
        if token == "e-2":
            return mp.e - 2
        if token == "pi-3":
            return mp.pi - 3
        match = _SQRT_TOKEN.match(token)
        if match:
            k = int(match.group(1))
            shift = int(match.group(2)) if match.group(2) else 0
            return mp.sqrt(k) - shift
        if _RATIONAL_TOKEN.match(token):
            num, den = token.split("/")
            if int(den) == 0:
                raise BadToken(f"Zero denominator in {token!r}")
            return mpf(int(num)) / int(den)
        if _DECIMAL_TOKEN.match(token):
            return mpf(token)
    raise BadToken(
        f"Unknown shift token {token!r}; expected a decimal, p/q, "
        "sqrt<k>, sqrt<k>-<int>, phi-1, e-2 or pi-3"
    )


@dataclass(frozen=True)
class ShiftVector:
    """
    Center of the ellipsoid in extended precision.

    :ivar n (int): Dimension.
    :ivar comps (Tuple[mpf, ...]): Components at WORK_DPS digits.
    :ivar spec (str): Spec the components were built from.
    :ivar dio_meta (Optional[dict]): Type estimate attached by the CLI.
    """

    n: int
    comps: Tuple[mpf, ...]
    spec: str
    dio_meta: Optional[dict] = field(default=None, compare=False)

    @classmethod
    def zero(cls, n: int) -> "ShiftVector":
        """The zero shift in dimension n."""
        return cls(n=n, comps=tuple(mpf(0) for _ in range(n)), spec="0")

    @property
    def is_zero(self) -> bool:
        """Whether every component vanishes."""
        return all(c == 0 for c in self.comps)

    @property
    def digest(self) -> str:
        """Hex digest of the spec string."""
        return hashlib.sha256(f"alpha:{self.spec}".encode()).hexdigest()

    def hi_lo(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Double-double split of the components.

        :return: (hi, lo) with hi + lo equal to the component to ~31 digits.
        :rtype: Tuple[np.ndarray, np.ndarray]
        """
        with mp.workdps(WORK_DPS):
            hi = np.array([float(c) for c in self.comps], dtype=np.float64)
            lo = np.array(
                [float(c - mpf(h)) for c, h in zip(self.comps, hi)],
                dtype=np.float64,
            )
        return hi, lo

    def as_floats(self) -> np.ndarray:
        """Components rounded to binary64."""
        return self.hi_lo()[0]

    def negated(self) -> "ShiftVector":
        """The shift -alpha."""
        comps = tuple(-c for c in self.comps)
        return ShiftVector(n=self.n, comps=comps, spec=f"-({self.spec})")


def parse_shift(spec: str, n: int, dps: int = WORK_DPS) -> ShiftVector:
    """
    Parse a comma-separated shift spec.

    :param spec: Tokens such as ``sqrt2-1,sqrt3-1``, ``phi-1`` or ``0.5``.
    :type spec: str
    :param n: Expected dimension.
    :type n: int
    :param dps: Working digits.
    :type dps: int
    :return: Shift vector.
    :rtype: ShiftVector
    :raises BadToken: On an unknown token.
    :raises DimensionMismatch: If the token count differs from n.
    """
    text = "".join(spec.split())
    if text in ("0", "zero"):
        return ShiftVector.zero(n)
    tokens = text.split(",") if text else []
    if len(tokens) != n:
        raise DimensionMismatch(
            f"Shift spec {spec!r} has {len(tokens)} components, expected {n}"
        )
    comps = tuple(_eval_token(tok, dps) for tok in tokens)
    return ShiftVector(n=n, comps=comps, spec=text)


@dataclass(frozen=True)
class DioReport:
    """
    Empirical diophantine type of a shift vector.

    :ivar q_max (int): Search bound.
    :ivar kappa_hat (float): Type estimate (inf on a rational hit).
    :ivar worst_q (int): Denominator with the largest pointwise exponent.
    :ivar worst_dist (float): Distance d(worst_q).
    :ivar rational_hit (bool): Whether some d(q) fell below 1e-25.
    :ivar norm (str): Norm used for d(q).
    :ivar records (int): Best approximations with q >= RECORD_FLOOR.
    """

    q_max: int
    kappa_hat: float
    worst_q: int
    worst_dist: float
    rational_hit: bool
    norm: str = "euclidean"
    records: int = 0

    def to_dict(self) -> dict:
        """JSON-ready mapping; an infinite estimate becomes None."""
        return {
            "norm": self.norm,
            "q_max": self.q_max,
            "kappa_hat": (
                None if math.isinf(self.kappa_hat) else self.kappa_hat
            ),
            "worst_q": self.worst_q,
            "worst_dist": self.worst_dist,
            "rational_hit": self.rational_hit,
            "records": self.records,
        }


def _regression_slope(xs: Sequence[float], ys: Sequence[float]) -> float:
    x = np.asarray(xs)
    y = np.asarray(ys)
    xc = x - x.mean()
    return float((xc * (y - y.mean())).sum() / (xc * xc).sum())


def _scan_records(
    alpha: ShiftVector, q_max: int, dps: int
) -> Tuple[List[Tuple[int, mpf]], Optional[int]]:
    """Best approximations (q, d(q)) and the first rational hit, if any."""
    records: List[Tuple[int, mpf]] = []
    best = None
    with mp.workdps(dps):
        comps = [mpf(c) for c in alpha.comps]
        acc = [mpf(0)] * alpha.n
        for q in range(1, q_max + 1):
            acc = [a + c for a, c in zip(acc, comps)]
            d = mp.sqrt(mp.fsum((a - mp.nint(a)) ** 2 for a in acc))
            if d < RATIONAL_HIT_TOL:
                return records, q
            if best is None or d < best:
                best = d
                records.append((q, d))
    return records, None


def estimate_type(
    alpha: ShiftVector, q_max: int, dps: int = WORK_DPS
) -> DioReport:
    """
    Estimate the diophantine type exponent of alpha.

    d(q) is the Euclidean distance from q*alpha to the nearest integer
    vector. The exponent is read off the best approximations with
    q >= RECORD_FLOOR: the slope of log(1/d) against log q is fitted on
    every prefix of at least MIN_RECORDS records and kappa_hat is one plus
    the running maximum of those slopes, so it never decreases as q_max
    grows and the constant of the approximation bound drops out.

    :param alpha: Shift vector.
    :type alpha: ShiftVector
    :param q_max: Largest denominator scanned (>= 2).
    :type q_max: int
    :param dps: Working digits.
    :type dps: int
    :return: Report.
    :rtype: DioReport
    :raises ValidationError: If q_max < 2.
    """
    if q_max < 2:
        raise ValidationError(f"qmax: must be >= 2, got {q_max}")
    records, hit = _scan_records(alpha, q_max, dps)
    if hit is not None:
        logger.info(f"Rational hit for {alpha.spec!r} at q={hit}")
        return DioReport(
            q_max=q_max,
            kappa_hat=math.inf,
            worst_q=hit,
            worst_dist=0.0,
            rational_hit=True,
        )

    worst_q, worst_dist, worst_exp = 1, float(records[0][1]), -math.inf
    for q, d in records:
        if q < 2:
            continue
        exponent = 1.0 + float(mp.log(1 / d) / mp.log(q))
        if exponent > worst_exp:
            worst_q, worst_dist, worst_exp = q, float(d), exponent

    tail = [(q, d) for q, d in records if q >= RECORD_FLOOR]
    xs = [float(mp.log(q)) for q, _ in tail]
    ys = [float(mp.log(1 / d)) for _, d in tail]
    slope = 0.0
    for end in range(MIN_RECORDS, len(tail) + 1):
        slope = max(slope, _regression_slope(xs[:end], ys[:end]))

    return DioReport(
        q_max=q_max,
        kappa_hat=1.0 + slope,
        worst_q=worst_q,
        worst_dist=worst_dist,
        rational_hit=False,
        records=len(tail),
    )


@dataclass(frozen=True)
class RelationReport:
    """
    Outcome of an integer relation search.

    :ivar found (bool): Whether a relation was found.
    :ivar witness (Optional[Tuple[int, ...]]): (c_1..c_n, c_0) with
        sum c_i alpha_i + c_0 = 0.
    :ivar coeff_bound (int): Coefficient bound searched.
    """

    found: bool
    witness: Optional[Tuple[int, ...]]
    coeff_bound: int

    def __bool__(self) -> bool:
        return self.found


def _normalize_sign(c: Tuple[int, ...]) -> Tuple[int, ...]:
    for v in c:
        if v != 0:
            return c if v > 0 else tuple(-x for x in c)
    return c


def independence_scan(
    alpha: ShiftVector, coeff_bound: int, dps: int = WORK_DPS
) -> RelationReport:
    """
    Search integer relations c . (alpha, 1) = 0 with |c_i| <= coeff_bound.

    For each (c_1..c_n) the constant c_0 is forced to -round(c . alpha);
    binary64 prefilters candidates which are then confirmed at ``dps``
    digits. Candidates are tried by max-norm, then l1 norm, then
    lexicographically.

    :param alpha: Shift vector.
    :type alpha: ShiftVector
    :param coeff_bound: Coefficient bound (>= 1).
    :type coeff_bound: int
    :param dps: Working digits.
    :type dps: int
    :return: Relation report.
    :rtype: RelationReport
    :raises ValidationError: If coeff_bound < 1.
    :raises SearchSpaceTooLarge: If coeff_bound^(n+1) > 10^9.
    """
    if coeff_bound < 1:
        raise ValidationError(
            f"coeff_bound: must be >= 1, got {coeff_bound}"
        )
    n = alpha.n
    if coeff_bound ** (n + 1) > RELATION_SPACE_CAP:
        raise SearchSpaceTooLarge(
            f"{coeff_bound}^{n + 1} candidate relations exceed "
            f"{RELATION_SPACE_CAP}"
        )
    approx = alpha.as_floats()
    axis = range(-coeff_bound, coeff_bound + 1)
    candidates = []
    for c in product(axis, repeat=n):
        if not any(c):
            continue
        dot = float(np.dot(c, approx))
        c0 = -int(round(dot))
        if abs(c0) > coeff_bound or abs(dot + c0) > 1e-8:
            continue
        full = c + (c0,)
        candidates.append(
            (max(abs(v) for v in full), sum(abs(v) for v in full), full)
        )
    candidates.sort()

    seen = set()
    with mp.workdps(dps):
        for _, _, full in candidates:
            witness = _normalize_sign(full)
            if witness in seen:
                continue
            seen.add(witness)
            residual = mp.fsum(
                ci * a for ci, a in zip(witness[:n], alpha.comps)
            ) + witness[n]
            if abs(residual) < RELATION_TOL:
                return RelationReport(True, witness, coeff_bound)
    return RelationReport(False, None, coeff_bound)
