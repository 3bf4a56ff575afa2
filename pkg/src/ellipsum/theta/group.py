"""
Points of the Jacobi group in Iwasawa coordinates and the action of the
generators of the discrete subgroup on them.

A point is (z, phi; xi, t) with z_k = u_k + i v_k in the upper half
plane, an angle phi_k per coordinate, xi = (x, y) in R^2n and a central
coordinate t. Angles are kept unreduced: the metaplectic factor of a
rotation by 2 pi is -1, so phi and phi + 2 pi are different points.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple

from ellipsum.errors import DimensionMismatch, IndexOutOfRange, ValidationError

Vector = Tuple[float, ...]


def _vec(values: Optional[Sequence[float]], n: int, name: str) -> Vector:
    if values is None:
        return (0.0,) * n
    out = tuple(float(v) for v in values)
    if len(out) != n:
        raise DimensionMismatch(
            f"{name} has {len(out)} components, expected {n}"
        )
    return out


@dataclass(frozen=True)
class GroupPoint:
    """
    A point (z, phi; xi, t) of the Jacobi group.

    :ivar n (int): Dimension.
    :ivar u (Vector): Real parts of z.
    :ivar v (Vector): Imaginary parts of z, all > 0.
    :ivar phi (Vector): Rotation angles.
    :ivar x (Vector): First half of xi.
    :ivar y (Vector): Second half of xi.
    :ivar t (float): Central coordinate.
    """

    n: int
    u: Vector
    v: Vector
    phi: Vector
    x: Vector
    y: Vector
    t: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"Dimension must be >= 1, got {self.n}")
        for name in ("u", "v", "phi", "x", "y"):
            if len(getattr(self, name)) != self.n:
                raise DimensionMismatch(
                    f"{name} has {len(getattr(self, name))} components, "
                    f"expected {self.n}"
                )
        if not all(vk > 0 for vk in self.v):
            raise ValidationError(f"Imaginary parts must be > 0: {self.v}")

    @classmethod
    def make(
        cls,
        z: Sequence[complex],
        phi: Optional[Sequence[float]] = None,
        x: Optional[Sequence[float]] = None,
        y: Optional[Sequence[float]] = None,
        t: float = 0.0,
    ) -> "GroupPoint":
        """
        Build a point from complex z; missing parts default to zero.

        :param z: Upper half plane coordinates.
        :type z: Sequence[complex]
        :param phi: Angles.
        :type phi: Optional[Sequence[float]]
        :param x: First half of xi.
        :type x: Optional[Sequence[float]]
        :param y: Second half of xi.
        :type y: Optional[Sequence[float]]
        :param t: Central coordinate.
        :type t: float
        :return: Point.
        :rtype: GroupPoint
        """
        zs = [complex(zk) for zk in z]
        n = len(zs)
        return cls(
            n=n,
            u=tuple(zk.real for zk in zs),
            v=tuple(zk.imag for zk in zs),
            phi=_vec(phi, n, "phi"),
            x=_vec(x, n, "x"),
            y=_vec(y, n, "y"),
            t=float(t),
        )

    @property
    def z(self) -> Tuple[complex, ...]:
        """z_k = u_k + i v_k."""
        return tuple(complex(uk, vk) for uk, vk in zip(self.u, self.v))

    @property
    def has_rotation(self) -> bool:
        """Whether any angle is nonzero."""
        return any(p != 0.0 for p in self.phi)


@dataclass(frozen=True)
class Generator:
    """
    A generator of the discrete subgroup.

    ``kind`` is "F" (inversion in coordinate k), "U" (unit translation in
    coordinate k) or "M" (integer Heisenberg translation by (h1, h2)).
    Coordinates are numbered from 1.
    """

    kind: str
    k: int = 0
    h1: Tuple[int, ...] = ()
    h2: Tuple[int, ...] = ()

    @classmethod
    def flip(cls, k: int) -> "Generator":
        """F_k."""
        return cls(kind="F", k=int(k))

    @classmethod
    def translate(cls, k: int) -> "Generator":
        """U_k."""
        return cls(kind="U", k=int(k))

    @classmethod
    def heisenberg(
        cls, h1: Sequence[int], h2: Sequence[int]
    ) -> "Generator":
        """M_h with h = (h1, h2) integer vectors."""
        a = tuple(int(v) for v in h1)
        b = tuple(int(v) for v in h2)
        if any(int(v) != v for v in tuple(h1) + tuple(h2)):
            raise ValidationError(f"M_h needs integer vectors: {h1}, {h2}")
        return cls(kind="M", h1=a, h2=b)

    @classmethod
    def parse(cls, text: str) -> "Generator":
        """
        Parse ``F1``, ``U2`` or ``M:1,0;0,1``.

        :param text: Generator spec.
        :type text: str
        :return: Generator.
        :rtype: Generator
        :raises ValidationError: On malformed text.
        """
        s = text.strip()
        if s[:1] in ("F", "U") and s[1:].isdigit():
            return cls(kind=s[0], k=int(s[1:]))
        if s.startswith("M:") and ";" in s:
            left, right = s[2:].split(";", 1)
            try:
                return cls.heisenberg(
                    [int(v) for v in left.split(",")],
                    [int(v) for v in right.split(",")],
                )
            except ValueError as exc:
                raise ValidationError(f"Bad generator {text!r}") from exc
        raise ValidationError(f"Bad generator {text!r}")

    def _check(self, g: GroupPoint) -> None:
        if self.kind in ("F", "U"):
            if not 1 <= self.k <= g.n:
                raise IndexOutOfRange(
                    f"{self.kind}_{self.k} needs 1 <= k <= {g.n}"
                )
        elif self.kind == "M":
            if len(self.h1) != g.n or len(self.h2) != g.n:
                raise DimensionMismatch(
                    f"M_h vectors have lengths {len(self.h1)}, "
                    f"{len(self.h2)}; expected {g.n}"
                )
        else:
            raise ValidationError(f"Unknown generator kind {self.kind!r}")

    def phase(self, g: GroupPoint, hold_center: bool = False) -> complex:
        """
        Factor c with Theta(gen . g) = c Theta(g).

        :param g: Point the generator acts on.
        :type g: GroupPoint
        :param hold_center: Whether U_k leaves t unchanged.
        :type hold_center: bool
        :return: Unimodular factor.
        :rtype: complex
        """
        self._check(g)
        if self.kind == "F":
            return cmath.exp(-0.25j * math.pi)
        if self.kind == "U":
            if not hold_center:
                return 1.0 + 0.0j
            return cmath.exp(-0.5j * math.pi * g.y[self.k - 1])
        dot = sum(a * b for a, b in zip(self.h1, self.h2))
        return complex((-1) ** (dot % 2))

    def __str__(self) -> str:
        if self.kind == "M":
            h1 = ",".join(str(v) for v in self.h1)
            h2 = ",".join(str(v) for v in self.h2)
            return f"M:{h1};{h2}"
        return f"{self.kind}{self.k}"


def _set(vec: Vector, i: int, value: float) -> Vector:
    out = list(vec)
    out[i] = value
    return tuple(out)


def apply_generator(
    gen: Generator, g: GroupPoint, hold_center: bool = False
) -> GroupPoint:
    """
    Left action of a generator on a group point.

    F_k: z_k -> -1/z_k, phi_k -> phi_k + arg z_k, (x_k, y_k) -> (-y_k, x_k).
    U_k: z_k -> z_k + 1, x_k -> x_k - y_k - 1/2, t -> t - y_k/4 (t is kept
    when ``hold_center`` is set).
    M_h: xi -> xi + (h1, h2), t -> t + (h1 . y - h2 . x)/2.

    :param gen: Generator.
    :type gen: Generator
    :param g: Point.
    :type g: GroupPoint
    :param hold_center: Keep t under U_k.
    :type hold_center: bool
    :return: gen . g
    :rtype: GroupPoint
    :raises IndexOutOfRange: If k is not a coordinate of g.
    """
    gen._check(g)
    if gen.kind == "F":
        i = gen.k - 1
        zk = complex(g.u[i], g.v[i])
        w = -1.0 / zk
        return replace(
            g,
            u=_set(g.u, i, w.real),
            v=_set(g.v, i, w.imag),
            phi=_set(g.phi, i, g.phi[i] + cmath.phase(zk)),
            x=_set(g.x, i, -g.y[i]),
            y=_set(g.y, i, g.x[i]),
        )
    if gen.kind == "U":
        i = gen.k - 1
        shift = 0.0 if hold_center else -0.25 * g.y[i]
        return replace(
            g,
            u=_set(g.u, i, g.u[i] + 1.0),
            x=_set(g.x, i, g.x[i] - g.y[i] - 0.5),
            t=g.t + shift,
        )
    h1y = sum(a * b for a, b in zip(gen.h1, g.y))
    h2x = sum(a * b for a, b in zip(gen.h2, g.x))
    return replace(
        g,
        x=tuple(a + b for a, b in zip(g.x, gen.h1)),
        y=tuple(a + b for a, b in zip(g.y, gen.h2)),
        t=g.t + 0.5 * (h1y - h2x),
    )
