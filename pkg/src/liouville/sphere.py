"""Points of the extended plane, Möbius maps and the round metric of the Riemann sphere.

The sphere is the unit sphere in R^3 and the extended plane is identified with it
by stereographic projection from the north pole, so that the round metric pulls
back to ``2|dz| / (1 + |z|^2)``.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from numbers import Number

import numpy as np


class _PointAtInfinity:
    """The point at infinity of the extended plane (a singleton)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_PointAtInfinity, ())


INFINITY = _PointAtInfinity()


def is_infinity(w) -> bool:
    return w is INFINITY


@dataclass(frozen=True)
class ComplexPoint:
    """A finite point ``re + i*im`` of the plane."""

    re: float
    im: float

    def __post_init__(self):
        re, im = float(self.re), float(self.im)
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ValueError(f"ComplexPoint needs finite coordinates, got ({self.re}, {self.im})")
        object.__setattr__(self, "re", re)
        object.__setattr__(self, "im", im)

    @classmethod
    def from_complex(cls, z) -> ComplexPoint:
        z = complex(z)
        return cls(z.real, z.imag)

    @property
    def z(self) -> complex:
        return complex(self.re, self.im)

    def __complex__(self):
        return self.z


def as_extended(w):
    """Coerce ``w`` to a Python complex, or return INFINITY unchanged.

    Non-finite complex input is mapped to INFINITY.
    """
    if w is INFINITY:
        return INFINITY
    if isinstance(w, ComplexPoint):
        return w.z
    if isinstance(w, Number) or isinstance(w, np.number):
        w = complex(w)
        if not (math.isfinite(w.real) and math.isfinite(w.imag)):
            return INFINITY
        return w
    raise TypeError(f"cannot interpret {w!r} as a point of the extended plane")


@dataclass(frozen=True)
class MobiusMap:
    """The linear-fractional map ``z -> (a z + b) / (c z + d)``."""

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self):
        coeffs = [complex(v) for v in (self.a, self.b, self.c, self.d)]
        for name, v in zip("abcd", coeffs):
            object.__setattr__(self, name, v)
        size = max(abs(v) for v in coeffs)
        if size == 0 or abs(self.det) <= 1e-14 * size:
            raise ValueError("degenerate Möbius map: ad - bc vanishes")

    @classmethod
    def identity(cls) -> MobiusMap:
        return cls(1, 0, 0, 1)

    @classmethod
    def from_matrix(cls, m) -> MobiusMap:
        m = np.asarray(m, dtype=complex)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def det(self) -> complex:
        return self.a * self.d - self.b * self.c

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def compose(self, inner: MobiusMap) -> MobiusMap:
        """Return ``self ∘ inner``."""
        return MobiusMap.from_matrix(self.matrix @ inner.matrix)

    def inverse(self) -> MobiusMap:
        return MobiusMap(self.d, -self.b, -self.c, self.a)

    def __call__(self, z):
        return apply_mobius(self, z)


@dataclass(frozen=True)
class SphereRotation:
    """A rigid rotation of the sphere, ``z -> (p z - conj(q)) / (q z + conj(p))``.

    ``(p, q)`` is rescaled on construction so that ``|p|^2 + |q|^2 = 1``.
    """

    p: complex
    q: complex

    def __post_init__(self):
        p, q = complex(self.p), complex(self.q)
        norm = math.hypot(abs(p), abs(q))
        if not math.isfinite(norm) or norm == 0:
            raise ValueError("rotation parameters must not both vanish")
        object.__setattr__(self, "p", p / norm)
        object.__setattr__(self, "q", q / norm)

    @classmethod
    def identity(cls) -> SphereRotation:
        return cls(1, 0)

    @classmethod
    def from_angles(cls, alpha: float, beta: float, gamma: float) -> SphereRotation:
        """Rotation built from three Euler-like angles (any real values)."""
        p = math.cos(beta / 2) * cmath.exp(0.5j * (alpha + gamma))
        q = math.sin(beta / 2) * cmath.exp(0.5j * (alpha - gamma))
        return cls(p, q)

    @classmethod
    def random(cls, rng: np.random.Generator) -> SphereRotation:
        v = rng.normal(size=4)
        return cls(complex(v[0], v[1]), complex(v[2], v[3]))

    def as_mobius(self) -> MobiusMap:
        p, q = self.p, self.q
        return MobiusMap(p, -q.conjugate(), q, p.conjugate())

    def compose(self, inner: SphereRotation) -> SphereRotation:
        m = self.as_mobius().compose(inner.as_mobius())
        return SphereRotation(m.a, m.c)

    def __call__(self, z):
        return apply_mobius(self.as_mobius(), z)


def apply_mobius(m, z):
    """Evaluate a Möbius map (or sphere rotation) at a point of the extended plane."""
    if isinstance(m, SphereRotation):
        m = m.as_mobius()
    z = as_extended(z)
    if z is INFINITY:
        return INFINITY if m.c == 0 else m.a / m.c
    num = m.a * z + m.b
    den = m.c * z + m.d
    if den == 0:
        return INFINITY
    return num / den


def spherical_distance(w1, w2) -> float:
    """Great-circle distance (radians) between two points of the extended plane."""
    w1, w2 = as_extended(w1), as_extended(w2)
    if w1 is INFINITY and w2 is INFINITY:
        return 0.0
    if w1 is INFINITY or w2 is INFINITY:
        w = w2 if w1 is INFINITY else w1
        return 2.0 * math.atan2(1.0, abs(w))
    return 2.0 * math.atan2(abs(w1 - w2), abs(1.0 + w2.conjugate() * w1))


def stereographic_lift(w) -> np.ndarray:
    """Unit vector on the sphere whose projection from the north pole is ``w``."""
    w = as_extended(w)
    if w is INFINITY:
        return np.array([0.0, 0.0, 1.0])
    r2 = abs(w) ** 2
    if r2 > 1e300:
        return np.array([0.0, 0.0, 1.0])
    return np.array([2 * w.real, 2 * w.imag, r2 - 1.0]) / (1.0 + r2)
