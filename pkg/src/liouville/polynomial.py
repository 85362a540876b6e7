"""Complex polynomials serving as the potential of w'' + P(z) w = 0."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PolynomialP:
    """Polynomial with ascending complex coefficients ``c0 + c1 z + ...``.

    Trailing zero coefficients are dropped.  The zero polynomial is allowed
    (it gives the Möbius case w'' = 0) and has degree 0 and leading
    coefficient 0.
    """

    coefficients: tuple

    def __post_init__(self):
        cs = [complex(c) for c in self.coefficients]
        if not cs:
            cs = [0j]
        if not all(np.isfinite(c.real) and np.isfinite(c.imag) for c in cs):
            raise ValueError("polynomial coefficients must be finite")
        while len(cs) > 1 and cs[-1] == 0:
            cs.pop()
        object.__setattr__(self, "coefficients", tuple(cs))

    @classmethod
    def monomial(cls, degree: int, a: complex = 1.0) -> PolynomialP:
        return cls(tuple([0.0] * degree + [a]))

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> complex:
        return self.coefficients[-1]

    @property
    def is_zero(self) -> bool:
        return self.degree == 0 and self.coefficients[0] == 0

    def as_array(self) -> np.ndarray:
        return np.array(self.coefficients, dtype=np.complex128)

    def __call__(self, z):
        return np.polynomial.polynomial.polyval(z, self.as_array())

    def to_json(self) -> list:
        return [[c.real, c.imag] for c in self.coefficients]
