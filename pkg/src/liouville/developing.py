"""Developing maps, their spherical derivative and their Schwarzian derivative.

Every map is evaluated through a homogeneous pair ``(N, D)`` with ``f = N/D``
together with the logarithm of the Wronskian ``W = N'D - ND'``.  Then

    f' = W / D^2,    f^# = 2|W| / (|N|^2 + |D|^2),

so poles of f are ordinary points of the pair and never need special care.
A common complex rescaling of ``(N, D)`` (with ``W`` rescaled by its square)
leaves both formulas unchanged, which is how large exponentials and large ODE
solutions are kept in range.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np

from . import taylor
from .errors import DerivativeBreakdown, UnivalenceViolation
from .polynomial import PolynomialP
from .rays import IntegratorSettings, RaySolution, check_status, integrate_pair_ray
from .sphere import INFINITY, MobiusMap, SphereRotation

LN2 = math.log(2.0)


def _as_array(z):
    return np.atleast_1d(np.asarray(z, dtype=np.complex128))


def _pair_log_sharp(N, D, logW):
    return LN2 + logW.real - np.log(np.abs(N) ** 2 + np.abs(D) ** 2)


class DevelopingMap:
    """Base class: subclasses provide ``pair(zs) -> (N, D, logW)`` on arrays."""

    kind = "abstract"

    def pair(self, zs):
        raise NotImplementedError

    def pair_cluster(self, centre: complex, offsets):
        return self.pair(centre + _as_array(offsets))

    def evaluate(self, z):
        """f(z) as a complex number, or INFINITY at a pole."""
        N, D, _ = self.pair(_as_array(z))
        if D[0] == 0:
            return INFINITY
        return complex(N[0] / D[0])

    def derivative(self, z) -> complex:
        N, D, logW = self.pair(_as_array(z))
        if D[0] == 0:
            return complex(np.inf, np.inf)
        return complex(np.exp(logW[0] - 2.0 * np.log(D[0])))

    def log_spherical_derivative(self, zs) -> np.ndarray:
        """log f^# on an array of points (the solution u = log f^#)."""
        N, D, logW = self.pair(_as_array(zs))
        return _pair_log_sharp(N, D, logW)

    def spherical_derivative(self, z) -> float:
        return float(np.exp(self.log_spherical_derivative(z)[0]))

    def log_derivative_cluster(self, centre: complex, offsets):
        """log f' near ``centre``: returns (g0, dg) with g0 = log f'(centre) and
        dg[k] = log f'(centre + offsets[k]) - g0 on the continuous branch.

        The first offset must be 0.  Differences are formed from ratios of the
        pair so that they do not inherit the rounding error of g0.
        """
        N, D, logW = self.pair_cluster(complex(centre), offsets)
        with np.errstate(divide="ignore", invalid="ignore"):
            g0 = logW[0] - 2.0 * np.log(D[0])
            dg = (logW - logW[0]) - 2.0 * np.log(D / D[0])
        return g0, dg

    def rotate(self, phi: SphereRotation) -> DevelopingMap:
        raise NotImplementedError

    def invert(self) -> DevelopingMap:
        return self.rotate(SphereRotation(0.0, 1j))

    def to_json(self) -> dict:
        raise NotImplementedError


def _apply_matrix(m: MobiusMap, N, D, logW):
    return m.a * N + m.b * D, m.c * N + m.d * D, logW + np.log(m.det)


@dataclass(frozen=True, eq=False)
class Mobius(DevelopingMap):
    m: MobiusMap = field(default_factory=MobiusMap.identity)
    kind = "mobius"

    def pair(self, zs):
        zs = _as_array(zs)
        m = self.m
        return m.a * zs + m.b, m.c * zs + m.d, np.full(zs.shape, np.log(m.det))

    def rotate(self, phi: SphereRotation) -> Mobius:
        return Mobius(phi.as_mobius().compose(self.m))

    def to_json(self) -> dict:
        return {"kind": "mobius", "coefficients": [[v.real, v.imag] for v in (self.m.a, self.m.b, self.m.c, self.m.d)]}


@dataclass(frozen=True, eq=False)
class ExpFamily(DevelopingMap):
    """f = φ ∘ (t + e^z) for t ≥ 0 and an optional sphere rotation φ."""

    t: float = 0.0
    rotation: SphereRotation | None = None
    kind = "exp_family"

    def __post_init__(self):
        t = float(self.t)
        if not (math.isfinite(t) and t >= 0):
            raise ValueError("exp_family parameter t must be a finite number >= 0")
        object.__setattr__(self, "t", t)

    def pair(self, zs):
        zs = _as_array(zs)
        # for Re z > 0 divide the pair by e^z to keep it bounded
        big = zs.real > 0
        scale = np.exp(np.where(big, -zs, 0))
        ez = np.exp(np.where(big, 0, zs))
        N = self.t * scale + ez
        D = scale + 0j
        logW = np.where(big, -zs, zs)
        if self.rotation is not None:
            N, D, logW = _apply_matrix(self.rotation.as_mobius(), N, D, logW)
        return N, D, logW

    def rotate(self, phi: SphereRotation) -> ExpFamily:
        r = phi if self.rotation is None else phi.compose(self.rotation)
        return ExpFamily(self.t, r)

    def to_json(self) -> dict:
        out = {"kind": "exp_family", "t": self.t}
        if self.rotation is not None:
            p, q = self.rotation.p, self.rotation.q
            out["rotation"] = {"p": [p.real, p.imag], "q": [q.real, q.imag]}
        return out


class OdeQuotient(DevelopingMap):
    """f = w1 / w2 for two solutions of w'' + P(z) w = 0 seeded at ``base``.

    ``seeds`` are ((w1, w1'), (w2, w2')) at the base point.  Ray integrations
    requested through :meth:`ray` are cached; the cache is shared between
    threads and guarded by a lock.
    """

    kind = "ode_quotient"

    def __init__(self, P: PolynomialP, seeds=((1.0, 0.0), (0.0, 1.0)),
                 settings: IntegratorSettings | None = None, base: complex = 0j):
        (a, da), (b, db) = seeds
        self.P = P
        self.seeds = ((complex(a), complex(da)), (complex(b), complex(db)))
        self.settings = settings or IntegratorSettings()
        self.base = complex(base)
        self.y0 = np.array([a, da, b, db], dtype=np.complex128)
        self.w0 = complex(self.y0[0] * self.y0[3] - self.y0[2] * self.y0[1])
        if abs(self.w0) <= 1e-14 * max(1.0, float(np.max(np.abs(self.y0))) ** 2):
            raise ValueError("seed pairs must be linearly independent (nonzero Wronskian)")
        self._coeffs = P.as_array()
        self._cache: dict = {}
        self._lock = threading.Lock()

    def __repr__(self):
        return f"OdeQuotient(P={self.P.coefficients}, seeds={self.seeds})"

    def _states(self, zs):
        st = self.settings
        out, outL, _, status = taylor.eval_points(self._coeffs, self.base, self.y0, self.w0, zs,
                                                   st.order, st.tol, st.max_steps)
        bad = np.nonzero(status)[0]
        if bad.size:
            check_status(int(status[bad[0]]), f"z={zs[bad[0]]:.6g}")
        return out, outL

    def pair(self, zs):
        zs = _as_array(zs)
        out, outL = self._states(zs)
        return out[:, 0], out[:, 2], np.log(-self.w0) - 2.0 * outL

    def pair_cluster(self, centre, offsets):
        st = self.settings
        offsets = _as_array(offsets)
        out, outL, _, status = taylor.eval_cluster(self._coeffs, self.base, self.y0, self.w0, complex(centre),
                                                   offsets, st.order, st.tol, st.max_steps)
        check_status(int(status), f"z={centre:.6g}")
        return out[:, 0], out[:, 2], np.log(-self.w0) - 2.0 * outL

    def ray_at(self, theta: float, s) -> RaySolution:
        """Cached ray integration sampled at the increasing distances ``s``."""
        s = np.asarray(s, dtype=float)
        key = (round(float(theta), 12), float(s[0]), float(s[-1]), int(s.size), hash(s.tobytes()))
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        sol = integrate_pair_ray(self.P, theta, s, self.y0, self.settings, self.base)
        with self._lock:
            return self._cache.setdefault(key, sol)

    def ray(self, theta: float, radius: float, samples: int = 201) -> RaySolution:
        return self.ray_at(theta, np.linspace(0.0, radius, samples))

    def ray_values(self, theta: float, s) -> np.ndarray:
        """log f^# at distances ``s`` along the ray of direction ``theta``."""
        return self.ray_at(theta, s).log_spherical_derivative()

    def clear_cache(self):
        with self._lock:
            self._cache.clear()

    def rotate(self, phi: SphereRotation) -> OdeQuotient:
        p, q = phi.p, phi.q
        (a, da), (b, db) = self.seeds
        new = ((p * a - q.conjugate() * b, p * da - q.conjugate() * db),
               (q * a + p.conjugate() * b, q * da + p.conjugate() * db))
        return OdeQuotient(self.P, new, self.settings, self.base)

    def to_json(self) -> dict:
        return {"kind": "ode_quotient", "P": self.P.to_json(),
                "seeds": [[[v.real, v.imag] for v in pair] for pair in self.seeds]}


def spherical_derivative(f: DevelopingMap, z) -> float:
    return f.spherical_derivative(z)


def rotate(f: DevelopingMap, phi: SphereRotation) -> DevelopingMap:
    return f.rotate(phi)


BREAKDOWN = 1e-12


_RING = np.exp(2j * np.pi * np.arange(8) / 8)


def _ring_schwarzian(dg, h):
    # central differences averaged over four directions through the centre;
    # for analytic g the leading error is O(h^8)
    gp = np.sum(dg / _RING) / (8 * h)
    gpp = np.sum(dg / _RING ** 2) / (4 * h * h)
    return gpp - 0.5 * gp * gp


def schwarzian(f: DevelopingMap, z, h: float = 1e-3) -> complex:
    """Schwarzian derivative of f at z from central differences of g = log f'.

    Computes g'' - g'^2/2 with steps h and h/2 and combines the two by
    Richardson extrapolation.
    """
    if not 0 < h <= 0.1:
        raise ValueError("step h must lie in (0, 0.1]")
    z = complex(z)
    offsets = np.concatenate([[0], h * _RING, 0.5 * h * _RING])
    g0, dg = f.log_derivative_cluster(z, offsets)
    with np.errstate(invalid="ignore"):
        logabs = g0.real + dg.real
    if not (np.all(np.isfinite(dg)) and np.isfinite(g0)) or np.min(logabs) < math.log(BREAKDOWN):
        raise DerivativeBreakdown(f"|f'| below {BREAKDOWN:g} near z={z:.6g}")
    dg = dg.real + 1j * np.angle(np.exp(1j * dg.imag))
    s_h = _ring_schwarzian(dg[1:9], h)
    s_h2 = _ring_schwarzian(dg[9:], h / 2)
    return complex((256 * s_h2 - s_h) / 255)


@dataclass(frozen=True)
class UnivalenceReport:
    samples: int
    min_sharp: float
    argmin: complex
    tolerance: float
    passed: bool


def sample_rectangle(region, samples: int) -> np.ndarray:
    """Tensor grid of about ``samples`` points with an odd count per axis (so the centre is hit)."""
    x0, x1, y0, y1 = map(float, region)
    n = max(1, int(round(math.sqrt(samples))))
    if n % 2 == 0:
        n += 1
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    X, Y = np.meshgrid(xs, ys)
    return (X + 1j * Y).ravel()


def local_univalence_check(f: DevelopingMap, region, samples: int, tolerance: float = 1e-10) -> UnivalenceReport:
    if samples < 1:
        raise ValueError("samples must be >= 1")
    zs = sample_rectangle(region, samples)
    with np.errstate(divide="ignore"):
        ls = f.log_spherical_derivative(zs)
    sharp = np.exp(ls)
    bad = ~(sharp > tolerance)
    if np.any(bad):
        raise UnivalenceViolation(zs[bad], sharp[bad])
    i = int(np.argmin(sharp))
    return UnivalenceReport(int(zs.size), float(sharp[i]), complex(zs[i]), tolerance, True)
