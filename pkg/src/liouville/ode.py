"""Stokes sectors, ray integration and asymptotic fits for w'' + P(z) w = 0."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import taylor
from .developing import OdeQuotient
from .errors import FitDegenerate
from .polynomial import PolynomialP
from .rays import IntegratorSettings, RaySolution, check_status, integrate_pair_ray
from .solution import FromMap, SolutionField, polar_sup

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class SectorDecomposition:
    """The d+2 oscillatory (Stokes) directions of P and the open sectors between them.

    Direction j is (2πj - arg a)/(d+2) reduced into [0, 2π), where both
    solutions are oscillatory because Im(sqrt(a) z^{d/2+1}) = 0 there.
    Sector j is the open arc from direction j to direction j+1.
    """

    d: int
    a: complex
    directions: tuple

    @property
    def order(self) -> float:
        return self.d / 2 + 1

    @property
    def count(self) -> int:
        return len(self.directions)

    def sector(self, j: int) -> tuple:
        lo = self.directions[j % self.count]
        hi = self.directions[(j + 1) % self.count]
        if hi <= lo:
            hi += TWO_PI
        return lo, hi

    def bisector(self, j: int) -> float:
        lo, hi = self.sector(j)
        return 0.5 * (lo + hi)

    def predicted_profile(self) -> tuple:
        """(c, θ0) with u ≈ -c r^ρ |sin(ρ(θ - θ0))| from the WKB phase 2 sqrt(a) z^ρ / (2ρ)."""
        rho = self.order
        return 2 * math.sqrt(abs(self.a)) / rho, (-np.angle(self.a) / (2 * rho)) % (math.pi / rho)


def stokes_directions(P: PolynomialP) -> SectorDecomposition:
    if P.is_zero:
        raise ValueError("the zero polynomial has no Stokes directions")
    d, a = P.degree, P.leading
    th = [((TWO_PI * j - np.angle(a)) / (d + 2)) % TWO_PI for j in range(d + 2)]
    th = sorted(float(v) for v in th)
    return SectorDecomposition(d, complex(a), tuple(th))


def integrate_ray(P: PolynomialP, theta: float, s_max: float, w0, dw0, samples: int = 201,
                  settings: IntegratorSettings = IntegratorSettings()) -> RaySolution:
    """Integrate two solutions along the ray s e^{iθ}, 0 <= s <= s_max.

    ``w0`` = (w1(0), w2(0)) and ``dw0`` = (w1'(0), w2'(0)).
    """
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    y0 = (w0[0], dw0[0], w0[1], dw0[1])
    return integrate_pair_ray(P, theta, np.linspace(0.0, s_max, samples), y0, settings)


def quotient_field(P: PolynomialP, seeds=((1.0, 0.0), (0.0, 1.0)),
                   settings: IntegratorSettings | None = None) -> OdeQuotient:
    """f = w1/w2 with (w_i(0), w_i'(0)) = seeds[i]."""
    return OdeQuotient(P, seeds, settings)


@dataclass(frozen=True)
class AsymptoticFit:
    sector: int
    exponent: float
    exponent_per_direction: tuple
    c: float
    theta0: float
    directions: tuple
    amplitudes: tuple
    radii: tuple
    predicted_c: float
    predicted_theta0: float

    def to_json(self) -> dict:
        return {"sector": self.sector, "exponent": self.exponent, "c": self.c, "theta0": self.theta0,
                "predicted_c": self.predicted_c, "predicted_theta0": self.predicted_theta0,
                "directions": list(self.directions), "exponent_per_direction": list(self.exponent_per_direction),
                "amplitudes": list(self.amplitudes), "radii": list(self.radii)}


def _field_polynomial(u: SolutionField) -> PolynomialP:
    p = u.provenance
    if not (isinstance(p, FromMap) and isinstance(p.f, OdeQuotient)):
        raise TypeError("field must come from quotient_field")
    return p.f.P


DEFAULT_FIT_RADII = tuple(np.geomspace(20.0, 60.0, 8))


def fit_asymptotics(u: SolutionField, sector: int, radii=DEFAULT_FIT_RADII, n_directions: int = 9,
                    margin: float = 0.25) -> AsymptoticFit:
    """Fit u(re^{iθ}) ≈ -c r^ρ |sin(ρ(θ - θ0))| inside one sector.

    The exponent comes from per-direction least squares of log(-u) against
    log r.  With ρ fixed at d/2 + 1 the amplitude of -u/r^ρ is then linear in
    (sin ρθ, cos ρθ), which gives c and θ0 by linear least squares.
    ``margin`` is the fraction of the sector width kept clear of each edge.
    """
    P = _field_polynomial(u)
    sd = stokes_directions(P)
    radii = np.asarray(radii, dtype=float)
    if radii.size < 5 or np.any(np.diff(radii) <= 0) or radii[0] <= 0:
        raise ValueError("need at least 5 increasing positive radii")
    if n_directions < 9:
        raise ValueError("need at least 9 interior directions")
    lo, hi = sd.sector(sector)
    w = hi - lo
    thetas = np.linspace(lo + margin * w, hi - margin * w, n_directions)
    U = u.polar(thetas, radii)
    if not np.all(np.isfinite(U)) or np.any(U >= 0):
        raise FitDegenerate("u is not negative at every fit point; move away from the Stokes directions")
    lr = np.log(radii)
    slopes = np.array([stats.linregress(lr, np.log(-row)).slope for row in U])
    exponent = float(np.mean(slopes))
    rho = sd.order
    # amplitude per direction: least squares of -u against r^ρ with an intercept
    X = np.column_stack([radii ** rho, np.ones_like(radii)])
    amps = np.array([np.linalg.lstsq(X, -row, rcond=None)[0][0] for row in U])
    A = np.column_stack([np.sin(rho * thetas), np.cos(rho * thetas)])
    (alpha, beta), *_ = np.linalg.lstsq(A, amps, rcond=None)
    # alpha sin(ρθ) + beta cos(ρθ) = c sin(ρ(θ - θ0)) up to an overall sign
    c = float(math.hypot(alpha, beta))
    theta0 = float((-math.atan2(beta, alpha) / rho) % (math.pi / rho))
    pc, pt = sd.predicted_profile()
    return AsymptoticFit(sector, exponent, tuple(map(float, slopes)), c, theta0, tuple(map(float, thetas)),
                         tuple(map(float, amps)), tuple(map(float, radii)), pc, pt)


@dataclass(frozen=True)
class StokesGrowth:
    direction: float
    slope: float
    literal: float
    radii: tuple
    sups: tuple


def stokes_curve_angle(P: PolynomialP, theta: float, r: float) -> float:
    """Angle near ``theta`` where the two-term WKB phase is real at radius r.

    The phase is sqrt(a) z^ρ/ρ + a_{d-1}/(2 sqrt(a)) z^{ρ-1}/(ρ-1); for d = 0
    the second term is absent and the curve is the ray itself.
    """
    d, a = P.degree, P.leading
    rho = d / 2 + 1
    if d == 0:
        return float(theta)
    sa = np.sqrt(complex(a))
    b = P.coefficients[-2] / (2 * sa * (rho - 1))

    def phase(th):
        zr = np.exp(rho * complex(math.log(r), th))
        return sa * zr / rho + b * zr / (r * np.exp(1j * th))

    th = float(theta)
    for _ in range(30):
        f = phase(th).imag
        df = (phase(th + 1e-7).imag - phase(th - 1e-7).imag) / 2e-7
        if df == 0:
            break
        step = f / df
        th -= step
        if abs(step) < 1e-14:
            break
    return th if abs(th - theta) < 0.5 else float(theta)


def stokes_growth(u: SolutionField, radii=None, width: float = 3.0, offsets: int = 41) -> list:
    """Growth of u along each Stokes direction θ_j.

    For each radius r the supremum of u is taken over r/2 <= |z| <= r and a
    thin wedge around θ_j in which the WKB phase has imaginary part at most
    ``width``; the wedge narrows like r^{-ρ}, so it follows the ridge of u
    and not the neighbouring sectors.  The slope of these suprema against
    log r estimates lim u/log|z| along the direction.  ``literal`` is
    max u / log r on the outermost ray segment exactly on θ_j, which still
    carries the additive constant of u.
    """
    P = _field_polynomial(u)
    sd = stokes_directions(P)
    rho = sd.order
    radii = np.asarray(np.geomspace(10.0, 30.0, 8) if radii is None else radii, dtype=float)
    out = []
    for th in sd.directions:
        sups = []
        for r in radii:
            half = width / (math.sqrt(abs(sd.a)) * (r / 2) ** rho)
            centre_angle = stokes_curve_angle(P, th, 0.75 * r)
            thetas = centre_angle + np.linspace(-half, half, offsets)
            sups.append(polar_sup(u, thetas, r / 2, r, radial=64, polish=3, clip_angle=True)[0])
        sups = np.array(sups)
        # sup ≈ k log r + C + D r^{-ρ}: the last term is the first WKB correction
        X = np.column_stack([np.log(radii), np.ones_like(radii), radii ** -rho])
        slope = float(np.linalg.lstsq(X, sups, rcond=None)[0][0])
        s = np.linspace(radii[-1] / 2, radii[-1], 2048)
        literal = float(np.max(u.polar([th], s)[0]) / math.log(radii[-1]))
        out.append(StokesGrowth(float(th), slope, literal, tuple(map(float, radii)), tuple(map(float, sups))))
    return out


@dataclass(frozen=True)
class SubdominanceReport:
    sector: int
    theta: float
    slope: float
    r_squared: float
    s: tuple
    log_abs_w: tuple


def subdominance_check(P: PolynomialP, sector: int, s_max: float = 8.0, samples: int = 41,
                       settings: IntegratorSettings = IntegratorSettings()) -> SubdominanceReport:
    """log|w| of the solution decaying along the sector bisector, against s^ρ.

    The decaying solution is obtained by integrating inward from s_max with
    the WKB decaying data w' = -i sqrt(P) w (sign chosen to decay outward);
    inward it is the growing solution, so the integration is stable.
    """
    sd = stokes_directions(P)
    th = sd.bisector(sector)
    e = complex(math.cos(th), math.sin(th))
    zS = s_max * e
    root = complex(np.sqrt(P(zS)))
    # outward decay along e: Re(i root e) > 0 picks w ~ exp(-i root z)
    k = 1j * root if (1j * root * e).real > 0 else -1j * root
    y0 = np.array([1.0, -k, 0.0, 1.0], dtype=np.complex128)
    w0 = complex(y0[0] * y0[3] - y0[2] * y0[1])
    s = np.linspace(0.0, s_max, samples)
    fracs = 1.0 - s[::-1] / s_max
    out, outL, _, _, _, _, status = taylor.advance(P.as_array(), zS, y0, 0.0, w0, 0j, fracs,
                                                   settings.order, settings.tol, settings.max_steps)
    check_status(int(status))
    logw = (np.log(np.abs(out[:, 0])) + outL)[::-1]
    x = s ** sd.order
    keep = s >= 0.25 * s_max
    fit = stats.linregress(x[keep], logw[keep])
    return SubdominanceReport(sector, float(th), float(fit.slope), float(fit.rvalue ** 2),
                              tuple(map(float, s)), tuple(map(float, logw)))
