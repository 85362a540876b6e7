"""Solutions of -Δu = e^{2u}: closed-form families, transforms and numerical checks."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy import optimize, stats

from .developing import DevelopingMap, ExpFamily, Mobius, OdeQuotient, sample_rectangle
from .errors import ConservationViolation, SnapAmbiguous
from .sphere import MobiusMap

LN2 = math.log(2.0)


# ---------------------------------------------------------------- provenance

@dataclass(frozen=True)
class Radial:
    """u = ln 2 - ln(1 + |z|^2)."""
    family = "radial"


@dataclass(frozen=True)
class TFamily:
    """u = ln(2 e^x / (1 + t^2 + 2 t e^x cos y + e^{2x})), the log of (t + e^z)^#."""
    t: float = 0.0
    family = "t_family"

    def __post_init__(self):
        if not (math.isfinite(self.t) and self.t >= 0):
            raise ValueError("t must be a finite number >= 0")


@dataclass(frozen=True)
class OneDim:
    """u = ln λ + ln sech(λ (ω·z + b)) with ω a unit vector."""
    lam: float = 1.0
    b: float = 0.0
    omega: tuple = (1.0, 0.0)
    family = "one_dim"

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError("lambda must be positive")
        w = np.asarray(self.omega, dtype=float)
        n = float(np.hypot(*w))
        if w.shape != (2,) or not n > 0:
            raise ValueError("omega must be a nonzero 2-vector")
        if abs(n - 1.0) > 1e-9:
            raise ValueError("omega must be a unit vector")
        object.__setattr__(self, "omega", (float(w[0] / n), float(w[1] / n)))


@dataclass(frozen=True)
class FromMap:
    """u = log f^# for a developing map f."""
    f: DevelopingMap
    family = "from_map"


@dataclass(frozen=True)
class Constant:
    """u identically equal to ``value``; not a solution, used to exercise failure paths."""
    value: float = 0.0
    family = "constant"


@dataclass(frozen=True)
class Transform:
    """z -> scale * z + shift, acting on fields by u -> ln|scale| + u(scale z + shift)."""
    scale: complex = 1.0
    shift: complex = 0.0

    def __post_init__(self):
        s, z0 = complex(self.scale), complex(self.shift)
        if s == 0 or not all(math.isfinite(v) for v in (s.real, s.imag, z0.real, z0.imag)):
            raise ValueError("transform scale must be nonzero and all parameters finite")
        object.__setattr__(self, "scale", s)
        object.__setattr__(self, "shift", z0)

    @property
    def is_identity(self) -> bool:
        return self.scale == 1 and self.shift == 0

    @property
    def matrix(self) -> np.ndarray:
        s = self.scale
        return np.array([[s.real, -s.imag], [s.imag, s.real]])

    @classmethod
    def random(cls, rng: np.random.Generator, max_log_scale=math.log(2.0), max_shift=5.0) -> Transform:
        mod = math.exp(rng.uniform(-max_log_scale, max_log_scale))
        arg = rng.uniform(0, 2 * math.pi)
        return cls(mod * complex(math.cos(arg), math.sin(arg)),
                   complex(*rng.uniform(-max_shift, max_shift, 2)))


# ---------------------------------------------------------------- base evaluators

def _radial(x, y):
    r2 = x * x + y * y
    q = 1.0 + r2
    u = LN2 - np.log1p(r2)
    g = np.stack([-2 * x / q, -2 * y / q], axis=-1)
    h = np.empty(x.shape + (2, 2))
    h[..., 0, 0] = -2 / q + 4 * x * x / q ** 2
    h[..., 1, 1] = -2 / q + 4 * y * y / q ** 2
    h[..., 0, 1] = h[..., 1, 0] = 4 * x * y / q ** 2
    return u, g, h


def _tfamily(t, x, y):
    # Q = 1 + t^2 + 2 t e^x cos y + e^{2x}, everything scaled by e^{-2m}, m = max(x, 0)
    m = np.maximum(x, 0.0)
    e0 = np.exp(-2 * m)
    e1 = np.exp(x - 2 * m)
    e2 = np.exp(2 * x - 2 * m)
    c, s = np.cos(y), np.sin(y)
    Q = (1 + t * t) * e0 + 2 * t * e1 * c + e2
    Qx = 2 * t * e1 * c + 2 * e2
    Qy = -2 * t * e1 * s
    Qxx = 2 * t * e1 * c + 4 * e2
    Qxy = -2 * t * e1 * s
    Qyy = -2 * t * e1 * c
    u = LN2 + x - 2 * m - np.log(Q)
    g = np.stack([1 - Qx / Q, -Qy / Q], axis=-1)
    h = np.empty(x.shape + (2, 2))
    h[..., 0, 0] = -(Qxx / Q - (Qx / Q) ** 2)
    h[..., 1, 1] = -(Qyy / Q - (Qy / Q) ** 2)
    h[..., 0, 1] = h[..., 1, 0] = -(Qxy / Q - Qx * Qy / Q ** 2)
    return u, g, h


def _onedim(lam, b, om, x, y):
    s = lam * (om[0] * x + om[1] * y + b)
    a = np.abs(s)
    u = math.log(lam) - (a + np.log1p(np.exp(-2 * a)) - LN2)
    th = np.tanh(s)
    sech2 = 1.0 - th * th
    g = np.stack([-lam * th * om[0], -lam * th * om[1]], axis=-1)
    h = np.empty(x.shape + (2, 2))
    w = np.array(om)
    h[...] = -(lam * lam * sech2)[..., None, None] * np.outer(w, w)
    return u, g, h


# finite-difference offsets (in units of the step) for gradient and Hessian
_FD_OFFSETS = np.array([0, 1, -1, 1j, -1j, 1 + 1j, 1 - 1j, -1 + 1j, -1 - 1j])


@dataclass(frozen=True, eq=False)
class SolutionField:
    """A candidate solution u with its provenance and a transform record."""

    provenance: object
    transform: Transform = field(default_factory=Transform)
    fd_step: float = 1e-3

    # ------------------------------------------------------------ evaluation
    def _base(self, w, want_derivs):
        p = self.provenance
        x, y = w.real, w.imag
        if isinstance(p, Radial):
            return _radial(x, y)
        if isinstance(p, TFamily):
            return _tfamily(p.t, x, y)
        if isinstance(p, OneDim):
            return _onedim(p.lam, p.b, p.omega, x, y)
        if isinstance(p, Constant):
            return np.full(x.shape, float(p.value)), np.zeros(x.shape + (2,)), np.zeros(x.shape + (2, 2))
        if isinstance(p, FromMap):
            u = p.f.log_spherical_derivative(w.ravel()).reshape(w.shape)
            if not want_derivs:
                return u, None, None
            g, h = self._fd_derivs(w)
            return u, g, h
        raise TypeError(f"unknown provenance {p!r}")

    def _fd_derivs(self, w):
        # central differences at steps h and h/2 combined by Richardson extrapolation
        f = self.provenance.f
        flat = w.ravel()
        out_g, out_h = [], []
        for h in (self.fd_step, self.fd_step / 2):
            pts = flat[:, None] + h * _FD_OFFSETS[None, :]
            v = f.log_spherical_derivative(pts.ravel()).reshape(pts.shape)
            v = v - v[:, :1]
            gx = (v[:, 1] - v[:, 2]) / (2 * h)
            gy = (v[:, 3] - v[:, 4]) / (2 * h)
            hxx = (v[:, 1] + v[:, 2]) / (h * h)
            hyy = (v[:, 3] + v[:, 4]) / (h * h)
            hxy = (v[:, 5] - v[:, 6] - v[:, 7] + v[:, 8]) / (4 * h * h)
            out_g.append(np.stack([gx, gy], -1))
            H = np.empty((flat.size, 2, 2))
            H[:, 0, 0], H[:, 1, 1] = hxx, hyy
            H[:, 0, 1] = H[:, 1, 0] = hxy
            out_h.append(H)
        g = (4 * out_g[1] - out_g[0]) / 3
        H = (4 * out_h[1] - out_h[0]) / 3
        return g.reshape(w.shape + (2,)), H.reshape(w.shape + (2, 2))

    def _eval(self, zs, want_derivs):
        zs = np.asarray(zs, dtype=np.complex128)
        T = self.transform
        w = T.scale * zs + T.shift
        u, g, h = self._base(w, want_derivs)
        u = u + math.log(abs(T.scale))
        if want_derivs and not T.is_identity:
            M = T.matrix
            g = g @ M
            h = np.einsum("ji,...jk,kl->...il", M, h, M)
        return u, g, h

    def __call__(self, zs):
        return self._eval(zs, False)[0]

    def u(self, zs):
        return self._eval(zs, False)[0]

    def gradient(self, zs):
        return self._eval(zs, True)[1]

    def hessian(self, zs):
        return self._eval(zs, True)[2]

    @property
    def has_closed_form(self) -> bool:
        return not isinstance(self.provenance, FromMap)

    def developing_map(self) -> DevelopingMap | None:
        """A developing map f with u = log f^#, or None for the constant test double."""
        p = self.provenance
        T = self.transform
        if isinstance(p, Radial):
            # (λz + z0) is a Möbius map already
            return Mobius(MobiusMap(T.scale, T.shift, 0, 1))
        if isinstance(p, Constant):
            return None
        if isinstance(p, TFamily):
            base, inner = ExpFamily(p.t), Transform()
        elif isinstance(p, OneDim):
            base = ExpFamily(0.0)
            inner = Transform(p.lam * complex(p.omega[0], -p.omega[1]), p.lam * p.b)
        else:
            base, inner = p.f, Transform()
        scale = inner.scale * T.scale
        shift = inner.scale * T.shift + inner.shift
        if scale == 1 and shift == 0:
            return base
        return Precomposed(base, scale, shift)

    @property
    def centre(self) -> complex:
        """Preimage of the base family's origin under the transform."""
        return -self.transform.shift / self.transform.scale

    def polar(self, thetas, rs, centre: complex = 0j) -> np.ndarray:
        """u at ``centre + r e^{iθ}``, shape (len(thetas), len(rs))."""
        thetas = np.asarray(thetas, dtype=float)
        rs = np.asarray(rs, dtype=float)
        p = self.provenance
        if (isinstance(p, FromMap) and isinstance(p.f, OdeQuotient) and self.transform.is_identity
                and centre == 0 and p.f.base == 0 and rs.size > 1 and np.all(np.diff(rs) > 0)):
            return np.array([p.f.ray_values(th, rs) for th in thetas])
        z = centre + rs[None, :] * np.exp(1j * thetas)[:, None]
        return self.u(z)


class Precomposed(DevelopingMap):
    """z -> f(scale * z + shift)."""

    kind = "precomposed"

    def __init__(self, f: DevelopingMap, scale: complex, shift: complex):
        self.f, self.scale, self.shift = f, complex(scale), complex(shift)

    def pair(self, zs):
        N, D, logW = self.f.pair(self.scale * np.atleast_1d(np.asarray(zs, dtype=np.complex128)) + self.shift)
        return N, D, logW + np.log(self.scale)

    def pair_cluster(self, centre, offsets):
        N, D, logW = self.f.pair_cluster(self.scale * centre + self.shift, self.scale * np.asarray(offsets))
        return N, D, logW + np.log(self.scale)

    def rotate(self, phi):
        return Precomposed(self.f.rotate(phi), self.scale, self.shift)


def make_solution(provenance, transform: Transform | None = None) -> SolutionField:
    return SolutionField(provenance, transform or Transform())


# ---------------------------------------------------------------- PDE residual

_LAP_OFFSETS = np.array([0, 1, -1, 1j, -1j])


def pde_residual(u: SolutionField, z, h: float = 1e-3):
    """Δu + e^{2u} from the 5-point Laplacian at steps h and h/2 with Richardson extrapolation.

    Accepts a scalar or an array of points.
    """
    if not 0 < h <= 0.1:
        raise ValueError("step h must lie in (0, 0.1]")
    z = np.asarray(z, dtype=np.complex128)
    flat = z.ravel()
    pts = flat[:, None] + np.concatenate([h * _LAP_OFFSETS, 0.5 * h * _LAP_OFFSETS[1:]])[None, :]
    v = u(pts.ravel()).reshape(pts.shape)
    centre = v[:, 0]
    d = v - centre[:, None]
    lap_h = d[:, 1:5].sum(axis=1) / (h * h)
    lap_h2 = d[:, 5:9].sum(axis=1) / (h * h / 4)
    lap = (4 * lap_h2 - lap_h) / 3
    res = (lap + np.exp(2 * centre)).reshape(z.shape)
    return float(res) if res.ndim == 0 else res


# ---------------------------------------------------------------- growth classification

SNAP_THRESHOLD = 0.2
DEFAULT_RADII = tuple(np.geomspace(25.0, 200.0, 10))
DEFAULT_ODE_RADII = tuple(np.geomspace(7.5, 60.0, 10))


def allowed_growth(raw: float) -> Fraction:
    """Nearest element of {-2} ∪ {j/2 : j >= 0}."""
    half = max(0, int(round(2 * raw)))
    cand = Fraction(half, 2)
    if abs(raw + 2) < abs(raw - float(cand)):
        return Fraction(-2)
    return cand


@dataclass(frozen=True)
class GrowthClass:
    k: Fraction
    raw: float
    ci: tuple
    gap: float
    radii: tuple
    sups: tuple
    literal: float

    def to_json(self) -> dict:
        return {"k": float(self.k), "k_text": str(self.k), "raw": self.raw, "gap": self.gap,
                "ci": list(self.ci), "radii": list(self.radii), "annulus_sup": list(self.sups),
                "max_u_over_log_r": self.literal}


def polar_sup(u: SolutionField, thetas, r_lo: float, r_hi: float, radial: int = 12, polish: int = 4,
              centre: complex = 0j, line_samples: int = 2048, clip_angle: bool = False) -> tuple:
    """Supremum of u over centre + r e^{iθ}, r_lo <= r <= r_hi, θ in the span of ``thetas``.

    A polar grid locates candidates; the best ``polish`` of them (distinct
    directions) are refined with Nelder-Mead in (log r, θ).  Returns (value, z).
    """
    thetas = np.asarray(thetas, dtype=float)
    rs = np.geomspace(r_lo, r_hi, radial)
    U = u.polar(thetas, rs, centre)
    U = np.where(np.isfinite(U), U, -np.inf)
    flat = np.argsort(U, axis=None)[::-1]
    seeds, used = [], set()
    for idx in flat:
        i, j = divmod(int(idx), rs.size)
        if i in used:
            continue
        used.add(i)
        seeds.append((math.log(rs[j]), thetas[i]))
        if len(seeds) >= polish:
            break
    lo, hi = math.log(r_lo), math.log(r_hi)
    th_lo, th_hi = float(thetas.min()), float(thetas.max())
    dr = (hi - lo) / max(radial - 1, 1)
    dth = float(np.min(np.diff(np.sort(thetas)))) if thetas.size > 1 else 0.01

    def point(v):
        rho = min(max(v[0], lo), hi)
        th = min(max(v[1], th_lo), th_hi) if clip_angle else v[1]
        return rho, th

    def negu(v):
        rho, th = point(v)
        return -float(u(np.array([centre + math.exp(rho) * complex(math.cos(th), math.sin(th))]))[0])

    def polish_from(rho0, th0, scale):
        simplex = np.array([[rho0, th0], [rho0 + scale * dr, th0], [rho0, th0 + scale * dth]])
        res = optimize.minimize(negu, np.array([rho0, th0]), method="Nelder-Mead",
                                options={"initial_simplex": simplex, "xatol": 1e-11, "fatol": 1e-13,
                                         "maxiter": 800})
        rho, th = point(res.x)
        return rho, th, -float(res.fun)

    i0, j0 = divmod(int(flat[0]), rs.size)
    best_val = float(U[i0, j0])
    best_z = centre + rs[j0] * complex(math.cos(thetas[i0]), math.sin(thetas[i0]))
    line = np.geomspace(r_lo, r_hi, line_samples)
    for rho0, th0 in seeds:
        rho, th, val = polish_from(rho0, th0, 0.5)
        # ridges of u can be much narrower in angle than in radius and oscillate
        # along their length, so rescan the radial line through the polished point
        vals = u.polar([th], line, centre)[0]
        j = int(np.argmax(vals))
        if vals[j] > val:
            rho, th, val = polish_from(math.log(line[j]), th, 0.02)
        if val > best_val:
            best_val, best_z = val, centre + math.exp(rho) * complex(math.cos(th), math.sin(th))
    return best_val, best_z


def annulus_sup(u: SolutionField, r: float, directions: int = 256, radial: int = 12,
                polish: int = 4, centre: complex = 0j) -> tuple:
    """Supremum of u over r/2 <= |z - centre| <= r and the point attaining it."""
    thetas = 2 * np.pi * np.arange(directions) / directions
    return polar_sup(u, thetas, r / 2, r, radial, polish, centre)


def _default_radii(u: SolutionField):
    p = u.provenance
    if isinstance(p, FromMap) and isinstance(p.f, OdeQuotient):
        return DEFAULT_ODE_RADII
    return DEFAULT_RADII


def classify_growth(u: SolutionField, radii=None, directions: int = 256,
                    threshold: float = SNAP_THRESHOLD) -> GrowthClass:
    """Estimate limsup u(z)/log|z| and snap it to the admissible set.

    The estimate is the least-squares slope of the annulus suprema
    sup_{r/2<=|z-c|<=r} u against log r.  The naive ratio u/log r carries an
    O(1/log r) bias from the additive constant in u; the slope does not.
    Annuli are centred at c, the preimage of the base origin under the
    transform record, which removes the O(|c|/r) bias of a shifted field
    without changing the limsup.
    """
    radii = np.asarray(_default_radii(u) if radii is None else radii, dtype=float)
    if radii.size < 3 or np.any(np.diff(radii) <= 0) or radii[0] <= 1:
        raise ValueError("need at least 3 increasing radii greater than 1")
    if directions < 64:
        raise ValueError("directions must be >= 64")
    c = u.centre
    sups = np.array([annulus_sup(u, r, directions, centre=c)[0] for r in radii])
    x = np.log(radii)
    fit = stats.linregress(x, sups)
    raw = float(fit.slope)
    tq = stats.t.ppf(0.975, radii.size - 2)
    ci = (raw - tq * fit.stderr, raw + tq * fit.stderr)
    k = allowed_growth(raw)
    gap = abs(raw - float(k))
    # the literal running max of u / log r on the outermost circle, for reference
    thetas = 2 * np.pi * np.arange(directions) / directions
    literal = float(np.max(u.polar(thetas, radii[-1:], c)) / math.log(radii[-1]))
    if gap > threshold:
        raise SnapAmbiguous(raw, float(k))
    return GrowthClass(k, raw, (float(ci[0]), float(ci[1])), gap, tuple(map(float, radii)),
                       tuple(map(float, sups)), literal)


# ---------------------------------------------------------------- concavity, decay, 1-D check

def max_hessian_eigenvalue(H: np.ndarray) -> np.ndarray:
    a, b, c = H[..., 0, 0], H[..., 0, 1], H[..., 1, 1]
    return 0.5 * (a + c) + np.hypot(0.5 * (a - c), b)


@dataclass(frozen=True)
class ConcavityReport:
    samples: int
    max_eigenvalue: float
    witness: complex
    concave: bool
    tolerance: float

    @property
    def verdict(self) -> str:
        return "concave on samples" if self.concave else "not concave"


def concavity_report(u: SolutionField, window, samples: int, tolerance: float = 1e-8) -> ConcavityReport:
    if samples < 100:
        raise ValueError("samples must be >= 100")
    zs = sample_rectangle(window, samples)
    lam = max_hessian_eigenvalue(u.hessian(zs))
    i = int(np.argmax(lam))
    top = float(lam[i])
    return ConcavityReport(int(zs.size), top, complex(zs[i]), top <= tolerance, tolerance)


@dataclass(frozen=True)
class DecayReport:
    radii: tuple
    circle_min: tuple
    circle_max: tuple
    slope: float
    decays: bool
    label: str = "at sampled scales"


def decay_check(u: SolutionField, radii, directions: int = 256) -> DecayReport:
    """Does the circle maximum of u go to -infinity?  Only sampled scales are examined."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise ValueError("radii must be increasing")
    thetas = 2 * np.pi * np.arange(directions) / directions
    U = u.polar(thetas, radii)
    cmin = U.min(axis=0)
    cmax = U.max(axis=0)
    for j, r in enumerate(radii):
        i = int(np.argmax(U[:, j]))
        res = optimize.minimize_scalar(lambda th: -float(u(np.array([r * np.exp(1j * th)]))[0]),
                                       bounds=(thetas[i] - 2 * np.pi / directions, thetas[i] + 2 * np.pi / directions),
                                       method="bounded", options={"xatol": 1e-10})
        cmax[j] = max(cmax[j], -float(res.fun))
    slope = float(np.polyfit(np.log(radii), cmax, 1)[0])
    decays = bool(np.all(np.diff(cmax) < 0) and slope <= -0.5)
    return DecayReport(tuple(map(float, radii)), tuple(map(float, cmin)), tuple(map(float, cmax)), slope, decays)


@dataclass(frozen=True)
class OneDimReport:
    constant: float
    direction: tuple
    max_deviation: float
    samples: int


def one_dim_check(u: SolutionField, window, samples: int = 400, tolerance: float = 1e-8) -> OneDimReport:
    """Check that |∇u|^2 + e^{2u} is constant and recover the direction of variation."""
    zs = sample_rectangle(window, samples)
    vals, g, _ = u._eval(zs, True)
    energy = np.sum(g * g, axis=-1) + np.exp(2 * vals)
    const = float(np.median(energy))
    dev = float(np.max(np.abs(energy - const)))
    if dev > tolerance:
        raise ConservationViolation(dev, const)
    w, V = np.linalg.eigh(g.T @ g)
    om = V[:, -1]
    if om[np.argmax(np.abs(om))] < 0:
        om = -om
    return OneDimReport(const, (float(om[0]), float(om[1])), dev, int(zs.size))
