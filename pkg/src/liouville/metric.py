"""Lengths, grid geodesics and diameter under e^{2u}|dz|^2, plus Nevanlinna's A(r) and T(r)."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .developing import DevelopingMap, ExpFamily, Mobius, OdeQuotient
from .errors import QuadratureNonConvergence, WindowTooSmall
from .quadrature import adaptive_gauss, gauss_legendre
from .solution import FromMap, OneDim, Precomposed, Radial, SolutionField, TFamily, make_solution


def thread_count() -> int:
    """Worker cap from LIOUVILLE_THREADS (default: CPU count)."""
    raw = os.environ.get("LIOUVILLE_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


# ---------------------------------------------------------------- curves

@dataclass(frozen=True)
class Curve:
    """A piecewise-smooth plane curve.

    kinds:
      segment   params (z0, z1)
      arc       params (centre, radius, theta0, theta1)
      polyline  params (points,) or explicit samples via ``from_samples``
      line      params (point, direction): the whole line point + s*direction
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind == "segment":
            z0, z1 = map(complex, self.params)
            if z0 == z1:
                raise ValueError("segment endpoints must differ")
            object.__setattr__(self, "params", (z0, z1))
        elif self.kind == "arc":
            c, r, a, b = self.params
            if not (r > 0 and a != b):
                raise ValueError("arc needs positive radius and distinct angles")
            object.__setattr__(self, "params", (complex(c), float(r), float(a), float(b)))
        elif self.kind == "polyline":
            pts = np.asarray(self.params[0], dtype=np.complex128)
            if pts.size < 2 or np.any(pts[1:] == pts[:-1]):
                raise ValueError("polyline needs at least 2 points with distinct consecutive points")
            object.__setattr__(self, "params", (tuple(complex(p) for p in pts),))
        elif self.kind == "line":
            p, d = map(complex, self.params)
            if d == 0:
                raise ValueError("line direction must be nonzero")
            object.__setattr__(self, "params", (p, d))
        else:
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @classmethod
    def segment(cls, z0, z1):
        return cls("segment", (z0, z1))

    @classmethod
    def arc(cls, centre, radius, theta0, theta1):
        return cls("arc", (centre, radius, theta0, theta1))

    @classmethod
    def polyline(cls, points):
        return cls("polyline", (points,))

    @classmethod
    def line(cls, point, direction):
        return cls("line", (point, direction))

    @classmethod
    def from_samples(cls, samples):
        """Curve through samples [(t_i, z_i)] with strictly increasing t_i (as a polyline)."""
        ts = np.array([s[0] for s in samples], dtype=float)
        if ts.size < 2 or np.any(np.diff(ts) <= 0):
            raise ValueError("sample parameters must be strictly increasing")
        return cls.polyline([s[1] for s in samples])

    @property
    def endpoints(self) -> tuple:
        k, p = self.kind, self.params
        if k == "segment":
            return p
        if k == "arc":
            c, r, a, b = p
            return c + r * np.exp(1j * a), c + r * np.exp(1j * b)
        if k == "polyline":
            return p[0][0], p[0][-1]
        return None, None

    def pieces(self):
        """Smooth pieces as (a, b, z(t), |z'(t)|) on finite parameter intervals."""
        k, p = self.kind, self.params
        if k == "segment":
            yield from Curve._seg(*p)
        elif k == "polyline":
            pts = p[0]
            for z0, z1 in zip(pts[:-1], pts[1:]):
                yield from Curve._seg(z0, z1)
        elif k == "arc":
            c, r, a, b = p
            lo, hi = min(a, b), max(a, b)
            yield lo, hi, (lambda t: c + r * np.exp(1j * t)), (lambda t: np.full(np.shape(t), r))
        else:
            z0, d = p
            ad = abs(d)
            # s = tan(t) maps (-π/2, π/2) onto the whole line
            yield (-0.5 * math.pi, 0.5 * math.pi, (lambda t: z0 + d * np.tan(t)),
                   (lambda t: ad / np.cos(t) ** 2))

    @staticmethod
    def _seg(z0, z1):
        d = z1 - z0
        yield 0.0, 1.0, (lambda t: z0 + d * t), (lambda t: np.full(np.shape(t), abs(d)))


def curve_length(u: SolutionField, curve: Curve, order: int = 10, rtol: float = 1e-10) -> float:
    """Length of ``curve`` in the metric e^{u}|dz| by adaptive Gauss quadrature."""
    total = 0.0
    for a, b, z, speed in curve.pieces():
        def integrand(t, z=z, speed=speed):
            sp = speed(t)
            out = np.zeros_like(t)
            ok = np.isfinite(sp)
            zz = z(t[ok])
            good = np.isfinite(zz)
            vals = np.zeros(zz.shape)
            vals[good] = np.exp(u(zz[good])) * sp[ok][good]
            out[ok] = vals
            return out
        total += adaptive_gauss(integrand, a, b, order=order, rtol=rtol).value
    return float(total)


# ---------------------------------------------------------------- grids and Dijkstra

@dataclass(frozen=True, eq=False)
class ConformalGrid:
    """Nodes xs × ys with conformal factor e^{u} sampled at each node (row index = y)."""

    xs: np.ndarray
    ys: np.ndarray
    u: np.ndarray
    weights: np.ndarray = field(init=False)

    def __post_init__(self):
        xs, ys = np.asarray(self.xs, float), np.asarray(self.ys, float)
        if xs.size < 16 or ys.size < 16:
            raise ValueError("grid needs at least 16 nodes per axis")
        for v in (xs, ys):
            dv = np.diff(v)
            if np.any(dv <= 0) or np.ptp(dv) > 1e-9 * dv.mean():
                raise ValueError("grid nodes must be equispaced and increasing")
        uu = np.asarray(self.u, float)
        if uu.shape != (ys.size, xs.size):
            raise ValueError("u must have shape (len(ys), len(xs))")
        w = np.exp(uu)
        if not np.all(np.isfinite(w) & (w > 0)):
            raise ValueError("conformal weights must be positive and finite")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "ys", ys)
        object.__setattr__(self, "u", uu)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_field(cls, field_: SolutionField, window, nx: int, ny: int) -> ConformalGrid:
        x0, x1, y0, y1 = map(float, window)
        return cls.from_nodes(field_, np.linspace(x0, x1, nx), np.linspace(y0, y1, ny))

    @classmethod
    def from_nodes(cls, field_: SolutionField, xs, ys) -> ConformalGrid:
        X, Y = np.meshgrid(xs, ys)
        return cls(xs, ys, field_(X + 1j * Y))

    @property
    def nx(self) -> int:
        return self.xs.size

    @property
    def ny(self) -> int:
        return self.ys.size

    @property
    def hx(self) -> float:
        return float((self.xs[-1] - self.xs[0]) / (self.nx - 1))

    @property
    def hy(self) -> float:
        return float((self.ys[-1] - self.ys[0]) / (self.ny - 1))

    @property
    def window(self) -> tuple:
        return float(self.xs[0]), float(self.xs[-1]), float(self.ys[0]), float(self.ys[-1])

    def node(self, z) -> tuple:
        """(row, col) of the node nearest to z."""
        z = complex(z)
        j = int(np.clip(round((z.real - self.xs[0]) / self.hx), 0, self.nx - 1))
        i = int(np.clip(round((z.imag - self.ys[0]) / self.hy), 0, self.ny - 1))
        return i, j

    def point(self, node) -> complex:
        i, j = node
        return complex(self.xs[j], self.ys[i])

    def to_csv_rows(self):
        X, Y = np.meshgrid(self.xs, self.ys)
        return np.column_stack([X.ravel(), Y.ravel(), self.u.ravel(), self.weights.ravel()])


@njit(cache=True, nogil=True)
def _dijkstra(wt, hx, hy, src):
    ny, nx = wt.shape
    n = nx * ny
    dist = np.full(n, np.inf)
    pos = np.full(n, -1, np.int64)  # heap slot, -1 unseen, -2 settled
    heap = np.empty(n, np.int64)
    hd = math.sqrt(hx * hx + hy * hy)
    di = (-1, -1, -1, 0, 0, 1, 1, 1)
    dj = (-1, 0, 1, -1, 1, -1, 0, 1)
    dist[src] = 0.0
    heap[0] = src
    pos[src] = 0
    size = 1
    while size > 0:
        v = heap[0]
        pos[v] = -2
        size -= 1
        if size > 0:
            last = heap[size]
            dl = dist[last]
            i = 0
            while True:
                c = 2 * i + 1
                if c >= size:
                    break
                if c + 1 < size and dist[heap[c + 1]] < dist[heap[c]]:
                    c += 1
                if dist[heap[c]] < dl:
                    heap[i] = heap[c]
                    pos[heap[i]] = i
                    i = c
                else:
                    break
            heap[i] = last
            pos[last] = i
        dv = dist[v]
        vi = v // nx
        vj = v - vi * nx
        wv = wt[vi, vj]
        for m in range(8):
            a = vi + di[m]
            b = vj + dj[m]
            if a < 0 or a >= ny or b < 0 or b >= nx:
                continue
            nb = a * nx + b
            if pos[nb] == -2:
                continue
            if di[m] == 0:
                step = hx
            elif dj[m] == 0:
                step = hy
            else:
                step = hd
            nd = dv + step * 0.5 * (wv + wt[a, b])
            if nd < dist[nb]:
                dist[nb] = nd
                i = pos[nb]
                if i == -1:
                    i = size
                    size += 1
                while i > 0:
                    p = (i - 1) // 2
                    if dist[heap[p]] > nd:
                        heap[i] = heap[p]
                        pos[heap[i]] = i
                        i = p
                    else:
                        break
                heap[i] = nb
                pos[nb] = i
    return dist.reshape(ny, nx)


def distances_from(grid: ConformalGrid, source) -> np.ndarray:
    """Graph distances from ``source`` (row, col) to every node, shape (ny, nx)."""
    i, j = source
    if not (0 <= i < grid.ny and 0 <= j < grid.nx):
        raise ValueError("source node outside the grid")
    return _dijkstra(grid.weights, grid.hx, grid.hy, i * grid.nx + j)


def geodesic_distance(grid: ConformalGrid, source, target) -> float:
    """8-connected shortest-path length between two nodes; an upper bound on the true distance."""
    i, j = target
    if not (0 <= i < grid.ny and 0 <= j < grid.nx):
        raise ValueError("target node outside the grid")
    if tuple(source) == tuple(target):
        return 0.0
    return float(distances_from(grid, source)[i, j])


# ---------------------------------------------------------------- diameter

@dataclass(frozen=True)
class DiameterSettings:
    levels: int = 2
    coarse_spacing: float | None = None
    window: tuple | None = None
    boundary_ratio: float = 1e-3
    tail: float = 1e-5
    radial_extent: float = 100.0

    def __post_init__(self):
        if self.levels < 1:
            raise ValueError("need at least one resolution level")


@dataclass(frozen=True)
class DiameterEstimate:
    lower: float
    upper: float
    extrapolated: float
    resolutions: tuple
    window: tuple
    canonical: str
    landmarks: tuple

    def to_json(self) -> dict:
        return {"diameter_lower": self.lower, "diameter_upper": self.upper,
                "diameter_extrapolated": self.extrapolated,
                "resolutions": [dict(r) for r in self.resolutions], "window": list(self.window),
                "canonical_family": self.canonical,
                "landmarks": [[z.real, z.imag] for z in self.landmarks]}


def _canonical(u: SolutionField):
    """Isometric closed-form representative: ('radial', None) or ('t', t), else None.

    The diameter is invariant under the transforms and sphere rotations, so the
    grid can be laid out for the base family.
    """
    p = u.provenance
    if isinstance(p, Radial):
        return "radial", None
    if isinstance(p, TFamily):
        return "t", p.t
    if isinstance(p, OneDim):
        return "t", 0.0
    if isinstance(p, FromMap):
        f = p.f
        while isinstance(f, Precomposed):
            f = f.f
        if isinstance(f, Mobius):
            return "radial", None
        if isinstance(f, ExpFamily):
            return "t", f.t
        if isinstance(f, OdeQuotient) and f.P.is_zero:
            return "radial", None
    return None


def _anchored(lo, hi, anchor, h):
    a = math.floor((lo - anchor) / h)
    b = math.ceil((hi - anchor) / h)
    return anchor + h * np.arange(a, b + 1)


def _layout(u: SolutionField, settings: DiameterSettings):
    """Field to sample, node generator per level, landmark points, edges to check."""
    canon = _canonical(u)
    if canon is None:
        if settings.window is None or settings.coarse_spacing is None:
            raise ValueError("diameter of this field needs an explicit window and coarse_spacing")
        x0, x1, y0, y1 = settings.window

        def nodes(h):
            return np.arange(x0, x1 + 0.5 * h, h), np.arange(y0, y1 + 0.5 * h, h)
        return u, nodes, None, "none", (True, True)
    kind, t = canon
    if kind == "radial":
        R = settings.radial_extent
        h0 = settings.coarse_spacing or 0.4

        def nodes(h):
            k = math.ceil(R / h - 1e-9)
            v = h * np.arange(-k, k + 1)
            return v, v
        return make_solution(Radial()), nodes, [0j], "radial", (True, True)
    fmax = t + math.hypot(1.0, t)
    xstar = 0.5 * math.log1p(t * t)
    eps = settings.tail
    x_hi = -math.log(eps * fmax / 2)
    x_lo = math.log(eps * fmax * (1 + t * t) / 2)
    ylim = math.pi + 1.0

    def nodes(h):
        m = max(4, round(2 * math.pi / h))
        hy = 2 * math.pi / m
        k = math.ceil(ylim / hy)
        return _anchored(x_lo, x_hi, xstar, h), hy * np.arange(-k, k + 1)
    marks = [complex(xstar, math.pi), complex(xstar, -math.pi)]
    return make_solution(TFamily(t)), nodes, marks, f"t_family(t={t:g})", (True, False)


def _default_coarse(u: SolutionField, settings: DiameterSettings) -> float:
    if settings.coarse_spacing:
        return settings.coarse_spacing
    canon = _canonical(u)
    if canon and canon[0] == "t":
        t = canon[1]
        return 0.4 / (t + math.hypot(1.0, t))
    return 0.4


def _grid_landmarks(grid: ConformalGrid, extra):
    ny, nx = grid.ny, grid.nx
    marks = [(ny // 2, 0), (ny // 2, nx - 1), (0, nx // 2), (ny - 1, nx // 2)]
    marks.append(tuple(int(v) for v in np.unravel_index(int(np.argmax(grid.u)), grid.u.shape)))
    if extra is None:
        # strict local maxima of the sampled field, largest first
        c = grid.u[1:-1, 1:-1]
        is_max = np.ones_like(c, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di or dj:
                    is_max &= c > grid.u[1 + di:ny - 1 + di, 1 + dj:nx - 1 + dj]
        ii, jj = np.nonzero(is_max)
        order = np.argsort(-c[ii, jj])[:16]
        marks += [(int(ii[k]) + 1, int(jj[k]) + 1) for k in order]
    else:
        marks += [grid.node(z) for z in extra]
    out = []
    for m in marks:
        if m not in out:
            out.append(m)
    return out


def _check_window(grid: ConformalGrid, edges, threshold):
    x_edges, y_edges = edges
    vals = []
    if x_edges:
        vals += [grid.weights[:, 0].max(), grid.weights[:, -1].max()]
    if y_edges:
        vals += [grid.weights[0, :].max(), grid.weights[-1, :].max()]
    ratio = float(max(vals) / grid.weights.max())
    if ratio > threshold:
        raise WindowTooSmall(ratio, threshold)
    return ratio


def landmark_diameter(grid: ConformalGrid, landmarks) -> float:
    """Largest graph distance between any two landmarks."""
    def run(k):
        d = distances_from(grid, landmarks[k])
        return max((float(d[m]) for m in landmarks[k + 1:]), default=0.0)
    ks = range(len(landmarks) - 1)
    workers = min(thread_count(), len(landmarks) - 1) or 1
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            vals = list(ex.map(run, ks))
    else:
        vals = [run(k) for k in ks]
    return max(vals, default=0.0)


def diameter_estimate(u: SolutionField, settings: DiameterSettings = DiameterSettings()) -> DiameterEstimate:
    """Landmark diameter on successively halved grids plus a Richardson extrapolate.

    The graph distances converge like O(h^2) for smooth u, so the extrapolate
    is D_fine + (D_fine - D_coarse)/3.  ``lower``/``upper`` bracket all
    level values and the extrapolate.
    """
    base, nodes, extra, label, edges = _layout(u, settings)
    h = _default_coarse(u, settings)
    res = []
    values = []
    landmarks_pts = ()
    for level in range(settings.levels):
        xs, ys = nodes(h)
        grid = ConformalGrid.from_nodes(base, xs, ys)
        ratio = _check_window(grid, edges, settings.boundary_ratio)
        marks = _grid_landmarks(grid, extra)
        d = landmark_diameter(grid, marks)
        values.append(d)
        landmarks_pts = tuple(grid.point(m) for m in marks)
        res.append({"spacing_x": grid.hx, "spacing_y": grid.hy, "nx": grid.nx, "ny": grid.ny,
                    "diameter": d, "boundary_ratio": ratio})
        h /= 2
    if len(values) >= 2:
        ext = values[-1] + (values[-1] - values[-2]) / 3
    else:
        ext = values[-1]
    allv = values + [ext]
    return DiameterEstimate(float(min(allv)), float(max(allv)), float(ext), tuple(res), grid.window, label,
                            landmarks_pts)


# ---------------------------------------------------------------- Nevanlinna quantities

def _sharp_squared_polar(f: DevelopingMap, thetas, rs):
    if isinstance(f, OdeQuotient) and f.base == 0:
        return np.exp(2 * np.array([f.ray_values(th, rs) for th in thetas]))
    z = rs[None, :] * np.exp(1j * thetas)[:, None]
    return np.exp(2 * f.log_spherical_derivative(z.ravel())).reshape(z.shape)


def _annulus_area(f, r0, r1, n_theta, n_panels, order=8):
    x, w = gauss_legendre(order)
    edges = np.linspace(r0, r1, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    rs = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    ws = (half[:, None] * w[None, :]).ravel()
    thetas = 2 * np.pi * (np.arange(n_theta) + 0.5) / n_theta
    vals = _sharp_squared_polar(f, thetas, rs)
    return float((vals.sum(axis=0) * (2 * np.pi / n_theta)) @ (ws * rs)) / (4 * np.pi)


def _adaptive_annulus(f, r0, r1, rtol, max_doublings=12):
    n_theta, n_panels = 64, max(1, math.ceil((r1 - r0)))
    prev = _annulus_area(f, r0, r1, n_theta, n_panels)
    for _ in range(max_doublings):
        a = _annulus_area(f, r0, r1, 2 * n_theta, n_panels)
        b = _annulus_area(f, r0, r1, 2 * n_theta, 2 * n_panels)
        if abs(a - prev) <= rtol * max(abs(a), 1e-300) and abs(b - a) <= rtol * max(abs(b), 1e-300):
            return b
        prev = b
        n_theta *= 2
        n_panels *= 2
    raise QuadratureNonConvergence(f"area integral over {r0} <= |z| <= {r1} did not converge")


def nevanlinna_A(f: DevelopingMap, r: float, rtol: float = 1e-9) -> float:
    """A(r, f) = (1/4π) ∫_{|z|<=r} (f^#)^2 dx dy."""
    if not r > 0:
        raise ValueError("r must be positive")
    return _adaptive_annulus(f, 0.0, float(r), rtol)


@dataclass(frozen=True)
class NevanlinnaProfile:
    radii: np.ndarray
    A: np.ndarray
    T: np.ndarray


def nevanlinna_profile(f: DevelopingMap, r: float, t0: float | None = None, per_unit_log: int = 32,
                       rtol: float = 1e-9) -> NevanlinnaProfile:
    """A and T on a log-spaced grid from t0 to r.

    A is accumulated annulus by annulus; T uses the trapezoid rule in log t
    plus the head term A(t0)/2, which is exact when A(t) ∝ t^2 near 0.
    """
    if not r > 0:
        raise ValueError("r must be positive")
    t0 = min(1e-3, r / 10) if t0 is None else float(t0)
    n = max(2, math.ceil(per_unit_log * math.log(r / t0)) + 1)
    radii = np.geomspace(t0, r, n)
    A = np.empty(n)
    A[0] = _adaptive_annulus(f, 0.0, t0, rtol)
    for i in range(1, n):
        A[i] = A[i - 1] + _adaptive_annulus(f, radii[i - 1], radii[i], rtol)
    lt = np.log(radii)
    T = np.concatenate([[0.0], np.cumsum(0.5 * (A[1:] + A[:-1]) * np.diff(lt))]) + 0.5 * A[0]
    return NevanlinnaProfile(radii, A, T)


def nevanlinna_T(f: DevelopingMap, r: float, per_unit_log: int = 32) -> float:
    """T(r, f) = ∫_0^r A(t, f) dt / t."""
    return float(nevanlinna_profile(f, r, per_unit_log=per_unit_log).T[-1])
