import math

import numpy as np
import pytest
from scipy import integrate
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import dijkstra

from liouville.developing import ExpFamily, Mobius, OdeQuotient
from liouville.errors import QuadratureNonConvergence, WindowTooSmall
from liouville.metric import (ConformalGrid, Curve, DiameterSettings, curve_length, diameter_estimate, distances_from,
                              geodesic_distance, nevanlinna_A, nevanlinna_profile, nevanlinna_T)
from liouville.polynomial import PolynomialP
from liouville.quadrature import adaptive_gauss
from liouville.solution import FromMap, OneDim, Radial, TFamily, Transform, make_solution
from liouville.sphere import MobiusMap

RADIAL = make_solution(Radial())


def test_adaptive_gauss_against_scipy_quad():
    f = lambda x: np.exp(-x) * np.cos(5 * x) / (1 + x * x)
    ref = integrate.quad(f, 0, 20, limit=400, epsabs=1e-14, epsrel=1e-13)[0]
    assert adaptive_gauss(f, 0, 20, rtol=1e-12).value == pytest.approx(ref, rel=1e-11)
    assert adaptive_gauss(lambda x: 2 / (1 + x * x), -50, 50).value == pytest.approx(4 * math.atan(50), rel=1e-12)


def test_adaptive_gauss_failures():
    with pytest.raises(QuadratureNonConvergence):
        adaptive_gauss(lambda x: 1 / x, 0, 1)
    with pytest.raises(QuadratureNonConvergence):
        adaptive_gauss(lambda x: np.sign(x - 0.3) / np.sqrt(np.abs(x - 0.3)), 0, 1, max_panels=50)
    with pytest.raises(ValueError):
        adaptive_gauss(lambda x: x, 0, np.inf)


def test_curve_validation():
    with pytest.raises(ValueError):
        Curve.segment(1, 1)
    with pytest.raises(ValueError):
        Curve.polyline([0, 1, 1, 2])
    with pytest.raises(ValueError):
        Curve.from_samples([(0, 0), (0, 1)])
    with pytest.raises(ValueError):
        Curve("spline", ())


@pytest.mark.parametrize("R", [1.0, 10.0, 1000.0])
def test_radial_segment_length(R):
    assert curve_length(RADIAL, Curve.segment(0, R)) == pytest.approx(2 * math.atan(R), rel=1e-10)


def test_radial_half_line_and_great_circle():
    assert curve_length(RADIAL, Curve.line(0, 1j)) == pytest.approx(2 * math.pi, rel=1e-10)
    assert curve_length(RADIAL, Curve.arc(0, 1, 0, 2 * math.pi)) == pytest.approx(2 * math.pi, rel=1e-10)


@pytest.mark.parametrize("t", [0.0, 1.0, 5.0])
def test_line_y_pi(t):
    L = curve_length(make_solution(TFamily(t)), Curve.line(1j * math.pi, 1))
    assert abs(L - (math.pi + 2 * math.atan(t))) < 1e-4


def test_length_additive_and_from_samples():
    u = make_solution(TFamily(1.0))
    pts = [0, 1 + 1j, 2 - 0.5j, 3j]
    whole = curve_length(u, Curve.polyline(pts))
    parts = sum(curve_length(u, Curve.segment(a, b)) for a, b in zip(pts[:-1], pts[1:]))
    assert whole == pytest.approx(parts, rel=1e-10)
    assert curve_length(u, Curve.from_samples(list(enumerate(pts)))) == pytest.approx(whole, rel=1e-12)


def _scipy_grid_distances(grid, src):
    ny, nx = grid.ny, grid.nx
    w = grid.weights
    rows, cols, vals = [], [], []
    for di, dj in ((0, 1), (1, 0), (1, 1), (1, -1)):
        L = math.hypot(di * grid.hy, dj * grid.hx)
        for i in range(ny):
            for j in range(nx):
                a, b = i + di, j + dj
                if 0 <= a < ny and 0 <= b < nx:
                    rows.append(i * nx + j)
                    cols.append(a * nx + b)
                    vals.append(L * 0.5 * (w[i, j] + w[a, b]))
    G = coo_matrix((vals, (rows, cols)), shape=(nx * ny, nx * ny)).tocsr()
    return dijkstra(G, directed=False, indices=src[0] * nx + src[1]).reshape(ny, nx)


def test_dijkstra_matches_scipy_csgraph():
    grid = ConformalGrid.from_field(make_solution(TFamily(0.7), Transform(1.3, 0.2j)), (-3, 2, -2, 3), 37, 29)
    for src in ((0, 0), (14, 20), (28, 36)):
        assert np.allclose(distances_from(grid, src), _scipy_grid_distances(grid, src), rtol=1e-13, atol=0)


def test_geodesic_distance_basics():
    grid = ConformalGrid.from_field(RADIAL, (-10, 10, -10, 10), 41, 41)
    assert geodesic_distance(grid, (20, 20), (20, 20)) == 0
    d = geodesic_distance(grid, (20, 20), (20, 40))
    assert d == pytest.approx(2 * math.atan(10), rel=0.01)
    assert geodesic_distance(grid, (3, 7), (30, 11)) == pytest.approx(geodesic_distance(grid, (30, 11), (3, 7)))
    with pytest.raises(ValueError):
        geodesic_distance(grid, (0, 0), (41, 0))


def test_radial_geodesic_on_large_grid():
    grid = ConformalGrid.from_field(RADIAL, (-100, 100, -100, 100), 2001, 2001)
    d = geodesic_distance(grid, grid.node(0), grid.node(100))
    assert abs(d - 2 * math.atan(100)) / (2 * math.atan(100)) < 0.02


def test_grid_distance_dominates_spherical_distance():
    from liouville.sphere import spherical_distance
    u = make_solution(TFamily(0.0))
    grid = ConformalGrid.from_field(u, (-6, 6, -4, 4), 121, 81)
    a, b = grid.node(-math.pi * 1j), grid.node(math.pi * 1j)
    f = ExpFamily(0.0)
    assert geodesic_distance(grid, a, b) >= spherical_distance(f.evaluate(grid.point(a)), f.evaluate(grid.point(b)))


def test_grid_validation():
    with pytest.raises(ValueError):
        ConformalGrid.from_field(RADIAL, (-1, 1, -1, 1), 8, 20)
    xs = np.linspace(0, 1, 20)
    with pytest.raises(ValueError):
        ConformalGrid(xs, xs, np.full((20, 20), np.inf))
    rows = ConformalGrid.from_field(RADIAL, (-1, 1, -1, 1), 17, 17).to_csv_rows()
    assert rows.shape == (289, 4) and np.allclose(rows[:, 3], np.exp(rows[:, 2]))


def test_diameter_radial_and_invariance():
    est = diameter_estimate(RADIAL)
    assert abs(est.extrapolated - math.pi) / math.pi < 0.01
    assert est.lower <= est.extrapolated <= est.upper
    moved = diameter_estimate(make_solution(Radial(), Transform(2j, 3)))
    assert moved.extrapolated == est.extrapolated
    mob = diameter_estimate(make_solution(FromMap(Mobius(MobiusMap(1, 2, 3j, 1)))))
    assert mob.extrapolated == est.extrapolated


@pytest.mark.parametrize("t, expect, tol", [(0.0, math.pi, 0.01), (1.0, 1.5 * math.pi, 0.02)])
def test_diameter_t_family(t, expect, tol):
    est = diameter_estimate(make_solution(TFamily(t)))
    assert abs(est.extrapolated - expect) / expect < tol
    assert est.canonical.startswith("t_family")


def test_diameter_one_dim_maps_to_t_zero():
    a = diameter_estimate(make_solution(OneDim(2.0, 0.3, (0.6, 0.8))))
    b = diameter_estimate(make_solution(TFamily(0.0)))
    assert a.extrapolated == b.extrapolated


def test_diameter_generic_window_rules():
    u = make_solution(FromMap(OdeQuotient(PolynomialP((0, 1)))))
    with pytest.raises(ValueError):
        diameter_estimate(u)
    with pytest.raises(WindowTooSmall):
        diameter_estimate(u, DiameterSettings(levels=1, coarse_spacing=0.25, window=(-2, 2, -2, 2)))


def test_diameter_json_summary():
    js = diameter_estimate(make_solution(TFamily(0.0)), DiameterSettings(levels=1)).to_json()
    assert {"diameter_lower", "diameter_extrapolated", "resolutions"} <= set(js)


IDENTITY = Mobius(MobiusMap(1, 0, 0, 1))


@pytest.mark.parametrize("r", [0.5, 1.0, 2.0])
def test_area_identity(r):
    assert abs(nevanlinna_A(IDENTITY, r) - r * r / (1 + r * r)) < 1e-4


def test_characteristic_identity():
    assert nevanlinna_T(IDENTITY, 1.0) == pytest.approx(0.5 * math.log(2), abs=1e-4)
    assert nevanlinna_T(IDENTITY, 100.0) / math.log(100) == pytest.approx(1.0, abs=0.02)


def test_characteristic_degree_two():
    class Square(Mobius):
        def pair(self, zs):
            zs = np.atleast_1d(np.asarray(zs, dtype=complex))
            with np.errstate(divide="ignore"):
                return zs ** 2, np.ones_like(zs), np.log(2 * zs)

    g = Square(MobiusMap.identity())
    assert nevanlinna_T(g, 1e4) / math.log(1e4) == pytest.approx(2.0, rel=0.05)


def test_exp_family_area_and_normal_type():
    f = ExpFamily(0.0)
    assert nevanlinna_A(f, 40.0) / 40.0 == pytest.approx(1 / math.pi, rel=0.03)
    prof = nevanlinna_profile(f, 80.0, per_unit_log=8)
    sel = prof.radii >= 10
    ratio = prof.T[sel] / prof.radii[sel]
    assert np.all(ratio > 0.1) and np.all(ratio < 1.0)


def test_area_monotone_and_characteristic_convex_in_log_r():
    for f in (IDENTITY, ExpFamily(1.0), OdeQuotient(PolynomialP((0, 1)))):
        prof = nevanlinna_profile(f, 4.0, per_unit_log=8)
        assert np.all(np.diff(prof.A) >= 0)
        slope = np.diff(prof.T) / np.diff(np.log(prof.radii))
        assert np.all(np.diff(slope) >= -1e-9)


def test_area_rejects_bad_radius():
    with pytest.raises(ValueError):
        nevanlinna_A(IDENTITY, 0.0)
