import math

import numpy as np
import pytest

from liouville.developing import ExpFamily, Mobius
from liouville.errors import ConservationViolation, SnapAmbiguous
from liouville.polynomial import PolynomialP
from liouville.ode import quotient_field
from liouville.solution import (Constant, FromMap, OneDim, Radial, TFamily, Transform, allowed_growth,
                                classify_growth, concavity_report, decay_check, make_solution, one_dim_check,
                                pde_residual)
from liouville.sphere import MobiusMap

RNG = np.random.default_rng(7)
ZS = RNG.uniform(-5, 5, 50) + 1j * RNG.uniform(-5, 5, 50)


def test_closed_forms():
    assert make_solution(Radial())(0.0) == pytest.approx(math.log(2))
    u0 = make_solution(TFamily(0.0))
    y = np.linspace(-1.5, 1.5, 7)
    assert np.allclose(u0(y), np.log(1 / np.cosh(y)))
    assert np.allclose(u0(1j * y), 0.0, atol=1e-15)
    u = make_solution(OneDim(3.0, 0.5, (0.6, 0.8)))
    z = 0.3 + 0.1j
    assert u(z) == pytest.approx(math.log(3) - math.log(math.cosh(3 * (0.6 * 0.3 + 0.8 * 0.1 + 0.5))))


def test_tfamily_stable_at_large_x():
    u = make_solution(TFamily(5.0))
    assert np.all(np.isfinite(u(np.array([800 + 1j, -800 + 2j]))))


def test_validation():
    with pytest.raises(ValueError):
        TFamily(-1)
    with pytest.raises(ValueError):
        OneDim(0.0)
    with pytest.raises(ValueError):
        OneDim(1.0, 0.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        Transform(0, 1)
    with pytest.raises(ValueError):
        pde_residual(make_solution(Radial()), 0, h=1.0)


@pytest.mark.parametrize("prov", [Radial(), TFamily(0), TFamily(2), OneDim(3.0, 0.2, (0.6, -0.8))])
def test_residual_small_with_transforms(prov):
    for T in (Transform(), Transform.random(RNG)):
        assert np.max(np.abs(pde_residual(make_solution(prov, T), ZS))) < 1e-6


def test_constant_double_has_unit_residual():
    assert pde_residual(make_solution(Constant(0.0)), 0.3) == pytest.approx(1.0)


@pytest.mark.parametrize("prov", [Radial(), TFamily(1.5), OneDim(2.0, -0.3, (0.0, 1.0))])
def test_developing_map_reproduces_field_and_derivatives(prov):
    T = Transform(0.8 - 0.6j, 1 + 2j)
    u = make_solution(prov, T)
    uf = make_solution(FromMap(u.developing_map()))
    z = ZS[:5]
    assert np.max(np.abs(uf(z) - u(z))) < 1e-12
    assert np.max(np.abs(uf.gradient(z) - u.gradient(z))) < 1e-7
    assert np.max(np.abs(uf.hessian(z) - u.hessian(z))) < 1e-5


def test_transform_covariance_of_gradient():
    T = Transform(2 * np.exp(0.3j), -1 + 0.5j)
    u, base = make_solution(TFamily(1.0), T), make_solution(TFamily(1.0))
    z = 0.4 - 0.2j
    w = T.scale * z + T.shift
    assert u(z) == pytest.approx(math.log(abs(T.scale)) + base(w))
    assert np.allclose(u.gradient(z), base.gradient(w) @ T.matrix)


def test_allowed_growth_snapping():
    assert allowed_growth(-1.9) == -2
    assert allowed_growth(0.26) == 0.5
    assert allowed_growth(-0.4) == 0
    assert allowed_growth(1.02) == 1


@pytest.mark.parametrize("prov, T, k", [
    (Radial(), Transform(), -2),
    (Radial(), Transform(1.5j + 0.3, 4 - 2j), -2),
    (TFamily(0), Transform(), 0),
    (TFamily(5), Transform(0.7, 3), 0),
])
def test_classify_closed_forms(prov, T, k):
    g = classify_growth(make_solution(prov, T))
    assert g.k == k and g.gap < 0.1


@pytest.mark.parametrize("coeffs, k", [((0, 1), 0.5), ((0, 0, 1), 1)])
def test_classify_ode_fields(coeffs, k):
    g = classify_growth(make_solution(FromMap(quotient_field(PolynomialP(coeffs)))))
    assert g.k == k and g.gap < 0.1


def test_classify_ambiguous_when_threshold_is_tight():
    u = make_solution(FromMap(quotient_field(PolynomialP((0, 1)))))
    with pytest.raises(SnapAmbiguous) as exc:
        classify_growth(u, threshold=1e-4)
    assert exc.value.nearest == 0.5


def test_concavity_only_at_t_zero():
    assert concavity_report(make_solution(TFamily(0)), (-5, 5, -5, 5), 2500).concave
    for t in (0.5, 1.0):
        rep = concavity_report(make_solution(TFamily(t)), (-5, 5, -5, 5), 2500)
        assert not rep.concave and rep.max_eigenvalue > 1e-3


def test_decay_radial_but_not_t_family():
    radii = np.geomspace(5, 100, 6)
    rep = decay_check(make_solution(Radial()), radii)
    assert rep.decays and rep.label == "at sampled scales"
    assert not decay_check(make_solution(TFamily(1.0)), radii).decays


def test_one_dim_check():
    rep = one_dim_check(make_solution(OneDim(3.0, 0.1, (0.6, 0.8))), (-2, 2, -2, 2))
    assert rep.constant == pytest.approx(9.0, rel=1e-8)
    assert np.allclose(rep.direction, (0.6, 0.8), atol=1e-6)
    with pytest.raises(ConservationViolation):
        one_dim_check(make_solution(Radial()), (-2, 2, -2, 2))


def test_ode_field_from_mobius_map_is_radial_like():
    u = make_solution(FromMap(Mobius(MobiusMap(1, 0, 0, 1))))
    assert np.allclose(u(ZS), make_solution(Radial())(ZS))
    v = make_solution(FromMap(ExpFamily(0.0)))
    assert np.allclose(v(ZS), make_solution(TFamily(0.0))(ZS))
