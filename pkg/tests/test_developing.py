import cmath
import math

import numpy as np
import pytest

from liouville.developing import ExpFamily, Mobius, OdeQuotient, local_univalence_check, schwarzian
from liouville.errors import DerivativeBreakdown, UnivalenceViolation
from liouville.polynomial import PolynomialP
from liouville.sphere import MobiusMap, SphereRotation


def sharp_direct(f, fp, z):
    return 2 * abs(fp(z)) / (1 + abs(f(z)) ** 2)


def test_mobius_spherical_derivative_closed_form():
    m = MobiusMap(1 + 2j, 0.5, -1j, 2)
    f = Mobius(m)
    for z in (0.1, 1 + 1j, -3 + 0.2j):
        fp = m.det / (m.c * z + m.d) ** 2
        assert f.spherical_derivative(z) == pytest.approx(sharp_direct(m, lambda _: fp, z), rel=1e-13)
        assert abs(f.derivative(z) - fp) < 1e-13 * abs(fp)


def test_exp_family_stable_far_right():
    f = ExpFamily(2.0)
    # (t + e^z)^# = 2 e^x / (|t + e^z|^2 + 1); far right this is ~ 2 e^{-x}
    z = 800 + 0.3j
    assert f.log_spherical_derivative(z)[0] == pytest.approx(math.log(2) - 800, rel=1e-12)
    z = 1.2 - 0.4j
    expect = 2 * abs(cmath.exp(z)) / (1 + abs(2 + cmath.exp(z)) ** 2)
    assert f.spherical_derivative(z) == pytest.approx(expect, rel=1e-13)


def test_rotation_and_inversion_preserve_sharp():
    rng = np.random.default_rng(3)
    zs = rng.normal(size=20) + 1j * rng.normal(size=20)
    for f in (Mobius(MobiusMap(1, 2j, 3, 1)), ExpFamily(0.7), OdeQuotient(PolynomialP((0, 1)))):
        base = f.log_spherical_derivative(zs)
        for g in (f.invert(), f.rotate(SphereRotation.random(rng))):
            assert np.max(np.abs(g.log_spherical_derivative(zs) - base)) < 1e-9


def test_ode_quotient_constant_P_matches_tangent():
    # w'' + w = 0 with seeds (sin, cos) gives f = tan z
    f = OdeQuotient(PolynomialP((1,)), seeds=((0, 1), (1, 0)))
    for z in (0.3, 0.5 + 0.5j, -1 + 0.2j):
        assert abs(f.evaluate(z) - cmath.tan(z)) < 1e-12
        assert abs(f.derivative(z) - 1 / cmath.cos(z) ** 2) < 1e-11


def test_ode_quotient_rejects_dependent_seeds():
    with pytest.raises(ValueError):
        OdeQuotient(PolynomialP((0, 1)), seeds=((1, 2), (2, 4)))


def test_schwarzian_values():
    assert abs(schwarzian(Mobius(MobiusMap(2, 1j, 1, 3)), 0.4 + 0.1j)) < 1e-8
    assert abs(schwarzian(ExpFamily(0.3), 0.2 - 1j) + 0.5) < 1e-8
    f = OdeQuotient(PolynomialP((0, 1)))
    for z in (0.5, 1 + 1j, -1.5j):
        assert abs(schwarzian(f, z) - 2 * z) < 1e-5


def test_schwarzian_breakdown_at_critical_point():
    class Square(Mobius):
        def pair(self, zs):
            zs = np.atleast_1d(np.asarray(zs, dtype=complex))
            with np.errstate(divide="ignore"):
                return zs ** 2, np.ones_like(zs), np.log(2 * zs)

    with pytest.raises(DerivativeBreakdown):
        schwarzian(Square(MobiusMap.identity()), 0.0)


def test_univalence_check_passes_and_fails():
    rep = local_univalence_check(ExpFamily(1.0), (-2, 2, -2, 2), 400)
    assert rep.passed and rep.min_sharp > 0

    class Square(Mobius):
        def pair(self, zs):
            zs = np.atleast_1d(np.asarray(zs, dtype=complex))
            with np.errstate(divide="ignore"):
                return zs ** 2, np.ones_like(zs), np.log(2 * zs)

    with pytest.raises(UnivalenceViolation) as exc:
        local_univalence_check(Square(MobiusMap.identity()), (-1, 1, -1, 1), 25)
    assert 0j in list(exc.value.points)


def test_rotated_exp_family_sharp_unchanged():
    rng = np.random.default_rng(14)
    zs = rng.uniform(-3, 3, 10) + 1j * rng.uniform(-3, 3, 10)
    f = ExpFamily(0.0)
    g = f.rotate(SphereRotation.random(rng))
    assert np.max(np.abs(np.exp(g.log_spherical_derivative(zs)) - np.exp(f.log_spherical_derivative(zs)))) < 1e-12


def test_exp_family_field_equals_t_family():
    from liouville.solution import FromMap, TFamily, make_solution
    rng = np.random.default_rng(15)
    zs = rng.uniform(-5, 5, 100) + 1j * rng.uniform(-5, 5, 100)
    for t in (0.0, 0.5, 3.0):
        a = make_solution(FromMap(ExpFamily(t)))(zs)
        b = make_solution(TFamily(t))(zs)
        assert np.max(np.abs(a - b)) < 1e-12
