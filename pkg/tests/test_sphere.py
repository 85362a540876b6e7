import math

import numpy as np
import pytest

from liouville.sphere import (INFINITY, ComplexPoint, MobiusMap, SphereRotation, apply_mobius, as_extended,
                              spherical_distance, stereographic_lift)


def chord_distance(w1, w2):
    # great-circle distance from the Euclidean chord between lifted points
    c = np.linalg.norm(stereographic_lift(w1) - stereographic_lift(w2))
    return 2 * math.asin(min(1.0, c / 2))


def test_complex_point_rejects_nonfinite():
    with pytest.raises(ValueError):
        ComplexPoint(float("nan"), 0)
    assert ComplexPoint.from_complex(1 - 2j).z == 1 - 2j


def test_as_extended_maps_nonfinite_to_infinity():
    assert as_extended(complex(float("inf"), 0)) is INFINITY
    assert as_extended(ComplexPoint(1, 2)) == 1 + 2j


def test_mobius_rejects_degenerate():
    with pytest.raises(ValueError):
        MobiusMap(1, 2, 2, 4)


def test_mobius_compose_inverse_and_poles():
    m = MobiusMap(2 + 1j, -1, 0.5j, 3)
    z = 0.3 - 0.7j
    assert abs(m.inverse()(m(z)) - z) < 1e-14
    assert m(INFINITY) == m.a / m.c
    assert m(-m.d / m.c) is INFINITY
    n = MobiusMap(1, 1j, 0, 2)
    assert abs(m.compose(n)(z) - m(n(z))) < 1e-14


def test_spherical_distance_matches_chord_oracle():
    rng = np.random.default_rng(1)
    for _ in range(200):
        w1, w2 = (complex(*rng.normal(size=2)) * 10 ** rng.uniform(-2, 2) for _ in range(2))
        assert abs(spherical_distance(w1, w2) - chord_distance(w1, w2)) < 1e-7
    assert spherical_distance(0, INFINITY) == pytest.approx(math.pi)
    assert spherical_distance(1, 1j) == pytest.approx(math.pi / 2)
    assert spherical_distance(1, -1) == pytest.approx(math.pi)
    assert spherical_distance(INFINITY, INFINITY) == 0


def test_rotations_are_isometries_and_compose():
    rng = np.random.default_rng(2)
    for _ in range(100):
        phi, psi = SphereRotation.random(rng), SphereRotation.random(rng)
        w1, w2 = complex(*rng.normal(size=2)), complex(*rng.normal(size=2)) * 5
        assert spherical_distance(phi(w1), phi(w2)) == pytest.approx(spherical_distance(w1, w2), abs=1e-12)
        assert abs(phi.compose(psi)(w1) - phi(psi(w1))) < 1e-10 * max(1, abs(phi(psi(w1))))


def test_rotation_normalises_and_rejects_zero():
    r = SphereRotation(3, 4j)
    assert abs(abs(r.p) ** 2 + abs(r.q) ** 2 - 1) < 1e-15
    with pytest.raises(ValueError):
        SphereRotation(0, 0)
    assert apply_mobius(SphereRotation(0, 1j), 0) is INFINITY


def test_distance_is_a_metric_on_random_triples():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a, b, c = (complex(*rng.normal(size=2)) * 10 ** rng.uniform(-1, 1) for _ in range(3))
        assert spherical_distance(a, b) == spherical_distance(b, a)
        assert spherical_distance(a, c) <= spherical_distance(a, b) + spherical_distance(b, c) + 1e-12


def test_distance_equals_angle_between_lifts():
    rng = np.random.default_rng(12)
    for _ in range(200):
        a, b = (complex(*rng.normal(size=2)) * 10 ** rng.uniform(-1, 1) for _ in range(2))
        la, lb = stereographic_lift(a), stereographic_lift(b)
        angle = math.atan2(np.linalg.norm(np.cross(la, lb)), float(la @ lb))
        assert abs(spherical_distance(a, b) - angle) < 1e-12


def test_rotation_preserves_distance_tightly():
    rng = np.random.default_rng(13)
    for _ in range(200):
        phi = SphereRotation.random(rng)
        assert abs(abs(phi.p) ** 2 + abs(phi.q) ** 2 - 1) < 1e-12
        a, b = complex(*rng.normal(size=2)), complex(*rng.normal(size=2))
        assert abs(spherical_distance(apply_mobius(phi, a), apply_mobius(phi, b)) - spherical_distance(a, b)) < 1e-12
