import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from swlab.quaternions import (Quaternion, ImQuaternion, qmul_pair,
                               qconj_pair, I1, I2, I3,
                               apply_complex_structure, pair_dot, left_phase,
                               moment_real, moment_complex, moment_imquat,
                               dmoment_real, dmoment_complex,
                               fundamental_field, hyperkahler_potential,
                               check_moment_axioms, chern_weight_sum)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def quat(draw_vals):
    return Quaternion(*draw_vals)


@given(st.tuples(finite, finite, finite, finite),
       st.tuples(finite, finite, finite, finite))
def test_quaternion_product_matches_pair_form(a_vals, b_vals):
    a, b = Quaternion(*a_vals), Quaternion(*b_vals)
    pair = qmul_pair(a.to_pair(), b.to_pair())
    assert np.allclose((a * b).to_pair(), pair, atol=1e-9)


@given(st.tuples(finite, finite, finite, finite))
def test_conjugation_and_norm(vals):
    a = Quaternion(*vals)
    n2 = (a * a.conj()).w
    assert abs(n2 - a.norm() ** 2) <= 1e-9
    assert np.allclose(qconj_pair(a.to_pair()), a.conj().to_pair())


def test_pair_roundtrip():
    a = Quaternion(1.0, -2.0, 3.5, 0.25)
    assert Quaternion.from_pair(a.to_pair()).allclose(a)


def test_imquaternion():
    t = ImQuaternion(3.0, 0.0, 4.0)
    assert t.norm() == 5.0
    assert t.as_quaternion().components() == (0.0, 3.0, 0.0, 4.0)


def test_structure_triple_quaternion_relations():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((50, 3, 2)) + 1j * rng.standard_normal((50, 3, 2))
    for f in (I1, I2, I3):
        assert np.max(np.abs(f(f(v)) + v)) <= 1e-14
    assert np.max(np.abs(I1(I2(v)) - I3(v))) <= 1e-14
    assert np.max(np.abs(I2(I3(v)) - I1(v))) <= 1e-14
    assert np.max(np.abs(I3(I1(v)) - I2(v))) <= 1e-14
    # anticommutation
    assert np.max(np.abs(I1(I2(v)) + I2(I1(v)))) <= 1e-14


def test_apply_complex_structure_unit_sphere():
    rng = np.random.default_rng(1)
    v = rng.standard_normal((20, 2, 2)) + 1j * rng.standard_normal((20, 2, 2))
    xi = rng.standard_normal(3)
    xi /= np.linalg.norm(xi)
    w = apply_complex_structure(tuple(xi), v)
    assert np.max(np.abs(apply_complex_structure(tuple(xi), w) + v)) <= 1e-13
    assert np.max(np.abs(pair_dot(w, w) - pair_dot(v, v))) <= 1e-12


def test_moments_and_derivatives():
    rng = np.random.default_rng(2)
    weights = np.array([1.0, 3.0])
    c = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    v = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    s = 1e-6
    fd_r = (moment_real(c + s * v, weights)
            - moment_real(c - s * v, weights)) / (2 * s)
    fd_c = (moment_complex(c + s * v, weights)
            - moment_complex(c - s * v, weights)) / (2 * s)
    assert abs(fd_r - dmoment_real(c, v, weights)) <= 1e-8
    assert abs(fd_c - dmoment_complex(c, v, weights)) <= 1e-8
    m = moment_imquat(c, weights)
    assert abs(m.x - moment_real(c, weights)) <= 1e-14
    assert abs(m.y + 1j * m.z - moment_complex(c, weights)) <= 1e-14


def test_left_phase_isometry_and_moment_invariance():
    rng = np.random.default_rng(3)
    weights = np.array([1.0, 2.0, 5.0])
    c = rng.standard_normal((4, 4, 3, 2)) + 1j * rng.standard_normal(
        (4, 4, 3, 2))
    theta = rng.standard_normal((4, 4))
    r = left_phase(theta, c, weights)
    assert np.max(np.abs(np.abs(r) - np.abs(c))) <= 1e-13
    assert np.max(np.abs(moment_real(r, weights)
                         - moment_real(c, weights))) <= 1e-11
    assert np.max(np.abs(moment_complex(r, weights)
                         - moment_complex(c, weights))) <= 1e-11


def test_fundamental_field_is_action_derivative():
    rng = np.random.default_rng(4)
    weights = np.array([2.0])
    c = rng.standard_normal((1, 2)) + 1j * rng.standard_normal((1, 2))
    t = 0.37
    s = 1e-7
    fd = (left_phase(np.asarray(s * t), c, weights) - c) / s
    k = fundamental_field(np.asarray(t), c, weights)
    assert np.max(np.abs(fd - k)) <= 1e-6


def test_moment_axioms_random_point():
    rng = np.random.default_rng(5)
    p = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    v = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    a1, a2 = check_moment_axioms(p, (0.3, -0.5, 0.9), 0.7, v, 1e-4,
                                 np.array([1.0, 2.0]))
    assert a1 <= 1e-6
    assert a2 <= 1e-12


def test_hyperkahler_potential():
    c = np.array([[1.0 + 0j, 2j], [0.0, 1.0 + 1j]])
    assert abs(hyperkahler_potential(c) - 0.5 * (1 + 4 + 0 + 2)) <= 1e-14


def test_chern_weight_sum_vanishes():
    assert chern_weight_sum() == 0
    assert chern_weight_sum([1.0, 2.0, 3.0], 3) == 0
