import numpy as np
import pytest

from swlab.lattice import TorusLattice, BundleSpec
from swlab.equations import Configuration
from swlab.linearization import TangentTriple, domain_inner
from swlab.symplectic import (config_metric, apply_config_structure, omega,
                              omega_c, gauge_fundamental_field,
                              config_moment_maps, verify_hamiltonian_identity,
                              pointwise_identities, gamma_form, gamma_form_fd,
                              tau_form, convention_constants,
                              curvature_bilinear_forms)


def _random_config(rng, nx=8, ny=8, d=1, n=2):
    lat = TorusLattice(nx, ny, 1.1, 0.9)
    q = Configuration(lat, BundleSpec(d), n=n,
                      weights=1.0 + np.arange(n, dtype=float),
                      epsilon=0.7, tau=0.3)
    q.a.ax = rng.standard_normal((nx, ny))
    q.a.ay = rng.standard_normal((nx, ny))
    q.u = rng.standard_normal(q.u.shape) + 1j * rng.standard_normal(
        q.u.shape)
    q.phi = rng.standard_normal((nx, ny)) + 1j * rng.standard_normal(
        (nx, ny))
    return q


def _random_tangent(rng, q):
    sh = (q.lattice.Nx, q.lattice.Ny)
    return TangentTriple(
        rng.standard_normal(sh), rng.standard_normal(sh),
        rng.standard_normal(q.u.shape) + 1j * rng.standard_normal(q.u.shape),
        rng.standard_normal(sh) + 1j * rng.standard_normal(sh))


def test_structure_triple_on_configuration_space():
    rng = np.random.default_rng(0)
    q = _random_config(rng)
    X = _random_tangent(rng, q)
    for sel in (1, 2, 3):
        Y = apply_config_structure(sel, q, apply_config_structure(sel, q, X))
        for attr in ("ax", "ay", "xi", "eta"):
            assert np.max(np.abs(getattr(Y, attr)
                                 + getattr(X, attr))) <= 1e-12
    # quaternionic relation S1 S2 = S3
    A = apply_config_structure(1, q, apply_config_structure(2, q, X))
    B = apply_config_structure(3, q, X)
    for attr in ("ax", "ay", "xi", "eta"):
        assert np.max(np.abs(getattr(A, attr) - getattr(B, attr))) <= 1e-12


def test_structures_are_isometries():
    rng = np.random.default_rng(1)
    q = _random_config(rng)
    X = _random_tangent(rng, q)
    n0 = config_metric(q, X, X)
    for sel in (1, 2, 3):
        Y = apply_config_structure(sel, q, X)
        assert abs(config_metric(q, Y, Y) - n0) <= 1e-10 * n0
    with pytest.raises(ValueError):
        apply_config_structure(4, q, X)


def test_omega_antisymmetry():
    rng = np.random.default_rng(2)
    q = _random_config(rng)
    X = _random_tangent(rng, q)
    Y = _random_tangent(rng, q)
    for sel in (1, 2, 3):
        a = omega(sel, q, X, Y)
        b = omega(sel, q, Y, X)
        assert abs(a + b) <= 1e-10 * max(abs(a), 1.0)
        assert abs(omega(sel, q, X, X)) <= 1e-10
    assert abs(omega_c(q, X, Y) + omega_c(q, Y, X)) <= 1e-9


def test_hamiltonian_identity_random_points():
    rng = np.random.default_rng(3)
    for _ in range(3):
        q = _random_config(rng)
        gamma = rng.standard_normal((8, 8))
        X = _random_tangent(rng, q)
        di, dc = verify_hamiltonian_identity(q, gamma, X)
        assert di <= 1e-6
        assert dc <= 1e-6


def test_moment_map_pairings_are_linear_in_gamma():
    rng = np.random.default_rng(4)
    q = _random_config(rng)
    g1 = rng.standard_normal((8, 8))
    g2 = rng.standard_normal((8, 8))
    a1, c1 = config_moment_maps(q, g1)
    a2, c2 = config_moment_maps(q, g2)
    a12, c12 = config_moment_maps(q, 2.0 * g1 - 3.0 * g2)
    assert abs(a12 - (2 * a1 - 3 * a2)) <= 1e-9 * max(abs(a12), 1.0)
    assert abs(c12 - (2 * c1 - 3 * c2)) <= 1e-9 * max(abs(c12), 1.0)


def test_pointwise_identities_exact():
    rng = np.random.default_rng(5)
    q = _random_config(rng)
    alpha = (rng.standard_normal((8, 8)), rng.standard_normal((8, 8)))
    eta = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    d1v, d2v = pointwise_identities(q, alpha, eta)
    assert d1v <= 1e-12
    assert d2v <= 1e-12


def test_curvature_form_relations():
    rng = np.random.default_rng(6)
    q = _random_config(rng)
    X = _random_tangent(rng, q)
    Y = _random_tangent(rng, q)
    consts = convention_constants()
    forms = curvature_bilinear_forms(q, X, Y)
    # antisymmetry of the analytic forms
    assert abs(gamma_form(q, X.xi, Y.xi)
               + gamma_form(q, Y.xi, X.xi)) <= 1e-10
    assert abs(tau_form(q, X.eta, Y.eta)
               + tau_form(q, Y.eta, X.eta)) <= 1e-12
    assert abs(forms["gamma_fd"]
               - consts["fd_vs_gamma"] * forms["gamma"]) <= 1e-6
    assert abs(forms["gamma"] - consts["gamma_vs_omega1"]
               * forms["omega1_spinor_block"]) <= 1e-10
    assert abs(forms["tau"] - consts["tau_vs_omega1"]
               * forms["omega1_higgs_block"]) <= 1e-10


def test_fundamental_field_is_tangent_triple():
    rng = np.random.default_rng(7)
    q = _random_config(rng)
    gamma = rng.standard_normal((8, 8))
    K = gauge_fundamental_field(q, gamma)
    assert K.ax.shape == (8, 8)
    assert K.xi.shape == q.u.shape
    # linearity
    K2 = gauge_fundamental_field(q, 2.0 * gamma)
    assert np.max(np.abs(K2.xi - 2.0 * K.xi)) <= 1e-12
