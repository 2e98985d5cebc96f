import numpy as np
import pytest

from swlab.lattice import (TorusLattice, BundleSpec, ConnectionField,
                           GaugeTransform, fdiff, bdiff, shift,
                           covariant_derivative, covariant_derivative_adjoint,
                           curvature, total_flux, chern_number, dbar_scalar,
                           dbar_scalar_adjoint, star_1form, ip_0form,
                           ip_1form, ip_2form, ip_spinor,
                           gauge_transform_connection, gauge_transform_spinor)
from swlab.quaternions import pair_dot


def test_lattice_validation():
    with pytest.raises(ValueError):
        TorusLattice(2, 8)
    with pytest.raises(ValueError):
        TorusLattice(8, 8, conformal=np.zeros((8, 8)))
    with pytest.raises(ValueError):
        TorusLattice(8, 8, conformal=np.ones((4, 4)))


def test_lattice_geometry():
    lat = TorusLattice(8, 16, 2.0, 4.0)
    assert lat.hx == 0.25 and lat.hy == 0.25
    assert abs(lat.area - 8.0) <= 1e-14
    prof = np.full((8, 16), 2.0)
    lat2 = TorusLattice(8, 16, 2.0, 4.0, conformal=prof)
    assert abs(lat2.area - 32.0) <= 1e-12


def test_difference_adjointness():
    rng = np.random.default_rng(0)
    f = rng.standard_normal((8, 6))
    g = rng.standard_normal((8, 6))
    for ax, h in ((0, 0.3), (1, 0.7)):
        lhs = np.sum(fdiff(f, ax, h) * g)
        rhs = -np.sum(f * bdiff(g, ax, h))
        assert abs(lhs - rhs) <= 1e-10


def test_shift_wraps():
    f = np.arange(12.0).reshape(4, 3)
    assert np.array_equal(shift(shift(f, 0), 0, back=True), f)


def test_flux_and_chern_number():
    lat = TorusLattice(12, 12, 1.5, 0.5)
    for d in (-2, 0, 3):
        a = ConnectionField(lat, BundleSpec(d))
        assert chern_number(a) == -d
        assert abs(total_flux(a) - 2.0j * np.pi * d) <= 1e-10
        # adding a periodic fluctuation cannot change the total flux
        rng = np.random.default_rng(abs(d))
        a.ax = rng.standard_normal((12, 12))
        a.ay = rng.standard_normal((12, 12))
        assert abs(total_flux(a) - 2.0j * np.pi * d) <= 1e-9
        assert abs(chern_number(a) + d) <= 1e-9


def test_curvature_of_flat_fluctuation():
    lat = TorusLattice(8, 8)
    a = ConnectionField(lat, BundleSpec(0))
    theta = np.random.default_rng(1).standard_normal((8, 8))
    a.ax = fdiff(theta, 0, lat.hx)
    a.ay = fdiff(theta, 1, lat.hy)
    # pure-gauge fluctuation is flat
    assert np.max(np.abs(curvature(a))) <= 1e-9


def test_hodge_star_1form():
    rng = np.random.default_rng(2)
    lat = TorusLattice(8, 8, 1.3, 0.9)
    fx, fy = rng.standard_normal((2, 8, 8))
    gx, gy = rng.standard_normal((2, 8, 8))
    sx, sy = star_1form(fx, fy)
    ssx, ssy = star_1form(sx, sy)
    assert np.max(np.abs(ssx + fx)) == 0.0 and np.max(np.abs(ssy + fy)) == 0.0
    assert abs(ip_1form((sx, sy), (sx, sy), lat)
               - ip_1form((fx, fy), (fx, fy), lat)) <= 1e-12
    # skew-adjointness
    assert abs(ip_1form((sx, sy), (gx, gy), lat)
               + ip_1form((fx, fy), star_1form(gx, gy), lat)) <= 1e-12


def test_dbar_scalar_adjoint_plain_pairing():
    rng = np.random.default_rng(3)
    lat = TorusLattice(8, 6, 1.1, 0.7)
    f = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
    z = rng.standard_normal((8, 6)) + 1j * rng.standard_normal((8, 6))
    lhs = np.sum(np.real(np.conj(dbar_scalar(f, lat)) * z))
    rhs = np.sum(np.real(np.conj(f) * dbar_scalar_adjoint(z, lat)))
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1.0)


def test_covariant_derivative_adjoint():
    rng = np.random.default_rng(4)
    lat = TorusLattice(8, 8, 1.2, 0.8)
    weights = np.array([1.0, 2.0])
    a = ConnectionField(lat, BundleSpec(1),
                        rng.standard_normal((8, 8)),
                        rng.standard_normal((8, 8)))
    u = rng.standard_normal((8, 8, 2, 2)) + 1j * rng.standard_normal(
        (8, 8, 2, 2))
    rx = rng.standard_normal(u.shape) + 1j * rng.standard_normal(u.shape)
    ry = rng.standard_normal(u.shape) + 1j * rng.standard_normal(u.shape)
    dx, dy = covariant_derivative(a, u, weights)
    lhs = float(np.sum(pair_dot(dx, rx) + pair_dot(dy, ry)) * lat.cell)
    adj = covariant_derivative_adjoint(a, rx, ry, weights)
    rhs = float(np.sum(pair_dot(u, adj)) * lat.cell)
    assert abs(lhs - rhs) <= 1e-9 * max(abs(lhs), 1.0)


def test_covariant_derivative_cocycle_consistency():
    """The background-twisted derivative of the theta-like section stays
    bounded while the naive periodic derivative of the same data jumps at
    the seam."""
    from swlab.solver import vortex_ansatz
    lat = TorusLattice(16, 16)
    q = vortex_ansatz(lat, BundleSpec(1), tau=4.0 * np.pi)
    dx, dy = covariant_derivative(q.a, q.u, q.weights)
    interior = np.abs(dy[:, :-1, 0, 0])
    seam = np.abs(dy[:, -1, 0, 0])
    assert np.max(seam) <= 10.0 * max(np.max(interior), 1e-300)


def test_inner_products_positive():
    rng = np.random.default_rng(5)
    lat = TorusLattice(8, 8, 1.1, 0.9,
                       conformal=np.exp(0.1 * rng.standard_normal((8, 8))))
    f = rng.standard_normal((8, 8))
    v = rng.standard_normal((8, 8, 1, 2)) + 1j * rng.standard_normal(
        (8, 8, 1, 2))
    assert ip_0form(f, f, lat) > 0
    assert ip_2form(f, f, lat) > 0
    assert ip_spinor(v, v, lat) > 0


def test_gauge_transform_connection_and_spinor():
    rng = np.random.default_rng(6)
    lat = TorusLattice(8, 8)
    a = ConnectionField(lat, BundleSpec(2),
                        rng.standard_normal((8, 8)),
                        rng.standard_normal((8, 8)))
    g = GaugeTransform(rng.standard_normal((8, 8)), mx=1, my=-2)
    a2 = gauge_transform_connection(g, a)
    assert np.max(np.abs(curvature(a2) - curvature(a))) <= 1e-9
    u = rng.standard_normal((8, 8, 1, 2)) + 1j * rng.standard_normal(
        (8, 8, 1, 2))
    u2 = gauge_transform_spinor(g, u, lat)
    assert np.max(np.abs(np.abs(u2) - np.abs(u))) <= 1e-12
