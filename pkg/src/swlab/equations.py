"""Field equations on the torus: residuals, energy, and the 4D system.

The two-dimensional system for a configuration q = (a, u, phi) with
parameters epsilon in [0, 1] and a constant Fayet-Iliopoulos shift tau (an
iR value stored by its imaginary part) reads, in our coordinates,

    r1 = epsilon * (*F_a) - mu1(u) + tau
    r2 = del_a u - X_phi(u)           (stored by its dx component; the full
                                       1-form is r2 dx + I1 r2 dy)
    r3 = epsilon * (*dbar Phi) - mu_c(u)

with del_a u = D_x u - I1 D_y u, X_phi(u) = (i w conj(phi) c2, -i w phi c1)
factorwise, *F_a = curvature density / h^2 and *dbar Phi = (d_x + i d_y)
phi / h^2.  Zeroes of the residual triple solve the dimensionally reduced
system; at epsilon = 1, tau = 0 it matches the four-dimensional self-duality
system under the lift implemented by residual_4d/reduction_consistency.

Energy = (1/2)(|r1|^2 + |r2|^2 + |r3|^2) in the L2 norms below; for the
r2 slot the squared norm of the full 1-form equals a single plain pairing of
the stored component (conformal-factor free).
"""

import numpy as np

from . import lattice as lat_mod
from .quaternions import (I1, I2, I3, pair_dot, moment_real, moment_complex,
                          dmoment_real, dmoment_complex, fundamental_field)
from .lattice import (TorusLattice, BundleSpec, ConnectionField,
                      covariant_derivative, curvature, dbar_scalar,
                      fdiff, ip_0form, gauge_transform_connection,
                      gauge_transform_spinor)


class Configuration:
    """A point of the configuration space plus the (epsilon, tau) weights."""

    def __init__(self, lattice, bundle, a=None, u=None, phi=None,
                 weights=None, n=1, epsilon=1.0, tau=0.0):
        self.lattice = lattice
        self.bundle = bundle if isinstance(bundle, BundleSpec) \
            else BundleSpec(bundle)
        self.a = a if a is not None else ConnectionField(lattice, self.bundle)
        if self.a.bundle.degree != self.bundle.degree:
            raise ValueError("connection and bundle degree mismatch")
        shape = (lattice.Nx, lattice.Ny)
        if u is None:
            u = np.zeros(shape + (n, 2), dtype=complex)
        self.u = np.asarray(u, dtype=complex)
        if self.u.shape[:2] != shape or self.u.ndim != 4:
            raise ValueError("spinor shape mismatch")
        self.n = self.u.shape[2]
        self.phi = (np.zeros(shape, dtype=complex) if phi is None
                    else np.asarray(phi, dtype=complex))
        if weights is None:
            self.weights = np.ones(self.n)
        else:
            self.weights = np.asarray(weights, dtype=float)
            if self.weights.shape != (self.n,):
                raise ValueError("weights shape mismatch")
        if not (0.0 <= epsilon <= 1.0):
            raise ValueError("epsilon must lie in [0, 1]")
        self.epsilon = float(epsilon)
        self.tau = float(tau)  # imaginary part of the iR-valued constant

    def copy(self):
        return Configuration(self.lattice, self.bundle, self.a.copy(),
                             self.u.copy(), self.phi.copy(),
                             self.weights.copy(), epsilon=self.epsilon,
                             tau=self.tau)

    def uniform_weights(self):
        return bool(np.all(self.weights == 1.0))


class ResidualTriple:
    """Value of the residual map: (r1, r2, r3) site fields."""

    def __init__(self, r1, r2, r3):
        self.r1 = r1          # real array (imaginary part of an iR field)
        self.r2 = r2          # complex pair array (Nx, Ny, n, 2)
        self.r3 = r3          # complex array

    def norms(self, lat):
        n1 = np.sqrt(ip_0form(self.r1, self.r1, lat))
        n2 = np.sqrt(float(np.sum(pair_dot(self.r2, self.r2)) * lat.cell))
        n3 = np.sqrt(ip_0form(self.r3, self.r3, lat))
        return n1, n2, n3

    def norm(self, lat):
        n1, n2, n3 = self.norms(lat)
        return float(np.sqrt(n1 ** 2 + n2 ** 2 + n3 ** 2))


def higgs_vector_field(phi, u, weights=None):
    """Pointwise Higgs vector field X_phi(u) = I2 K_{i Re phi} + I3 K_{i Im phi}.

    In complex-pair coordinates: (i w conj(phi) c2, -i w phi c1) factorwise.
    phi may be any complex site field (Lie-algebra tensor C valued).
    """
    ph = np.asarray(phi)[:, :, None]
    if weights is not None:
        ph = ph * np.asarray(weights, dtype=float)
    c1, c2 = u[..., 0], u[..., 1]
    return np.stack([1j * np.conj(ph) * c2, -1j * ph * c1], axis=-1)


def del_a(a, u, weights=None):
    """(1,0)-type covariant derivative del_a u = D_x u - I1 D_y u (stored as
    the single independent component of the resulting 1-form)."""
    dx, dy = covariant_derivative(a, u, weights)
    return dx - I1(dy)


def residual_2d(q):
    """Residual triple of the reduced system at configuration q."""
    lat = q.lattice
    r1 = (q.epsilon * curvature(q.a) / lat.h2
          - moment_real(q.u, q.weights) + q.tau)
    r2 = del_a(q.a, q.u, q.weights) - higgs_vector_field(q.phi, q.u,
                                                         q.weights)
    r3 = (q.epsilon * dbar_scalar(q.phi, lat) / lat.h2
          - moment_complex(q.u, q.weights))
    return ResidualTriple(r1, r2, r3)


def energy(q):
    """(1/2) squared L2 norm of the residual triple."""
    r = residual_2d(q)
    n1, n2, n3 = r.norms(q.lattice)
    return 0.5 * (n1 ** 2 + n2 ** 2 + n3 ** 2)


def residual_norm(q):
    return residual_2d(q).norm(q.lattice)


def gauge_transform_configuration(g, q):
    """Apply a gauge transformation to a whole configuration (phi fixed)."""
    a = gauge_transform_connection(g, q.a)
    u = gauge_transform_spinor(g, q.u, q.lattice, q.weights)
    return Configuration(q.lattice, q.bundle, a, u, q.phi.copy(),
                         q.weights.copy(), epsilon=q.epsilon, tau=q.tau)


def commutator_term(*fields):
    """Lie bracket contributions ([a0, a1], [Phi ^ Phi*], ...).

    The structure group is abelian, so every bracket vanishes identically;
    this is kept as an explicit term so the residual assembly mirrors the
    full non-abelian shape of the equations.
    """
    ref = np.asarray(fields[0])
    return np.zeros(ref.shape, dtype=ref.dtype)


# ---------------------------------------------------------------------------
# four-dimensional system and the reduction check

class Grid4D:
    """Periodic 4D grid with spacings h[mu], trivial bundle."""

    def __init__(self, shape, spacings=(1.0, 1.0, 1.0, 1.0)):
        self.shape = tuple(int(s) for s in shape)
        self.h = tuple(float(s) for s in spacings)


def residual_4d(grid, a4, u4, weights=None):
    """Residuals of the 4D system on a trivial bundle.

    a4 is a list of four real site fields (imaginary parts of the connection
    components); u4 has shape grid.shape + (n, 2).  Directions 0 and 1 use
    exponential link phases (matching the 2D scheme exactly); directions 2
    and 3 couple through site-local fundamental fields, which matches the
    reduced system exactly for lifts that are constant in those directions.
    Both couplings are consistent discretizations of the same continuum
    operator.

    Returns (c1, c2, c3, dirac) where c_i are the three curvature-minus-
    moment-map combinations and dirac is the quaternionic Dirac residual.
    """
    h = grid.h
    if weights is None:
        weights = np.ones(u4.shape[-2])
    w = np.asarray(weights, dtype=float)

    def fd(f, mu):
        return (np.roll(f, -1, axis=mu) - f) / h[mu]

    def F(mu, nu):
        return fd(a4[nu], mu) - fd(a4[mu], nu)

    # curvature equations (self-duality combinations minus moment maps)
    c1 = F(0, 1) + F(2, 3) - moment_real(u4, w)
    mc = moment_complex(u4, w)
    c2 = F(0, 2) + F(3, 1) - np.real(mc)
    c3 = F(0, 3) + F(1, 2) - np.imag(mc)

    # Dirac operator: D0 u - I1 D1 u - I2 (d2 u + K_{a2}) - I3 (d3 u + K_{a3})
    def cov(mu):
        ph = np.exp(-1j * h[mu] * a4[mu][..., None] * w)[..., None]
        return (ph * np.roll(u4, -1, axis=mu) - u4) / h[mu]

    def site(mu):
        du = (np.roll(u4, -1, axis=mu) - u4) / h[mu]
        return du + fundamental_field(a4[mu], u4, w)

    dirac = cov(0) - I1(cov(1)) - I2(site(2)) - I3(site(3))
    return c1, c2, c3, dirac


def lift_4d(q, n23=2):
    """Lift a d=0, unit-conformal-factor 2D configuration to a 4D grid that
    is constant in the two reduced directions, relabeling Re phi, Im phi as
    the third and fourth connection components."""
    if q.bundle.degree != 0:
        raise ValueError("the 4D lift requires a trivial bundle (d = 0)")
    lat = q.lattice
    if not np.allclose(lat.h, 1.0):
        raise ValueError("the 4D lift requires a unit conformal factor")
    shape = (lat.Nx, lat.Ny, n23, n23)
    grid = Grid4D(shape, (lat.hx, lat.hy, 1.0, 1.0))

    def tile(f):
        return np.broadcast_to(f[:, :, None, None], shape).copy()

    a4 = [tile(q.a.ax), tile(q.a.ay),
          tile(np.real(q.phi)), tile(np.imag(q.phi))]
    u4 = np.broadcast_to(q.u[:, :, None, None],
                         shape + q.u.shape[-2:]).copy()
    return grid, a4, u4


def reduction_consistency(q):
    """Maximum pointwise defect between the 4D residual of the lifted
    configuration and the embedded 2D residual at epsilon = 1, tau = 0."""
    grid, a4, u4 = lift_4d(q)
    c1, c2, c3, dirac = residual_4d(grid, a4, u4, q.weights)

    q1 = q.copy()
    q1.epsilon, q1.tau = 1.0, 0.0
    r = residual_2d(q1)

    d1 = np.max(np.abs(c1 - r.r1[:, :, None, None]))
    dc = np.max(np.abs((c2 + 1j * c3) - r.r3[:, :, None, None]))
    dd = np.max(np.abs(dirac - r.r2[:, :, None, None]))
    return float(max(d1, dc, dd))
