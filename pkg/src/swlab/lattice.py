"""Flat-torus lattice, degree-d circle bundle, and discrete calculus.

Site fields are numpy arrays indexed [jx, jy] with jx along the x-period
(length Lx, Nx sites, spacing hx) and jy along the y-period.  Spinor fields
(values in H^n, complex-pair form) have shape (Nx, Ny, n, 2).

Bundle conventions (degree d):

  * wrap cocycle: a section satisfies u(x, y + Ly) = exp(-2*pi*i*d*x/Lx) u(x, y)
    (applied factorwise with the charge w_a as exponent);
  * background vector potential A_x = -2*pi*d*y/(Lx*Ly), A_y = 0, giving link
    phases U_mu = exp(-i*h_mu*(A_mu + alpha_mu)) for a real fluctuation alpha;
  * background curvature density f_bg = +2*pi*d/(Lx*Ly); the total curvature
    flux is +2*pi*i*d and the Chern pairing (i/2*pi) * flux equals -d.

Forward differences everywhere; adjoints are exact transposes (backward
differences with conjugated links), so summation by parts holds to rounding.

The Hodge star uses the conformal metric ds^2 = h^2 (dx^2 + dy^2): on
1-forms *dx = dy, *dy = -dx (conformal-factor free); 0-forms are multiplied
by the 2-form density h^2, 2-forms divided by it.
"""

import numpy as np


class TorusLattice:
    """Uniform rectangular grid on a flat torus with a conformal factor."""

    def __init__(self, Nx, Ny, Lx=1.0, Ly=1.0, conformal=None):
        if Nx < 4 or Ny < 4:
            raise ValueError("lattice must have at least 4 sites per side")
        self.Nx, self.Ny = int(Nx), int(Ny)
        self.Lx, self.Ly = float(Lx), float(Ly)
        self.hx = self.Lx / self.Nx
        self.hy = self.Ly / self.Ny
        self.cell = self.hx * self.hy
        if conformal is None:
            self.h = np.ones((self.Nx, self.Ny))
        else:
            self.h = np.array(conformal, dtype=float)
            if self.h.shape != (self.Nx, self.Ny) or np.any(self.h <= 0):
                raise ValueError("conformal factor must be positive and "
                                 "match the lattice shape")
        self.h2 = self.h ** 2
        self.area = float(np.sum(self.h2) * self.cell)
        self.x = (np.arange(self.Nx) * self.hx)[:, None]
        self.y = (np.arange(self.Ny) * self.hy)[None, :]

    def sites(self):
        return self.Nx * self.Ny

    def __repr__(self):
        return (f"TorusLattice({self.Nx}x{self.Ny}, L=({self.Lx:.4g},"
                f"{self.Ly:.4g}))")


class BundleSpec:
    """Degree of the circle bundle plus derived twist data."""

    def __init__(self, degree=0):
        self.degree = int(degree)

    def cocycle(self, lat):
        """Wrap factor picked up when crossing the y-period, shape (Nx, 1)."""
        return np.exp(-2j * np.pi * self.degree * lat.x / lat.Lx)

    def flux_density(self, lat):
        """Constant background curvature density (imaginary part)."""
        return 2 * np.pi * self.degree / (lat.Lx * lat.Ly)

    def background_angles(self, lat):
        """Link phase angles (theta_x, theta_y) of the background connection.

        The link factor is exp(i*theta_mu) = exp(-i*h_mu*A_mu).
        """
        tx = lat.hx * 2 * np.pi * self.degree * lat.y / (lat.Lx * lat.Ly)
        tx = np.broadcast_to(tx, (lat.Nx, lat.Ny)).copy()
        ty = np.zeros((lat.Nx, lat.Ny))
        return tx, ty


class ConnectionField:
    """Background-of-constant-curvature plus a periodic real fluctuation.

    The stored fields ax, ay are the imaginary parts of the connection
    fluctuation (a_mu = i*alpha_mu), one value per link.
    """

    def __init__(self, lattice, bundle, ax=None, ay=None):
        self.lattice = lattice
        self.bundle = bundle if isinstance(bundle, BundleSpec) \
            else BundleSpec(bundle)
        shape = (lattice.Nx, lattice.Ny)
        self.ax = np.zeros(shape) if ax is None else np.array(ax, float)
        self.ay = np.zeros(shape) if ay is None else np.array(ay, float)
        if self.ax.shape != shape or self.ay.shape != shape:
            raise ValueError("fluctuation shape does not match lattice")

    def link_angles(self):
        """Total link phase angles including the background."""
        lat = self.lattice
        tx, ty = self.bundle.background_angles(lat)
        return tx - lat.hx * self.ax, ty - lat.hy * self.ay

    def copy(self):
        return ConnectionField(self.lattice, self.bundle,
                               self.ax.copy(), self.ay.copy())


# ---------------------------------------------------------------------------
# shifts and differences

def shift(f, axis, back=False):
    """Periodic shift: returns f evaluated at s + mu (or s - mu if back)."""
    return np.roll(f, 1 if back else -1, axis=axis)


def fdiff(f, axis, step):
    """Forward difference (f(s+mu) - f(s))/h, periodic."""
    return (np.roll(f, -1, axis=axis) - f) / step


def bdiff(f, axis, step):
    """Backward difference (f(s) - f(s-mu))/h, periodic."""
    return (f - np.roll(f, 1, axis=axis)) / step


def shift_spinor(u, axis, lat, bundle, weights=None, back=False):
    """Twisted shift of a spinor field: value of u at s + mu (or s - mu),
    with the wrap cocycle applied at the y-period crossing."""
    v = np.roll(u, 1 if back else -1, axis=axis)
    if axis == 1 and bundle.degree != 0:
        coc = bundle.cocycle(lat)[:, 0]  # (Nx,)
        if weights is None:
            ph = coc[:, None, None]
        else:
            w = np.asarray(weights, dtype=float)
            ph = np.exp(1j * np.angle(coc)[:, None] * w)[:, :, None]
        if back:
            # u(s - y) for s in row 0 wraps below: divide by the cocycle
            v[:, 0] = np.conj(ph) * v[:, 0]
        else:
            v[:, -1] = ph * v[:, -1]
    return v


def covariant_derivative(a, u, weights=None):
    """Forward covariant derivative (D_x u, D_y u) of a spinor field."""
    lat = a.lattice
    tx, ty = a.link_angles()
    ux = shift_spinor(u, 0, lat, a.bundle, weights)
    uy = shift_spinor(u, 1, lat, a.bundle, weights)
    if weights is None:
        px = np.exp(1j * tx)[:, :, None, None] * ux
        py = np.exp(1j * ty)[:, :, None, None] * uy
    else:
        w = np.asarray(weights, dtype=float)
        px = np.exp(1j * tx[:, :, None] * w)[..., None] * ux
        py = np.exp(1j * ty[:, :, None] * w)[..., None] * uy
    return (px - u) / lat.hx, (py - u) / lat.hy


def covariant_derivative_adjoint(a, rx, ry, weights=None):
    """Adjoint pair B_x rx + B_y ry of the forward covariant derivative with
    respect to plain (unweighted) site sums: B_mu r (s) =
    (conj(U_mu(s-mu)) r(s-mu) - r(s))/h_mu."""
    lat = a.lattice
    tx, ty = a.link_angles()

    def pull(r, t, axis, h):
        if weights is None:
            tr = np.exp(-1j * t)[:, :, None, None] * r
        else:
            w = np.asarray(weights, dtype=float)
            tr = np.exp(-1j * t[:, :, None] * w)[..., None] * r
        tr = shift_spinor(tr, axis, lat, a.bundle, weights, back=True)
        return (tr - r) / h

    return pull(rx, tx, 0, lat.hx), pull(ry, ty, 1, lat.hy)


def curl(ax, ay, lat):
    """Discrete curl of a 1-form per plaquette (forward differences)."""
    return fdiff(ay, 0, lat.hx) - fdiff(ax, 1, lat.hy)


def curvature(a):
    """Curvature density (imaginary part): curl of the fluctuation plus the
    constant background flux density.  Gauge invariant exactly."""
    return curl(a.ax, a.ay, a.lattice) + a.bundle.flux_density(a.lattice)


def total_flux(a):
    """Total curvature as an imaginary number (should be 2*pi*i*d)."""
    return 1j * float(np.sum(curvature(a)) * a.lattice.cell)


def chern_number(a):
    """(i/2*pi) * total flux; equals -degree."""
    return float(np.real(1j * total_flux(a) / (2 * np.pi)))


def dbar_scalar(f, lat):
    """(d/dx + i d/dy) on a charge-0 complex site field, forward periodic."""
    return fdiff(f, 0, lat.hx) + 1j * fdiff(f, 1, lat.hy)


def dbar_scalar_adjoint(z, lat):
    """Real-pairing adjoint of dbar_scalar: -(bdx - i*bdy)."""
    return -bdiff(z, 0, lat.hx) + 1j * bdiff(z, 1, lat.hy)


# ---------------------------------------------------------------------------
# Hodge star and inner products

def star_1form(fx, fy):
    """Hodge star on 1-forms: *(fx dx + fy dy) = -fy dx + fx dy."""
    return -fy, fx


def star_0form(f, lat):
    return f * lat.h2


def star_2form(F, lat):
    return F / lat.h2


def higgs_components(phi):
    """Real 1-form components (imaginary parts) of Phi = phi dz - conj(phi) dz~:
    (2 Im phi, 2 Re phi)."""
    return 2 * np.imag(phi), 2 * np.real(phi)


def higgs_from_components(ex, ey):
    """Inverse of higgs_components."""
    return 0.5 * ey + 0.5j * ex


def star_higgs(phi):
    """Hodge star acting on a Higgs-type 1-form, in the phi coordinate."""
    return -1j * phi


def ip_0form(f, g, lat):
    """L2 pairing of 0-forms (real or complex; real part for complex)."""
    return float(np.sum(np.real(np.conj(f) * g) * lat.h2) * lat.cell)


def ip_2form(F, G, lat):
    """L2 pairing of 2-form densities."""
    return float(np.sum(np.real(np.conj(F) * G) / lat.h2) * lat.cell)


def ip_1form(f, g, lat):
    """(1/2) integral of *f ^ g for 1-forms given as component pairs."""
    s = np.real(np.conj(f[0]) * g[0]) + np.real(np.conj(f[1]) * g[1])
    return float(0.5 * np.sum(s) * lat.cell)


def ip_spinor(v, w, lat):
    """L2 pairing of spinor (target-tangent) site fields."""
    from .quaternions import pair_dot
    return float(np.sum(pair_dot(v, w) * lat.h2) * lat.cell)


# ---------------------------------------------------------------------------
# gauge transformations

class GaugeTransform:
    """Circle-valued site field in logarithmic form.

    g = exp(i * (theta + 2*pi*(mx*x/Lx + my*y/Ly))) with theta a periodic
    real site field and integer windings mx, my.  Keeping the logarithm makes
    the connection shift an exact link increment, so curvature and all
    residuals are invariant to rounding.
    """

    def __init__(self, theta, mx=0, my=0):
        self.theta = np.asarray(theta, dtype=float)
        self.mx = int(mx)
        self.my = int(my)

    def angle(self, lat):
        return (self.theta + 2 * np.pi * (self.mx * lat.x / lat.Lx
                                          + self.my * lat.y / lat.Ly))

    def link_increments(self, lat):
        """Exact increments (theta(s+mu) - theta(s))/h_mu of the total angle,
        with the winding contribution added analytically (no 2*pi jumps)."""
        dx = fdiff(self.theta, 0, lat.hx) + 2 * np.pi * self.mx / lat.Lx
        dy = fdiff(self.theta, 1, lat.hy) + 2 * np.pi * self.my / lat.Ly
        return dx, dy


def gauge_transform_connection(g, a):
    """a -> a + g^{-1} dg, i.e. alpha_mu -> alpha_mu + d(angle)_mu."""
    lat = a.lattice
    dx, dy = g.link_increments(lat)
    return ConnectionField(lat, a.bundle, a.ax + dx, a.ay + dy)


def gauge_transform_spinor(g, u, lat, weights=None):
    """u -> g.u with charge w_a on the a-th factor."""
    ang = g.angle(lat)
    if weights is None:
        return np.exp(1j * ang)[:, :, None, None] * u
    w = np.asarray(weights, dtype=float)
    return np.exp(1j * ang[:, :, None] * w)[..., None] * u
