"""HyperKahler geometry of the configuration space.

The configuration space of triples (a, u, phi) carries the metric

    g_C(X, Y) = (1/2)<alpha1, alpha2>_1 + (1/2)<xi1, xi2>_0
                + (1/2)<eta1, eta2>_1

(the Higgs 1-form pairing written through its delta-phi coordinate) and a
compatible triple of complex structures

    S1 (alpha, xi, eta) = (*alpha, -I1 xi, -*eta)
    S2 (alpha, xi, eta) = (*eta~,  -I2 xi,  (*alpha)~)
    S3 (alpha, xi, eta) = (-eta~,   I3 xi,  alpha~)

where ~ is the isometric dictionary between real 1-forms and Phi-type
1-forms: eta = dphi dz - conj dz~ has components (2 Im dphi, 2 Re dphi), and
conversely a real 1-form (ax, ay) corresponds to dphi = ay/2 + i ax/2.  The
triple satisfies the quaternion relations; Omega_i(X, Y) = g_C(S_i X, Y).

The curvature and Higgs equations are moment maps for the gauge action with
respect to Omega_1 and Omega_c = Omega_2 + i Omega_3.  The discrete moment
maps below are defined in summed-by-parts form so that the Hamiltonian
identities

    d<mu_I, gamma>(X)  = Omega_1(K_gamma, X)
    d<mu_c, gamma>(X)  = Omega_c(K_gamma, X)

hold exactly (both pairings are affine-quadratic in the fields, so central
finite differences of any step reproduce them to rounding).

The curvature bilinear forms of the determinant-line-bundle metric are the
spinor form gamma(z1, z2) = int g(I1 z1, z2) and the Higgs form
tau(eta1, eta2) = (i/pi) sum Im(conj(dphi1) dphi2) * cell; the convention
sheet relating them to the Omega_1 blocks is asserted by
convention_constants / curvature_bilinear_forms.
"""

import numpy as np

from .quaternions import I1, I2, I3, pair_dot, moment_real, moment_complex
from .lattice import (fdiff, star_1form, higgs_components,
                      higgs_from_components, dbar_scalar)
from .equations import residual_2d, energy
from .linearization import (TangentTriple, domain_inner, d1, apply_Dq,
                            pack_domain, unpack_domain, scaled_matvec,
                            materialize, dom_dim, cod_dim,
                            AmbiguousSpectrumError)


def config_metric(q, X, Y):
    """The configuration-space Riemannian metric g_C(X, Y)."""
    return domain_inner(q, X, Y)


def alpha_of_eta(eta):
    """Dictionary: the Phi-type 1-form of eta as a real 1-form pair."""
    return higgs_components(eta)


def eta_of_alpha(ax, ay):
    """Inverse dictionary: delta-phi coordinate of a real 1-form."""
    return higgs_from_components(ax, ay)


def apply_config_structure(sel, q, X):
    """Apply the complex structure S_sel (sel in {1, 2, 3}) to X."""
    lat = q.lattice
    if sel == 1:
        sx, sy = star_1form(X.ax, X.ay)
        return TangentTriple(sx, sy, -I1(X.xi), 1j * X.eta)
    if sel == 2:
        ex, ey = alpha_of_eta(X.eta)
        hx, hy = star_1form(ex, ey)
        sx, sy = star_1form(X.ax, X.ay)
        return TangentTriple(hx, hy, -I2(X.xi), eta_of_alpha(sx, sy))
    if sel == 3:
        ex, ey = alpha_of_eta(X.eta)
        return TangentTriple(-ex, -ey, I3(X.xi),
                             eta_of_alpha(X.ax, X.ay))
    raise ValueError("selector must be 1, 2 or 3")


def omega(sel, q, X, Y):
    """Symplectic form Omega_sel(X, Y) = g_C(S_sel X, Y)."""
    return config_metric(q, apply_config_structure(sel, q, X), Y)


def omega_c(q, X, Y):
    """Complex form Omega_c = Omega_2 + i Omega_3."""
    return omega(2, q, X, Y) + 1j * omega(3, q, X, Y)


def gauge_fundamental_field(q, gamma):
    """Fundamental vector field of the gauge action, K_gamma = d1(gamma)."""
    return d1(q, gamma)


def config_moment_maps(q, gamma):
    """Moment-map pairings (<mu_I, gamma>, <mu_c, gamma>).

    mu_I pairs the curvature/moment-map combination against a real gauge
    generator gamma; mu_c pairs the Higgs equation.  Both are written with
    the derivative moved onto gamma (exact summation by parts on the
    torus), which is what makes verify_hamiltonian_identity exact.
    """
    lat = q.lattice
    g = np.asarray(gamma, dtype=float)
    gx = fdiff(g, 0, lat.hx)
    gy = fdiff(g, 1, lat.hy)

    mu1 = 0.5 * lat.cell * float(
        np.sum(-gy * q.a.ax + gx * q.a.ay)
        + np.sum(g * q.a.bundle.flux_density(lat)))
    mu1 -= 0.5 * lat.cell * float(
        np.sum(g * moment_real(q.u, q.weights) * lat.h2))

    muc = lat.cell * complex(np.sum((gx + 1j * gy) * q.phi))
    muc -= 0.5 * lat.cell * complex(
        np.sum(g * np.conj(moment_complex(q.u, q.weights)) * lat.h2))
    return mu1, muc


def _perturbed(q, X, t):
    qt = q.copy()
    qt.a.ax = q.a.ax + t * X.ax
    qt.a.ay = q.a.ay + t * X.ay
    qt.u = q.u + t * X.xi
    qt.phi = q.phi + t * X.eta
    return qt


def verify_hamiltonian_identity(q, gamma, X, step=1e-4):
    """Finite-difference defects of the two Hamiltonian identities.

    Returns (defect_I, defect_c): central differences of the moment-map
    pairings along X against Omega_1(K_gamma, X) and Omega_c(K_gamma, X).
    """
    K = gauge_fundamental_field(q, gamma)
    s = float(step)
    p1, c1 = config_moment_maps(_perturbed(q, X, s), gamma)
    m1, mc = config_moment_maps(_perturbed(q, X, -s), gamma)
    d_mu1 = (p1 - m1) / (2 * s)
    d_muc = (c1 - mc) / (2 * s)
    defect_i = abs(d_mu1 - omega(1, q, K, X))
    defect_c = abs(d_muc - omega_c(q, K, X))
    return defect_i, defect_c


# ---------------------------------------------------------------------------
# invariance of the solution subspace under S1

def _project_1_0(vx, vy):
    """(1,0)-part of a spinor-valued 1-form, stored by its dx component."""
    return 0.5 * (vx - I1(vy))


def pointwise_identities(q, alpha, eta, rng=None):
    """Pointwise defects of the two algebraic identities behind the
    S1-invariance lemma:

        (L_u(*alpha))^{1,0} = -I1 (L_u alpha)^{1,0}
        (X_{*eta})^{1,0}    = -I1 (X_eta)^{1,0}

    alpha = (ax, ay) a real 1-form, eta a delta-phi field.
    """
    from .quaternions import fundamental_field
    from .equations import higgs_vector_field
    ax, ay = alpha
    w = q.weights

    def L(bx, by):
        return (fundamental_field(bx, q.u, w), fundamental_field(by, q.u, w))

    sx, sy = star_1form(ax, ay)
    lhs1 = _project_1_0(*L(sx, sy))
    rhs1 = -I1(_project_1_0(*L(ax, ay)))
    d1v = float(np.max(np.abs(lhs1 - rhs1)))

    # X_phi is already stored as the dx component of a (1,0)-form, and
    # *eta has delta-phi coordinate -i eta
    lhs2 = higgs_vector_field(-1j * eta, q.u, w)
    rhs2 = -I1(higgs_vector_field(eta, q.u, w))
    d2v = float(np.max(np.abs(lhs2 - rhs2)))
    return d1v, d2v


def check_Cprime_invariance(q, rel_tol=1e-6, rank_gap=1e3):
    """Defect of S1-invariance of the tangent space of the solution set of
    the Dirac and Higgs equations (rows 2-3 of the linearization).

    Materializes the scaled linearization, extracts the kernel of its last
    two rows by SVD with a gap-checked rank decision, applies S1 to each
    kernel vector and measures the largest relative projection onto the
    orthogonal complement of the kernel.
    """
    lat = q.lattice
    N = lat.sites()
    M = materialize(lambda v: scaled_matvec(q, v), dom_dim(q), cod_dim(q))
    rows = M[N:, :]          # r2 and r3 rows
    U, s, Vh = np.linalg.svd(rows, full_matrices=True)
    # rank decision: allow for an approximate solution by cutting relative
    # to the larger of rel_tol and the residual size
    res = residual_2d(q).norm(lat)
    cut = max(rel_tol, 10.0 * res / max(s[0], 1e-300)) * s[0]
    nz = int(np.sum(s < cut))
    rank = len(s) - nz
    if nz and nz < len(s):
        gap = s[rank - 1] / max(s[rank], 1e-300)
        if not (gap > rank_gap or s[rank] < 1e-12 * s[0]):
            raise AmbiguousSpectrumError(
                f"kernel rank ambiguous: sigma around the cut "
                f"{s[len(s) - nz - 1]:.3e} / {s[len(s) - nz]:.3e}")
    V = Vh[rank:].conj().T                      # orthonormal kernel basis
    worst = 0.0
    for i in range(V.shape[1]):
        X = unpack_domain(q, V[:, i])
        w = pack_domain(q, apply_config_structure(1, q, X))
        resid = w - V @ (V.conj().T @ w)
        worst = max(worst, float(np.linalg.norm(resid)
                                 / max(np.linalg.norm(w), 1e-300)))
    return worst


# ---------------------------------------------------------------------------
# curvature bilinear forms of the determinant-line-bundle metric

def rho0_integral(q, u=None):
    """int rho0(u) omega_Sigma with rho0 the flat hyperKahler potential."""
    from .quaternions import hyperkahler_potential
    lat = q.lattice
    uu = q.u if u is None else u
    return float(np.sum(hyperkahler_potential(uu) * lat.h2) * lat.cell)


def gamma_form(q, xi1, xi2):
    """Spinor curvature form gamma(z1, z2) = int g(I1 z1, z2) omega."""
    lat = q.lattice
    return float(np.sum(pair_dot(I1(xi1), xi2) * lat.h2) * lat.cell)


def gamma_form_fd(q, xi1, xi2, step=1e-4):
    """The same form from the dd^c finite-difference Hessian of int rho0.

    Computes (d d^c P)(xi1, xi2) with P = rho0_integral by nested central
    differences; for the flat potential this equals -2 * gamma_form
    exactly up to finite-difference rounding.
    """
    s = float(step)

    def dP(u, v):
        return (rho0_integral(q, u + s * v) - rho0_integral(q, u - s * v)) \
            / (2 * s)

    def dcP(u, v):
        return dP(u, I1(v))

    val = (dcP(q.u + s * xi1, xi2) - dcP(q.u - s * xi1, xi2)) / (2 * s)
    val -= (dcP(q.u + s * xi2, xi1) - dcP(q.u - s * xi2, xi1)) / (2 * s)
    return float(val)


def tau_form(q, eta1, eta2):
    """Higgs curvature form tau(eta1, eta2) = (i/4pi) int eta1 ^ eta2."""
    lat = q.lattice
    return 1j / np.pi * complex(
        np.sum(np.imag(np.conj(eta1) * eta2))) * lat.cell


def convention_constants():
    """The documented constants relating the curvature forms to Omega_1.

    gamma_form   = gamma_vs_omega1 * (spinor block of Omega_1)
    tau_form     = tau_vs_omega1   * (Higgs block of Omega_1)
    gamma_form_fd = fd_vs_gamma    * gamma_form
    """
    return {"gamma_vs_omega1": -2.0,
            "tau_vs_omega1": 1j / (2.0 * np.pi),
            "fd_vs_gamma": -2.0}


def curvature_bilinear_forms(q, X, Y, step=1e-4):
    """Evaluate the curvature forms on a pair of tangents.

    Returns a dict with the analytic gamma form, its finite-difference
    Hessian version, the tau form, and the spinor/Higgs blocks of Omega_1,
    so tests can assert the convention_constants relations.
    """
    lat = q.lattice
    g_an = gamma_form(q, X.xi, Y.xi)
    g_fd = gamma_form_fd(q, X.xi, Y.xi, step)
    t = tau_form(q, X.eta, Y.eta)
    om_xi = -0.5 * lat.cell * float(np.sum(pair_dot(I1(X.xi), Y.xi)
                                           * lat.h2))
    om_eta = 2.0 * lat.cell * float(np.sum(np.real(np.conj(1j * X.eta)
                                                   * Y.eta)))
    return {"gamma": g_an, "gamma_fd": g_fd, "tau": t,
            "omega1_spinor_block": om_xi, "omega1_higgs_block": om_eta}
