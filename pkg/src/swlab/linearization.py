"""Linearized operator, its exact adjoint, and numerical Fredholm indices.

Tangent vectors to the configuration space are triples X = (alpha, xi, eta):
alpha a real 1-form (two site fields), xi a spinor-tangent field twisted like
u, and eta a variation of the Higgs field, stored as a single complex site
field delta-phi (the 1-form it encodes is Phi-type: eta = dphi dz - conj dz~,
components (2 Im, 2 Re) as in lattice.higgs_components).

apply_Dq is the exact derivative of the discrete residual; apply_Dq_adjoint
is its exact transpose with respect to the configuration-space metric

    g_C(X, Y) = (1/2)<alpha, beta>_1 + (1/2)<xi, zeta>_0 + (1/2)<eta, eta'>_1

and the codomain metric

    <Y, Y'> = <r1, r1'>_0 + <r2, r2'>_plain + <r3, r3'>_0,

which is the norm whose half-square is the energy.  All adjoints are exact
transposes; the identity <D X, Y> = <X, D* Y> holds to rounding.

Fredholm indices of materialized operators are computed from the singular
value decomposition.  A finite lattice matrix can never have a nonzero naive
index on a square matrix: each continuum zero mode is accompanied by a
spurious high-frequency partner ("doubler") on the opposite side.  The index
is therefore the count of *smooth* right null vectors minus smooth left null
vectors, where smoothness is decided by the Rayleigh quotient of the
covariant lattice Laplacian against a cutoff well separated from both
populations; ambiguous classifications raise instead of guessing.  The r3
codomain is reduced by its two constant modes ("reduced r3 codomain"), which
the image of the discrete *dbar operator misses exactly (forward differences
telescope to zero mean); this convention makes the Higgs block carry index 2
on the torus and keeps block additivity an honest check.
"""

import numpy as np

from .quaternions import I1, pair_dot
from .lattice import (fdiff, bdiff, curl, dbar_scalar, dbar_scalar_adjoint,
                      shift_spinor, covariant_derivative,
                      covariant_derivative_adjoint, ip_0form, ip_1form,
                      ip_spinor)
from .equations import residual_2d, higgs_vector_field


class TangentTriple:
    """Tangent vector (alpha, xi, eta) at a configuration."""

    def __init__(self, ax, ay, xi, eta):
        self.ax = ax      # real (Nx, Ny)
        self.ay = ay      # real (Nx, Ny)
        self.xi = xi      # complex (Nx, Ny, n, 2)
        self.eta = eta    # complex (Nx, Ny), the delta-phi coordinate

    @staticmethod
    def zeros(q):
        sh = (q.lattice.Nx, q.lattice.Ny)
        return TangentTriple(np.zeros(sh), np.zeros(sh),
                             np.zeros(sh + (q.n, 2), complex),
                             np.zeros(sh, complex))

    def copy(self):
        return TangentTriple(self.ax.copy(), self.ay.copy(),
                             self.xi.copy(), self.eta.copy())


class CotripleValue:
    """Codomain vector with the shape of a residual triple."""

    def __init__(self, r1, r2, r3):
        self.r1 = r1
        self.r2 = r2
        self.r3 = r3

    @staticmethod
    def zeros(q):
        sh = (q.lattice.Nx, q.lattice.Ny)
        return CotripleValue(np.zeros(sh),
                             np.zeros(sh + (q.n, 2), complex),
                             np.zeros(sh, complex))


def domain_inner(q, X, Y):
    """Configuration-space metric g_C on tangent triples."""
    lat = q.lattice
    t = ip_1form((X.ax, X.ay), (Y.ax, Y.ay), lat)
    t += 0.5 * ip_spinor(X.xi, Y.xi, lat)
    # 1-form pairing of the Higgs slots: (1/2) sum |components|^2 = 2|dphi|^2
    t += float(2.0 * np.sum(np.real(np.conj(X.eta) * Y.eta)) * lat.cell)
    return t


def codomain_inner(q, Y, Z):
    """Codomain metric; energy = (1/2) codomain_inner(F, F)."""
    lat = q.lattice
    t = ip_0form(Y.r1, Z.r1, lat)
    t += float(np.sum(pair_dot(Y.r2, Z.r2)) * lat.cell)
    t += ip_0form(Y.r3, Z.r3, lat)
    return t


def _weighted(arr, w):
    """Multiply a (..., n, 2) array factorwise by the charge vector."""
    return arr * w[:, None]


def apply_Dq(q, X):
    """Exact derivative of the discrete residual at q along X."""
    lat = q.lattice
    w = q.weights
    c1, c2 = q.u[..., 0], q.u[..., 1]

    # r1 row
    r1 = (q.epsilon * curl(X.ax, X.ay, lat) / lat.h2
          - dmoment_real_field(q, X.xi))

    # r2 row: Dirac part on xi
    dxx, dyx = covariant_derivative(q.a, X.xi, w)
    r2 = dxx - I1(dyx)
    # zeroth-order parts: -X_phi acting on xi, -X_eta acting on u
    r2 -= higgs_vector_field(q.phi, X.xi, w)
    r2 -= higgs_vector_field(X.eta, q.u, w)
    # connection variation: delta D_mu u = -i w alpha_mu * (transported u)
    px, py = _transported(q)
    ax = (X.ax[:, :, None] * w)[..., None]
    ay = (X.ay[:, :, None] * w)[..., None]
    dDx = -1j * ax * px
    dDy = -1j * ay * py
    r2 += dDx - I1(dDy)

    # r3 row
    r3 = (q.epsilon * dbar_scalar(X.eta, lat) / lat.h2
          - dmoment_complex_field(q, X.xi))
    return CotripleValue(r1, r2, r3)


def dmoment_real_field(q, xi):
    from .quaternions import dmoment_real
    return dmoment_real(q.u, xi, q.weights)


def dmoment_complex_field(q, xi):
    from .quaternions import dmoment_complex
    return dmoment_complex(q.u, xi, q.weights)


def _transported(q):
    """Link-transported neighbor values P_mu(s) = U_mu(s) u(s + mu)."""
    lat = q.lattice
    dx, dy = covariant_derivative(q.a, q.u, q.weights)
    px = q.u + lat.hx * dx
    py = q.u + lat.hy * dy
    return px, py


def apply_Dq_adjoint(q, Y):
    """Exact transpose of apply_Dq for the metrics above."""
    lat = q.lattice
    w = q.weights
    c1, c2 = q.u[..., 0], q.u[..., 1]
    r1, rho, r3 = Y.r1, Y.r2, Y.r3
    rho1, rho2 = rho[..., 0], rho[..., 1]

    # --- alpha slot ---
    # from r1 <- eps*curl/h^2 (codomain h2 cancels the 1/h2)
    ax = 2.0 * q.epsilon * bdiff(r1, 1, lat.hy)
    ay = -2.0 * q.epsilon * bdiff(r1, 0, lat.hx)
    # from the connection variation inside r2
    px, py = _transported(q)
    ax += 2.0 * np.sum((np.imag(np.conj(rho1) * px[..., 0])
                        + np.imag(np.conj(rho2) * px[..., 1])) * w, axis=-1)
    ay += 2.0 * np.sum((np.real(np.conj(rho1) * py[..., 0])
                        - np.real(np.conj(rho2) * py[..., 1])) * w, axis=-1)

    # --- xi slot ---
    # from the moment-map rows (codomain h2 cancels the domain h2)
    r1w = (r1[:, :, None] * w)
    xi = np.stack([-2.0 * r1w * c1, 2.0 * r1w * c2], axis=-1)
    r3w = (r3[:, :, None] * w)
    xi += 2.0 * np.stack([-1j * np.conj(r3w) * c2, 1j * r3w * c1], axis=-1)
    # from the Dirac part: adjoint of (Dx - I1 Dy) under plain sums, then
    # the 2/h2 metric correction
    xi += (2.0 / lat.h2)[:, :, None, None] * _dirac_adjoint(q, rho)
    # from -X_phi acting on xi
    ph = q.phi[:, :, None] * w
    xv = np.stack([-1j * np.conj(ph) * rho2, 1j * ph * rho1], axis=-1)
    xi += (2.0 / lat.h2)[:, :, None, None] * xv

    # --- eta slot ---
    eta = 0.5 * q.epsilon * dbar_scalar_adjoint(r3, lat)
    eta += -0.5j * np.sum((np.conj(rho1) * c2 + np.conj(c1) * rho2) * w,
                          axis=-1)
    return TangentTriple(ax, ay, xi, eta)


def _dirac_adjoint(q, rho):
    """Adjoint of xi -> Dx xi - I1 Dy xi with respect to plain site sums."""
    # slot1 sees Dx + i Dy, slot2 sees Dx - i Dy; the links act identically
    # on both slots, so the slotwise adjoints share one transported pull
    bx, by = covariant_derivative_adjoint(q.a, rho, rho, q.weights)
    out = np.empty_like(rho)
    out[..., 0] = bx[..., 0] - 1j * by[..., 0]
    out[..., 1] = bx[..., 1] + 1j * by[..., 1]
    return out


def d1(q, gamma):
    """Infinitesimal gauge action: gamma (real site field, the imaginary
    part of an iR field) -> (d gamma, K_gamma|u, 0)."""
    lat = q.lattice
    ax = fdiff(gamma, 0, lat.hx)
    ay = fdiff(gamma, 1, lat.hy)
    from .quaternions import fundamental_field
    xi = fundamental_field(gamma, q.u, q.weights)
    return TangentTriple(ax, ay, xi, np.zeros_like(q.phi))


def d1_adjoint(q, X):
    """Adjoint of d1 with respect to g_C and the 0-form pairing on gamma."""
    lat = q.lattice
    v = -(bdiff(X.ax, 0, lat.hx) + bdiff(X.ay, 1, lat.hy)) / (2.0 * lat.h2)
    w = q.weights
    c = q.u
    v += 0.5 * np.sum((np.imag(np.conj(c[..., 0]) * X.xi[..., 0])
                       + np.imag(np.conj(c[..., 1]) * X.xi[..., 1])) * w,
                      axis=-1)
    return v


# ---------------------------------------------------------------------------
# packing, scaling, materialization

def _dom_scales(q):
    """Square roots of the diagonal domain metric weights, per component."""
    lat = q.lattice
    s_a = np.sqrt(0.5 * lat.cell) * np.ones_like(lat.h2)
    s_xi = np.sqrt(0.5 * lat.h2 * lat.cell)
    s_eta = np.sqrt(2.0 * lat.cell) * np.ones_like(lat.h2)
    return s_a, s_xi, s_eta


def _cod_scales(q):
    lat = q.lattice
    s1 = np.sqrt(lat.h2 * lat.cell)
    s2 = np.sqrt(lat.cell) * np.ones_like(lat.h2)
    s3 = np.sqrt(lat.h2 * lat.cell)
    return s1, s2, s3


def dom_dim(q):
    return q.lattice.sites() * (2 + 4 * q.n + 2)


def cod_dim(q):
    return q.lattice.sites() * (1 + 4 * q.n + 2)


def pack_domain(q, X, scaled=True):
    s_a, s_xi, s_eta = _dom_scales(q)
    if not scaled:
        s_a = s_xi = s_eta = np.ones_like(s_a)
    parts = [(s_a * X.ax).ravel(), (s_a * X.ay).ravel()]
    xi = s_xi[:, :, None, None] * X.xi
    parts.append(xi.view(float).ravel())
    eta = s_eta * X.eta
    parts.append(eta.view(float).ravel())
    return np.concatenate(parts)


def unpack_domain(q, v, scaled=True):
    lat = q.lattice
    N = lat.sites()
    s_a, s_xi, s_eta = _dom_scales(q)
    if not scaled:
        s_a = s_xi = s_eta = np.ones_like(s_a)
    sh = (lat.Nx, lat.Ny)
    ax = v[:N].reshape(sh) / s_a
    ay = v[N:2 * N].reshape(sh) / s_a
    k = 2 * N
    m = 4 * q.n * N
    xi = v[k:k + m].reshape(sh + (q.n, 2, 2))
    xi = (xi[..., 0] + 1j * xi[..., 1]) / s_xi[:, :, None, None]
    k += m
    eta = v[k:k + 2 * N].reshape(sh + (2,))
    eta = (eta[..., 0] + 1j * eta[..., 1]) / s_eta
    return TangentTriple(ax, ay, xi, eta)


def pack_codomain(q, Y, scaled=True):
    s1, s2, s3 = _cod_scales(q)
    if not scaled:
        s1 = s2 = s3 = np.ones_like(s1)
    parts = [(s1 * Y.r1).ravel()]
    parts.append((s2[:, :, None, None] * Y.r2).view(float).ravel())
    parts.append((s3 * Y.r3).view(float).ravel())
    return np.concatenate(parts)


def unpack_codomain(q, v, scaled=True):
    lat = q.lattice
    N = lat.sites()
    s1, s2, s3 = _cod_scales(q)
    if not scaled:
        s1 = s2 = s3 = np.ones_like(s1)
    sh = (lat.Nx, lat.Ny)
    r1 = v[:N].reshape(sh) / s1
    k = N
    m = 4 * q.n * N
    r2 = v[k:k + m].reshape(sh + (q.n, 2, 2))
    r2 = (r2[..., 0] + 1j * r2[..., 1]) / s2[:, :, None, None]
    k += m
    r3 = v[k:k + 2 * N].reshape(sh + (2,))
    r3 = (r3[..., 0] + 1j * r3[..., 1]) / s3
    return CotripleValue(r1, r2, r3)


def scaled_matvec(q, v):
    """Matrix action of D_q in metric-orthonormal coordinates."""
    X = unpack_domain(q, v)
    return pack_codomain(q, apply_Dq(q, X))


def scaled_rmatvec(q, v):
    """Transpose action in metric-orthonormal coordinates."""
    Y = unpack_codomain(q, v)
    return pack_domain(q, apply_Dq_adjoint(q, Y))


def materialize(apply_fn, dim_in, dim_out):
    """Dense matrix of a linear map given by its action on vectors."""
    M = np.empty((dim_out, dim_in))
    e = np.zeros(dim_in)
    for j in range(dim_in):
        e[j] = 1.0
        M[:, j] = apply_fn(e)
        e[j] = 0.0
    return M


# ---------------------------------------------------------------------------
# predicates

def check_regular_irreducible(q, tol_reg=1e-8, tol_irr=1e-12):
    """Regularity and irreducibility of a configuration.

    Regular: the stacked operator gamma -> (d gamma, K_gamma|u) has trivial
    kernel; the margin is its smallest singular value relative to scale.
    Irreducible: some site carries a spinor value with trivial stabilizer
    whose fundamental-field images under 1 and I1 are transverse; the margin
    is the largest normalized Gram determinant over sites.
    """
    lat = q.lattice
    N = lat.sites()

    def stacked(v):
        gamma = v.reshape(lat.Nx, lat.Ny)
        X = d1(q, gamma)
        return pack_domain(q, X)

    M = materialize(stacked, N, dom_dim(q))
    sv = np.linalg.svd(M, compute_uv=False)
    scale = sv[0] if sv[0] > 0 else 1.0
    reg_margin = float(sv[-1] / scale)
    regular = reg_margin > tol_reg

    from .quaternions import fundamental_field
    k1 = fundamental_field(np.ones((lat.Nx, lat.Ny)), q.u, q.weights)
    k2 = I1(k1)
    g11 = pair_dot(k1, k1)
    g12 = pair_dot(k1, k2)
    g22 = pair_dot(k2, k2)
    det = g11 * g22 - g12 ** 2
    norm2 = pair_dot(q.u, q.u)
    scale2 = float(np.max(norm2)) ** 2 if np.max(norm2) > 0 else 1.0
    irr_margin = float(np.max(det) / scale2)
    irreducible = irr_margin > tol_irr
    return regular, irreducible, (reg_margin, irr_margin)


# ---------------------------------------------------------------------------
# numerical index

class AmbiguousSpectrumError(RuntimeError):
    """Raised when a rank or smoothness decision has no clear margin."""


def _null_split(M, rel_tol=1e-6, gap_req=1e3):
    """SVD of M; returns (U, s, Vh, nullity) with a gap-checked nullity."""
    U, s, Vh = np.linalg.svd(M)
    if s[0] == 0:
        return U, s, Vh, min(M.shape)
    nz = int(np.sum(s < rel_tol * s[0]))
    if nz and nz < len(s):
        largest_zero = s[len(s) - nz]
        next_sv = s[len(s) - nz - 1]
        gap = next_sv / max(largest_zero, 1e-300)
        if not (gap > gap_req or largest_zero < 1e-12 * s[0]):
            raise AmbiguousSpectrumError(
                f"no clear spectral gap: sigma_zero={largest_zero:.3e}, "
                f"next={next_sv:.3e}, gap={gap:.2e}")
    return U, s, Vh, nz


def _roughness_cut(lat):
    k2 = max((2 * lat.Nx / lat.Lx) ** 2, (2 * lat.Ny / lat.Ly) ** 2)
    return 0.15 * k2, 0.5 * k2


def _subspace_smooth_count(vectors, grad_map, lo, hi, field="real"):
    """Number of smooth directions in a null subspace, basis independent.

    The SVD returns an arbitrary orthonormal basis of a (possibly
    degenerate) null space, so classifying individual basis vectors is
    ill-posed; instead the Laplacian quadratic form is restricted to the
    subspace and diagonalized.  grad_map(v) returns (derivative arrays,
    field arrays); the Dirichlet form is the summed squared derivative,
    the mass form the summed squared field.  Eigenvalues below lo count as
    smooth, above hi as rough, in between the decision is refused.
    """
    from scipy.linalg import eigh
    k = len(vectors)
    if k == 0:
        return 0
    gs = [grad_map(np.asarray(v)) for v in vectors]
    # For operators materialized over R the null basis may contain f and
    # i*f as independent vectors, so the complex field Gram would be
    # singular; those use the real inner product.  Genuinely complex
    # matrices keep the Hermitian form: its real part alone would mix the
    # eigenvalues of a complex-rotated basis.
    Q = np.empty((k, k), complex)
    D = np.empty((k, k), complex)
    for i in range(k):
        di, fi = gs[i]
        for j in range(i, k):
            dj, fj = gs[j]
            Q[i, j] = sum(np.vdot(a, b) for a, b in zip(di, dj))
            D[i, j] = sum(np.vdot(a, b) for a, b in zip(fi, fj))
            Q[j, i] = np.conj(Q[i, j])
            D[j, i] = np.conj(D[i, j])
    if field == "real":
        Q, D = np.real(Q), np.real(D)
    evals = eigh(Q, D, eigvals_only=True)
    smooth = int(np.sum(evals < lo))
    if np.any((evals >= lo) & (evals <= hi)):
        bad = [float(e) for e in evals if lo <= e <= hi]
        raise AmbiguousSpectrumError(
            f"null-space roughness eigenvalues {bad} fall in the refusal "
            f"band [{lo:.3e}, {hi:.3e}]")
    return smooth


def smooth_index(M, grad_dom, grad_cod, lat, rel_tol=1e-6, field="real"):
    """Smooth-mode index of a materialized operator matrix.

    grad_dom/grad_cod map packed vectors to (derivative arrays, field
    arrays) for the slot-appropriate covariant Dirichlet forms.  Returns
    (index, record dict).
    """
    U, s, Vh, nz = _null_split(M, rel_tol)
    lo, hi = _roughness_cut(lat)
    rank = len(s) - nz
    right = [np.conj(Vh[r]) for r in range(rank, Vh.shape[0])]
    left = [U[:, r] for r in range(rank, U.shape[1])]
    n_right = _subspace_smooth_count(right, grad_dom, lo, hi, field)
    n_left = _subspace_smooth_count(left, grad_cod, lo, hi, field)
    sigma_gap = float(s[rank - 1] / s[0]) if rank > 0 else 0.0
    rec = {
        "dim_ker": n_right,
        "dim_coker": n_left,
        "index": n_right - n_left,
        "nullity_raw": (len(right), len(left)),
        "sigma_gap": sigma_gap,
    }
    return n_right - n_left, rec


# ---------------------------------------------------------------------------
# slot packers (scaled coordinates)

def _pack_alpha(q, ax, ay):
    s_a, _, _ = _dom_scales(q)
    return np.concatenate([(s_a * ax).ravel(), (s_a * ay).ravel()])


def _unpack_alpha(q, v):
    lat = q.lattice
    N = lat.sites()
    s_a, _, _ = _dom_scales(q)
    sh = (lat.Nx, lat.Ny)
    return v[:N].reshape(sh) / s_a, v[N:].reshape(sh) / s_a


def _pack_xi(q, xi):
    _, s_xi, _ = _dom_scales(q)
    return (s_xi[:, :, None, None] * xi).view(float).ravel()


def _unpack_xi(q, v):
    lat = q.lattice
    _, s_xi, _ = _dom_scales(q)
    x = v.reshape(lat.Nx, lat.Ny, q.n, 2, 2)
    return (x[..., 0] + 1j * x[..., 1]) / s_xi[:, :, None, None]


def _pack_eta(q, eta):
    _, _, s_eta = _dom_scales(q)
    return (s_eta * eta).view(float).ravel()


def _unpack_eta(q, v):
    lat = q.lattice
    _, _, s_eta = _dom_scales(q)
    e = v.reshape(lat.Nx, lat.Ny, 2)
    return (e[..., 0] + 1j * e[..., 1]) / s_eta


def _gauge_scale(q):
    lat = q.lattice
    return np.sqrt(lat.h2 * lat.cell)


def _pack_gauge(q, gamma):
    return (_gauge_scale(q) * gamma).ravel()


def _unpack_gauge(q, v):
    lat = q.lattice
    return v.reshape(lat.Nx, lat.Ny) / _gauge_scale(q)


def _pack_r1(q, r1):
    s1, _, _ = _cod_scales(q)
    return (s1 * r1).ravel()


def _pack_r2(q, r2):
    _, s2, _ = _cod_scales(q)
    return (s2[:, :, None, None] * r2).view(float).ravel()


def _pack_r3(q, r3):
    _, _, s3 = _cod_scales(q)
    return (s3 * r3).view(float).ravel()


def _unpack_r3(q, v):
    lat = q.lattice
    _, _, s3 = _cod_scales(q)
    r = v.reshape(lat.Nx, lat.Ny, 2)
    return (r[..., 0] + 1j * r[..., 1]) / s3


# ---------------------------------------------------------------------------
# roughness quotients (smooth/doubler classification of null modes)

def _plain_grads(fields, lat):
    """Forward-difference gradients of plain periodic fields."""
    out = []
    for f in fields:
        out.append(fdiff(f, 0, lat.hx))
        out.append(fdiff(f, 1, lat.hy))
    return out


def _reduced_r3_basis(q):
    """Orthonormal basis of the r3 codomain minus its two constant modes."""
    from scipy.linalg import null_space
    ones = np.ones((q.lattice.Nx, q.lattice.Ny))
    z1 = _pack_r3(q, ones.astype(complex))
    z2 = _pack_r3(q, 1j * ones)
    Z = np.stack([z1 / np.linalg.norm(z1), z2 / np.linalg.norm(z2)])
    return null_space(Z)


# ---------------------------------------------------------------------------
# concrete index computations

def index_scalar_dbar(a, rel_tol=1e-6):
    """Complex Fredholm index of the twisted Cauchy-Riemann operator
    f -> (D_x + i D_y) f / h^2 on charge-1 scalar fields."""
    lat = a.lattice
    N = lat.sites()
    sh = (lat.Nx, lat.Ny)

    def apply_c(f):
        u = np.zeros(sh + (1, 2), complex)
        u[..., 0, 0] = f
        dx, dy = covariant_derivative(a, u)
        return (dx[..., 0, 0] + 1j * dy[..., 0, 0]) / lat.h2

    M = np.empty((N, N), complex)
    e = np.zeros(sh, complex)
    flat = e.reshape(-1)
    for j in range(N):
        flat[j] = 1.0
        M[:, j] = apply_c(e).ravel()
        flat[j] = 0.0

    def grad(vec):
        f = np.asarray(vec).reshape(sh)
        u = np.zeros(sh + (1, 2), complex)
        u[..., 0, 0] = f
        dx, dy = covariant_derivative(a, u)
        return [dx, dy], [f]

    idx, rec = smooth_index(M, grad, grad, lat, rel_tol, field="complex")
    rec.update(operator="dbar", degree=a.bundle.degree,
               lattice=f"{lat.Nx}x{lat.Ny}")
    return idx, rec


def index_block_dirac(q, rel_tol=1e-6):
    """Real index of the spinor block xi -> del_a xi (first-order part)."""
    from .equations import del_a
    lat = q.lattice
    dim = 4 * q.n * lat.sites()

    def apply_v(v):
        xi = _unpack_xi(q, v)
        return _pack_r2(q, del_a(q.a, xi, q.weights))

    M = materialize(apply_v, dim, dim)

    def grad(vec):
        xi = _unpack_xi(q, np.asarray(vec))
        dx, dy = covariant_derivative(q.a, xi, q.weights)
        return [dx, dy], [xi]

    idx, rec = smooth_index(M, grad, grad, lat, rel_tol)
    rec.update(operator="dirac", degree=q.bundle.degree,
               lattice=f"{lat.Nx}x{lat.Ny}")
    return idx, rec


def index_block_star_d(q, rel_tol=1e-6):
    """Real index of the connection block alpha -> (d* alpha, *d alpha)."""
    lat = q.lattice
    N = lat.sites()

    def apply_v(v):
        ax, ay = _unpack_alpha(q, v)
        div = -(bdiff(ax, 0, lat.hx) + bdiff(ay, 1, lat.hy)) / (2.0 * lat.h2)
        cur = q.epsilon * curl(ax, ay, lat) / lat.h2
        return np.concatenate([_pack_gauge(q, div), _pack_r1(q, cur)])

    M = materialize(apply_v, 2 * N, 2 * N)

    def grad_dom(vec):
        ax, ay = _unpack_alpha(q, np.asarray(vec))
        return _plain_grads([ax, ay], lat), [ax, ay]

    def grad_cod(vec):
        v = np.asarray(vec)
        g = _unpack_gauge(q, v[:N])
        s1, _, _ = _cod_scales(q)
        r1 = v[N:].reshape(lat.Nx, lat.Ny) / s1
        return _plain_grads([g, r1], lat), [g, r1]

    idx, rec = smooth_index(M, grad_dom, grad_cod, lat, rel_tol)
    rec.update(operator="star-d", degree=q.bundle.degree,
               lattice=f"{lat.Nx}x{lat.Ny}")
    return idx, rec


def index_block_star_dbar(q, rel_tol=1e-6):
    """Real index of the Higgs block eta -> *dbar eta with the reduced r3
    codomain (constant modes removed); equals 2 on the torus."""
    lat = q.lattice
    N = lat.sites()
    B = _reduced_r3_basis(q)

    def apply_v(v):
        eta = _unpack_eta(q, v)
        r3 = q.epsilon * dbar_scalar(eta, lat) / lat.h2
        return B.T @ _pack_r3(q, r3)

    M = materialize(apply_v, 2 * N, 2 * N - 2)

    def grad_dom(vec):
        eta = _unpack_eta(q, np.asarray(vec))
        return _plain_grads([eta], lat), [eta]

    def grad_cod(vec):
        r3 = _unpack_r3(q, B @ np.asarray(vec))
        return _plain_grads([r3], lat), [r3]

    idx, rec = smooth_index(M, grad_dom, grad_cod, lat, rel_tol)
    rec.update(operator="star-dbar-1forms", degree=q.bundle.degree,
               lattice=f"{lat.Nx}x{lat.Ny}")
    return idx, rec


def folded_matrix(q):
    """Scaled matrix of the folded operator X -> (d1* X, D_q X) with the
    reduced r3 codomain."""
    lat = q.lattice
    N = lat.sites()
    dd, cd = dom_dim(q), cod_dim(q)
    D = materialize(lambda v: scaled_matvec(q, v), dd, cd)
    G = materialize(lambda v: pack_domain(q, d1(q, _unpack_gauge(q, v))),
                    N, dd)
    B = _reduced_r3_basis(q)
    top = D[:cd - 2 * N]
    bottom = B.T @ D[cd - 2 * N:]
    return np.vstack([G.T, top, bottom]), B


def index_full(q, rel_tol=1e-6):
    """Smooth-mode index of the folded full linearization."""
    lat = q.lattice
    N = lat.sites()
    M, B = folded_matrix(q)

    def grad_dom(vec):
        X = unpack_domain(q, np.asarray(vec))
        sx, sy = covariant_derivative(q.a, X.xi, q.weights)
        return (_plain_grads([X.ax, X.ay, X.eta], lat) + [sx, sy],
                [X.ax, X.ay, X.xi, X.eta])

    n2 = 4 * q.n * N

    def grad_cod(vec):
        v = np.asarray(vec)
        g = _unpack_gauge(q, v[:N])
        s1, s2, _ = _cod_scales(q)
        r1 = v[N:2 * N].reshape(lat.Nx, lat.Ny) / s1
        r2 = v[2 * N:2 * N + n2].reshape(lat.Nx, lat.Ny, q.n, 2, 2)
        r2 = (r2[..., 0] + 1j * r2[..., 1]) / s2[:, :, None, None]
        r3 = _unpack_r3(q, B @ v[2 * N + n2:])
        sx, sy = covariant_derivative(q.a, r2, q.weights)
        return (_plain_grads([g, r1, r3], lat) + [sx, sy],
                [g, r1, r2, r3])

    idx, rec = smooth_index(M, grad_dom, grad_cod, lat, rel_tol)
    rec.update(operator="full", degree=q.bundle.degree,
               lattice=f"{lat.Nx}x{lat.Ny}")
    return idx, rec


def compute_index(q, operator):
    """Dispatch an index computation by operator name."""
    if operator == "dbar":
        return index_scalar_dbar(q.a)
    if operator == "dirac":
        return index_block_dirac(q)
    if operator == "star-d":
        return index_block_star_d(q)
    if operator == "star-dbar-1forms":
        return index_block_star_dbar(q)
    if operator == "full":
        return index_full(q)
    raise ValueError(f"unknown operator selector: {operator}")


def surjectivity_margin(q):
    """Smallest and largest singular values of the scaled linearization
    (equal to those of its adjoint)."""
    D = materialize(lambda v: scaled_matvec(q, v), dom_dim(q), cod_dim(q))
    s = np.linalg.svd(D, compute_uv=False)
    return float(s[min(D.shape) - 1]), float(s[0])
