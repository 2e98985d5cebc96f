"""Seeded verification suites over the identity checks of every module.

Each suite function returns a list of check records
``{"check", "lattice", "defect", "tolerance", "pass"}`` evaluated on
random data drawn from a seeded generator, so a run is deterministic
given the seed.  ``run_suites`` dispatches by name; the "all" selector
runs every suite in a fixed order.
"""

import numpy as np

from .quaternions import (apply_complex_structure, pair_dot, left_phase,
                          check_moment_axioms, fundamental_field,
                          moment_real, moment_complex)
from .lattice import (TorusLattice, BundleSpec, GaugeTransform, star_1form,
                      ip_1form, ip_0form, dbar_scalar, dbar_scalar_adjoint,
                      covariant_derivative, covariant_derivative_adjoint,
                      ip_spinor)
from .equations import (Configuration, residual_2d, energy,
                        gauge_transform_configuration, commutator_term,
                        reduction_consistency)
from .linearization import (TangentTriple, apply_Dq, apply_Dq_adjoint,
                            domain_inner, codomain_inner, d1, d1_adjoint)
from .symplectic import (apply_config_structure, config_metric, omega,
                         verify_hamiltonian_identity, pointwise_identities,
                         tau_form, curvature_bilinear_forms,
                         convention_constants, check_Cprime_invariance,
                         gauge_fundamental_field)
from .solver import coulomb_project

SUITES = ("algebra", "moment", "gauge", "reduction", "adjoint", "symplectic")


def _record(check, lat, defect, tol):
    label = f"{lat.Nx}x{lat.Ny}" if lat is not None else "-"
    return {"check": check, "lattice": label, "defect": float(defect),
            "tolerance": float(tol), "pass": bool(defect <= tol)}


def _random_config(rng, nx=8, ny=8, d=1, n=2, conformal=True):
    prof = None
    if conformal:
        prof = np.exp(0.2 * np.sin(2.0 * np.pi * np.arange(nx) / nx))[
            :, None] * np.ones((nx, ny))
    lat = TorusLattice(nx, ny, 1.1, 0.9, conformal=prof)
    weights = 1.0 + np.arange(n, dtype=float)
    q = Configuration(lat, BundleSpec(d), n=n, weights=weights,
                      epsilon=0.7, tau=0.3)
    q.a.ax = rng.normal(size=(nx, ny))
    q.a.ay = rng.normal(size=(nx, ny))
    q.u = rng.normal(size=q.u.shape) + 1j * rng.normal(size=q.u.shape)
    q.phi = rng.normal(size=(nx, ny)) + 1j * rng.normal(size=(nx, ny))
    return q


def _random_tangent(rng, q):
    sh = (q.lattice.Nx, q.lattice.Ny)
    return TangentTriple(
        rng.normal(size=sh), rng.normal(size=sh),
        rng.normal(size=sh + (q.n, 2)) + 1j * rng.normal(size=sh + (q.n, 2)),
        rng.normal(size=sh) + 1j * rng.normal(size=sh))


def suite_algebra(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    # pointwise quaternionic structure on random pair fields
    v = rng.normal(size=(32, 3, 2)) + 1j * rng.normal(size=(32, 3, 2))
    w = rng.normal(size=(32, 3, 2)) + 1j * rng.normal(size=(32, 3, 2))
    worst_sq = worst_comm = worst_iso = 0.0
    axes = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    for i, xi in enumerate(axes):
        vv = apply_complex_structure(xi, apply_complex_structure(xi, v))
        worst_sq = max(worst_sq, float(np.max(np.abs(vv + v))))
        iv = apply_complex_structure(xi, v)
        iw = apply_complex_structure(xi, w)
        worst_iso = max(worst_iso, float(np.max(np.abs(
            pair_dot(iv, iw) - pair_dot(v, w)))))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        ab = apply_complex_structure(axes[a],
                                     apply_complex_structure(axes[b], v))
        worst_comm = max(worst_comm, float(np.max(np.abs(
            ab - apply_complex_structure(axes[c], v)))))
    out.append(_record("quaternion-squares", None, worst_sq, 1e-12))
    out.append(_record("quaternion-products", None, worst_comm, 1e-12))
    out.append(_record("quaternion-isometry", None, worst_iso, 1e-12))
    # configuration-space structures
    q = _random_config(rng)
    worst = 0.0
    for _ in range(5):
        X, Y = _random_tangent(rng, q), _random_tangent(rng, q)
        for sel in (1, 2, 3):
            S2 = apply_config_structure(sel, q,
                                        apply_config_structure(sel, q, X))
            worst = max(worst,
                        float(np.max(np.abs(S2.ax + X.ax))),
                        float(np.max(np.abs(S2.ay + X.ay))),
                        float(np.max(np.abs(S2.xi + X.xi))),
                        float(np.max(np.abs(S2.eta + X.eta))),
                        abs(config_metric(q, apply_config_structure(sel, q, X),
                                          apply_config_structure(sel, q, Y))
                            - config_metric(q, X, Y)),
                        abs(omega(sel, q, X, Y) + omega(sel, q, Y, X)))
    out.append(_record("structure-triple-relations", q.lattice, worst, 1e-12))
    # the commutator term of the abelian theory vanishes identically
    z = commutator_term(q.phi, q.phi)
    out.append(_record("abelian-commutator-vanishes", q.lattice,
                       float(np.max(np.abs(z))), 0.0))
    return out


def suite_moment(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    w = np.array([1.0, 2.0, 0.5])
    worst1 = worst2 = 0.0
    for _ in range(20):
        p = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        v = rng.normal(size=(3, 2)) + 1j * rng.normal(size=(3, 2))
        xi = rng.normal(size=3)
        a1, a2 = check_moment_axioms(p, xi, rng.normal(), v, 1e-4, weights=w)
        worst1, worst2 = max(worst1, a1), max(worst2, a2)
    out.append(_record("moment-axiom-derivative", None, worst1, 1e-6))
    out.append(_record("moment-axiom-equivariance", None, worst2, 1e-12))
    q = _random_config(rng)
    wi = wc = 0.0
    for _ in range(5):
        gamma = rng.normal(size=(q.lattice.Nx, q.lattice.Ny))
        X = _random_tangent(rng, q)
        di, dc = verify_hamiltonian_identity(q, gamma, X)
        wi, wc = max(wi, di), max(wc, dc)
    out.append(_record("hamiltonian-identity-real", q.lattice, wi, 1e-6))
    out.append(_record("hamiltonian-identity-complex", q.lattice, wc, 1e-6))
    return out


def suite_gauge(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    q = _random_config(rng)
    lat = q.lattice
    e0 = energy(q)
    r0 = residual_2d(q).norms(lat)
    worst_e = worst_r = 0.0
    for _ in range(10):
        g = GaugeTransform(rng.normal(size=(lat.Nx, lat.Ny)),
                           rng.integers(-2, 3), rng.integers(-2, 3))
        qg = gauge_transform_configuration(g, q)
        worst_e = max(worst_e, abs(energy(qg) - e0) / max(e0, 1.0))
        rg = residual_2d(qg).norms(lat)
        worst_r = max(worst_r, max(abs(a - b) for a, b in zip(rg, r0)))
    out.append(_record("energy-gauge-invariance", lat, worst_e, 1e-12))
    out.append(_record("residual-norm-gauge-invariance", lat, worst_r, 1e-12))
    qf, defect = coulomb_project(q)
    out.append(_record("coulomb-projection-defect", lat, defect, 1e-10))
    out.append(_record("coulomb-projection-energy-drift", lat,
                       abs(energy(qf) - e0) / max(e0, 1.0), 1e-12))
    return out


def suite_reduction(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    worst = 0.0
    for _ in range(3):
        q = _random_config(rng, nx=8, ny=8, d=0, conformal=False)
        worst = max(worst, reduction_consistency(q))
    out.append(_record("lift-reduction-consistency", TorusLattice(8, 8),
                       worst, 1e-10))
    q = _random_config(rng, nx=8, ny=8, d=0, conformal=False)
    q.phi[:] = 0.0
    worst = reduction_consistency(q)
    out.append(_record("lift-reduction-phi-zero", q.lattice, worst, 1e-10))
    return out


def suite_adjoint(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    q = _random_config(rng)
    lat = q.lattice
    # hodge star on 1-forms is an isometry and skew-adjoint
    fx, fy = rng.normal(size=(lat.Nx, lat.Ny)), rng.normal(size=(lat.Nx,
                                                                 lat.Ny))
    gx, gy = rng.normal(size=(lat.Nx, lat.Ny)), rng.normal(size=(lat.Nx,
                                                                 lat.Ny))
    sfx, sfy = star_1form(fx, fy)
    sgx, sgy = star_1form(gx, gy)
    d_iso = abs(ip_1form((sfx, sfy), (sgx, sgy), lat)
                - ip_1form((fx, fy), (gx, gy), lat))
    d_skew = abs(ip_1form((sfx, sfy), (gx, gy), lat)
                 + ip_1form((fx, fy), (sgx, sgy), lat))
    out.append(_record("hodge-star-isometry", lat, d_iso, 1e-12))
    out.append(_record("hodge-star-skew-adjoint", lat, d_skew, 1e-12))
    # scalar dbar adjoint
    f = rng.normal(size=(lat.Nx, lat.Ny)) + 1j * rng.normal(size=(lat.Nx,
                                                                  lat.Ny))
    z = rng.normal(size=(lat.Nx, lat.Ny)) + 1j * rng.normal(size=(lat.Nx,
                                                                  lat.Ny))
    lhs = float(np.sum(np.real(np.conj(dbar_scalar(f, lat)) * z)))
    rhs = float(np.sum(np.real(np.conj(f) * dbar_scalar_adjoint(z, lat))))
    out.append(_record("dbar-scalar-adjoint", lat, abs(lhs - rhs)
                       / max(abs(lhs), 1.0), 1e-12))
    # covariant derivative adjoint on spinors
    xi = rng.normal(size=(lat.Nx, lat.Ny, q.n, 2)) \
        + 1j * rng.normal(size=(lat.Nx, lat.Ny, q.n, 2))
    rx = rng.normal(size=xi.shape) + 1j * rng.normal(size=xi.shape)
    ry = rng.normal(size=xi.shape) + 1j * rng.normal(size=xi.shape)
    dx, dy = covariant_derivative(q.a, xi, q.weights)
    lhs = np.sum(pair_dot(dx, rx) + pair_dot(dy, ry)) * lat.cell
    adj = covariant_derivative_adjoint(q.a, rx, ry, q.weights)
    rhs = np.sum(pair_dot(xi, adj)) * lat.cell
    out.append(_record("covariant-derivative-adjoint", lat,
                       abs(lhs - rhs) / max(abs(lhs), 1.0), 1e-12))
    # full linearization: finite differences and adjoint identity
    X = _random_tangent(rng, q)
    Y = apply_Dq(q, X)
    s = 1e-6
    qp = q.copy()
    qp.a.ax = q.a.ax + s * X.ax
    qp.a.ay = q.a.ay + s * X.ay
    qp.u = q.u + s * X.xi
    qp.phi = q.phi + s * X.eta
    qm = q.copy()
    qm.a.ax = q.a.ax - s * X.ax
    qm.a.ay = q.a.ay - s * X.ay
    qm.u = q.u - s * X.xi
    qm.phi = q.phi - s * X.eta
    rp, rm = residual_2d(qp), residual_2d(qm)
    fd1 = np.max(np.abs((rp.r1 - rm.r1) / (2 * s) - Y.r1))
    fd2 = np.max(np.abs((rp.r2 - rm.r2) / (2 * s) - Y.r2))
    fd3 = np.max(np.abs((rp.r3 - rm.r3) / (2 * s) - Y.r3))
    out.append(_record("linearization-fd", lat, max(fd1, fd2, fd3), 1e-6))
    Z = residual_2d(q)
    lhs = codomain_inner(q, Y, Z)
    rhs = domain_inner(q, X, apply_Dq_adjoint(q, Z))
    out.append(_record("linearization-adjoint", lat,
                       abs(lhs - rhs) / max(abs(lhs), 1.0), 1e-10))
    # gauge complex: d1 and its adjoint
    gamma = rng.normal(size=(lat.Nx, lat.Ny))
    Kg = d1(q, gamma)
    lhs = domain_inner(q, Kg, X)
    rhs = ip_0form(gamma, d1_adjoint(q, X), lat)
    out.append(_record("gauge-complex-adjoint", lat,
                       abs(lhs - rhs) / max(abs(lhs), 1.0), 1e-10))
    return out


def suite_symplectic(seed=0):
    rng = np.random.default_rng(seed)
    out = []
    q = _random_config(rng)
    lat = q.lattice
    wi = wc = 0.0
    for _ in range(3):
        gamma = rng.normal(size=(lat.Nx, lat.Ny))
        X = apply_config_structure(1, q, gauge_fundamental_field(
            q, rng.normal(size=(lat.Nx, lat.Ny))))
        di, dc = verify_hamiltonian_identity(q, gamma, X)
        wi, wc = max(wi, di), max(wc, dc)
    out.append(_record("hamiltonian-identity-structured", lat,
                       max(wi, wc), 1e-6))
    alpha = (rng.normal(size=(lat.Nx, lat.Ny)),
             rng.normal(size=(lat.Nx, lat.Ny)))
    eta = rng.normal(size=(lat.Nx, lat.Ny)) \
        + 1j * rng.normal(size=(lat.Nx, lat.Ny))
    p1, p2 = pointwise_identities(q, alpha, eta, rng=rng)
    out.append(_record("pointwise-identity-spinor", lat, p1, 1e-10))
    out.append(_record("pointwise-identity-higgs", lat, p2, 1e-10))
    X, Y = _random_tangent(rng, q), _random_tangent(rng, q)
    forms = curvature_bilinear_forms(q, X, Y)
    cc = convention_constants()
    out.append(_record("gamma-vs-omega1-block", lat,
                       abs(forms["gamma"] - cc["gamma_vs_omega1"]
                           * forms["omega1_spinor_block"]), 1e-8))
    out.append(_record("tau-vs-omega1-block", lat,
                       abs(forms["tau"] - cc["tau_vs_omega1"]
                           * forms["omega1_higgs_block"]), 1e-8))
    out.append(_record("gamma-fd-hessian", lat,
                       abs(forms["gamma_fd"] - cc["fd_vs_gamma"]
                           * forms["gamma"])
                       / max(abs(forms["gamma"]), 1.0), 1e-6))
    out.append(_record("tau-antisymmetry", lat,
                       abs(tau_form(q, X.eta, X.eta)), 1e-12))
    q0 = Configuration(TorusLattice(8, 8), BundleSpec(0), n=1)
    defect = check_Cprime_invariance(q0)
    out.append(_record("cprime-invariance-trivial-solution", q0.lattice,
                       defect, 1e-6))
    return out


_SUITE_FNS = {
    "algebra": suite_algebra,
    "moment": suite_moment,
    "gauge": suite_gauge,
    "reduction": suite_reduction,
    "adjoint": suite_adjoint,
    "symplectic": suite_symplectic,
}


def run_suites(selector, seed=0):
    """Run one named suite or all of them; returns the check records."""
    if selector == "all":
        names = SUITES
    elif selector in _SUITE_FNS:
        names = (selector,)
    else:
        raise ValueError(f"unknown suite {selector!r}")
    records = []
    for name in names:
        for rec in _SUITE_FNS[name](seed=seed):
            rec["suite"] = name
            records.append(rec)
    return records
