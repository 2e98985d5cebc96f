import numpy as np
import pytest

from swlab.lattice import (TorusLattice, BundleSpec, ConnectionField, bdiff,
                           curvature)
from swlab.equations import Configuration, residual_norm, energy
from swlab.solver import (SolveOptions, SolveReport, SolverDivergence, solve,
                          gradient, coulomb_project, epsilon_continuation,
                          count_vortices, vortex_ansatz, refine_vortex_ansatz,
                          prolong_configuration)


def test_solve_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(method="bogus")
    with pytest.raises(ValueError):
        SolveOptions(tol=0.0)
    with pytest.raises(ValueError):
        SolveOptions(gauge_fix="landau")
    with pytest.raises(ValueError):
        SolveOptions(lam0=0.0)
    with pytest.raises(ValueError):
        SolveOptions(epsilon_schedule=(0.5, 1.0))
    with pytest.raises(ValueError):
        SolveOptions(epsilon_schedule=(2.0,))


def test_coulomb_project_removes_divergence():
    rng = np.random.default_rng(0)
    lat = TorusLattice(12, 12, 1.3, 0.8)
    q = Configuration(lat, BundleSpec(1), epsilon=0.5, tau=0.5)
    q.a.ax = rng.standard_normal((12, 12)) + 2.0 * np.pi / lat.Lx
    q.a.ay = rng.standard_normal((12, 12))
    q.u = rng.standard_normal(q.u.shape) + 1j * rng.standard_normal(q.u.shape)
    F0 = curvature(q.a).copy()
    n0 = residual_norm(q)
    qf, defect = coulomb_project(q)
    assert defect <= 1e-10
    div = bdiff(qf.a.ax, 0, lat.hx) + bdiff(qf.a.ay, 1, lat.hy)
    assert np.max(np.abs(div)) <= 1e-9
    # gauge transformation: curvature and the residual norm are unchanged,
    # and the integer winding in the constant mode has been removed
    assert np.max(np.abs(curvature(qf.a) - F0)) <= 1e-9
    assert abs(residual_norm(qf) - n0) <= 1e-10 * n0
    assert abs(np.mean(qf.a.ax)) < np.pi / lat.Lx


def test_vortex_ansatz_cocycle_and_zero_count():
    for d in (-2, -1, 1, 2, 3):
        lat = TorusLattice(24, 24)
        q = vortex_ansatz(lat, BundleSpec(d), tau=4.0 * np.pi)
        count, _ = count_vortices(q)
        assert count == d
    # trivial bundle, default tau: exact constant solution
    lat = TorusLattice(8, 8)
    q = vortex_ansatz(lat, BundleSpec(0), tau=0.5)
    assert residual_norm(q) <= 1e-13
    count, _ = count_vortices(q)
    assert count == 0


def test_refine_vortex_ansatz_basic_properties():
    lat = TorusLattice(24, 24)
    q0 = vortex_ansatz(lat, BundleSpec(1), tau=4.0 * np.pi)
    q1 = refine_vortex_ansatz(q0)
    # refinement keeps the vortex structure and only reshapes the profile
    count, _ = count_vortices(q1)
    assert count == 1
    assert np.max(np.abs(q1.phi)) == 0.0
    assert np.max(np.abs(q1.u[..., 0, 1])) == 0.0
    with pytest.raises(ValueError):
        q0.epsilon = 0.0
        refine_vortex_ansatz(q0)


def test_refined_ansatz_is_in_solver_basin():
    # on a two-vortex problem the refined profile start converges directly
    L = 2.0 * np.sqrt(np.pi)
    lat = TorusLattice(32, 32, L, L)
    q0 = refine_vortex_ansatz(vortex_ansatz(lat, BundleSpec(2), tau=1.0))
    opts = SolveOptions(tol=1e-5, max_iter=40, lam0=1e-3,
                        gauge_fix="coulomb", verify_solution=False)
    q, rep = solve(q0, opts)
    assert rep.converged
    count, _ = count_vortices(q)
    assert count == 2


def test_solve_small_perturbed_constant():
    rng = np.random.default_rng(1)
    lat = TorusLattice(8, 8)
    q0 = vortex_ansatz(lat, BundleSpec(0), tau=0.5)
    q0.u = q0.u + 0.02 * (rng.standard_normal(q0.u.shape)
                          + 1j * rng.standard_normal(q0.u.shape))
    q0.a.ax = 0.02 * rng.standard_normal((8, 8))
    opts = SolveOptions(tol=1e-10, max_iter=60, gauge_fix="coulomb",
                        verify_solution=False)
    q, rep = solve(q0, opts)
    assert rep.converged
    assert rep.residual_norm <= 1e-10
    assert rep.iterations <= 60
    assert len(rep.energy_history) == rep.iterations + 1
    assert rep.energy_history[-1] <= rep.energy_history[0]
    assert isinstance(rep.to_dict()["converged"], bool)


def test_solver_divergence_carries_state():
    rng = np.random.default_rng(3)
    lat = TorusLattice(8, 8)
    q0 = vortex_ansatz(lat, BundleSpec(0), tau=0.5)
    q0.u = q0.u + 0.05 * (rng.standard_normal(q0.u.shape)
                          + 1j * rng.standard_normal(q0.u.shape))
    # residual floor of double precision is far above this tolerance
    opts = SolveOptions(tol=1e-300, max_iter=100, verify_solution=False)
    with pytest.raises(SolverDivergence) as exc:
        solve(q0, opts)
    assert exc.value.report is not None
    assert exc.value.configuration is not None
    assert not exc.value.report.converged


def test_gradient_matches_energy_directional_derivative():
    rng = np.random.default_rng(2)
    lat = TorusLattice(8, 8, 1.1, 0.9)
    q = Configuration(lat, BundleSpec(1), epsilon=0.7, tau=0.3)
    q.u = rng.standard_normal(q.u.shape) + 1j * rng.standard_normal(q.u.shape)
    q.a.ax = rng.standard_normal((8, 8))
    q.phi = rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8))
    g = gradient(q)
    from swlab.linearization import TangentTriple, domain_inner
    X = TangentTriple(rng.standard_normal((8, 8)),
                      rng.standard_normal((8, 8)),
                      rng.standard_normal(q.u.shape)
                      + 1j * rng.standard_normal(q.u.shape),
                      rng.standard_normal((8, 8))
                      + 1j * rng.standard_normal((8, 8)))
    s = 1e-6
    qp, qm = q.copy(), q.copy()
    qp.a.ax = q.a.ax + s * X.ax; qp.a.ay = q.a.ay + s * X.ay
    qp.u = q.u + s * X.xi; qp.phi = q.phi + s * X.eta
    qm.a.ax = q.a.ax - s * X.ax; qm.a.ay = q.a.ay - s * X.ay
    qm.u = q.u - s * X.xi; qm.phi = q.phi - s * X.eta
    fd = (energy(qp) - energy(qm)) / (2 * s)
    an = domain_inner(q, g, X)
    assert abs(fd - an) <= 1e-5 * max(abs(an), 1.0)


def test_epsilon_continuation_trivial_bundle():
    lat = TorusLattice(8, 8)
    q0 = vortex_ansatz(lat, BundleSpec(0), tau=0.5)
    opts = SolveOptions(tol=1e-8, max_iter=60, gauge_fix="coulomb",
                        epsilon_schedule=(1.0, 0.5, 0.0),
                        verify_solution=False)
    results = epsilon_continuation(q0, opts)
    assert len(results) == 3
    assert [eps for eps, _, _ in results] == [1.0, 0.5, 0.0]
    for eps, q, rep in results:
        assert rep.converged
        assert q.epsilon == eps
    # the eps = 0 stage reports constraint norms
    assert results[-1][2].constraint_norms is not None
    assert np.hypot(*results[-1][2].constraint_norms) <= 1e-6


def test_prolong_configuration_validation():
    lat = TorusLattice(8, 8, 1.0, 1.0)
    q = vortex_ansatz(lat, BundleSpec(1))
    with pytest.raises(ValueError):
        prolong_configuration(q, TorusLattice(12, 12, 1.0, 1.0))
    with pytest.raises(ValueError):
        prolong_configuration(q, TorusLattice(16, 16, 2.0, 1.0))


def test_prolong_configuration_accuracy():
    lat = TorusLattice(16, 16)
    fine = TorusLattice(32, 32)
    q = vortex_ansatz(lat, BundleSpec(1), tau=4.0 * np.pi)
    shape = (lat.Nx, lat.Ny)
    q.a.ax = np.broadcast_to(np.sin(2.0 * np.pi * lat.x / lat.Lx),
                             shape).copy()
    q.phi = np.broadcast_to(np.cos(2.0 * np.pi * lat.y / lat.Ly),
                            shape).astype(complex)
    q2 = prolong_configuration(q, fine)
    # coarse sites are reproduced exactly for u and to spectral accuracy
    # for the band-limited real fields
    assert np.max(np.abs(q2.u[0::2, 0::2] - q.u)) <= 1e-12
    assert np.max(np.abs(q2.a.ax[0::2, 0::2] - q.a.ax)) <= 1e-10
    assert np.max(np.abs(q2.phi[0::2, 0::2] - q.phi)) <= 1e-10
    # the interpolant keeps the vortex and the bundle data
    count, _ = count_vortices(q2)
    assert count == 1
    assert q2.bundle.degree == 1
    assert q2.epsilon == q.epsilon and q2.tau == q.tau
