import numpy as np
import pytest

from swlab import (TorusLattice, BundleSpec, Configuration, SolveOptions,
                   solve, vortex_ansatz)


@pytest.fixture(scope="session")
def lat16():
    return TorusLattice(16, 16)


@pytest.fixture(scope="session")
def sol_d0_16(lat16):
    """Converged degree-0 solution on 16^2 (perturbed constant vortex-free
    branch): irreducible, regular, with mu_c identically zero."""
    rng = np.random.default_rng(7)
    q0 = vortex_ansatz(lat16, BundleSpec(0), tau=0.5)
    q0.u = q0.u + 0.01 * (rng.standard_normal(q0.u.shape)
                          + 1j * rng.standard_normal(q0.u.shape))
    q0.a.ax = 0.01 * rng.standard_normal((16, 16))
    q0.a.ay = 0.01 * rng.standard_normal((16, 16))
    q0.phi = 0.01 * (rng.standard_normal((16, 16))
                     + 1j * rng.standard_normal((16, 16)))
    q, rep = solve(q0, SolveOptions(tol=1e-10, max_iter=50,
                                    gauge_fix="coulomb",
                                    verify_solution=False))
    assert rep.converged
    return q


@pytest.fixture(scope="session")
def sol_d1_16(lat16):
    """Converged degree-1 vortex solution on 16^2 at tau = 0."""
    q0 = vortex_ansatz(lat16, BundleSpec(1), tau=0.0)
    q, rep = solve(q0, SolveOptions(tol=5e-9, max_iter=100, lam0=1e-3,
                                    gauge_fix="coulomb",
                                    verify_solution=False))
    assert rep.converged
    return q


_capman = None


def pytest_configure(config):
    global _capman
    _capman = config.pluginmanager.getplugin("capturemanager")


def acceptance_line(num, name, ok, detail):
    """Emit the one-line acceptance verdict past pytest's output capture."""
    import sys
    status = "PASS" if ok else "FAIL"
    line = f"\nACCEPTANCE {num:02d} {name}: {status} ({detail})\n"
    if _capman is not None:
        with _capman.global_and_fixture_disabled():
            sys.stdout.write(line)
            sys.stdout.flush()
    else:
        sys.stdout.write(line)
