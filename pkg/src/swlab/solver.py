"""Energy minimization for the reduced equations.

The solver drives the residual triple F(q) to zero by minimizing
E(q) = (1/2)||F(q)||^2.  Three methods are provided:

* gauss-newton (default): Levenberg-Marquardt damped Gauss-Newton.  At
  each iterate the damped least-squares problem
  min ||D_q X + F||^2 + lam ||X||^2 is solved with LSQR on the scaled
  (isometric) packing of the operator; lam is adapted by the classic gain
  ratio rule (shrink on good agreement with the quadratic model, grow on
  rejection).  The damping is essential near vortex solutions, where the
  translation moduli make the undamped normal equations nearly singular.
* gradient-flow: steepest descent q <- q - t grad E with adaptive step,
  grad E = D_q* F.
* nonlinear-cg: Polak-Ribiere conjugate gradients on the packed coordinates
  with automatic restarts.

Gauge fixing (optional) projects each iterate to discrete Coulomb gauge by
an exact gauge transformation: the energy is invariant to rounding, so the
projection never changes the residual.  epsilon_continuation follows the
family of systems from epsilon = 1 down to the constrained epsilon = 0
problem, warm-starting each stage and bisecting the schedule on failure.
At epsilon = 0 the derivative terms drop out of the first and third
equations, so the residual itself is the quadratic penalty functional of
the constraint mu(u) = (tau, 0); the report records the constraint norms
separately.
"""

import time

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg
from scipy.sparse.linalg import LinearOperator, lsqr

from .quaternions import moment_real, moment_complex
from .lattice import (ConnectionField, GaugeTransform, bdiff, ip_0form,
                      gauge_transform_connection)
from .equations import (Configuration, residual_2d, energy,
                        gauge_transform_configuration)
from .linearization import (pack_domain, unpack_domain, pack_codomain,
                            scaled_matvec, scaled_rmatvec, dom_dim, cod_dim,
                            apply_Dq_adjoint, check_regular_irreducible,
                            surjectivity_margin, AmbiguousSpectrumError)


class SolverDivergence(RuntimeError):
    """Raised when the energy cannot be decreased any further while the
    residual target has not been met; carries the partial report."""

    def __init__(self, message, report=None, configuration=None):
        super().__init__(message)
        self.report = report
        self.configuration = configuration


class SolveOptions:
    """Options controlling a single solve."""

    METHODS = ("gauss-newton", "gradient-flow", "nonlinear-cg")

    def __init__(self, method="gauss-newton", tol=1e-8, max_iter=200,
                 gauge_fix="none", step0=1.0, step_shrink=0.5,
                 step_grow=1.3, min_step=1e-10, lam0=1.0, lsqr_iter=4000,
                 epsilon_schedule=(1.0,), checkpoint_every=0,
                 verify_solution=True, verify_max_sites=1024):
        if method not in self.METHODS:
            raise ValueError(f"unknown method {method!r}")
        if not tol > 0:
            raise ValueError("tol must be positive")
        sched = tuple(float(e) for e in epsilon_schedule)
        if any(not 0.0 <= e <= 1.0 for e in sched):
            raise ValueError("epsilon schedule values must lie in [0, 1]")
        if any(a < b for a, b in zip(sched, sched[1:])):
            raise ValueError("epsilon schedule must be non-increasing")
        if gauge_fix not in ("none", "coulomb"):
            raise ValueError("gauge_fix must be 'none' or 'coulomb'")
        self.method = method
        self.tol = float(tol)
        self.max_iter = int(max_iter)
        self.gauge_fix = gauge_fix
        self.step0 = float(step0)
        self.step_shrink = float(step_shrink)
        self.step_grow = float(step_grow)
        self.min_step = float(min_step)
        if not lam0 > 0:
            raise ValueError("lam0 must be positive")
        self.lam0 = float(lam0)
        self.lsqr_iter = int(lsqr_iter)
        self.epsilon_schedule = sched
        self.checkpoint_every = int(checkpoint_every)
        self.verify_solution = bool(verify_solution)
        self.verify_max_sites = int(verify_max_sites)


class SolveReport:
    """Outcome of a solve."""

    def __init__(self):
        self.converged = False
        self.iterations = 0
        self.energy_history = []
        self.residual_norms = (0.0, 0.0, 0.0)
        self.residual_norm = 0.0
        self.gauge_defect = 0.0
        self.wall_time = 0.0
        self.message = ""
        self.constraint_norms = None     # (|mu1 - tau|, |mu_c|) at eps = 0
        self.regularity = None           # margins from the linearization
        self.surjectivity = None         # (sigma_min, sigma_max) if computed
        self.log_rows = []               # per-iteration CSV rows

    def to_dict(self):
        d = {
            "converged": self.converged,
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "residual_norms": list(self.residual_norms),
            "gauge_defect": self.gauge_defect,
            "wall_time_s": self.wall_time,
            "message": self.message,
            "energy_history": [float(e) for e in self.energy_history],
        }
        if self.constraint_norms is not None:
            d["constraint_norms"] = list(self.constraint_norms)
        if self.regularity is not None:
            d["regularity"] = self.regularity
        if self.surjectivity is not None:
            d["surjectivity"] = list(self.surjectivity)
        return d


def gradient(q):
    """Riemannian gradient of the energy: D_q* applied to the residual."""
    return apply_Dq_adjoint(q, residual_2d(q))


def _apply_update(q, x):
    """Configuration displaced by the packed domain vector x."""
    X = unpack_domain(q, np.asarray(x))
    qt = q.copy()
    qt.a.ax = q.a.ax + X.ax
    qt.a.ay = q.a.ay + X.ay
    qt.u = q.u + X.xi
    qt.phi = q.phi + X.eta
    return qt


def coulomb_project(q):
    """Exact gauge transformation to discrete Coulomb gauge.

    Solves the periodic Poisson problem Lap theta = -div a (backward
    divergence of the fluctuation, matching the adjoint convention) by FFT
    and removes the integer part of the constant connection modes through
    winding numbers.  Returns (q_fixed, gauge_defect) with the defect the
    remaining ||div a||_0.
    """
    lat = q.lattice
    div = bdiff(q.a.ax, 0, lat.hx) + bdiff(q.a.ay, 1, lat.hy)
    kx = 2.0 * np.pi * np.fft.fftfreq(lat.Nx, d=lat.hx)
    ky = 2.0 * np.pi * np.fft.fftfreq(lat.Ny, d=lat.hy)
    # symbol of bdiff(fdiff) is -|e^{ikh} - 1|^2 / h^2
    sx = (2.0 * np.sin(kx * lat.hx / 2.0) / lat.hx) ** 2
    sy = (2.0 * np.sin(ky * lat.hy / 2.0) / lat.hy) ** 2
    denom = sx[:, None] + sy[None, :]
    denom[0, 0] = 1.0
    rhs = np.fft.fft2(div)
    rhs[0, 0] = 0.0
    theta = np.real(np.fft.ifft2(rhs / denom))
    mx = int(np.round(np.mean(q.a.ax) * lat.Lx / (2.0 * np.pi)))
    my = int(np.round(np.mean(q.a.ay) * lat.Ly / (2.0 * np.pi)))
    g = GaugeTransform(theta, -mx, -my)
    qf = gauge_transform_configuration(g, q)
    divf = bdiff(qf.a.ax, 0, lat.hx) + bdiff(qf.a.ay, 1, lat.hy)
    return qf, float(np.sqrt(ip_0form(divf, divf, lat)))


def _lm_step(q, opts, b, e, state):
    """One Levenberg-Marquardt trial loop.

    Returns (q_new, accepted).  The damping parameter lives in
    state["lam"] and is updated by the gain ratio between actual and
    predicted energy decrease.
    """
    lam = state.setdefault("lam", opts.lam0)
    A = LinearOperator((cod_dim(q), dom_dim(q)),
                       matvec=lambda v: scaled_matvec(q, v),
                       rmatvec=lambda v: scaled_rmatvec(q, v))
    g = A.rmatvec(b)
    atol = min(1e-10, 1e-3 * opts.tol)
    for _ in range(40):
        x = lsqr(A, -b, damp=np.sqrt(lam), atol=atol, btol=atol,
                 iter_lim=opts.lsqr_iter)[0]
        pred = 0.5 * float(np.dot(x, lam * x - g))
        qt = _apply_update(q, x)
        et = energy(qt)
        rho = (e - et) / pred if pred > 0.0 else -1.0
        if rho > 0.0:
            state["lam"] = max(lam * max(1.0 / 3.0,
                                         1.0 - (2.0 * rho - 1.0) ** 3),
                               1e-14)
            return qt, True
        lam = max(lam, 1e-12) * 3.0
        state["lam"] = lam
    return q, False


def _search_direction(q, opts, b, state):
    """Packed search direction for the line-search methods."""
    g = scaled_rmatvec(q, b)
    if opts.method == "gradient-flow":
        return -g, g
    # nonlinear-cg with Polak-Ribiere and restart on loss of descent
    d = -g
    if state.get("g_prev") is not None and len(g) == len(state["g_prev"]):
        gp = state["g_prev"]
        beta = max(0.0, float(np.dot(g, g - gp) / max(np.dot(gp, gp),
                                                      1e-300)))
        d = -g + beta * state["d_prev"]
        if np.dot(d, g) >= 0.0:
            d = -g
    state["g_prev"], state["d_prev"] = g, d
    return d, g


def solve(q0, opts=None, callback=None):
    """Minimize the energy from q0; returns (q, SolveReport)."""
    opts = opts or SolveOptions()
    q = q0.copy()
    rep = SolveReport()
    t_start = time.perf_counter()
    state = {}
    step = opts.step0

    res = residual_2d(q)
    rn = res.norm(q.lattice)
    e = 0.5 * rn ** 2
    rep.energy_history.append(e)
    bad_streak = 0

    for it in range(opts.max_iter):
        if rn <= opts.tol:
            rep.converged = True
            break
        b = pack_codomain(q, res)
        if opts.method == "gauss-newton":
            qt, accepted = _lm_step(q, opts, b, e, state)
            if not accepted:
                g = scaled_rmatvec(q, b)
                rep.iterations = it
                rep.message = ("damped step rejected at all damping "
                               f"levels: energy stuck at {e:.6e}, "
                               f"|grad| = {np.linalg.norm(g):.3e}")
                _finalize(q, res, rn, rep, t_start)
                raise SolverDivergence(rep.message, rep, q)
            q, e = qt, energy(qt)
        else:
            d, g = _search_direction(q, opts, b, state)
            slope = float(np.dot(g, d))
            if slope >= 0.0:
                d, slope = -g, -float(np.dot(g, g))
            # backtracking line search (Armijo)
            t = step
            accepted = False
            while t >= opts.min_step:
                qt = _apply_update(q, t * d)
                et = energy(qt)
                if et <= e + 1e-4 * t * slope:
                    accepted = True
                    break
                t *= opts.step_shrink
            if not accepted:
                bad_streak += 1
                if bad_streak >= 3:
                    rep.iterations = it
                    rep.message = ("line search failed repeatedly: energy "
                                   f"stuck at {e:.6e}, |grad| = "
                                   f"{np.linalg.norm(g):.3e}")
                    _finalize(q, res, rn, rep, t_start)
                    raise SolverDivergence(rep.message, rep, q)
                state.pop("g_prev", None)
                step = max(step * opts.step_shrink, opts.min_step)
                continue
            bad_streak = 0
            q, e = qt, et
            step = min(t * opts.step_grow, opts.step0 * 100)
        if opts.gauge_fix == "coulomb":
            q, rep.gauge_defect = coulomb_project(q)
        res = residual_2d(q)
        rn = res.norm(q.lattice)
        e = 0.5 * rn ** 2
        rep.energy_history.append(e)
        rep.iterations = it + 1
        n1, n2, n3 = res.norms(q.lattice)
        rep.log_rows.append((it + 1, e, n1, n2, n3, rep.gauge_defect,
                             (time.perf_counter() - t_start) * 1e3))
        if callback is not None:
            callback(it + 1, q, rep)
    else:
        rep.converged = rn <= opts.tol
        if not rep.converged:
            rep.message = (f"max_iter reached with residual {rn:.3e} "
                           f"(target {opts.tol:.1e})")

    if rn <= opts.tol:
        rep.converged = True
    _finalize(q, res, rn, rep, t_start)
    if rep.converged and opts.verify_solution \
            and q.lattice.sites() <= opts.verify_max_sites:
        _verify_solution(q, rep)
    return q, rep


def _finalize(q, res, rn, rep, t_start):
    rep.residual_norms = res.norms(q.lattice)
    rep.residual_norm = rn
    rep.wall_time = time.perf_counter() - t_start
    lat = q.lattice
    m1 = moment_real(q.u, q.weights) - q.tau
    mc = moment_complex(q.u, q.weights)
    rep.constraint_norms = (float(np.sqrt(ip_0form(m1, m1, lat))),
                            float(np.sqrt(ip_0form(mc, mc, lat))))


def _verify_solution(q, rep):
    try:
        regular, irreducible, margins = check_regular_irreducible(q)
        rep.regularity = {"regular": regular, "irreducible": irreducible,
                          "margins": list(margins)}
        if regular and irreducible:
            rep.surjectivity = surjectivity_margin(q)
    except AmbiguousSpectrumError as exc:
        rep.regularity = {"error": str(exc)}


def epsilon_continuation(q0, opts=None, min_step=0.01, callback=None):
    """Warm-started solves along opts.epsilon_schedule.

    Returns a list of (epsilon, q, report).  A failed stage is bisected
    against the last converged epsilon until the schedule step falls below
    min_step; remaining stages are then abandoned and the partial results
    returned, with the failure recorded on the last report.
    """
    opts = opts or SolveOptions()
    results = []
    q = q0.copy()
    schedule = list(opts.epsilon_schedule)
    last_eps = None
    i = 0
    while i < len(schedule):
        eps = schedule[i]
        qs = q.copy()
        qs.epsilon = eps
        if eps == 0.0:
            qs.tau = 0.0
        try:
            qn, rep = solve(qs, opts, callback=callback)
        except SolverDivergence as exc:
            rep = exc.report
            qn = None
        if qn is not None and rep.converged:
            results.append((eps, qn, rep))
            q, last_eps = qn, eps
            i += 1
            continue
        if last_eps is None or last_eps - eps <= min_step:
            if rep is not None:
                rep.message += " (continuation abandoned)"
                results.append((eps, qs, rep))
            break
        schedule.insert(i, 0.5 * (last_eps + eps))
    return results


# ---------------------------------------------------------------------------
# vortex diagnostics and initial data

def _wrap(a):
    return (a + np.pi) % (2.0 * np.pi) - np.pi


def count_vortices(q, component=(0, 0), mag_tol=1e-9):
    """Signed zero count of one complex component of u by plaquette winding.

    Sums the winding numbers of the phase of the component around every
    plaquette; boundary crossings pick up the bundle cocycle, so the total
    is gauge- and chart-independent.  Returns (count, flagged) where
    flagged is True if some plaquette corner magnitude is below mag_tol
    times the field's RMS (zero too close to a grid point).
    """
    lat = q.lattice
    f = q.u[..., component[0], component[1]]
    w = q.weights[component[0]]
    fx = np.roll(f, -1, axis=0)
    fy = np.roll(f, -1, axis=1)
    cy = np.ones_like(f)
    cy[:, -1] = q.bundle.cocycle(lat)[:, -1] ** w
    fy = fy * cy
    dx = _wrap(np.angle(fx) - np.angle(f))
    dy = _wrap(np.angle(fy) - np.angle(f))
    circ = dx + np.roll(dy, -1, axis=0) - np.roll(dx, -1, axis=1) - dy
    winds = np.round(circ / (2.0 * np.pi)).astype(int)
    rms = np.sqrt(np.mean(np.abs(f) ** 2))
    flagged = bool(np.min(np.abs(f)) < mag_tol * max(rms, 1e-300))
    return int(np.sum(winds)), flagged


def vortex_ansatz(lat, bundle, n=1, weights=None, epsilon=1.0, tau=None,
                  kappa=None):
    """Initial configuration for a degree-d vortex solve.

    The first complex slot of the first factor is seeded with a
    theta-function-like section of the degree-d bundle (it satisfies the
    cocycle quasi-periodicity exactly and has |d| zeros), normalized so
    that the mean of mu1 matches the flux/tau balance of the first
    equation; the connection fluctuation and phi start at zero.
    """
    d = bundle.degree
    area = lat.Lx * lat.Ly
    if tau is None:
        tau = 4.0 * np.pi / area
    q = Configuration(lat, bundle, n=n, weights=weights, epsilon=epsilon,
                      tau=float(tau))
    if d != 0:
        # product of |d| degree-(+/-1) theta-like factors whose zeros are
        # spread along x; the x-shifts are centred so the product satisfies
        # the degree-d cocycle exactly.  The width kappa makes each factor
        # covariantly holomorphic for its share of the background
        # connection in the continuum limit.
        s = 1 if d > 0 else -1
        k = float(kappa) if kappa is not None else np.pi * lat.Ly / lat.Lx
        t = s * lat.y / lat.Ly
        m_lo = int(np.floor(np.min(t))) - 6
        m_hi = int(np.ceil(np.max(t))) + 6
        g0 = np.ones((lat.Nx, lat.Ny), dtype=complex)
        for j in range(abs(d)):
            x0 = (j - (abs(d) - 1) / 2.0) * lat.Lx / abs(d)
            fac = np.zeros((lat.Nx, lat.Ny), dtype=complex)
            for m in range(m_lo, m_hi + 1):
                fac += np.exp(-2j * np.pi * m * (lat.x - x0) / lat.Lx
                              - k * (m - t) ** 2)
            g0 = g0 * fac
    else:
        g0 = np.ones((lat.Nx, lat.Ny), dtype=complex)
    mean_mu1 = q.tau + epsilon * 2.0 * np.pi * d / area
    amp = np.sqrt(max(2.0 * mean_mu1, 0.1)) \
        / max(np.sqrt(np.mean(np.abs(g0) ** 2)), 1e-300)
    q.u[..., 0, 0] = amp * g0
    return q


def _periodic_laplacian(n, h):
    e = np.ones(n)
    L = sparse.diags([e, -2.0 * e, e], [-1, 0, 1], (n, n), format="lil")
    L[0, -1] = 1.0
    L[-1, 0] = 1.0
    return sparse.csr_matrix(L) / h ** 2


def refine_vortex_ansatz(q0, newton_iter=80, newton_tol=1e-12):
    """Refine a vortex ansatz through the reduced scalar profile equation.

    For configurations whose only nonzero matter field is the first complex
    slot c with isolated zeros, writing c = e^{w/2} g against the raw
    section g reduces the first two equations to a semilinear scalar
    problem for the smooth correction w,

        Lap w = (|c|^2 - 2 tau)/epsilon - 4 pi d / area,

    which is solved by a damped Newton iteration on the periodic
    five-point Laplacian.  The amplitude and the connection fluctuation
    (a = grad^perp w / 2, evaluated spectrally) are then rebuilt from w.
    The result is a far better starting point than the bare ansatz: it
    already satisfies the curvature and holomorphicity equations to
    truncation error, which puts it inside the basin of the damped
    Gauss-Newton iteration at parameter values where the bare ansatz
    relaxes to a spurious critical point.
    """
    lat = q0.lattice
    d = q0.bundle.degree
    eps = q0.epsilon
    if eps <= 0.0:
        raise ValueError("scalar profile refinement requires epsilon > 0")
    area = lat.Lx * lat.Ly
    g0 = q0.u[..., 0, 0].copy()
    v0 = np.log(np.maximum(np.abs(g0) ** 2, 1e-300))
    nx, ny = lat.Nx, lat.Ny
    lap = sparse.kron(_periodic_laplacian(nx, lat.hx), sparse.identity(ny)) \
        + sparse.kron(sparse.identity(nx), _periodic_laplacian(ny, lat.hy))
    const = 4.0 * np.pi * d / area
    w = np.zeros(nx * ny)
    for _ in range(newton_iter):
        ev = np.exp(v0 + w.reshape(nx, ny)).ravel()
        f = lap @ w - ((ev - 2.0 * q0.tau) / eps - const)
        if np.linalg.norm(f) / np.sqrt(nx * ny) < newton_tol:
            break
        jac = (lap - sparse.diags(ev / eps)).tocsc()
        dw = splinalg.spsolve(jac, -f)
        t = 1.0
        nf = np.linalg.norm(f)
        while t > 1e-4:
            ev2 = np.exp(np.clip(v0 + (w + t * dw).reshape(nx, ny),
                                 -700.0, 50.0)).ravel()
            f2 = lap @ (w + t * dw) - ((ev2 - 2.0 * q0.tau) / eps - const)
            if np.linalg.norm(f2) < (1.0 - 0.25 * t) * nf:
                break
            t *= 0.5
        w = w + t * dw
    wgrid = w.reshape(nx, ny)
    kx = 2j * np.pi * np.fft.fftfreq(nx, lat.hx)
    ky = 2j * np.pi * np.fft.fftfreq(ny, lat.hy)
    what = np.fft.fft2(wgrid)
    wx = np.real(np.fft.ifft2(what * kx[:, None]))
    wy = np.real(np.fft.ifft2(what * ky[None, :]))
    q = q0.copy()
    q.u[..., 0, 0] = np.exp(wgrid / 2.0) * g0
    q.a.ax = q0.a.ax + wy / 2.0
    q.a.ay = q0.a.ay - wx / 2.0
    return q


def prolong_configuration(q, lattice_fine):
    """Transfer a configuration to a lattice with doubled resolution.

    Real periodic fields (connection fluctuation, phi) are interpolated
    spectrally.  The section u is only quasi-periodic -- it picks up the
    bundle cocycle across the y boundary -- so it is interpolated
    bilinearly with the cocycle factor applied on wrap-around accesses,
    which keeps the interpolant smooth across the seam.  Used to
    warm-start fine-lattice vortex solves from a cheap coarse solve.
    """
    lat = q.lattice
    nx, ny = lat.Nx, lat.Ny
    if (lattice_fine.Nx, lattice_fine.Ny) != (2 * nx, 2 * ny):
        raise ValueError("fine lattice must double both dimensions")
    if not (np.isclose(lattice_fine.Lx, lat.Lx)
            and np.isclose(lattice_fine.Ly, lat.Ly)):
        raise ValueError("fine lattice must cover the same torus")

    def interp_real(f):
        fh = np.fft.fft2(f)
        gh = np.zeros((2 * nx, 2 * ny), dtype=complex)
        gh[:nx // 2, :ny // 2] = fh[:nx // 2, :ny // 2]
        gh[:nx // 2, -(ny // 2):] = fh[:nx // 2, -(ny // 2):]
        gh[-(nx // 2):, :ny // 2] = fh[-(nx // 2):, :ny // 2]
        gh[-(nx // 2):, -(ny // 2):] = fh[-(nx // 2):, -(ny // 2):]
        return np.real(np.fft.ifft2(gh)) * 4.0

    def interp_section(c, weight):
        coc = q.bundle.cocycle(lat)[:, -1] ** weight
        cyp = np.roll(c, -1, axis=1)
        cyp[:, -1] = cyp[:, -1] * coc
        cxp = np.roll(c, -1, axis=0)
        cxyp = np.roll(cyp, -1, axis=0)
        out = np.zeros((2 * nx, 2 * ny), dtype=complex)
        out[0::2, 0::2] = c
        out[1::2, 0::2] = 0.5 * (c + cxp)
        out[0::2, 1::2] = 0.5 * (c + cyp)
        out[1::2, 1::2] = 0.25 * (c + cxp + cyp + cxyp)
        return out

    nslots = q.u.shape[2]
    u2 = np.zeros((2 * nx, 2 * ny, nslots, 2), dtype=complex)
    for s in range(nslots):
        for p in range(2):
            u2[..., s, p] = interp_section(q.u[..., s, p], q.weights[s])
    lat2 = lattice_fine
    if not np.all(lat.h == 1.0):
        from .lattice import TorusLattice
        lat2 = TorusLattice(lattice_fine.Nx, lattice_fine.Ny,
                            lattice_fine.Lx, lattice_fine.Ly,
                            conformal=interp_real(lat.h))
    a2 = ConnectionField(lat2, q.bundle,
                         interp_real(q.a.ax), interp_real(q.a.ay))
    phi2 = interp_real(np.real(q.phi)) + 1j * interp_real(np.imag(q.phi))
    return Configuration(lat2, q.bundle, a=a2, u=u2, phi=phi2,
                         weights=q.weights, n=nslots,
                         epsilon=q.epsilon, tau=q.tau)
