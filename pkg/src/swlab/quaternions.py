"""Quaternion algebra and the flat hyperKahler target H^n.

Quaternions h = w + xi + yj + zk are represented throughout the numerical
core as complex pairs (c1, c2) with h = c1 + c2*j, c1 = w + ix, c2 = y + iz,
stored in the last axis (length 2) of a complex ndarray.  A point of the
target H^n is an array of shape (..., n, 2); a tangent vector has the same
shape.  The circle group acts diagonally on the left, h -> exp(i*w_a*t)*h on
the a-th factor, where w_a are fixed integer charges ("weights").

The three complex structures are right multiplications:

    I1(c1, c2) = (-i*c1, +i*c2)      (right mult by -i)
    I2(c1, c2) = (c2, -c1)           (right mult by -j)
    I3(c1, c2) = (-i*c2, -i*c1)      (right mult by -k)

which satisfy I1*I2 = I3 and cyclic, and each squares to -1.  The metric is
the flat Euclidean metric of R^{4n}.  The moment map of the circle action is

    mu = mu1*i + mu2*j + mu3*k,
    mu1  = (1/2) sum_a w_a (|c1|^2 - |c2|^2),
    mu_c = mu2 + i*mu3 = i * sum_a w_a conj(c1) c2,

so that d<mu, it> = omega_1(K_{it}, .)*t etc., with K_{it}|h = i*w_a*t*h.
"""

import numpy as np


class Quaternion:
    """A single quaternion w + xi + yj + zk with float components."""

    __slots__ = ("w", "x", "y", "z")

    def __init__(self, w=0.0, x=0.0, y=0.0, z=0.0):
        self.w = float(w)
        self.x = float(x)
        self.y = float(y)
        self.z = float(z)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion(self.w * other, self.x * other,
                              self.y * other, self.z * other)
        a, b = self, other
        return Quaternion(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )

    __rmul__ = __mul__

    def __add__(self, other):
        return Quaternion(self.w + other.w, self.x + other.x,
                          self.y + other.y, self.z + other.z)

    def __sub__(self, other):
        return Quaternion(self.w - other.w, self.x - other.x,
                          self.y - other.y, self.z - other.z)

    def __neg__(self):
        return Quaternion(-self.w, -self.x, -self.y, -self.z)

    def conj(self):
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def norm(self):
        return float(np.sqrt(self.w ** 2 + self.x ** 2
                             + self.y ** 2 + self.z ** 2))

    def to_pair(self):
        """Complex-pair form: array [c1, c2] with h = c1 + c2*j."""
        return np.array([self.w + 1j * self.x, self.y + 1j * self.z])

    @staticmethod
    def from_pair(c):
        c = np.asarray(c)
        return Quaternion(c[0].real, c[0].imag, c[1].real, c[1].imag)

    def components(self):
        return (self.w, self.x, self.y, self.z)

    def allclose(self, other, tol=1e-12):
        return (abs(self.w - other.w) <= tol and abs(self.x - other.x) <= tol
                and abs(self.y - other.y) <= tol
                and abs(self.z - other.z) <= tol)

    def __repr__(self):
        return (f"Quaternion({self.w:.6g}, {self.x:.6g}, "
                f"{self.y:.6g}, {self.z:.6g})")


class ImQuaternion:
    """Purely imaginary quaternion xi + yj + zk."""

    __slots__ = ("x", "y", "z")

    def __init__(self, x=0.0, y=0.0, z=0.0):
        self.x = float(x)
        self.y = float(y)
        self.z = float(z)

    def norm(self):
        return float(np.sqrt(self.x ** 2 + self.y ** 2 + self.z ** 2))

    def as_quaternion(self):
        return Quaternion(0.0, self.x, self.y, self.z)

    def components(self):
        return (self.x, self.y, self.z)

    def __repr__(self):
        return f"ImQuaternion({self.x:.6g}, {self.y:.6g}, {self.z:.6g})"


# ---------------------------------------------------------------------------
# complex-pair array algebra

def qmul_pair(a, b):
    """Hamilton product in complex-pair form (vectorized over leading axes)."""
    a1, a2 = a[..., 0], a[..., 1]
    b1, b2 = b[..., 0], b[..., 1]
    return np.stack([a1 * b1 - a2 * np.conj(b2),
                     a1 * b2 + a2 * np.conj(b1)], axis=-1)


def qconj_pair(a):
    """Quaternionic conjugate in complex-pair form."""
    return np.stack([np.conj(a[..., 0]), -a[..., 1]], axis=-1)


def I1(c):
    """First complex structure (right multiplication by -i)."""
    return np.stack([-1j * c[..., 0], 1j * c[..., 1]], axis=-1)


def I2(c):
    """Second complex structure (right multiplication by -j)."""
    return np.stack([c[..., 1], -c[..., 0]], axis=-1)


def I3(c):
    """Third complex structure (right multiplication by -k)."""
    return np.stack([-1j * c[..., 1], -1j * c[..., 0]], axis=-1)


def apply_complex_structure(xi, v):
    """Apply I_xi = xi1*I1 + xi2*I2 + xi3*I3 to a tangent array v.

    xi may be an ImQuaternion or a length-3 sequence.  For unit xi this is a
    complex structure (squares to -1); for general xi it is the obvious
    linear combination.
    """
    if isinstance(xi, ImQuaternion):
        x1, x2, x3 = xi.components()
    else:
        x1, x2, x3 = float(xi[0]), float(xi[1]), float(xi[2])
    return x1 * I1(v) + x2 * I2(v) + x3 * I3(v)


def pair_dot(v, w):
    """Pointwise Euclidean metric g(v, w), summed over the (n, 2) axes."""
    return np.sum(np.real(np.conj(v) * w), axis=(-2, -1))


def left_phase(theta, c, weights=None):
    """Circle action exp(i*w_a*theta) applied factorwise to c (..., n, 2)."""
    theta = np.asarray(theta, dtype=float)
    if weights is None:
        ph = np.exp(1j * theta)[..., None, None]
    else:
        w = np.asarray(weights, dtype=float)
        ph = np.exp(1j * theta[..., None] * w)[..., None]
    return ph * c


def moment_real(c, weights=None):
    """First moment-map component mu1 = (1/2) sum_a w_a (|c1|^2 - |c2|^2)."""
    d = np.abs(c[..., 0]) ** 2 - np.abs(c[..., 1]) ** 2
    if weights is not None:
        d = d * np.asarray(weights, dtype=float)
    return 0.5 * np.sum(d, axis=-1)


def moment_complex(c, weights=None):
    """Complex moment map mu_c = mu2 + i*mu3 = i sum_a w_a conj(c1) c2."""
    p = np.conj(c[..., 0]) * c[..., 1]
    if weights is not None:
        p = p * np.asarray(weights, dtype=float)
    return 1j * np.sum(p, axis=-1)


def moment_imquat(c, weights=None):
    """Full moment map as an ImQuaternion (for scalar points only)."""
    m1 = moment_real(c, weights)
    mc = moment_complex(c, weights)
    return ImQuaternion(float(m1), float(np.real(mc)), float(np.imag(mc)))


def dmoment_real(c, v, weights=None):
    """Directional derivative of mu1 at c along v."""
    d = np.real(np.conj(c[..., 0]) * v[..., 0]
                - np.conj(c[..., 1]) * v[..., 1])
    if weights is not None:
        d = d * np.asarray(weights, dtype=float)
    return np.sum(d, axis=-1)


def dmoment_complex(c, v, weights=None):
    """Directional derivative of mu_c at c along v."""
    p = np.conj(v[..., 0]) * c[..., 1] + np.conj(c[..., 0]) * v[..., 1]
    if weights is not None:
        p = p * np.asarray(weights, dtype=float)
    return 1j * np.sum(p, axis=-1)


def fundamental_field(t, c, weights=None):
    """Fundamental vector field of the circle action at c for generator i*t.

    t is real (the Lie algebra is iR; t is the imaginary part).  Returns
    i*w_a*t*c factorwise.
    """
    t = np.asarray(t, dtype=float)
    if weights is None:
        return 1j * t[..., None, None] * c
    w = np.asarray(weights, dtype=float)
    return 1j * (t[..., None] * w)[..., None] * c


def hyperkahler_potential(c):
    """Flat hyperKahler potential rho0 = (1/2)|h|^2 (unweighted)."""
    return 0.5 * np.sum(np.abs(c) ** 2, axis=(-2, -1))


def check_moment_axioms(p, xi, eta_t, v, step, weights=None):
    """Defects of the two moment-map axioms at point p.

    Axiom 1: <dmu(p)v, xi> = g(I_xi K_{i*eta_t}|p, v), with the left side by
    central finite differences of the xi-component of mu at the given step.
    Axiom 2: |mu(z.p) - mu(p)| for z = exp(i*eta_t) (the action is abelian,
    so equivariance is plain invariance).  Returns (axiom1, axiom2).
    """
    p = np.asarray(p, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if isinstance(xi, ImQuaternion):
        x1, x2, x3 = xi.components()
    else:
        x1, x2, x3 = (float(xi[0]), float(xi[1]), float(xi[2]))

    def mu_xi(c):
        mc = moment_complex(c, weights)
        return (x1 * moment_real(c, weights)
                + x2 * np.real(mc) + x3 * np.imag(mc))

    s = float(step)
    lhs = (mu_xi(p + s * v) - mu_xi(p - s * v)) / (2 * s)
    k = fundamental_field(np.asarray(eta_t, dtype=float), p, weights)
    rhs = pair_dot(apply_complex_structure((x1, x2, x3), k), v)
    # <dmu, xi> pairs the xi-component against the generator i*eta_t of K
    lhs = lhs * float(eta_t)
    axiom1 = float(np.max(np.abs(lhs - rhs)))

    rotated = left_phase(np.asarray(float(eta_t)), p, weights)
    m0 = np.stack([moment_real(p, weights),
                   np.real(moment_complex(p, weights)),
                   np.imag(moment_complex(p, weights))])
    m1 = np.stack([moment_real(rotated, weights),
                   np.real(moment_complex(rotated, weights)),
                   np.imag(moment_complex(rotated, weights))])
    axiom2 = float(np.max(np.abs(m1 - m0)))
    return axiom1, axiom2


def chern_weight_sum(weights=None, n=1):
    """Sum of circle-action weights on the tangent space with respect to I1.

    Diagonalizes the action generator on the +i eigenspace of I1, factor by
    factor, and returns the integer sum of the resulting weights.  For the
    diagonal action on H^n the two I1-eigenlines of each factor carry
    opposite weights, so the sum vanishes; this is computed, not assumed.
    """
    if weights is None:
        weights = [1] * n
    total = 0.0
    for w in weights:
        # real 4x4 matrices in the (w, x, y, z) basis of one factor
        basis = np.eye(4)

        def to_pair(q):
            return np.array([q[0] + 1j * q[1], q[2] + 1j * q[3]])

        def from_pair(c):
            return np.array([c[0].real, c[0].imag, c[1].real, c[1].imag])

        J = np.column_stack([from_pair(I1(to_pair(b)[None, :])[0])
                             for b in basis])
        A = np.column_stack([from_pair(1j * w * to_pair(b)) for b in basis])
        # trace of the generator over the +i eigenspace of J, divided by i:
        # tr(P A)/i with P = (1 - iJ)/2, which reduces to -tr(J A)/2
        total += -np.trace(J @ A) / 2.0
    return int(round(total))
