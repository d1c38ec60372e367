"""Quantum Gaudin operators on tensor products of representations.

Quadratic Gaudin Hamiltonians and their Casimir parts, operators built from
singular-vector data (ordered products of derivatives of currents), the
s_p polynomial recursion, the companion diagonal matrix of its roots, and
higher Gaudin operators obtained by averaging conjugates of that matrix
over the unitary group.
"""

from fractions import Fraction

import numpy as np

from .lie import MatrixAlgebra, TensorRepSpace


class GaudinSystem:
    """Tensor representation space with marked points and an algebra.

    For spaces built from sl2 highest weights the algebra is sl_2 and
    abstract 2x2 traceless matrices are carried through the irreducible
    representations at each site; for defining-representation spaces any
    n x n matrix acts directly.
    """

    def __init__(self, space, sites, algebra=None):
        if len(sites) != space.nsites:
            raise ValueError("site count must match tensor factor count")
        sites = [complex(z) for z in sites]
        scale = max(1.0, max(abs(z) for z in sites))
        for i in range(len(sites)):
            for j in range(i + 1, len(sites)):
                if abs(sites[i] - sites[j]) <= 1e-10 * scale:
                    raise ValueError("marked points must be distinct")
        self.space = space
        self.sites = sites
        if algebra is None:
            n = 2 if space.reps is not None else space.site_dims[0]
            algebra = MatrixAlgebra(n, "sl")
        self.algebra = algebra

    def rep_embed(self, x, i):
        """Site operator of the representation image of the algebra element x."""
        x = np.asarray(x, dtype=complex)
        if self.space.reps is None:
            return self.space.site_operator(x, i)
        if x.shape != (2, 2):
            raise ValueError("sl2 algebra elements must be 2x2")
        rep = self.space.reps[i - 1]
        img = (x[0, 1] * rep["e"] + x[1, 0] * rep["f"]
               + x[0, 0] * rep["h"]).astype(complex)
        return self.space.site_operator(img, i)

    def current(self, x, u, order=1):
        """x(u) = sum_i x^(i)/(u-z_i)^order (order > 1 for derivatives)."""
        if min(abs(u - z) for z in self.sites) < 1e-12:
            raise ValueError("evaluation at a marked point")
        out = np.zeros((self.space.dim, self.space.dim), dtype=complex)
        for i, zi in enumerate(self.sites, start=1):
            out += self.rep_embed(x, i) / (u - zi) ** order
        return out


def gaudin_quadratic(system, zeta):
    """The quadratic pencil sum_a e_a(zeta) e_a(zeta) over the orthonormal basis."""
    total = np.zeros((system.space.dim, system.space.dim), dtype=complex)
    for e in system.algebra.basis():
        cur = system.current(e, zeta)
        total += cur @ cur
    return total


def gaudin_residues(system):
    """Simple-pole residues H_{2,i} and the central site Casimirs.

    H_{2,i} = sum_{j != i} 2 Omega_ij / (z_i - z_j) with
    Omega_ij = sum_a e_a^(i) e_a^(j); the double-pole coefficients
    C_i = sum_a (e_a^(i))^2 are central and returned separately.
    """
    basis = system.algebra.basis()
    N = len(system.sites)
    dim = system.space.dim
    site_ops = [[system.rep_embed(e, i) for e in basis]
                for i in range(1, N + 1)]
    hams = []
    casimirs = []
    for i in range(N):
        h = np.zeros((dim, dim), dtype=complex)
        for j in range(N):
            if j == i:
                continue
            omega = sum(a @ b for a, b in zip(site_ops[i], site_ops[j]))
            h += 2.0 * omega / (system.sites[i] - system.sites[j])
        hams.append(h)
        casimirs.append(sum(a @ a for a in site_ops[i]))
    return hams, casimirs


class SingularVectorSpec:
    """Sum of ordered products of current factors with depths.

    terms: list of (coefficient, factors); each factor is (matrix, depth)
    with depth >= 1.  Factor order within a term is significant.
    """

    def __init__(self, terms):
        for _, factors in terms:
            for _, depth in factors:
                if depth < 1 or depth != int(depth):
                    raise ValueError("depths must be positive integers")
        self.terms = [(complex(c), [(np.asarray(x, dtype=complex), int(l))
                                    for x, l in factors])
                      for c, factors in terms]

    @classmethod
    def quadratic(cls, algebra):
        return cls([(1.0, [(e, 1), (e, 1)]) for e in algebra.basis()])


def ffr_operator(system, spec, u):
    """Operator attached to singular-vector data at the point u.

    Each factor (x, l) contributes (1/(l-1)!) d^{l-1}/du^{l-1} x(u)
    = sum_i (-1)^{l-1} x^(i)/(u-z_i)^l; factors multiply left to right
    and terms are summed with their coefficients.
    """
    dim = system.space.dim
    total = np.zeros((dim, dim), dtype=complex)
    for coeff, factors in spec.terms:
        prod = np.eye(dim, dtype=complex)
        for x, l in factors:
            prod = prod @ ((-1) ** (l - 1) * system.current(x, u, order=l))
        total += coeff * prod
    return total


def s_polynomials(n, p_max):
    """The exact rational sequence s_1..s_p_max for gl_n.

    s_1 = 0, s_2 = n/2, s_3 = -2n/3 and
    s_{p+2} = ((n - p) s_p - 2 (p + 1) s_{p+1}) / (p + 2).
    """
    if p_max < 3:
        raise ValueError("need p_max >= 3")
    s = [Fraction(0), Fraction(n, 2), Fraction(-2 * n, 3)]
    for p in range(2, p_max - 1):
        nxt = ((n - p) * s[p - 1] - 2 * (p + 1) * s[p]) / Fraction(p + 2)
        s.append(nxt)
    return s[:p_max]


def eigen_h(n):
    """Diagonal matrix of the roots of the s_p characteristic polynomial.

    Roots of lambda^n - s_1 lambda^{n-1} + s_2 lambda^{n-2} - ... = 0,
    found with a companion-matrix eigensolver and ordered lexicographically
    by (Re, Im), descending.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    s = s_polynomials(n, max(n, 3))
    coeffs = [1.0] + [(-1) ** k * float(s[k - 1]) for k in range(1, n + 1)]
    roots = np.roots(coeffs)
    worst = max(abs(np.polyval(coeffs, r)) for r in roots)
    if worst > 1e-8:
        raise ArithmeticError(
            "ill-conditioned characteristic polynomial: residual %g" % worst)
    roots = sorted(roots, key=lambda r: (r.real, r.imag), reverse=True)
    return np.diag(roots)


class HaarSampler:
    """Haar-distributed SU(n) matrices from QR of complex Gaussians."""

    def __init__(self, n, seed=0):
        self.n = n
        self.rng = np.random.default_rng(seed)

    def sample(self):
        n = self.n
        g = (self.rng.normal(size=(n, n))
             + 1j * self.rng.normal(size=(n, n))) / np.sqrt(2.0)
        q, r = np.linalg.qr(g)
        d = np.diag(r)
        q = q * (d / np.abs(d))
        det = np.linalg.det(q)
        return q / det ** (1.0 / n)


class SU2Quadrature:
    """Deterministic product quadrature for Haar averages over SU(2).

    Parametrizes k = [[e^{i phi} cos th, e^{i psi} sin th],
                      [-e^{-i psi} sin th, e^{-i phi} cos th]];
    the Haar measure is uniform in x = cos(2 th) and in the two angles,
    so Gauss-Legendre in x times trapezoid rules in phi, psi integrate
    low-degree trigonometric polynomials exactly.
    """

    def __init__(self, n_x=8, n_angle=8):
        x, wx = np.polynomial.legendre.leggauss(n_x)
        self.nodes = []
        self.weights = []
        for xi, wi in zip(x, wx):
            th = 0.5 * np.arccos(xi)
            for a in range(n_angle):
                phi = 2 * np.pi * a / n_angle
                for b in range(n_angle):
                    psi = 2 * np.pi * b / n_angle
                    c, s = np.cos(th), np.sin(th)
                    k = np.array([
                        [np.exp(1j * phi) * c, np.exp(1j * psi) * s],
                        [-np.exp(-1j * psi) * s, np.exp(-1j * phi) * c],
                    ])
                    self.nodes.append(k)
                    self.weights.append(wi / (2.0 * n_angle * n_angle))


def _multi_indices(nsites, total):
    if nsites == 1:
        return [(total,)]
    out = []
    for head in range(total + 1):
        for tail in _multi_indices(nsites - 1, total - head):
            out.append((head,) + tail)
    return out


class OperatorPencil:
    """Partial-fraction coefficients of an operator-valued rational function.

    coeffs maps multi-indices (a_1..a_N), sum a_i = l - 1, to operators;
    se maps the same keys to Monte Carlo standard-error estimates.
    """

    def __init__(self, degree, sites, coeffs, se, nsamples):
        self.degree = degree
        self.sites = list(sites)
        self.coeffs = coeffs
        self.se = se
        self.nsamples = nsamples

    def reconstruct(self, zeta):
        dim = next(iter(self.coeffs.values())).shape[0]
        out = np.zeros((dim, dim), dtype=complex)
        for a, op in self.coeffs.items():
            fac = 1.0
            for ai, zi in zip(a, self.sites):
                fac *= (zeta - zi) ** (-ai)
            out += fac * op
        return out


def _extraction_nodes(sites, l):
    radius = 2.0 * max(abs(z) for z in sites) + 3.0
    count = max((l - 1) * len(sites) + 1, 8)
    return radius * np.exp(2j * np.pi * (np.arange(count) + 0.17) / count)


def haar_average_power(system, H, l, zetas, sampler, nsamples, batches=10):
    """Averages of (sum_i Ad(k)H^(i)/(zeta - z_i))^l over the group.

    Returns (means, ses): per zeta the averaged operator and a Frobenius
    standard error from batch means.  With a quadrature sampler all nodes
    are used with their weights and the errors are zero.
    """
    dim = system.space.dim

    def value(k, zeta):
        kh = k @ H @ k.conj().T
        m = system.current(kh, zeta)
        return np.linalg.matrix_power(m, l)

    if hasattr(sampler, "nodes"):
        means = []
        for zeta in zetas:
            total = np.zeros((dim, dim), dtype=complex)
            for k, w in zip(sampler.nodes, sampler.weights):
                total += w * value(k, zeta)
            means.append(total)
        return means, [0.0 for _ in zetas]

    per_batch = max(nsamples // batches, 1)
    batch_means = [[] for _ in zetas]
    for _ in range(batches):
        sums = [np.zeros((dim, dim), dtype=complex) for _ in zetas]
        for _ in range(per_batch):
            k = sampler.sample()
            for idx, zeta in enumerate(zetas):
                sums[idx] += value(k, zeta)
        for idx in range(len(zetas)):
            batch_means[idx].append(sums[idx] / per_batch)
    means = [sum(b) / batches for b in batch_means]
    ses = []
    for idx in range(len(zetas)):
        dev = [np.linalg.norm(b - means[idx]) ** 2 for b in batch_means[idx]]
        ses.append(np.sqrt(sum(dev) / (batches * (batches - 1))))
    return means, ses


def higher_gaudin(system, H, l, sampler, nsamples=10000, batches=10):
    """Higher Gaudin pencil from the group average of the l-th power.

    The averaged operator-valued rational function is projected onto the
    partial-fraction basis prod_i (zeta - z_i)^{-a_i}, sum a_i = l - 1, by
    least squares at fixed circle nodes; coefficient standard errors are
    propagated from the batch-mean errors of the node values.
    """
    if l < 1:
        raise ValueError("need l >= 1")
    sites = system.sites
    nodes = _extraction_nodes(sites, l)
    keys = _multi_indices(len(sites), l - 1)

    def basis_fn(a, z):
        out = 1.0 + 0.0j
        for ai, zi in zip(a, sites):
            out *= (z - zi) ** (-ai)
        return out

    basis = np.array([[basis_fn(a, z) for a in keys] for z in nodes])
    weights = np.linalg.pinv(basis, rcond=1e-12)
    means, ses = haar_average_power(system, H, l, nodes, sampler,
                                    nsamples, batches)
    stacked = np.array(means)
    coeffs = {}
    se = {}
    for row, a in zip(weights, keys):
        coeffs[a] = np.tensordot(row, stacked, axes=(0, 0))
        se[a] = float(np.sqrt(sum(abs(w) ** 2 * s ** 2
                                  for w, s in zip(row, ses))))
    return OperatorPencil(l, sites, coeffs, se, nsamples)


def commutator_norm(a, b):
    """Frobenius norm of the commutator ab - ba."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.shape[0] != a.shape[1]:
        raise ValueError("operators must be square and of equal shape")
    return float(np.linalg.norm(a @ b - b @ a))


# ---------------------------------------------------------------------------
# exact-arithmetic path for commutator checks at rational sites


def _frac_mat(int_mat, scale=1):
    return np.array([[Fraction(int(v), scale) for v in row]
                     for row in int_mat], dtype=object)


def gaudin_residues_exact(weights, sites):
    """H_{2,i} over exact rationals for sl2 weight data at rational sites.

    sites must be Fractions (or ints); returns object-dtype matrices.
    Uses 2 Omega_ij = h (x) h + 2 e (x) f + 2 f (x) e so that all entries
    stay rational.
    """
    space = TensorRepSpace(weights)
    sites = [Fraction(z) for z in sites]
    N = len(sites)
    dim = space.dim

    def site_op(mat, i):
        out = np.array([[Fraction(1)]], dtype=object)
        for j, rep in enumerate(space.reps, start=1):
            blk = _frac_mat(mat if j == i else np.eye(rep["dim"], dtype=int))
            out = np.kron(out, blk)
        return out

    ops = []
    for i, rep in enumerate(space.reps, start=1):
        ops.append({name: site_op(rep[name], i) for name in ("e", "f", "h")})

    hams = []
    for i in range(N):
        h = np.full((dim, dim), Fraction(0), dtype=object)
        for j in range(N):
            if j == i:
                continue
            two_omega = (ops[i]["h"] @ ops[j]["h"]
                         + 2 * ops[i]["e"] @ ops[j]["f"]
                         + 2 * ops[i]["f"] @ ops[j]["e"])
            h = h + two_omega / (sites[i] - sites[j])
        hams.append(h)
    return hams
