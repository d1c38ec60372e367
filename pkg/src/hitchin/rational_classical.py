"""Classical rational integrable system on the punctured sphere.

Lax matrix with simple poles at marked points, partial-fraction coefficients
of its power traces (the conserved Hamiltonians), the Kostant-Kirillov
Poisson bracket on products of coadjoint orbits, and the induced
isospectral flows with an RK4 integrator.
"""

import itertools
import json

import numpy as np


class PoleError(Exception):
    pass


class RationalPhasePoint:
    """N matrices eta[i] in gl_n attached to distinct marked points sites[i].

    Optionally checks that each eta[i] is nilpotent (all power traces up to
    n vanish) and/or that the moment constraint sum_i eta[i] = 0 holds.
    """

    def __init__(self, eta, sites, check_nilpotent=False, check_moment=False):
        self.eta = [np.array(m, dtype=complex) for m in eta]
        self.sites = [complex(z) for z in sites]
        if not self.eta:
            raise ValueError("need at least one site")
        n = self.eta[0].shape[0]
        for m in self.eta:
            if m.shape != (n, n):
                raise ValueError("all site matrices must be square of equal size")
        if len(self.sites) != len(self.eta):
            raise ValueError("sites and eta must have equal length")
        self.n = n
        self.nsites = len(self.sites)
        scale = max(1.0, max(abs(z) for z in self.sites))
        for i in range(self.nsites):
            for j in range(i + 1, self.nsites):
                if abs(self.sites[i] - self.sites[j]) <= 1e-10 * scale:
                    raise ValueError("marked points must be pairwise distinct")
        if check_nilpotent:
            for i, m in enumerate(self.eta):
                p = np.eye(n, dtype=complex)
                for _ in range(n):
                    p = p @ m
                    if abs(np.trace(p)) > 1e-10 * max(1.0, np.linalg.norm(m) ** n):
                        raise ValueError("site matrix %d is not nilpotent" % i)
        if check_moment:
            total = sum(self.eta)
            if np.linalg.norm(total) > 1e-10 * max(
                1.0, max(np.linalg.norm(m) for m in self.eta)
            ):
                raise ValueError("moment constraint sum(eta) = 0 violated")

    def copy_with_eta(self, eta):
        obj = RationalPhasePoint.__new__(RationalPhasePoint)
        obj.eta = [np.array(m, dtype=complex) for m in eta]
        obj.sites = list(self.sites)
        obj.n = self.n
        obj.nsites = self.nsites
        return obj

    def to_json(self):
        return json.dumps(
            {
                "n": self.n,
                "sites": [[z.real, z.imag] for z in self.sites],
                "eta": [
                    [[[v.real, v.imag] for v in row] for row in m]
                    for m in self.eta
                ],
            }
        )

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        sites = [complex(re, im) for re, im in data["sites"]]
        eta = [
            np.array([[complex(re, im) for re, im in row] for row in m])
            for m in data["eta"]
        ]
        point = cls(eta, sites)
        if point.n != data["n"]:
            raise ValueError("matrix size does not match declared n")
        return point


def lax_rational(point, z):
    """The Lax matrix sum_i eta[i] / (z - z_i)."""
    scale = max(1.0, max(abs(s) for s in point.sites))
    out = np.zeros((point.n, point.n), dtype=complex)
    for m, zi in zip(point.eta, point.sites):
        dz = z - zi
        if abs(dz) < 1e-12 * scale:
            raise PoleError("evaluation at marked point %r" % (zi,))
        out += m / dz
    return out


def multi_indices(nsites, total):
    """All tuples of nonnegative integers of given length summing to total."""
    if nsites == 1:
        return [(total,)]
    out = []
    for head in range(total + 1):
        for tail in multi_indices(nsites - 1, total - head):
            out.append((head,) + tail)
    return out


class HitchinCoefficients:
    """Partial-fraction coefficients of the power traces of the Lax matrix.

    For each degree d the function trace(eta(z)^d) lies in the span of the
    basis prod_i (z - z_i)^{-a_i} over multi-indices a with sum a_i = d - 1.
    Coefficients are extracted by least squares on a fixed circle of
    quadrature nodes, so each coefficient is a fixed linear combination of
    the values trace(eta(z_k)^d) -- a gauge-invariant functional.
    """

    def __init__(self, point, degrees):
        self.sites = list(point.sites)
        self.nsites = point.nsites
        self.degrees = sorted(set(int(d) for d in degrees))
        for d in self.degrees:
            if d < 1:
                raise ValueError("degrees must be positive")
        radius = 2.0 * max(abs(z) for z in self.sites) + 3.0
        self.plans = {}
        self.values = {}
        for d in self.degrees:
            keys = multi_indices(self.nsites, d - 1)
            nnodes = max(4 * self.nsites * d, 16)
            nodes = radius * np.exp(
                2j * np.pi * (np.arange(nnodes) + 0.31) / nnodes
            )
            basis = np.array(
                [[self._basis_fn(a, z) for a in keys] for z in nodes]
            )
            # rows of the pseudoinverse express each coefficient as a fixed
            # linear functional of trace(eta(z_k)^d)
            weights = np.linalg.pinv(basis, rcond=1e-12)
            traces = np.array(
                [np.trace(np.linalg.matrix_power(lax_rational(point, z), d))
                 for z in nodes]
            )
            coeffs = weights @ traces
            self.plans[d] = (keys, nodes, weights)
            for a, c in zip(keys, coeffs):
                self.values[(d, a)] = c

    def _basis_fn(self, a, z):
        out = 1.0 + 0.0j
        for ai, zi in zip(a, self.sites):
            out *= (z - zi) ** (-ai)
        return out

    def __getitem__(self, key):
        d, a = key
        return self.values[(int(d), tuple(a))]

    def keys(self):
        return list(self.values.keys())

    def reconstruction_residual(self, point, z):
        """|sum_a H_{d,a} basis_a(z) - trace(eta(z)^d)|, maximized over d."""
        worst = 0.0
        for d in self.degrees:
            keys = self.plans[d][0]
            total = sum(self.values[(d, a)] * self._basis_fn(a, z) for a in keys)
            target = np.trace(np.linalg.matrix_power(lax_rational(point, z), d))
            worst = max(worst, abs(total - target))
        return worst


class HitchinObservable:
    """One coefficient H_{d,a} as a scalar observable with analytic gradient."""

    def __init__(self, point, d, a, coeffs=None):
        self.d = int(d)
        self.a = tuple(a)
        if coeffs is None:
            coeffs = HitchinCoefficients(point, [self.d])
        keys, nodes, weights = coeffs.plans[self.d]
        self.row = weights[keys.index(self.a)]
        self.nodes = nodes

    def value(self, point):
        traces = np.array(
            [np.trace(np.linalg.matrix_power(lax_rational(point, z), self.d))
             for z in self.nodes]
        )
        return self.row @ traces

    def __call__(self, point):
        return self.value(point)

    def gradients(self, point):
        """Matrix gradients wrt each eta[i] under the pairing tr(grad . delta)."""
        grads = [np.zeros((point.n, point.n), dtype=complex)
                 for _ in range(point.nsites)]
        for lam, z in zip(self.row, self.nodes):
            power = np.linalg.matrix_power(lax_rational(point, z), self.d - 1)
            for i, zi in enumerate(point.sites):
                grads[i] += lam * self.d * power / (z - zi)
        return grads


def _fd_gradients(f, point, h=None):
    """Centered finite-difference gradients of a scalar observable.

    One Richardson level: D = (4 D_{h/2} - D_h) / 3.
    """
    scale = max(1.0, max(np.linalg.norm(m) for m in point.eta))
    if h is None:
        h = 1e-5 * scale
    grads = []
    for i in range(point.nsites):
        g = np.zeros((point.n, point.n), dtype=complex)
        for a in range(point.n):
            for b in range(point.n):
                def diff(step):
                    eta_p = [m.copy() for m in point.eta]
                    eta_m = [m.copy() for m in point.eta]
                    eta_p[i][a, b] += step
                    eta_m[i][a, b] -= step
                    return (f(point.copy_with_eta(eta_p))
                            - f(point.copy_with_eta(eta_m))) / (2 * step)
                d1 = diff(h)
                d2 = diff(h / 2)
                # gradient convention tr(grad . delta): entry (b, a)
                g[b, a] = (4 * d2 - d1) / 3
        grads.append(g)
    return grads


def _observable_gradients(f, point):
    if hasattr(f, "gradients"):
        return f.gradients(point)
    try:
        return _fd_gradients(f, point)
    except Exception as exc:  # report which observable failed
        raise RuntimeError(
            "finite-difference gradient failed for %r: %s" % (f, exc)
        )


def kk_bracket(f, g, point):
    """Kostant-Kirillov bracket sum_i <eta[i], [grad_i g, grad_i f]>.

    The sign is fixed so that the matrix-valued coordinate brackets satisfy
    {eta(z) (x) eta(w)} = [P/(z-w), eta(z) (x) 1 + 1 (x) eta(w)].
    """
    gf = _observable_gradients(f, point)
    gg = _observable_gradients(g, point)
    total = 0.0 + 0.0j
    for m, a, b in zip(point.eta, gf, gg):
        total += np.trace(m @ (b @ a - a @ b))
    return total


def hamiltonian_field(f, point):
    """Hamiltonian vector field eta_dot[i] = {eta[i], f} = [eta[i], grad_i f]."""
    grads = _observable_gradients(f, point)
    return [m @ g - g @ m for m, g in zip(point.eta, grads)]


def entry_observable(i, a, b):
    """The coordinate observable eta[i]_{ab}, with its exact gradient."""

    class _Entry:
        def __call__(self, point):
            return point.eta[i][a, b]

        def gradients(self, point):
            grads = [np.zeros((point.n, point.n), dtype=complex)
                     for _ in range(point.nsites)]
            grads[i][b, a] = 1.0
            return grads

    return _Entry()


def coordinate_bracket_tensor(point, z, w):
    """The 4-tensor {eta(z)_ab, eta(w)_cd} reshaped as an n^2 x n^2 matrix.

    Row index (a, c), column index (b, d), i.e. the matrix of the operator
    on C^n (x) C^n whose (a c, b d) entry is the bracket.
    """
    n = point.n
    out = np.zeros((n * n, n * n), dtype=complex)
    for i, (m, zi) in enumerate(zip(point.eta, point.sites)):
        fz = 1.0 / (z - zi)
        fw = 1.0 / (w - zi)
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for d in range(n):
                        # {eta[i]_ab, eta[i]_cd} = delta_cb eta_ad - delta_ad eta_cb
                        val = 0.0
                        if c == b:
                            val += m[a, d]
                        if a == d:
                            val -= m[c, b]
                        out[a * n + c, b * n + d] += fz * fw * val
    return out


def flow_field(point, d, a):
    """Tangent vector of the flow attached to the coefficient H_{d,a}.

    Normalized so that for d = 2 and a the indicator of site i the field is
    eta_dot[j] = -[eta[i], eta[j]] / (z_i - z_j) for j != i, and
    eta_dot[i] = sum_{j != i} [eta[i], eta[j]] / (z_i - z_j).
    This equals the Hamiltonian field of H_{d,a} divided by d.
    """
    obs = HitchinObservable(point, d, a)
    field = hamiltonian_field(obs, point)
    return [m / d for m in field]


def integrate_flow(point, key, T, dt, overflow=1e8):
    """RK4 integration of flow_field; returns (trajectory, drift_max).

    trajectory is a list of (t, RationalPhasePoint); drift_max is the
    largest absolute drift of any Hitchin coefficient of degrees 2..n
    along the trajectory.
    """
    if dt <= 0 or T <= 0:
        raise ValueError("T and dt must be positive")
    d, a = key
    degrees = list(range(2, point.n + 1))
    ref = HitchinCoefficients(point, degrees)
    ref_vals = dict(ref.values)

    def rhs(p):
        return flow_field(p, d, a)

    nsteps = int(round(T / dt))
    current = point
    trajectory = [(0.0, current)]
    drift_max = 0.0
    for step in range(nsteps):
        k1 = rhs(current)
        p2 = current.copy_with_eta(
            [m + 0.5 * dt * v for m, v in zip(current.eta, k1)])
        k2 = rhs(p2)
        p3 = current.copy_with_eta(
            [m + 0.5 * dt * v for m, v in zip(current.eta, k2)])
        k3 = rhs(p3)
        p4 = current.copy_with_eta(
            [m + dt * v for m, v in zip(current.eta, k3)])
        k4 = rhs(p4)
        new_eta = [
            m + dt / 6.0 * (v1 + 2 * v2 + 2 * v3 + v4)
            for m, v1, v2, v3, v4 in zip(current.eta, k1, k2, k3, k4)
        ]
        if max(np.linalg.norm(m) for m in new_eta) > overflow:
            raise OverflowError("trajectory escaped the overflow bound")
        current = current.copy_with_eta(new_eta)
        trajectory.append(((step + 1) * dt, current))
        coeffs = HitchinCoefficients(current, degrees)
        for kk, v in ref_vals.items():
            drift_max = max(drift_max, abs(coeffs.values[kk] - v))
    return trajectory, drift_max


def random_nilpotent_point(n, N, rng, spread=1.0, moment=False):
    """Random phase point with rank-1 nilpotent site matrices eta = v w^T.

    Sites are random complex numbers; with moment=True the last site matrix
    is replaced so that sum eta[i] = 0 (the result is then generally not
    nilpotent at the last site).
    """
    sites = []
    while len(sites) < N:
        z = rng.normal(scale=spread) + 1j * rng.normal(scale=spread)
        if all(abs(z - s) > 0.2 * spread for s in sites):
            sites.append(z)
    eta = []
    for _ in range(N):
        v = rng.normal(size=n) + 1j * rng.normal(size=n)
        w = rng.normal(size=n) + 1j * rng.normal(size=n)
        w = w - v * (w @ v) / (v @ v)
        eta.append(np.outer(v, w))
    if moment:
        eta[-1] = -sum(eta[:-1])
    return RationalPhasePoint(eta, sites)
