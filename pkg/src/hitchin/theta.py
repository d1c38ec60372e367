"""Multiplicative theta function on the annulus and its derived kernels.

All functions here work with the multiplicative convention: the elliptic
curve is C^x / q^Z with |q| < 1, and the basic building block is

    theta(z) = prod_{i>=0} (1 - q^i z) * prod_{i>=1} (1 - q^i / z).

Derived objects:

* ``theta_ratio`` -- the logarithmic derivative z theta'(z)/theta(z),
  written u(z) below.
* ``wp`` -- the Weierstrass-type function p(ln z) := -D u(z) + c(q),
  where D = z d/dz and c(q) is fixed so p(tau) - 1/tau^2 -> 0 as
  z = e^tau -> 1.
* ``kernel`` -- K_t(x) = theta(t x) / (theta(t) theta(x)), the basic
  two-variable kernel of the elliptic Lax matrices, and its normalised
  variant ``sigma`` = theta'(1) K_t(x) which has residue 1 at x = 1.
"""

from __future__ import annotations

import cmath
import math

import numpy as np


class ThetaError(Exception):
    """Base class for theta evaluation failures."""


class PoleError(ThetaError):
    """Argument too close to the lattice q^Z where a denominator vanishes."""


class TruncationError(ThetaError):
    """The q-series would need more than max_terms terms to converge."""


class ThetaContext:
    """Evaluation context: nome q, tolerance, truncation and pole guards.

    Series are truncated once the remaining tail is provably below ``tol``;
    if that takes more than ``max_terms`` terms a TruncationError is raised.
    Arguments within relative distance ``pole_guard`` of the lattice q^Z
    raise PoleError from any function that has a pole or zero denominator
    there.
    """

    def __init__(self, q, tol=1e-14, max_terms=10000, pole_guard=1e-8):
        q = complex(q)
        if abs(q) >= 1.0:
            raise ValueError("need |q| < 1, got |q| = %g" % abs(q))
        self.q = q
        self.tol = float(tol)
        self.max_terms = int(max_terms)
        self.pole_guard = float(pole_guard)
        self._theta_prime_one = None
        self._wp_const = None

    # -- basic guards ------------------------------------------------------

    def _nterms(self, scale):
        """Number of series terms so that |q|^n * scale < tol."""
        aq = abs(self.q)
        if aq == 0.0:
            return 1
        if scale <= 0.0:
            scale = 1.0
        n = int(math.log(self.tol / scale) / math.log(aq)) + 2 if scale > self.tol else 1
        n = max(n, 2)
        if n > self.max_terms:
            raise TruncationError(
                "series needs %d terms (max_terms=%d)" % (n, self.max_terms))
        return n

    def check_regular(self, z):
        """Raise PoleError if z is within pole_guard of the lattice q^Z."""
        z = complex(z)
        if z == 0:
            raise PoleError("argument 0 is on the boundary of the annulus")
        aq = abs(self.q)
        if aq == 0.0:
            if abs(z - 1.0) < self.pole_guard:
                raise PoleError("argument within pole guard of 1")
            return
        # only lattice points with modulus comparable to |z| can be close
        k0 = math.log(abs(z)) / math.log(aq)
        for k in range(int(math.floor(k0)) - 1, int(math.ceil(k0)) + 2):
            w = self.q ** k
            if abs(z - w) < self.pole_guard * abs(w):
                raise PoleError("argument within pole guard of q^%d" % k)

    # -- theta and friends -------------------------------------------------

    def theta(self, z):
        """Multiplicative theta function (zeros on q^Z, no poles)."""
        z = complex(z)
        if z == 0:
            raise PoleError("theta argument must lie in C^x")
        q = self.q
        scale = abs(z) + 1.0 / abs(z) + 2.0
        n = self._nterms(scale)
        out = 1.0 - z
        qi = q
        for _ in range(1, n):
            out *= (1.0 - qi * z) * (1.0 - qi / z)
            qi *= q
        return out

    def theta_prime_one(self):
        """theta'(1) = -prod_{i>=1} (1-q^i)^2 (slope at the zero z=1)."""
        if self._theta_prime_one is None:
            q = self.q
            n = self._nterms(4.0)
            prod = 1.0 + 0j
            qi = q
            for _ in range(1, n):
                prod *= 1.0 - qi
                qi *= q
            self._theta_prime_one = -prod * prod
        return self._theta_prime_one

    def _logderiv_terms(self, z, k):
        """D^k of z theta'/theta, D = z d/dz, via per-term polynomials.

        Each series term is y/(1-y) up to sign with y = q^i z^{+-1}; writing
        v = 1/(1-y), the Euler derivative acts on polynomials in v through
        D v = v^2 - v, so D^k of a term is a polynomial in v.
        """
        # p = v - 1 as coefficient array in v, then apply Delta k times
        p = np.array([-1.0, 1.0], dtype=complex)
        for _ in range(k):
            m = np.arange(len(p))
            nxt = np.zeros(len(p) + 1, dtype=complex)
            nxt[1:] += m * p          # m * v^{m+1}
            nxt[:-1] -= m * p         # -m * v^m
            p = nxt

        def pval(y):
            v = 1.0 / (1.0 - y)
            return np.polyval(p[::-1], v)

        z = complex(z)
        self.check_regular(z)
        q = self.q
        scale = abs(z) + 1.0 / abs(z) + 2.0
        n = self._nterms(scale)
        total = -pval(z)
        qi = q
        sgn = (-1.0) ** k
        for _ in range(1, n):
            total += -pval(qi * z) + sgn * pval(qi / z)
            qi *= q
        return total

    def theta_ratio(self, z):
        """u(z) = z theta'(z) / theta(z)."""
        return self._logderiv_terms(z, 0)

    def theta_ratio_deriv(self, z, k):
        """D^k u(z) with D = z d/dz (k = 0 gives u itself)."""
        return self._logderiv_terms(z, k)

    def theta_dot(self, z):
        """theta-dot(z) = z theta'(z)."""
        return self.theta_ratio(z) * self.theta(z)

    def wp_const(self):
        """c(q) = 1/12 - 2 sum_{i>=1} q^i/(1-q^i)^2, fixing wp ~ 1/tau^2."""
        if self._wp_const is None:
            q = self.q
            n = self._nterms(4.0)
            s = 0.0 + 0j
            qi = q
            for _ in range(1, n):
                s += qi / (1.0 - qi) ** 2
                qi *= q
            self._wp_const = 1.0 / 12.0 - 2.0 * s
        return self._wp_const

    def wp(self, z):
        """p(ln z) = -D u(z) + c(q); even, elliptic, ~ 1/tau^2 at z=e^tau."""
        return -self._logderiv_terms(z, 1) + self.wp_const()

    def wp_deriv(self, z, k):
        """D^k p(ln z) (k = 0 gives wp itself)."""
        if k == 0:
            return self.wp(z)
        return -self._logderiv_terms(z, k + 1)

    def kernel(self, t, x):
        """K_t(x) = theta(t x) / (theta(t) theta(x))."""
        self.check_regular(t)
        self.check_regular(x)
        return self.theta(t * x) / (self.theta(t) * self.theta(x))

    def sigma(self, t, x):
        """Normalised kernel theta'(1) K_t(x); residue 1 at x = 1."""
        return self.theta_prime_one() * self.kernel(t, x)


def wp_const_richardson(ctx, tau0=1e-2, levels=4):
    """Cross-check of wp_const by Richardson extrapolation in tau^2.

    Extrapolates 1/tau^2 + D u(e^tau) as tau -> 0; the limit is c(q).
    """
    vals = []
    for j in range(levels):
        tau = tau0 / 2 ** j
        z = cmath.exp(tau)
        vals.append(1.0 / tau ** 2 + ctx.theta_ratio_deriv(z, 1))
    # Richardson for an even function: error series in tau^2
    for step in range(1, levels):
        fac = 4.0 ** step
        vals = [(fac * vals[i + 1] - vals[i]) / (fac - 1.0)
                for i in range(len(vals) - 1)]
    return vals[0]


# -- identity residuals ----------------------------------------------------
# Each returns |lhs - rhs| for an identity the rest of the library rests on.
# They are exercised by the test suite and by the `theta-check` CLI command.


def functional_equation_residual(ctx, z):
    """theta(q z) = -z^{-1} theta(z)."""
    return abs(ctx.theta(ctx.q * z) + ctx.theta(z) / z)


def inversion_residual(ctx, z):
    """theta(1/z) = -z^{-1} theta(z).

    (Direct consequence of the product; at q=0 both sides are (z-1)/z.)
    """
    return abs(ctx.theta(1.0 / z) + ctx.theta(z) / z)


def shift_residual(ctx, z):
    """u(q z) = u(z) - 1 for u = theta-dot/theta."""
    return abs(ctx.theta_ratio(ctx.q * z) - ctx.theta_ratio(z) + 1.0)


def reflection_residual(ctx, z):
    """u(z) + u(1/z) = 1."""
    return abs(ctx.theta_ratio(z) + ctx.theta_ratio(1.0 / z) - 1.0)


def theta_one_residual(ctx):
    """theta(1) = 0."""
    return abs(ctx.theta(1.0))


def wp_even_residual(ctx, z):
    """wp(ln z) = wp(-ln z)."""
    return abs(ctx.wp(z) - ctx.wp(1.0 / z))


def wp_pair_residual(ctx, t, w):
    """sigma_t(w) sigma_{1/t}(w) = wp(ln w) - wp(ln t).

    Product of opposite kernels; both sides have double pole 1/tau^2 at
    w = 1 and zeros at w = t^{+-1}.
    """
    lhs = ctx.sigma(t, w) * ctx.sigma(1.0 / t, w)
    rhs = ctx.wp(w) - ctx.wp(t)
    return abs(lhs - rhs)


def addition_residual(ctx, z, w, t, tp):
    """Three-term product identity behind the classical r-matrix bracket.

    K_t(z/w) K_{t t'}(w) - K_{1/t'}(z/w) K_{t t'}(z) = K_t(z) K_{t'}(w).
    """
    K = ctx.kernel
    lhs = K(t, z / w) * K(t * tp, w) - K(1.0 / tp, z / w) * K(t * tp, z)
    rhs = K(t, z) * K(tp, w)
    return abs(lhs - rhs)


def mixed_derivative_residual(ctx, z, w, t):
    """Derivative identity behind the dynamical term of the bracket.

    -(1/theta'(1)) t d/dt [K_t(w)] + (1/theta'(1)) u(z) K_t(w)
      = -K_{1/t}(z/w) K_t(z) + (1/theta'(1)) u(z/w) K_t(w).

    (Fixed from the commonly printed form: the derivative term enters with
    a minus sign and the first kernel on the right carries 1/t; with t in
    both places the two sides differ by an elliptic function of z.)
    """
    tp1 = ctx.theta_prime_one()
    u = ctx.theta_ratio
    K = ctx.kernel
    # t d/dt K_t(w) = (u(t w) - u(t)) K_t(w)
    dK = (u(t * w) - u(t)) * K(t, w)
    lhs = -dK / tp1 + u(z) * K(t, w) / tp1
    rhs = -K(1.0 / t, z / w) * K(t, z) + u(z / w) * K(t, w) / tp1
    return abs(lhs - rhs)


def quasi_invariance_residual(ctx, z, w, t, zeta):
    """F(z, w) = F(z zeta, w zeta) for the residue pairing function

    F(z, w) = K_{1/t}(z) K_t(w) + K_{1/t}(z/w) (u(z) - u(w)) / theta'(1).
    """
    tp1 = ctx.theta_prime_one()
    u = ctx.theta_ratio
    K = ctx.kernel

    def F(a, b):
        return K(1.0 / t, a) * K(t, b) + K(1.0 / t, a / b) * (u(a) - u(b)) / tp1

    return abs(F(z, w) - F(z * zeta, w * zeta))


def cross_square_residual(ctx, x, y):
    """Reduction of (u(x)-u(y))^2 to single-argument functions:

    (u(x)-u(y))^2 = wp(ln x) + wp(ln y) + (u(x/y)-u(y/x)) (u(x)-u(y))
                    + wp(ln(x/y)) - u(x/y)^2 + u(x/y) - 1/4.
    """
    u = ctx.theta_ratio
    wp = ctx.wp
    d = u(x) - u(y)
    w = x / y
    lhs = d * d
    rhs = (wp(x) + wp(y) + (u(w) - u(1.0 / w)) * d
           + wp(w) - u(w) ** 2 + u(w) - 0.25)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# module-level convenience API


def theta(ctx, z):
    """Multiplicative theta function theta(z) for the context modulus."""
    return ctx.theta(z)


def theta_logderiv(ctx, z):
    """Logarithmic Euler derivative z theta'(z) / theta(z)."""
    return ctx.theta_ratio(z)


def wp(ctx, z):
    """Weierstrass function of ln z, normalized so wp(e^tau) ~ 1/tau^2."""
    return ctx.wp(z)


def check_theta_identity(ctx, ident, point):
    """Residual of one of the three kernel identities.

    ident -- "A" (addition), "B" (mixed t-derivative) or "C" (diagonal
    quasi-invariance).  point -- tuple of arguments: (z, w, t, tp) for A,
    (z, w, t) for B, (z, w, t, zeta) for C.
    """
    if ident == "A":
        z, w, t, tp = point
        return addition_residual(ctx, z, w, t, tp)
    if ident == "B":
        z, w, t = point[:3]
        return mixed_derivative_residual(ctx, z, w, t)
    if ident == "C":
        z, w, t, zeta = point
        return quasi_invariance_residual(ctx, z, w, t, zeta)
    raise ValueError("unknown identity %r" % (ident,))
