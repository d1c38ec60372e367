"""Symbolic expressions in one multiplicative variable built from theta
generators, closed under the Euler derivative D = t d/dt.

Generators: constants, monomials c*t^m, theta(c*t^m), the logarithmic
derivative u(c*t^m) = theta_dot/theta, the normalized Weierstrass function
wp(ln(c*t^m)) and its Euler derivatives, and the q-dependent constants
theta'(1) and the wp normalization constant.  Closure under D follows from

    D theta(c t^m) = m u(c t^m) theta(c t^m),
    D u(c t^m)     = m (wp_const - wp(ln c t^m)),
    D wp^(k)       = m wp^(k+1).

Expressions are evaluated against a ThetaContext at a numeric point.
"""

import numbers


def _wrap(v):
    if isinstance(v, ThetaExpr):
        return v
    if isinstance(v, numbers.Number):
        return ThetaExpr("const", value=complex(v))
    raise TypeError("cannot interpret %r as a theta expression" % (v,))


class ThetaExpr:
    """Node of a theta-expression tree.

    kind is one of "const", "monomial", "theta", "u", "wp", "wpconst",
    "tp1", "add", "mul", "div".  Generators carry a constant prefactor c
    and an exponent m for the argument c*t^m; "wp" additionally carries
    the Euler-derivative order.
    """

    __slots__ = ("kind", "value", "c", "m", "order", "args")

    def __init__(self, kind, value=0.0, c=1.0, m=1, order=0, args=()):
        self.kind = kind
        self.value = complex(value)
        self.c = complex(c)
        self.m = int(m)
        self.order = int(order)
        self.args = args

    # -- constructors -------------------------------------------------
    @staticmethod
    def const(v):
        return ThetaExpr("const", value=v)

    @staticmethod
    def monomial(c=1.0, m=1):
        return ThetaExpr("monomial", c=c, m=m)

    @staticmethod
    def theta(c=1.0, m=1):
        return ThetaExpr("theta", c=c, m=m)

    @staticmethod
    def u(c=1.0, m=1):
        return ThetaExpr("u", c=c, m=m)

    @staticmethod
    def wp(c=1.0, m=1, order=0):
        return ThetaExpr("wp", c=c, m=m, order=order)

    @staticmethod
    def wp_const():
        return ThetaExpr("wpconst")

    @staticmethod
    def theta_prime_one():
        return ThetaExpr("tp1")

    # -- algebra -------------------------------------------------------
    def __add__(self, other):
        return ThetaExpr("add", args=(self, _wrap(other)))

    __radd__ = __add__

    def __neg__(self):
        return ThetaExpr("mul", args=(_wrap(-1.0), self))

    def __sub__(self, other):
        return self + (-_wrap(other))

    def __rsub__(self, other):
        return _wrap(other) + (-self)

    def __mul__(self, other):
        return ThetaExpr("mul", args=(self, _wrap(other)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ThetaExpr("div", args=(self, _wrap(other)))

    def __rtruediv__(self, other):
        return ThetaExpr("div", args=(_wrap(other), self))

    # -- Euler derivative ----------------------------------------------
    def euler(self):
        """Derivative t d/dt as a new expression."""
        k = self.kind
        if k in ("const", "wpconst", "tp1"):
            return ThetaExpr.const(0.0)
        if k == "monomial":
            return ThetaExpr("monomial", c=self.m * self.c, m=self.m)
        if k == "theta":
            return self.m * ThetaExpr.u(self.c, self.m) * self
        if k == "u":
            return self.m * (ThetaExpr.wp_const()
                             - ThetaExpr.wp(self.c, self.m))
        if k == "wp":
            return self.m * ThetaExpr.wp(self.c, self.m, self.order + 1)
        if k == "add":
            return self.args[0].euler() + self.args[1].euler()
        if k == "mul":
            a, b = self.args
            return a.euler() * b + a * b.euler()
        if k == "div":
            a, b = self.args
            return (a.euler() * b - a * b.euler()) / (b * b)
        raise ValueError("unknown node kind %r" % k)

    # -- evaluation ----------------------------------------------------
    def __call__(self, ctx, t):
        k = self.kind
        if k == "const":
            return self.value
        if k == "monomial":
            return self.c * t ** self.m
        if k == "theta":
            return ctx.theta(self.c * t ** self.m)
        if k == "u":
            return ctx.theta_ratio(self.c * t ** self.m)
        if k == "wp":
            arg = self.c * t ** self.m
            if self.order == 0:
                return ctx.wp(arg)
            return ctx.wp_deriv(arg, self.order)
        if k == "wpconst":
            return ctx.wp_const()
        if k == "tp1":
            return ctx.theta_prime_one()
        if k == "add":
            return self.args[0](ctx, t) + self.args[1](ctx, t)
        if k == "mul":
            return self.args[0](ctx, t) * self.args[1](ctx, t)
        if k == "div":
            return self.args[0](ctx, t) / self.args[1](ctx, t)
        raise ValueError("unknown node kind %r" % k)


def kernel_expr(c_t=1.0, m_t=1, x=1.0):
    """Theta kernel K(c t^m, x) = theta(c t^m x)/(theta(c t^m) theta(x))
    as an expression in t, with x a numeric parameter."""
    num = ThetaExpr.theta(c_t * x, m_t)
    den = ThetaExpr.theta(c_t, m_t) * ThetaExpr.theta(x, 0)
    return num / den


def sigma_expr(c_t=1.0, m_t=1, x=1.0):
    """theta'(1) K(c t^m, x) as an expression in t."""
    return ThetaExpr.theta_prime_one() * kernel_expr(c_t, m_t, x)


def euler_fd_residual(expr, ctx, t, h=1e-5):
    """O(h^2) check of the symbolic Euler derivative at a point."""
    exact = expr.euler()(ctx, t)
    plus = expr(ctx, t * (1.0 + h))
    minus = expr(ctx, t * (1.0 - h))
    approx = (plus - minus) / (2.0 * h)
    return abs(exact - approx)
