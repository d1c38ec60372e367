"""Matrix Lie algebras, sl2 irreducibles and tensor-product site operators.

Provides orthonormal bases of sl_n / gl_n with respect to the trace form
tr(XY), finite-dimensional irreducible representations of sl2 in exact
integer arithmetic, and tensor products of such representations with the
usual embedding X -> 1 x ... x X x ... x 1 at a chosen site.
"""

import numpy as np


class MatrixAlgebra:
    """sl_n or gl_n with elementary units and an orthonormal basis.

    The basis is orthonormal for the symmetric bilinear form <X, Y> = tr(XY)
    (complex-bilinear, not hermitian).  It consists of the symmetrized and
    antisymmetrized off-diagonal units plus an orthonormal set of traceless
    diagonal matrices; for gl_n the identity over sqrt(n) is appended.
    """

    def __init__(self, n, kind="sl"):
        if n < 2:
            raise ValueError("need n >= 2")
        if kind not in ("sl", "gl"):
            raise ValueError("kind must be 'sl' or 'gl'")
        self.n = n
        self.kind = kind

    def unit(self, a, b):
        """Elementary matrix unit e_ab (zero-based indices)."""
        m = np.zeros((self.n, self.n), dtype=complex)
        m[a, b] = 1.0
        return m

    def basis(self):
        """Orthonormal basis for the trace form tr(XY)."""
        n = self.n
        out = []
        s = 1.0 / np.sqrt(2.0)
        for a in range(n):
            for b in range(a + 1, n):
                out.append(s * (self.unit(a, b) + self.unit(b, a)))
                out.append((self.unit(a, b) - self.unit(b, a)) / (1j * np.sqrt(2.0)))
        for k in range(1, n):
            d = np.zeros((n, n), dtype=complex)
            for a in range(k):
                d[a, a] = 1.0
            d[k, k] = -k
            out.append(d / np.sqrt(k * (k + 1)))
        if self.kind == "gl":
            out.append(np.eye(n, dtype=complex) / np.sqrt(n))
        return out

    def dim(self):
        return self.n * self.n - (1 if self.kind == "sl" else 0)

    def split_casimir(self):
        """Sum over the basis of e_a (x) e_a as an n^2 x n^2 matrix.

        Equals the flip operator P for gl_n, and P - I/n for sl_n.
        """
        n = self.n
        total = np.zeros((n * n, n * n), dtype=complex)
        for e in self.basis():
            total += np.kron(e, e)
        return total

    def flip(self):
        """The permutation operator P(v (x) w) = w (x) v on C^n (x) C^n."""
        n = self.n
        p = np.zeros((n * n, n * n))
        for a in range(n):
            for b in range(n):
                p[a * n + b, b * n + a] = 1.0
        return p


def sl2_irrep(lam):
    """Irreducible sl2 representation of highest weight lam (dimension lam+1).

    Returns a dict with integer matrices 'e', 'f', 'h' acting on the basis
    v_0, ..., v_lam with h v_k = (lam - 2k) v_k, f v_k = (k+1) v_{k+1},
    e v_k = (lam - k + 1) v_{k-1}.  All commutation relations hold exactly.
    """
    if lam < 0 or lam != int(lam):
        raise ValueError("highest weight must be a nonnegative integer")
    lam = int(lam)
    d = lam + 1
    e = np.zeros((d, d), dtype=np.int64)
    f = np.zeros((d, d), dtype=np.int64)
    h = np.zeros((d, d), dtype=np.int64)
    for k in range(d):
        h[k, k] = lam - 2 * k
        if k + 1 < d:
            f[k + 1, k] = k + 1
            e[k, k + 1] = lam - k
    return {"e": e, "f": f, "h": h, "dim": d, "weight": lam}


def casimir_sl2(rep):
    """Quadratic Casimir e f + f e + h^2 / 2 of an sl2 representation.

    For the irreducible of highest weight lam this is lam(lam+2)/2 times
    the identity.
    """
    e, f, h = rep["e"], rep["f"], rep["h"]
    return e @ f + f @ e + (h @ h) / 2.0


class TensorRepSpace:
    """Tensor product of representations with site-operator embedding.

    Constructed either from a list of sl2 highest weights, or (via the
    `defining` classmethod) as N copies of the defining representation
    of gl_n.  Sites are numbered starting from 1.
    """

    def __init__(self, weights):
        self.reps = [sl2_irrep(w) for w in weights]
        self.site_dims = [r["dim"] for r in self.reps]
        self.dim = int(np.prod(self.site_dims))
        self.nsites = len(self.site_dims)

    @classmethod
    def defining(cls, n, nsites):
        obj = cls.__new__(cls)
        obj.reps = None
        obj.site_dims = [n] * nsites
        obj.dim = n ** nsites
        obj.nsites = nsites
        return obj

    def site_operator(self, x, i):
        """Embed the matrix x at site i (1-based): 1 x ... x X x ... x 1."""
        if not 1 <= i <= self.nsites:
            raise ValueError("site index out of range")
        x = np.asarray(x)
        if x.shape != (self.site_dims[i - 1],) * 2:
            raise ValueError("operator shape does not match site dimension")
        out = np.eye(1, dtype=x.dtype if x.dtype == complex else complex)
        for j, d in enumerate(self.site_dims, start=1):
            out = np.kron(out, x if j == i else np.eye(d))
        return out

    def generator(self, name, i):
        """Site operator for one of the sl2 generators 'e', 'f', 'h'."""
        if self.reps is None:
            raise ValueError("no sl2 structure on a defining-rep space")
        return self.site_operator(self.reps[i - 1][name].astype(float), i)

    def total(self, name):
        """Sum over all sites of one sl2 generator."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for i in range(1, self.nsites + 1):
            out += self.generator(name, i)
        return out

    def weight_zero_projector(self):
        """Orthogonal projector onto the kernel of the total h."""
        htot = np.real(np.diag(self.total("h"))).round().astype(int)
        proj = np.zeros((self.dim, self.dim))
        for k, w in enumerate(htot):
            if w == 0:
                proj[k, k] = 1.0
        return proj
