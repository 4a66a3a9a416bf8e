"""Polynomial algebra with the Moyal product.

Elements are Weyl symbols: commutative polynomials in ``x^0 .. x^{d-1}``
whose monomial ``x^alpha`` stands for the symmetrically ordered product of
the noncommuting generators.  The twisted product of two polynomials is the
finite sum

    f * g = sum_j (i/2)^j / j!  m((theta^{mu nu} d_mu (x) d_nu)^j f (x) g)

so ``x^mu * x^nu = x^mu x^nu + (i/2) theta^{mu nu}``.

Coefficients are exact Gaussian rationals (sympy's ``QQ_I``) by default and
complex floats when ``exact=False``.

Text syntax
-----------
::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '@' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' INT)?
    atom   := NUMBER | 'i' | 'x' INT | '(' expr ')' | '[' expr (',' expr)* ']'

``*`` is the commutative product of symbols, ``@`` the twisted product and
``[a, b, ...]`` the antisymmetrized twisted product; the last two need a
``theta``.  ``/`` divides by a constant.  Numbers may be integers, decimals
or written as ``p/q`` through division.
"""
from __future__ import annotations

import itertools
import math
import re
from fractions import Fraction

import numpy as np
from sympy.combinatorics import Permutation
from sympy.polys.domains import QQ, QQ_I
from sympy.polys.matrices import DomainMatrix

MAX_DETERMINANT_ORDER = 5

_ZERO = QQ_I.zero
_ONE = QQ_I.one
_HALF_I = QQ_I(0, QQ(1, 2))


def to_exact(v):
    """Convert a scalar to a Gaussian rational.

    Floats are read through their shortest decimal representation, so
    ``0.1`` becomes ``1/10``.
    """
    if isinstance(v, type(_ONE)):
        return v
    if isinstance(v, (bool, np.bool_)):
        raise TypeError("booleans are not coefficients")
    if isinstance(v, (int, np.integer)):
        return QQ_I(int(v), 0)
    if isinstance(v, Fraction):
        return QQ_I(QQ(v.numerator, v.denominator), 0)
    if isinstance(v, (float, np.floating)):
        fr = Fraction(repr(float(v)))
        return QQ_I(QQ(fr.numerator, fr.denominator), 0)
    if isinstance(v, (complex, np.complexfloating)):
        re_, im = to_exact(float(v.real)), to_exact(float(v.imag))
        return re_ + im * QQ_I(0, 1)
    try:
        return QQ_I.from_sympy(v)
    except Exception as exc:  # sympy raises several types here
        raise TypeError(f"cannot convert {v!r} to an exact coefficient") from exc


def _to_complex(c):
    if isinstance(c, type(_ONE)):
        return complex(float(c.x), float(c.y))
    return complex(c)


def _conj(c):
    if isinstance(c, type(_ONE)):
        return QQ_I(c.x, -c.y)
    return complex(c).conjugate()


def theta_exact(theta):
    """Exact antisymmetric matrix as nested lists of Gaussian rationals."""
    rows = [[to_exact(v) for v in row] for row in theta]
    d = len(rows)
    for mu in range(d):
        if len(rows[mu]) != d:
            raise ValueError("theta must be square")
        for nu in range(d):
            if rows[mu][nu] + rows[nu][mu]:
                raise ValueError("theta is not antisymmetric")
            if rows[mu][nu].y:
                raise ValueError("theta must be real")
    return rows


class NCPolynomial:
    """Weyl symbol polynomial ``sum_alpha c_alpha x^alpha``."""

    __slots__ = ("dim", "coeffs", "exact")

    def __init__(self, dim, coeffs=None, exact=True):
        self.dim = int(dim)
        self.exact = bool(exact)
        conv = to_exact if exact else complex
        clean = {}
        for alpha, c in (coeffs or {}).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.dim or min(alpha, default=0) < 0:
                raise ValueError(f"bad multi-index {alpha} for dimension {self.dim}")
            c = conv(c)
            if c:
                clean[alpha] = clean.get(alpha, _ZERO if exact else 0j) + c
        self.coeffs = {a: c for a, c in clean.items() if c}

    # -- constructors --------------------------------------------------------

    @classmethod
    def constant(cls, dim, value=1, exact=True):
        return cls(dim, {(0,) * dim: value}, exact)

    @classmethod
    def generator(cls, mu, dim=4, exact=True):
        alpha = [0] * dim
        alpha[mu] = 1
        return cls(dim, {tuple(alpha): 1}, exact)

    @classmethod
    def monomial(cls, alpha, coeff=1, exact=True):
        return cls(len(alpha), {tuple(alpha): coeff}, exact)

    @classmethod
    def random(cls, rng, dim, degree, n_terms=4, exact=True, max_int=5):
        """Random polynomial with Gaussian-integer coefficients and exact top degree."""
        alphas = [a for a in _multi_indices(dim, degree)]
        top = [a for a in alphas if sum(a) == degree]
        coeffs = {}
        chosen = [top[rng.integers(len(top))]]
        chosen += [alphas[i] for i in rng.integers(len(alphas), size=n_terms - 1)]
        for a in chosen:
            c = complex(rng.integers(-max_int, max_int + 1), rng.integers(-max_int, max_int + 1))
            if c == 0:
                c = 1
            coeffs[a] = coeffs.get(a, 0) + c
        if not any(sum(a) == degree and c for a, c in coeffs.items()):
            coeffs[chosen[0]] = 1
        return cls(dim, coeffs, exact)

    # -- basic structure -------------------------------------------------------

    @property
    def degree(self):
        """Total degree; ``-1`` for the zero polynomial."""
        return max((sum(a) for a in self.coeffs), default=-1)

    def is_zero(self):
        return not self.coeffs

    def is_constant(self):
        return all(sum(a) == 0 for a in self.coeffs)

    def constant_term(self):
        return self.coeffs.get((0,) * self.dim, _ZERO if self.exact else 0j)

    def top_part(self):
        deg = self.degree
        return NCPolynomial(self.dim, {a: c for a, c in self.coeffs.items() if sum(a) == deg}, self.exact)

    def to_float(self):
        return NCPolynomial(self.dim, {a: _to_complex(c) for a, c in self.coeffs.items()}, False)

    def conj(self):
        """Involution: conjugate every coefficient (the generators are self-adjoint)."""
        return NCPolynomial(self.dim, {a: _conj(c) for a, c in self.coeffs.items()}, self.exact)

    def _coerce(self, other):
        if isinstance(other, NCPolynomial):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            if self.exact and other.exact:
                return self, other
            return self.to_float(), other.to_float()
        return self, NCPolynomial.constant(self.dim, other, self.exact)

    def __add__(self, other):
        a, b = self._coerce(other)
        out = dict(a.coeffs)
        for k, c in b.coeffs.items():
            out[k] = out.get(k, _ZERO if a.exact else 0j) + c
        return NCPolynomial(a.dim, out, a.exact)

    __radd__ = __add__

    def __neg__(self):
        return NCPolynomial(self.dim, {k: -c for k, c in self.coeffs.items()}, self.exact)

    def __sub__(self, other):
        a, b = self._coerce(other)
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        """Commutative (pointwise) product of symbols, or scalar multiplication."""
        if not isinstance(other, NCPolynomial):
            s = to_exact(other) if self.exact else complex(other)
            return NCPolynomial(self.dim, {k: c * s for k, c in self.coeffs.items()}, self.exact)
        a, b = self._coerce(other)
        out = {}
        zero = _ZERO if a.exact else 0j
        for ka, ca in a.coeffs.items():
            for kb, cb in b.coeffs.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, zero) + ca * cb
        return NCPolynomial(a.dim, out, a.exact)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative powers are not polynomials")
        out = NCPolynomial.constant(self.dim, 1, self.exact)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, NCPolynomial):
            return (self - other).is_zero()
        return (self - other).is_zero()

    def __hash__(self):
        return hash((self.dim, frozenset((k, str(c)) for k, c in self.coeffs.items())))

    def max_abs_diff(self, other):
        diff = (self - other).to_float()
        return max((abs(c) for c in diff.coeffs.values()), default=0.0)

    def __repr__(self):
        return f"NCPolynomial({self.to_text()!r})"

    def to_text(self):
        if not self.coeffs:
            return "0"
        out = ""
        for alpha in sorted(self.coeffs, key=lambda a: (-sum(a), [-x for x in a])):
            mono = "*".join(
                f"x{mu}" if p == 1 else f"x{mu}^{p}" for mu, p in enumerate(alpha) if p
            )
            cs = _coeff_text(self.coeffs[alpha])
            neg = False
            if "+" not in cs and "-" not in cs[1:]:
                neg = cs.startswith("-")
                cs = cs.lstrip("-")
                body = mono if (cs == "1" and mono) else (f"{cs}*{mono}" if mono else cs)
            else:
                body = f"({cs})*{mono}" if mono else f"({cs})"
            if not out:
                out = "-" + body if neg else body
            else:
                out += (" - " if neg else " + ") + body
        return out


def _coeff_text(c):
    if isinstance(c, type(_ONE)):
        re_, im = Fraction(int(c.x.numerator), int(c.x.denominator)), Fraction(
            int(c.y.numerator), int(c.y.denominator)
        )
        if not im:
            return str(re_)
        ims = {1: "i", -1: "-i"}.get(im, f"{im}*i")
        if not re_:
            return ims
        return f"{re_}+{ims}" if im > 0 else f"{re_}-{ims[1:]}"
    return repr(complex(c))


def _multi_indices(dim, max_degree):
    for alpha in itertools.product(range(max_degree + 1), repeat=dim):
        if sum(alpha) <= max_degree:
            yield alpha


def _falling(n, k):
    out = 1
    for j in range(k):
        out *= n - j
    return out


def _derivative_table(poly, alphas):
    """``{alpha: d^alpha poly}`` as coefficient dicts."""
    out = {}
    for al in alphas:
        terms = {}
        for beta, c in poly.coeffs.items():
            if all(b >= a for a, b in zip(al, beta)):
                fac = 1
                for a, b in zip(al, beta):
                    fac *= _falling(b, a)
                key = tuple(b - a for a, b in zip(al, beta))
                terms[key] = c * fac
        out[al] = terms
    return out


def _bidifferential_terms(theta_rows, order, exact):
    """``{(alpha, beta): coeff}`` for ``(i/2)^j/j! (theta d (x) d)^j`` summed over ``j <= order``."""
    d = len(theta_rows)
    zero = _ZERO if exact else 0j
    pref_unit = _HALF_I if exact else 0.5j
    total = {((0,) * d, (0,) * d): _ONE if exact else 1.0 + 0j}
    layer = dict(total)
    for j in range(1, order + 1):
        nxt = {}
        for (al, be), c in layer.items():
            for mu in range(d):
                for nu in range(d):
                    t = theta_rows[mu][nu]
                    if not t:
                        continue
                    a2 = list(al)
                    b2 = list(be)
                    a2[mu] += 1
                    b2[nu] += 1
                    key = (tuple(a2), tuple(b2))
                    nxt[key] = nxt.get(key, zero) + c * t
        layer = {k: v for k, v in nxt.items() if v}
        if not layer:
            break
        scale = pref_unit**j * (QQ_I(QQ(1, math.factorial(j)), 0) if exact else 1.0 / math.factorial(j))
        for k, v in layer.items():
            total[k] = total.get(k, zero) + v * scale
    return total


def poly_star(f, g, theta):
    """Exact twisted product of two polynomials."""
    f, g = f._coerce(g)
    exact = f.exact
    if exact:
        rows = theta_exact(theta)
    else:
        th = np.asarray(theta, dtype=float)
        if np.max(np.abs(th + th.T), initial=0.0) > 0:
            raise ValueError("theta is not antisymmetric")
        rows = [[complex(v) for v in row] for row in th]
    if len(rows) != f.dim:
        raise ValueError("theta dimension does not match the polynomials")
    order = min(max(f.degree, 0), max(g.degree, 0))
    terms = _bidifferential_terms(rows, order, exact)
    df = _derivative_table(f, {al for al, _ in terms})
    dg = _derivative_table(g, {be for _, be in terms})
    zero = _ZERO if exact else 0j
    out = {}
    for (al, be), c in terms.items():
        fa, gb = df[al], dg[be]
        if not fa or not gb:
            continue
        for ka, ca in fa.items():
            for kb, cb in gb.items():
                k = tuple(x + y for x, y in zip(ka, kb))
                out[k] = out.get(k, zero) + c * ca * cb
    return NCPolynomial(f.dim, out, exact)


def star_power(f, n, theta):
    out = NCPolynomial.constant(f.dim, 1, f.exact)
    for _ in range(n):
        out = poly_star(out, f, theta)
    return out


def poly_commutator(f, g, theta):
    """``f * g - g * f``."""
    return poly_star(f, g, theta) - poly_star(g, f, theta)


def antisym_determinant(elements, theta, max_order=MAX_DETERMINANT_ORDER):
    """``sum_pi sign(pi) A_pi(1) * ... * A_pi(n)``."""
    elements = list(elements)
    n = len(elements)
    if n < 1:
        raise ValueError("need at least one element")
    if n > max_order:
        raise ValueError(f"determinant of order {n} exceeds the cap {max_order}")
    total = elements[0] * 0
    # share left prefixes of the permutation tree
    cache = {(): NCPolynomial.constant(elements[0].dim, 1, elements[0].exact)}
    for perm in itertools.permutations(range(n)):
        for j in range(1, n + 1):
            key = perm[:j]
            if key not in cache:
                cache[key] = poly_star(cache[perm[: j - 1]], elements[perm[j - 1]], theta)
        sign = Permutation(list(perm)).signature()
        total = total + cache[perm] * sign
    return total


def find_inverse(f, theta, max_degree):
    """Search for ``g`` with ``deg g <= max_degree`` and ``f * g = 1``.

    Returns ``(feasible, g_or_None, n_unknowns)`` from an exact linear solve
    over the coefficients of ``g``.
    """
    if not f.exact:
        f = NCPolynomial(f.dim, {k: to_exact(c) for k, c in f.coeffs.items()})
    basis = list(_multi_indices(f.dim, max_degree))
    images = [poly_star(f, NCPolynomial.monomial(b), theta) for b in basis]
    rows_keys = sorted({k for im in images for k in im.coeffs} | {(0,) * f.dim})
    index = {k: i for i, k in enumerate(rows_keys)}
    m, n = len(rows_keys), len(basis)
    A = [[_ZERO] * (n + 1) for _ in range(m)]
    for j, im in enumerate(images):
        for k, c in im.coeffs.items():
            A[index[k]][j] = c
    A[index[(0,) * f.dim]][n] = _ONE
    aug = DomainMatrix(A, (m, n + 1), QQ_I)
    coef = DomainMatrix([row[:n] for row in A], (m, n), QQ_I)
    if coef.rank() != aug.rank():
        return False, None, n
    rref, pivots = aug.rref()
    rows = rref.to_Matrix().tolist()
    sol = {}
    for r, p in enumerate(pivots):
        sol[basis[p]] = QQ_I.from_sympy(rows[r][n])
    return True, NCPolynomial(f.dim, sol), n


def degree_report(f, g, theta, inverse_search_degree=2):
    """Degree facts for ``f * g`` and the invertibility search for ``f``."""
    if f.is_zero() or g.is_zero():
        raise ValueError("degree report needs nonzero polynomials")
    fg = poly_star(f, g, theta)
    correction = fg - f * g
    report = {
        "deg_f": f.degree,
        "deg_g": g.degree,
        "deg_star": fg.degree,
        "additive": fg.degree == f.degree + g.degree,
        "deg_correction": correction.degree,
        "correction_lower": correction.degree < f.degree + g.degree,
    }
    if f.degree >= 1 and inverse_search_degree is not None:
        feasible, _, n = find_inverse(f, theta, inverse_search_degree)
        report["inverse_search_degree"] = inverse_search_degree
        report["inverse_unknowns"] = n
        report["inverse_feasible"] = feasible
    return report


# -- parser ---------------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\d+\.\d*|\.\d+|\d+)|(x)(\d+)|(i)|(\^|\*|@|/|\+|-|\(|\)|\[|\]|,))")


class ParseError(ValueError):
    pass


def _tokenize(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character at position {pos}: {text[pos:pos + 10]!r}")
        num, _, idx, imag, op = m.groups()
        if num is not None:
            out.append(("num", num))
        elif idx is not None:
            out.append(("gen", int(idx)))
        elif imag is not None:
            out.append(("i", "i"))
        else:
            out.append(("op", op))
        pos = m.end()
    out.append(("end", None))
    return out


class _Parser:
    def __init__(self, text, dim, theta, exact):
        self.toks = _tokenize(text)
        self.pos = 0
        self.dim = dim
        self.theta = theta
        self.exact = exact

    def peek(self):
        return self.toks[self.pos]

    def take(self, kind=None, value=None):
        tok = self.toks[self.pos]
        if (kind and tok[0] != kind) or (value and tok[1] != value):
            raise ParseError(f"expected {value or kind}, found {tok[1]!r}")
        self.pos += 1
        return tok

    def const(self, v):
        return NCPolynomial.constant(self.dim, v, self.exact)

    def need_theta(self, what):
        if self.theta is None:
            raise ParseError(f"{what} needs a commutator matrix")

    def expr(self):
        val = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            rhs = self.term()
            val = val + rhs if op == "+" else val - rhs
        return val

    def term(self):
        val = self.unary()
        while self.peek() in (("op", "*"), ("op", "@"), ("op", "/")):
            op = self.take()[1]
            rhs = self.unary()
            if op == "*":
                val = val * rhs
            elif op == "@":
                self.need_theta("'@'")
                val = poly_star(val, rhs, self.theta)
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise ParseError("division only by nonzero constants")
                c = rhs.constant_term()
                val = val * ((_ONE / c) if self.exact else 1.0 / c)
        return val

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            tok = self.take("num")
            if not tok[1].isdigit():
                raise ParseError("exponents must be non-negative integers")
            base = base ** int(tok[1])
        return base

    def atom(self):
        kind, val = self.peek()
        if kind == "num":
            self.take()
            return self.const(Fraction(val) if self.exact else float(val))
        if kind == "i":
            self.take()
            return self.const(1j)
        if kind == "gen":
            self.take()
            if val >= self.dim:
                raise ParseError(f"generator x{val} outside dimension {self.dim}")
            return NCPolynomial.generator(val, self.dim, self.exact)
        if (kind, val) == ("op", "("):
            self.take()
            inner = self.expr()
            self.take("op", ")")
            return inner
        if (kind, val) == ("op", "["):
            self.take()
            items = [self.expr()]
            while self.peek() == ("op", ","):
                self.take()
                items.append(self.expr())
            self.take("op", "]")
            self.need_theta("'[...]'")
            return antisym_determinant(items, self.theta)
        raise ParseError(f"unexpected token {val!r}")


def parse_polynomial(text, dim=4, theta=None, exact=True):
    """Parse the text syntax described in the module docstring."""
    p = _Parser(text, dim, theta, exact)
    val = p.expr()
    p.take("end")
    return val
