"""Exact algebra of finite sums r^c H(x) with H harmonic homogeneous.

Every function appearing in the pencil machinery is a finite sum of terms
r^c H(x) where c is a (possibly complex) exponent and H is a harmonic
homogeneous polynomial.  This ring is closed under the derivatives
D_i = -i d/dx_i and under multiplication by r^e P(x) for polynomial P,
because any homogeneous polynomial P of degree d decomposes uniquely as

    P = sum_j |x|^(2j) H_(d-2j),        Delta H_(d-2j) = 0,

which lets all radial content be pushed into the exponent.  Restriction to
the unit sphere is then trivial (drop r) and integration over S^(n-1) is
exact through closed-form monomial moments.

Only n in {2, 3} is supported; coefficients may be floats/complex or
fractions.Fraction (the harmonic basis is generated exactly over Q).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .errors import HomogeneityError

Monomial = tuple  # tuple[int, ...] of length n

_MERGE_TOL = 1e-9
_ZERO_TOL = 1e-14


# ---------------------------------------------------------------------------
# homogeneous polynomials
# ---------------------------------------------------------------------------

@dataclass
class HomogPoly:
    """Homogeneous polynomial as a monomial -> coefficient map."""

    n: int
    degree: int
    coeffs: dict = field(default_factory=dict)

    @staticmethod
    def constant(n, value=1.0):
        return HomogPoly(n, 0, {(0,) * n: value})

    @staticmethod
    def monomial(n, expo, value=1.0):
        expo = tuple(int(e) for e in expo)
        return HomogPoly(n, sum(expo), {expo: value})

    def is_zero(self):
        return not self.coeffs

    def copy(self):
        return HomogPoly(self.n, self.degree, dict(self.coeffs))

    def map_coeffs(self, fn):
        return HomogPoly(self.n, self.degree,
                         {m: fn(c) for m, c in self.coeffs.items()})

    def conjugate(self):
        return self.map_coeffs(_conj)

    def scale(self, s):
        if _is_zero_scalar(s):
            return HomogPoly(self.n, self.degree, {})
        return self.map_coeffs(lambda c: c * s)

    def add(self, other):
        if self.degree != other.degree and self.coeffs and other.coeffs:
            raise ValueError("degree mismatch in HomogPoly.add")
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            acc = out.get(m)
            acc = c if acc is None else acc + c
            if _is_zero_scalar(acc):
                out.pop(m, None)
            else:
                out[m] = acc
        return HomogPoly(self.n, max(self.degree, other.degree), out)

    def mul(self, other):
        out = {}
        for m1, c1 in self.coeffs.items():
            for m2, c2 in other.coeffs.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                acc = out.get(m)
                acc = c1 * c2 if acc is None else acc + c1 * c2
                if _is_zero_scalar(acc):
                    out.pop(m, None)
                else:
                    out[m] = acc
        return HomogPoly(self.n, self.degree + other.degree, out)

    def partial(self, i):
        """Plain d/dx_i (no -i factor)."""
        out = {}
        for m, c in self.coeffs.items():
            if m[i] == 0:
                continue
            mm = list(m)
            mm[i] -= 1
            out[tuple(mm)] = c * m[i]
        return HomogPoly(self.n, max(self.degree - 1, 0), out)

    def laplacian(self):
        out = HomogPoly(self.n, max(self.degree - 2, 0), {})
        for i in range(self.n):
            out = out.add(self.partial(i).partial(i))
        return out

    def times_r2(self):
        out = {}
        for m, c in self.coeffs.items():
            for i in range(self.n):
                mm = list(m)
                mm[i] += 2
                key = tuple(mm)
                acc = out.get(key)
                out[key] = c if acc is None else acc + c
        return HomogPoly(self.n, self.degree + 2, out)

    def evaluate(self, x):
        """Evaluate at a point (sequence of floats)."""
        total = 0.0
        for m, c in self.coeffs.items():
            v = c
            for xi, e in zip(x, m):
                if e:
                    v = v * xi ** e
            total = total + v
        return total

    def norm_inf(self):
        return max((abs(complex(c)) for c in self.coeffs.values()), default=0.0)

    def to_float(self):
        return self.map_coeffs(lambda c: complex(c))


def _conj(c):
    return c.conjugate() if isinstance(c, complex) else c


def _is_zero_scalar(c):
    return c == 0


# ---------------------------------------------------------------------------
# Gauss (harmonic) decomposition
# ---------------------------------------------------------------------------

def harmonic_decompose(P: HomogPoly):
    """Decompose P = sum_j |x|^(2j) H_(d-2j) into harmonic parts.

    Returns a list of (j, H) pairs with Delta H = 0, omitting zero parts.
    Exact over Fraction coefficients; uses the recursion obtained by
    applying the Laplacian:  Delta(|x|^(2j) H_e) = 2j(2j + 2e + n - 2)
    |x|^(2j-2) H_e.
    """
    d = P.degree
    n = P.n
    if P.is_zero():
        return []
    if d <= 1:
        return [(0, P)]
    Q = P.laplacian()
    if Q.is_zero():
        return [(0, P)]
    sub = dict(harmonic_decompose(Q))  # j' -> G_(d-2-2j')
    parts = []
    acc = HomogPoly(n, d, {})
    for jp, G in sub.items():
        j = jp + 1
        e = d - 2 * j
        c = 2 * j * (2 * j + 2 * e + n - 2)
        if isinstance(next(iter(G.coeffs.values())), Fraction):
            H = G.scale(Fraction(1, c))
        else:
            H = G.scale(1.0 / c)
        parts.append((j, H))
        r2H = H
        for _ in range(j):
            r2H = r2H.times_r2()
        acc = acc.add(r2H)
    H_top = P.add(acc.scale(-1))
    out = []
    if not H_top.is_zero():
        out.append((0, H_top))
    out.extend(sorted(parts))
    return out


# ---------------------------------------------------------------------------
# radial functions
# ---------------------------------------------------------------------------

@dataclass
class RadialFunction:
    """Finite sum of terms r^c H(x), H harmonic homogeneous.

    Terms are kept canonical: at most one term per (c, degree) pair, sorted
    by (degree, Re c, Im c).  Total homogeneity of a term is c + degree.
    """

    n: int
    terms: list = field(default_factory=list)  # list[(complex c, HomogPoly H)]

    @staticmethod
    def zero(n):
        return RadialFunction(n, [])

    @staticmethod
    def from_parts(n, parts):
        """Build from raw (c, poly) pairs; polys need not be harmonic."""
        raw = []
        for c, P in parts:
            if P.is_zero():
                continue
            for j, H in harmonic_decompose(P):
                raw.append((complex(c) + 2 * j, H.to_float()))
        return RadialFunction(n, _merge(raw))

    def is_zero(self):
        return not self.terms

    def scale(self, s):
        if _is_zero_scalar(s):
            return RadialFunction(self.n, [])
        return RadialFunction(self.n, [(c, H.scale(s)) for c, H in self.terms])

    def add(self, other):
        return RadialFunction(self.n, _merge(list(self.terms) + list(other.terms)))

    def shift_exponent(self, delta):
        return RadialFunction(self.n, _merge([(c + delta, H) for c, H in self.terms]))

    def conjugate(self):
        return RadialFunction(
            self.n, _merge([(complex(c).conjugate(), H.conjugate()) for c, H in self.terms]))

    def homogeneities(self):
        return [c + H.degree for c, H in self.terms]

    def max_abs_coeff(self):
        return max((H.norm_inf() for _, H in self.terms), default=0.0)

    def prune(self, eps):
        scale = self.max_abs_coeff()
        if scale == 0.0:
            return RadialFunction(self.n, [])
        out = [(c, H) for c, H in self.terms if H.norm_inf() > eps * scale]
        return RadialFunction(self.n, out)

    def prune_abs(self, eps):
        return RadialFunction(self.n, [(c, H) for c, H in self.terms
                                       if H.norm_inf() > eps])


def _merge(raw):
    raw = [(complex(c), H) for c, H in raw if not H.is_zero()]
    raw.sort(key=lambda t: (t[1].degree, t[0].real, t[0].imag))
    merged = []
    for c, H in raw:
        if merged:
            c0, H0 = merged[-1]
            if H0.degree == H.degree and abs(c - c0) <= _MERGE_TOL:
                merged[-1] = (c0, H0.add(H))
                continue
        merged.append((c, H.copy()))
    return [(c, H) for c, H in merged if not H.is_zero() and H.norm_inf() > 0.0]


def differentiate(f: RadialFunction, i: int) -> RadialFunction:
    """Apply D_i = -i d/dx_i term-wise and re-canonicalize.

    D_i(r^c H) = -i (c x_i r^(c-2) H + r^c dH/dx_i); the x_i H product is
    re-expanded through harmonic_decompose.
    """
    n = f.n
    raw = []
    for c, H in f.terms:
        if c != 0:
            xiH = HomogPoly.monomial(n, tuple(1 if a == i else 0 for a in range(n))).mul(H)
            for j, G in harmonic_decompose(xiH):
                raw.append((c - 2 + 2 * j, G.scale(-1j * c)))
        dH = H.partial(i)
        if not dH.is_zero():
            raw.append((c, dH.scale(-1j)))
    return RadialFunction(n, _merge(raw))


def multiply_coeff(f: RadialFunction, coeff) -> RadialFunction:
    """Multiply by r^(coeff.radial_exponent) * coeff.poly and re-canonicalize.

    `coeff` is any object with `radial_exponent` and `poly` attributes
    (the operator layer's principal coefficient terms); a declared
    perturbation is rejected since only principal parts live in this ring.
    """
    if getattr(coeff, "perturbation", None) is not None:
        raise ValueError("multiply_coeff takes principal coefficients only")
    return multiply_power_poly(f, coeff.radial_exponent, coeff.poly)


def multiply_power_poly(f: RadialFunction, radial_exponent, poly: HomogPoly) -> RadialFunction:
    raw = []
    for c, H in f.terms:
        prod = poly.to_float().mul(H)
        for j, G in harmonic_decompose(prod):
            raw.append((c + radial_exponent + 2 * j, G))
    return RadialFunction(f.n, _merge(raw))


# ---------------------------------------------------------------------------
# exact sphere moments and inner products
# ---------------------------------------------------------------------------

def _double_factorial(k: int) -> int:
    if k <= 0:
        return 1
    out = 1
    while k > 1:
        out *= k
        k -= 2
    return out


@lru_cache(maxsize=None)
def _moment_fraction(alpha: Monomial) -> Fraction:
    """Moment divided by the full surface measure factor (4*pi or 2*pi)."""
    if any(a % 2 for a in alpha):
        return Fraction(0)
    n = len(alpha)
    num = 1
    for a in alpha:
        num *= _double_factorial(a - 1)
    den = _double_factorial(sum(alpha) + n - 2)
    return Fraction(num, den)


def surface_measure(n: int) -> float:
    return 4.0 * math.pi if n == 3 else 2.0 * math.pi


def sphere_monomial_moment(alpha) -> float:
    """Exact integral of x^alpha over the unit sphere S^(n-1), n = len(alpha).

    Zero whenever some entry of alpha is odd; otherwise a rational multiple
    of the sphere surface area (2*pi for n=2, 4*pi for n=3).
    """
    alpha = tuple(int(a) for a in alpha)
    n = len(alpha)
    if n not in (2, 3):
        raise ValueError("only n in {2, 3} supported")
    return surface_measure(n) * float(_moment_fraction(alpha))


def poly_sphere_inner(P: HomogPoly, Q: HomogPoly) -> complex:
    """Integral over S^(n-1) of P * conj(Q), exact via monomial moments."""
    total = 0.0
    for m1, c1 in P.coeffs.items():
        for m2, c2 in Q.coeffs.items():
            mom = sphere_monomial_moment(tuple(a + b for a, b in zip(m1, m2)))
            if mom != 0.0:
                total = total + complex(c1) * complex(c2).conjugate() * mom
    return complex(total)


def sphere_inner_product(f: RadialFunction, g: RadialFunction) -> complex:
    """L^2(S^(n-1)) pairing of two degree-zero-homogeneous functions."""
    for h in list(f.homogeneities()) + list(g.homogeneities()):
        if abs(h) > 1e-10:
            raise HomogeneityError(
                f"sphere_inner_product needs total homogeneity 0, got {h}")
    total = 0.0 + 0.0j
    for _, H1 in f.terms:
        for _, H2 in g.terms:
            total += poly_sphere_inner(H1, H2)
    return total


# ---------------------------------------------------------------------------
# orthonormal harmonic basis (sector-structured solid harmonics)
# ---------------------------------------------------------------------------

def _solid_harmonic_pair(l: int, m: int):
    """Real/imaginary parts of (x+iy)^m W(z, r^2) for n=3, exact over Q.

    W = sum_j c_j z^(l-m-2j) r^(2j) with the two-term recursion
    c_(j+1) = -c_j a(a-1) / (2(j+1)(2l-2j-1)),  a = l - m - 2j,
    which makes (x+iy)^m W harmonic of degree l.
    """
    n = 3
    re = {}
    im = {}
    for j in range(m + 1):
        coef = Fraction(math.comb(m, j))
        mono = (m - j, j, 0)
        s = j % 4
        if s == 0:
            re[mono] = re.get(mono, Fraction(0)) + coef
        elif s == 1:
            im[mono] = im.get(mono, Fraction(0)) + coef
        elif s == 2:
            re[mono] = re.get(mono, Fraction(0)) - coef
        else:
            im[mono] = im.get(mono, Fraction(0)) - coef
    re_p = HomogPoly(n, m, {k: v for k, v in re.items() if v != 0})
    im_p = HomogPoly(n, m, {k: v for k, v in im.items() if v != 0})

    W = HomogPoly(n, l - m, {})
    c = Fraction(1)
    j = 0
    while True:
        a = l - m - 2 * j
        zpow = HomogPoly.monomial(n, (0, 0, a), c)
        term = zpow
        for _ in range(j):
            term = term.times_r2()
        W = W.add(term)
        if a <= 1:
            break
        c = -c * a * (a - 1) / (2 * (j + 1) * (2 * l - 2 * j - 1))
        c = Fraction(c)
        j += 1
    return re_p.mul(W), im_p.mul(W)


@lru_cache(maxsize=None)
def harmonic_basis(n: int, l: int):
    """Orthonormal basis of degree-l harmonics on S^(n-1) as HomogPolys.

    Built from sector-structured solid harmonics (exactly orthogonal by
    angular parity) and normalized with exact moments; coefficients are
    returned as floats.  Ordering is deterministic: m ascending, cosine
    part before sine part.
    """
    if n == 2:
        if l == 0:
            polys = [HomogPoly.constant(2, Fraction(1))]
        else:
            re = {}
            im = {}
            for j in range(l + 1):
                coef = Fraction(math.comb(l, j))
                mono = (l - j, j)
                s = j % 4
                if s == 0:
                    re[mono] = coef
                elif s == 1:
                    im[mono] = coef
                elif s == 2:
                    re[mono] = -coef
                else:
                    im[mono] = -coef
            polys = [HomogPoly(2, l, re), HomogPoly(2, l, im)]
    elif n == 3:
        polys = []
        for m in range(l + 1):
            re_p, im_p = _solid_harmonic_pair(l, m)
            polys.append(re_p)
            if m > 0:
                polys.append(im_p)
    else:
        raise ValueError("only n in {2, 3} supported")

    out = []
    for P in polys:
        if P.is_zero():
            continue
        nrm2 = poly_sphere_inner(P.to_float(), P.to_float()).real
        out.append(P.to_float().scale(1.0 / math.sqrt(nrm2)))
    return tuple(out)


def harmonic_dim(n: int, l: int) -> int:
    if n == 2:
        return 1 if l == 0 else 2
    return 2 * l + 1
