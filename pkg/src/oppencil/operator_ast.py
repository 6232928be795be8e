"""Operator specifications: parsing, validation and symbolic manipulation.

A system operator is a k x k grid of scalar differential operators with
Douglis-Nirenberg orders (mu, nu): entry (i, j) has order mu_j - nu_i and
is zero whenever that is negative.  Scalar entries are sums of terms

    coeff(x) * D^alpha,      D_i = -i d/dx_i,

where each principal coefficient is r^e * P(x) with P a homogeneous
polynomial subject to e + deg P = |alpha| - order (so that the coefficient
restricted to the unit sphere is a genuine sphere polynomial), plus an
optional declared perturbation living in the weighted_norms expression
ring.  Principal coefficients are canonicalized into harmonic components,
which makes structural equality, adjoint involution and round-tripping
exact.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AdjointOrderViolation,
    BadDNOrders,
    OrderMismatch,
    SchemaError,
)
from .radial_algebra import HomogPoly, RadialFunction
from .weighted_norms import Expr

_COEFF_TOL = 1e-12


def validate_multi_index(alpha, n) -> tuple:
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n:
        raise SchemaError(f"multi-index length {len(alpha)} != dimension {n}")
    if any(a < 0 for a in alpha):
        raise SchemaError(f"negative multi-index entry in {alpha}")
    return alpha


@dataclass
class CoeffTerm:
    """One coefficient r^radial_exponent * poly (+ optional perturbation)."""

    radial_exponent: float
    poly: HomogPoly
    perturbation: Expr | None = None

    def conjugate(self):
        return CoeffTerm(self.radial_exponent, self.poly.conjugate(),
                         None if self.perturbation is None else self.perturbation.conjugate())


@dataclass
class ScalarOperator:
    """Scalar operator sum_terms coeff * D^alpha of declared order `order`."""

    n: int
    order: int
    terms: list = field(default_factory=list)  # list[(alpha, CoeffTerm)]

    def is_zero(self):
        return not self.terms

    def max_poly_degree(self):
        return max((t.poly.degree for _, t in self.terms), default=0)

    def has_perturbation(self):
        return any(t.perturbation is not None and not t.perturbation.is_zero()
                   for _, t in self.terms)


@dataclass
class SystemOperator:
    """k x k system with DN orders; entries[i][j] is ScalarOperator or None."""

    n: int
    k: int
    mu: tuple
    nu: tuple
    entries: list  # k x k nested list

    @property
    def m(self) -> int:
        return max(self.mu)

    def entry(self, i, j):
        return self.entries[i][j]

    def max_poly_degree(self):
        return max((e.max_poly_degree() for row in self.entries for e in row
                    if e is not None), default=0)

    def fingerprint(self) -> str:
        doc = json.dumps(serialize_operator(self), sort_keys=True)
        return hashlib.sha256(doc.encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, SystemOperator):
            return NotImplemented
        return serialize_operator(canonicalize(self)) == serialize_operator(canonicalize(other))


@dataclass
class EllipticityReport:
    elliptic: bool
    min_ratio: float
    witness: tuple  # (x, xi)
    threshold: float

    def to_json(self):
        return {"elliptic": self.elliptic, "min_ratio": self.min_ratio,
                "witness_x": list(self.witness[0]), "witness_xi": list(self.witness[1]),
                "threshold": self.threshold}


@dataclass
class DecayReport:
    passed: bool
    beta: float
    radii: list
    sequences: dict  # alpha -> list of sup values
    tolerance: float

    def to_json(self):
        return {"passed": self.passed, "beta": self.beta, "radii": self.radii,
                "tolerance": self.tolerance,
                "sequences": {" ".join(map(str, a)): s for a, s in self.sequences.items()}}


# ---------------------------------------------------------------------------
# parsing / serialization
# ---------------------------------------------------------------------------

def _parse_poly(doc, n):
    coeffs = {}
    if not isinstance(doc, dict) or not doc:
        raise SchemaError("poly must be a non-empty monomial map")
    degree = None
    for key, val in doc.items():
        expo = tuple(int(e) for e in key.split())
        if len(expo) != n or any(e < 0 for e in expo):
            raise SchemaError(f"bad monomial key {key!r}")
        if degree is None:
            degree = sum(expo)
        elif sum(expo) != degree:
            raise SchemaError("poly is not homogeneous of a single degree")
        if not (isinstance(val, (list, tuple)) and len(val) == 2):
            raise SchemaError(f"monomial value must be [re, im], got {val!r}")
        c = complex(float(val[0]), float(val[1]))
        if c != 0:
            coeffs[expo] = c
    # an all-zero poly is legal only as the carrier of a perturbation
    return HomogPoly(n, degree, coeffs)


def parse_operator(doc) -> SystemOperator:
    """Parse and validate an operator-spec document (dict or JSON string)."""
    if isinstance(doc, (str, bytes)):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError("operator document must be a JSON object")
    allowed = {"n", "k", "mu", "nu", "entries"}
    unknown = set(doc) - allowed
    if unknown:
        raise SchemaError(f"unknown operator keys: {sorted(unknown)}")
    try:
        n = int(doc["n"])
        k = int(doc["k"])
        mu = tuple(int(v) for v in doc["mu"])
        nu = tuple(int(v) for v in doc["nu"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"missing or malformed header field: {exc}") from exc
    if n not in (2, 3):
        raise SchemaError(f"ambient dimension n={n} not supported (only 2 and 3)")
    if k < 1 or len(mu) != k or len(nu) != k:
        raise SchemaError("mu/nu must have length k >= 1")
    if any(v < 0 for v in mu) or any(v < 0 for v in nu):
        raise BadDNOrders("mu and nu must be non-negative")
    if min(nu) != 0:
        raise BadDNOrders(f"min(nu) must be 0, got {min(nu)}")

    entries = [[None] * k for _ in range(k)]
    for ent in doc.get("entries", []):
        if set(ent) - {"i", "j", "terms"}:
            raise SchemaError(f"unknown entry keys: {sorted(set(ent) - {'i', 'j', 'terms'})}")
        i, j = int(ent["i"]), int(ent["j"])
        if not (0 <= i < k and 0 <= j < k):
            raise SchemaError(f"entry index ({i},{j}) out of range")
        if entries[i][j] is not None:
            raise SchemaError(f"duplicate entry ({i},{j})")
        order = mu[j] - nu[i]
        if order < 0:
            raise BadDNOrders(
                f"nonzero entry ({i},{j}) where mu_j - nu_i = {order} < 0")
        terms = []
        for t in ent["terms"]:
            if set(t) - {"alpha", "radial_exponent", "poly", "perturbation"}:
                raise SchemaError(
                    f"unknown term keys: {sorted(set(t) - {'alpha', 'radial_exponent', 'poly', 'perturbation'})}")
            alpha = validate_multi_index(t["alpha"], n)
            if sum(alpha) > order:
                raise OrderMismatch(
                    f"|alpha|={sum(alpha)} exceeds entry order {order} at ({i},{j})")
            poly = _parse_poly(t["poly"], n)
            e = float(t.get("radial_exponent", 0))
            if abs(e + poly.degree - (sum(alpha) - order)) > 1e-12:
                raise OrderMismatch(
                    f"radial_exponent + deg poly = {e + poly.degree} != |alpha| - order "
                    f"= {sum(alpha) - order} at ({i},{j}), alpha={alpha}")
            pert = t.get("perturbation")
            pert = None if pert is None else Expr.from_json(pert, n)
            terms.append((alpha, CoeffTerm(e, poly, pert)))
        if terms:
            entries[i][j] = ScalarOperator(n, order, terms)
    op = SystemOperator(n, k, mu, nu, entries)
    return canonicalize(op)


def serialize_operator(op: SystemOperator) -> dict:
    ents = []
    for i in range(op.k):
        for j in range(op.k):
            e = op.entries[i][j]
            if e is None or e.is_zero():
                continue
            terms = []
            for alpha, t in e.terms:
                poly_doc = {" ".join(str(a) for a in m): [c.real, c.imag]
                            for m, c in sorted(t.poly.to_float().coeffs.items())}
                if not poly_doc:  # zero principal carrying a perturbation
                    poly_doc = {" ".join(["0"] * op.n): [0.0, 0.0]}
                item = {
                    "alpha": list(alpha),
                    "radial_exponent": t.radial_exponent,
                    "poly": poly_doc,
                }
                if t.perturbation is not None and not t.perturbation.is_zero():
                    item["perturbation"] = t.perturbation.to_json()
                terms.append(item)
            ents.append({"i": i, "j": j, "terms": terms})
    return {"n": op.n, "k": op.k, "mu": list(op.mu), "nu": list(op.nu),
            "entries": ents}


def canonicalize(op: SystemOperator) -> SystemOperator:
    """Split coefficients into harmonic components, merge and sort terms."""
    entries = [[None] * op.k for _ in range(op.k)]
    for i in range(op.k):
        for j in range(op.k):
            e = op.entries[i][j]
            if e is None or e.is_zero():
                continue
            by_alpha = {}
            perts = {}
            scale = max((t.poly.norm_inf() for _, t in e.terms), default=0.0)
            for alpha, t in e.terms:
                rf = by_alpha.setdefault(alpha, RadialFunction.zero(op.n))
                by_alpha[alpha] = rf.add(RadialFunction.from_parts(
                    op.n, [(complex(t.radial_exponent), t.poly.to_float())]))
                if t.perturbation is not None and not t.perturbation.is_zero():
                    acc = perts.get(alpha)
                    perts[alpha] = t.perturbation if acc is None else acc + t.perturbation
            terms = []
            for alpha in sorted(by_alpha):
                rf = by_alpha[alpha].prune_abs(_COEFF_TOL * max(scale, 1e-300))
                pert = perts.get(alpha)
                parts = sorted(rf.terms, key=lambda t: t[1].degree)
                if not parts and pert is not None:
                    # keep a structural zero principal so the perturbation survives
                    terms.append((alpha, CoeffTerm(float(sum(alpha) - e.order),
                                                   HomogPoly(op.n, 0, {}), pert)))
                    continue
                for idx, (c, H) in enumerate(parts):
                    if abs(c.imag) > 1e-12:
                        raise SchemaError("complex radial exponent in principal coefficient")
                    terms.append((alpha, CoeffTerm(c.real, H,
                                                   pert if idx == 0 else None)))
            if terms:
                entries[i][j] = ScalarOperator(op.n, e.order, terms)
    return SystemOperator(op.n, op.k, op.mu, op.nu, entries)


# ---------------------------------------------------------------------------
# ellipticity
# ---------------------------------------------------------------------------

def _fibonacci_sphere(count):
    golden = (1 + 5 ** 0.5) / 2
    idx = np.arange(count)
    z = 1 - (2 * idx + 1) / count
    theta = 2 * math.pi * idx / golden
    s = np.sqrt(1 - z * z)
    return np.stack([s * np.cos(theta), s * np.sin(theta), z], axis=1)


def _sphere_samples(n, count):
    if n == 2:
        t = np.linspace(0, 2 * math.pi, count, endpoint=False)
        pts = np.stack([np.cos(t), np.sin(t)], axis=1)
    else:
        pts = _fibonacci_sphere(count)
    axes = np.concatenate([np.eye(n), -np.eye(n)], axis=0)
    return np.concatenate([axes, pts], axis=0)


def _poly_eval_array(P: HomogPoly, pts):
    out = np.zeros(pts.shape[0], dtype=complex)
    for m, c in P.coeffs.items():
        term = np.full(pts.shape[0], complex(c))
        for i, e in enumerate(m):
            if e:
                term = term * pts[:, i] ** e
        out += term
    return out


def principal_symbol_matrix(op: SystemOperator, x, xi):
    """k x k matrices of top-order symbols at paired rows of x and xi."""
    x = np.asarray(x, float)
    xi = np.asarray(xi, float)
    N = x.shape[0]
    r = np.linalg.norm(x, axis=1)
    mat = np.zeros((N, op.k, op.k), dtype=complex)
    for i in range(op.k):
        for j in range(op.k):
            e = op.entries[i][j]
            if e is None:
                continue
            for alpha, t in e.terms:
                if sum(alpha) != e.order or t.poly.is_zero():
                    continue
                coeff = _poly_eval_array(t.poly, x) * r ** t.radial_exponent
                mono = np.ones(N)
                for ax, a in enumerate(alpha):
                    if a:
                        mono = mono * xi[:, ax] ** a
                mat[:, i, j] += coeff * mono
    return mat


def check_ellipticity(op: SystemOperator, xi_samples: int = 2000,
                      x_samples: int = 500, threshold: float = 1e-9,
                      threads: int = 1) -> EllipticityReport:
    """Sample |det of the principal symbol| over unit-sphere grids.

    Principal coefficients are positively homogeneous of degree zero in x,
    so sampling x on the unit sphere covers all of R^n minus the origin;
    declared perturbations never enter.  min_ratio is |det|/|xi|^Sigma with
    |xi| = 1 on the grid.  Work is chunked over x with a fixed chunk size
    and reduced in chunk order, so the result is independent of `threads`.
    """
    xs = _sphere_samples(op.n, x_samples)
    xis = _sphere_samples(op.n, xi_samples)
    mono_cache = {}
    coeff_entries = []  # (i, j, alpha, poly values on xs)
    for i in range(op.k):
        for j in range(op.k):
            e = op.entries[i][j]
            if e is None:
                continue
            for alpha, t in e.terms:
                if sum(alpha) != e.order or t.poly.is_zero():
                    continue
                if alpha not in mono_cache:
                    mono = np.ones(xis.shape[0])
                    for ax, a in enumerate(alpha):
                        if a:
                            mono = mono * xis[:, ax] ** a
                    mono_cache[alpha] = mono
                coeff_entries.append((i, j, alpha, _poly_eval_array(t.poly, xs)))

    def chunk_min(idx_range):
        lo, hi = idx_range
        best = math.inf
        wit = (tuple(xs[lo]), tuple(xis[0]))
        mats = np.zeros((hi - lo, xis.shape[0], op.k, op.k), dtype=complex)
        for i, j, alpha, vals in coeff_entries:
            mats[:, :, i, j] += vals[lo:hi, None] * mono_cache[alpha][None, :]
        dets = np.abs(np.linalg.det(mats))
        flat = int(np.argmin(dets))
        xi_idx = flat % xis.shape[0]
        x_idx = lo + flat // xis.shape[0]
        return float(dets.reshape(-1)[flat]), (tuple(xs[x_idx]), tuple(xis[xi_idx]))

    chunk = 64
    ranges = [(lo, min(lo + chunk, xs.shape[0])) for lo in range(0, xs.shape[0], chunk)]
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(chunk_min, ranges))
    else:
        results = [chunk_min(r) for r in ranges]
    best, witness = math.inf, (tuple(xs[0]), tuple(xis[0]))
    for val, wit in results:
        if val < best:
            best, witness = val, wit
    return EllipticityReport(bool(best > threshold), best, witness, threshold)


# ---------------------------------------------------------------------------
# structural operations
# ---------------------------------------------------------------------------

def principal_part(op: SystemOperator) -> SystemOperator:
    """Drop every declared perturbation; the result is the model operator."""
    entries = [[None] * op.k for _ in range(op.k)]
    for i in range(op.k):
        for j in range(op.k):
            e = op.entries[i][j]
            if e is None:
                continue
            terms = [(alpha, CoeffTerm(t.radial_exponent, t.poly, None))
                     for alpha, t in e.terms if t.poly.norm_inf() > 0]
            if terms:
                entries[i][j] = ScalarOperator(op.n, e.order, terms)
    return canonicalize(SystemOperator(op.n, op.k, op.mu, op.nu, entries))


def is_homogeneous_cc(op: SystemOperator) -> bool:
    """True iff every principal term is constant-coefficient of exact order."""
    for i in range(op.k):
        for j in range(op.k):
            e = op.entries[i][j]
            if e is None:
                continue
            for alpha, t in e.terms:
                if t.perturbation is not None and not t.perturbation.is_zero():
                    return False
                if t.poly.norm_inf() == 0:
                    continue
                if t.poly.degree != 0 or sum(alpha) != e.order:
                    return False
    return True


def _leibniz_adjoint_scalar(e: ScalarOperator, n: int, order: int):
    """Formal adjoint of a scalar operator via (c D^alpha)* = sum_(g<=a)
    binom(a,g) D^(a-g)(conj c) D^g; returns {gamma: (RadialFunction, Expr)}."""
    from .radial_algebra import differentiate

    acc_rf = {}
    acc_pert = {}
    for alpha, t in e.terms:
        conj_rf = RadialFunction.from_parts(
            n, [(complex(t.radial_exponent), t.poly.conjugate().to_float())])
        conj_pert = None if t.perturbation is None else t.perturbation.conjugate()
        gammas = _sub_multi_indices(alpha)
        for gamma in gammas:
            rem = tuple(a - g for a, g in zip(alpha, gamma))
            binom = 1
            for a, g in zip(alpha, gamma):
                binom *= math.comb(a, g)
            rf = conj_rf
            pert = conj_pert
            for i, cnt in enumerate(rem):
                for _ in range(cnt):
                    rf = differentiate(rf, i)
                    pert = None if pert is None else pert.differentiate(i)
            if not rf.is_zero():
                cur = acc_rf.setdefault(gamma, RadialFunction.zero(n))
                acc_rf[gamma] = cur.add(rf.scale(binom))
            if pert is not None and not pert.is_zero():
                cur = acc_pert.get(gamma)
                scaled = pert.scale(binom)
                acc_pert[gamma] = scaled if cur is None else cur + scaled
    return acc_rf, acc_pert


def _sub_multi_indices(alpha):
    out = [()]
    for a in alpha:
        out = [g + (v,) for g in out for v in range(a + 1)]
    return out


def formal_adjoint(op: SystemOperator) -> SystemOperator:
    """Formal adjoint with orders mu*_i = m - nu_i, nu*_i = m - mu_i."""
    m = op.m
    mu_star = tuple(m - v for v in op.nu)
    nu_star = tuple(m - v for v in op.mu)
    if min(mu_star) < 0:
        raise AdjointOrderViolation("max(nu) > m; some adjoint row would vanish")
    entries = [[None] * op.k for _ in range(op.k)]
    for i in range(op.k):
        for j in range(op.k):
            src = op.entries[j][i]
            if src is None or src.is_zero():
                continue
            order = mu_star[j] - nu_star[i]  # == mu_i - nu_j == src.order
            acc_rf, acc_pert = _leibniz_adjoint_scalar(src, op.n, order)
            scale = max((t.poly.norm_inf() for _, t in src.terms), default=0.0)
            terms = []
            for gamma in sorted(set(acc_rf) | set(acc_pert)):
                rf = acc_rf.get(gamma, RadialFunction.zero(op.n))
                rf = rf.prune_abs(_COEFF_TOL * max(scale, 1e-300))
                pert = acc_pert.get(gamma)
                parts = sorted(rf.terms, key=lambda t: t[1].degree)
                if not parts:
                    if pert is not None and not pert.is_zero():
                        terms.append((gamma, CoeffTerm(float(sum(gamma) - order),
                                                       HomogPoly(op.n, 0, {}), pert)))
                    continue
                for idx, (c, H) in enumerate(parts):
                    terms.append((gamma, CoeffTerm(c.real, H,
                                                   pert if idx == 0 else None)))
            if terms:
                entries[i][j] = ScalarOperator(op.n, order, terms)
    return canonicalize(SystemOperator(op.n, op.k, mu_star, nu_star, entries))


def is_formally_self_adjoint(op: SystemOperator) -> bool:
    """Structural equality of op and its formal adjoint after canonicalization."""
    try:
        adj = formal_adjoint(op)
    except AdjointOrderViolation:
        return False
    return serialize_operator(canonicalize(op)) == serialize_operator(adj)


# ---------------------------------------------------------------------------
# symbol-class decay check
# ---------------------------------------------------------------------------

def check_symbol_class(f: Expr, beta: float, tail_radii=(2.0, 8.0, 32.0, 128.0),
                       max_order: int = 2, tolerance: float = 0.1,
                       sphere_points: int = 64) -> DecayReport:
    """Numerical test that D^alpha f = o(|x|^(-beta-|alpha|)) for |alpha| <= max_order.

    For each derivative the sup of |x|^(beta+|alpha|) |D^alpha f| over a
    sphere grid is evaluated at each tail radius; the report passes iff
    every sequence is non-increasing and ends below `tolerance`.
    """
    radii = [float(r) for r in tail_radii]
    if sorted(radii) != radii or any(r < 1 for r in radii):
        raise ValueError("tail_radii must be increasing and >= 1")
    from .weighted_norms import _multi_indices

    n = f.n
    pts, _ = _grid_for_decay(n, sphere_points)
    sequences = {}
    passed = True
    for alpha in _multi_indices(n, max_order):
        df = f.derivative(alpha)
        seq = []
        for r in radii:
            if df.is_zero():
                seq.append(0.0)
                continue
            vals = np.abs(df.evaluate(pts * r))
            seq.append(float(r ** (beta + sum(alpha)) * np.max(vals)))
        sequences[alpha] = seq
        non_increasing = all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(seq, seq[1:]))
        if not (non_increasing and seq[-1] < tolerance):
            passed = False
    return DecayReport(passed, beta, radii, sequences, tolerance)


def _grid_for_decay(n, count):
    if n == 2:
        t = np.linspace(0, 2 * math.pi, count, endpoint=False)
        return np.stack([np.cos(t), np.sin(t)], axis=1), None
    return _fibonacci_sphere(count), None
