"""Fredholm index bookkeeping: combinatorial formulas, anchors and ledgers.

The index of the operator between weighted spaces is constant between
critical weight lines and drops by the total algebraic multiplicity of
the line when the weight crosses it upward.  For operators whose
principal part has homogeneous constant coefficients the index equals an
explicit combinatorial step function built from

    poly_dim(n, beta) = dim of polynomials of degree <= beta in n vars
                      = (l + n)! / (n! l!)   for beta in [l, l+1), 0 if < 0,

summed over the order vectors.  All combinatorics use exact integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import AnchorOnBreakpoint, NoAnchor, NotApplicable, OnBreakpoint
from .operator_ast import (
    SystemOperator,
    is_formally_self_adjoint,
    is_homogeneous_cc,
    principal_part,
)

_BREAK_TOL = 1e-9


def pn(n: int, beta: float) -> int:
    """Dimension of the space of polynomials of degree <= beta in n variables.

    Floor semantics: the value on [l, l+1) is (l+n)!/(n! l!); zero for
    beta < 0.  Exact integer arithmetic.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if beta < 0:
        return 0
    l = math.floor(beta)
    return math.factorial(l + n) // (math.factorial(n) * math.factorial(l))


def pn_mu_nu(n: int, mu, nu, beta: float) -> int:
    """Index step function: sum_i pn(n,-beta+mu_i) - pn(n,-beta+nu_i)
    - pn(n,beta-nu_i-n) + pn(n,beta-mu_i-n)."""
    total = 0
    for mi, ni in zip(mu, nu):
        total += (pn(n, -beta + mi) - pn(n, -beta + ni)
                  - pn(n, beta - ni - n) + pn(n, beta - mi - n))
    return total


def cc_index(op: SystemOperator, beta: float) -> int:
    """Index of op between weight-beta spaces via the combinatorial formula.

    Applies whenever the principal part is a homogeneous constant
    coefficient operator (the full operator may carry admissible
    perturbations).
    """
    if not is_homogeneous_cc(principal_part(op)):
        raise NotApplicable("principal part is not homogeneous constant-coefficient")
    if abs(beta - round(beta)) < _BREAK_TOL:
        raise OnBreakpoint(f"beta = {beta} is within tolerance of an integer")
    return pn_mu_nu(op.n, op.mu, op.nu, beta)


def special_index(n: int, k: int, m: int, beta: float) -> int:
    """Closed form for nu = 0, mu = (m,...,m) with m in {1, 2}:

        -k/(n-1)! * (l - 1)            * prod_(j=2..n-1) |l - j|   (m = 1)
        -k/(n-1)! * (2l - n - 1)       * prod_(j=2..n-1) |l - j|   (m = 2)

    with l = floor(beta); empty products are 1 (n = 2).
    """
    if m not in (1, 2):
        raise ValueError("closed form requires m in {1, 2}")
    if n < 2:
        raise ValueError("n must be >= 2")
    if abs(beta - round(beta)) < _BREAK_TOL:
        raise OnBreakpoint(f"beta = {beta} is within tolerance of an integer")
    l = math.floor(beta)
    prod = 1
    for j in range(2, n):
        prod *= abs(l - j)
    lead = (l - 1) if m == 1 else (2 * l - n - 1)
    val = Fraction(-k * lead * prod, math.factorial(n - 1))
    assert val.denominator == 1
    return int(val)


# ---------------------------------------------------------------------------
# ledger
# ---------------------------------------------------------------------------

@dataclass
class Anchor:
    kind: str                   # 'cc' | 'selfadjoint' | 'user'
    beta0: float | None = None
    index0: int | None = None


@dataclass
class IndexLedger:
    beta_min: float
    beta_max: float
    breakpoints: list           # sorted [(beta, multiplicity)]
    anchor: tuple               # (beta0, index0, provenance)
    values: list                # [(left, right, index)] per component

    def index_at(self, beta: float) -> int:
        if not (self.beta_min <= beta <= self.beta_max):
            raise NotApplicable(
                f"beta = {beta} outside the computed window "
                f"[{self.beta_min}, {self.beta_max}]")
        for b, _ in self.breakpoints:
            if abs(beta - b) < _BREAK_TOL:
                raise OnBreakpoint(f"beta = {beta} sits on a critical line")
        for left, right, idx in self.values:
            if left <= beta <= right:
                return idx
        raise NotApplicable(f"no component contains beta = {beta}")

    def to_json(self):
        return {
            "window": [self.beta_min, self.beta_max],
            "breakpoints": [[b, m] for b, m in self.breakpoints],
            "anchor": {"beta0": self.anchor[0], "index0": self.anchor[1],
                       "provenance": self.anchor[2]},
            "components": [{"left": l, "right": r, "index": i}
                           for l, r, i in self.values],
        }

    def to_csv(self):
        rows = ["beta_left,beta_right,index"]
        for l, r, i in self.values:
            rows.append(f"{l:.12g},{r:.12g},{i}")
        return "\n".join(rows) + "\n"


def build_ledger(report, anchor: Anchor) -> IndexLedger:
    """Propagate the index from an anchor across the report's critical lines.

    The index drops by the line's total algebraic multiplicity when beta
    crosses it upward.  Anchors: 'cc' uses the combinatorial formula,
    'selfadjoint' uses the symmetry of the index about (n+m)/2, 'user'
    supplies (beta0, index0) directly.  The ledger never extends past the
    report window.
    """
    op = report.op
    beta_min, beta_max = report.beta1, report.beta2
    breaks = sorted((line, mult) for line, mult in report.res_lines.items())

    def off_breaks(b):
        return all(abs(b - line) > _BREAK_TOL for line, _ in breaks)

    provenance = anchor.kind
    if anchor.kind == "cc":
        if not is_homogeneous_cc(principal_part(op)):
            raise NoAnchor("cc anchor requires a homogeneous cc principal part")
        beta0 = anchor.beta0
        if beta0 is None:
            beta0 = _widest_component_midpoint(beta_min, beta_max, breaks)
        index0 = cc_index(op, beta0)
    elif anchor.kind == "selfadjoint":
        if not is_formally_self_adjoint(op):
            raise NoAnchor("operator is not formally self-adjoint")
        center = (op.n + op.m) / 2.0
        if not (beta_min <= center <= beta_max):
            raise NoAnchor(f"center {(op.n + op.m) / 2} outside report window")
        if off_breaks(center):
            beta0, index0 = center, 0
        else:
            # occupied center line of multiplicity 2d: index is +-d nearby
            mult = next(m for line, m in breaks if abs(line - center) <= _BREAK_TOL)
            if mult % 2:
                raise NoAnchor("center-line multiplicity is odd; not self-adjoint data")
            gaps = [abs(line - center) for line, _ in breaks
                    if abs(line - center) > _BREAK_TOL]
            eps = (min(gaps) if gaps else min(center - beta_min, beta_max - center)) / 2
            beta0, index0 = center + eps, -mult // 2
    elif anchor.kind == "user":
        if anchor.beta0 is None or anchor.index0 is None:
            raise NoAnchor("user anchor needs beta0 and index0")
        beta0, index0 = anchor.beta0, anchor.index0
    else:
        raise NoAnchor(f"unknown anchor kind {anchor.kind!r}")

    if not (beta_min <= beta0 <= beta_max):
        raise NoAnchor(f"anchor beta0 = {beta0} outside the report window")
    if not off_breaks(beta0):
        raise AnchorOnBreakpoint(f"anchor beta0 = {beta0} sits on a critical line")

    edges = [beta_min] + [b for b, _ in breaks] + [beta_max]
    comps = [(a, b) for a, b in zip(edges[:-1], edges[1:]) if b - a > _BREAK_TOL]
    anchor_comp = next(i for i, (a, b) in enumerate(comps) if a <= beta0 <= b)
    values = [None] * len(comps)
    values[anchor_comp] = index0
    # walking right across a line of multiplicity m decreases the index by m
    for i in range(anchor_comp + 1, len(comps)):
        line_mult = next(m for b, m in breaks if abs(b - comps[i][0]) <= _BREAK_TOL)
        values[i] = values[i - 1] - line_mult
    for i in range(anchor_comp - 1, -1, -1):
        line_mult = next(m for b, m in breaks if abs(b - comps[i][1]) <= _BREAK_TOL)
        values[i] = values[i + 1] + line_mult

    return IndexLedger(beta_min, beta_max, breaks, (beta0, index0, provenance),
                       [(a, b, v) for (a, b), v in zip(comps, values)])


def _widest_component_midpoint(beta_min, beta_max, breaks):
    edges = [beta_min] + [b for b, _ in breaks] + [beta_max]
    comps = [(a, b) for a, b in zip(edges[:-1], edges[1:])]
    a, b = max(comps, key=lambda c: c[1] - c[0])
    mid = (a + b) / 2.0
    if abs(mid - round(mid)) < 1e-6:  # keep clear of integers for cc_index
        mid += min(0.25, (b - a) / 4.0)
    return mid


# ---------------------------------------------------------------------------
# adjoint reflection check
# ---------------------------------------------------------------------------

@dataclass
class AdjointResReport:
    passed: bool
    n_plus_m: int
    matched: list               # [(line_A, line_Astar, mult)]
    failures: list              # human-readable strings

    def to_json(self):
        return {"passed": self.passed, "n_plus_m": self.n_plus_m,
                "matched": self.matched, "failures": self.failures}


def adjoint_res_check(res_a: dict, res_astar: dict, n: int, m: int,
                      tol: float = 1e-7) -> AdjointResReport:
    """Check Res(A*) == (n+m) - Res(A) with equal multiplicities."""
    failures = []
    matched = []
    remaining = dict(res_astar)
    for line, mult in sorted(res_a.items()):
        target = (n + m) - line
        hit = next((l for l in remaining if abs(l - target) < tol), None)
        if hit is None:
            failures.append(f"no reflected line for {line:.9g} -> {target:.9g}")
            continue
        if remaining[hit] != mult:
            failures.append(
                f"multiplicity mismatch at {line:.9g}: {mult} vs {remaining[hit]}")
        matched.append((line, hit, mult))
        remaining.pop(hit)
    for l, m_ in remaining.items():
        failures.append(f"unmatched adjoint line {l:.9g} (mult {m_})")
    return AdjointResReport(not failures, n + m, matched, failures)
