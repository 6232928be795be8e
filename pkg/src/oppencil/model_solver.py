"""Per-spherical-mode solves of the model problem along weight lines.

After separating a spherical mode, the model equation on the cylinder
reduces to a constant-coefficient ODE system b(D_t) u = f (b = the mode
block of the pencil, D_t = -i d/dt).  Off the mode eigenvalue lines the
inverse is a Fourier multiplier along Im lambda = beta:

    u = e^(-beta t) F^(-1)[ b(sigma + i beta)^(-1) F[e^(beta t) f] ].

Moving the line across eigenvalues changes the solution by a sum of
power-exponential solutions.  This module computes that difference three
ways and reports their mutual deviations:

  1. two line solves, subtracted;
  2. residue calculus on b(lambda)^(-1) fhat(lambda) e^(i lambda t)
     (Laurent coefficients by FFT on circles around the poles);
  3. the coefficient pairing  c_(j,m) = <f, i v_(j,m)>  against the
     biorthogonal adjoint chains, reconstructed through the chain basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooShort, LineTooClose, PoleOnLine
from .pencil import PencilMatrices
from .spectrum import (
    _companion_eigenvalues,
    chains_from_matrices,
    cluster_eigenvalues,
    normalize_biorthogonal,
)

_LINE_TOL = 1e-6
_DECAY_TOL = 1e-12
_GRID_N = 4096


# ---------------------------------------------------------------------------
# mode pencils
# ---------------------------------------------------------------------------

@dataclass
class ModePencil:
    """One harmonic-degree block of a pencil: b(lam) = sum blocks[j] lam^j."""

    l: int
    blocks: list

    @property
    def size(self):
        return self.blocks[0].shape[0]

    @property
    def m(self):
        return len(self.blocks) - 1

    def eval(self, lam):
        out = self.blocks[-1].copy()
        for j in range(len(self.blocks) - 2, -1, -1):
            out = out * lam + self.blocks[j]
        return out

    def taylor(self, s, lam0):
        out = np.zeros_like(self.blocks[0])
        for p in range(s, self.m + 1):
            out = out + math.comb(p, s) * self.blocks[p] * lam0 ** (p - s)
        return out

    def eigenvalues(self):
        return _companion_eigenvalues(self.blocks)

    def scale(self):
        return max(float(np.linalg.norm(b, np.inf)) for b in self.blocks)


def mode_pencil(P: PencilMatrices, l: int, reduce_scalar: bool = True) -> ModePencil:
    """Extract the degree-l block of a (block-diagonal) pencil.

    For constant-coefficient scalar operators the block is a scalar
    multiple of the identity and is reduced to size 1.
    """
    degs = P.degrees_vector()
    idx = np.where(degs == l)[0]
    blocks = [Bj[np.ix_(idx, idx)] for Bj in P.B]
    scale = max(float(np.linalg.norm(b, np.inf)) for b in blocks) or 1.0
    # verify the block is actually decoupled from the rest
    for Bj in P.B:
        off = Bj[np.ix_(idx, np.setdiff1d(np.arange(P.size), idx))]
        if np.max(np.abs(off), initial=0.0) > 1e-10 * scale:
            raise ValueError(f"degree {l} block is coupled; no mode reduction")
    if reduce_scalar and blocks[0].shape[0] > 1:
        if all(np.max(np.abs(b - b[0, 0] * np.eye(b.shape[0]))) < 1e-10 * scale
               for b in blocks):
            blocks = [b[:1, :1] for b in blocks]
    return ModePencil(l, blocks)


# ---------------------------------------------------------------------------
# grids and transforms
# ---------------------------------------------------------------------------

def choose_grid(f, betas, n_points: int = _GRID_N, min_T: float = 0.0):
    """Uniform grid [-T, T] such that e^(beta t) f decays below 1e-12.

    `min_T` lets callers enforce extra length so that slowly decaying
    weighted solutions (rate = distance from the line to the nearest mode
    eigenvalue) also die out at the grid ends.
    """
    T = max(6.0, min_T)
    while T <= 160.0:
        n = n_points if T <= 60 else 2 * n_points
        t = np.linspace(-T, T, n, endpoint=False)
        vals = np.asarray(f(t))
        ok = True
        for beta in betas:
            w = np.abs(np.exp(beta * t) * vals.T).T
            edge = max(float(np.max(w[:8])), float(np.max(w[-8:])))
            if edge > _DECAY_TOL * max(float(np.max(w)), 1e-300):
                ok = False
                break
        if ok:
            return t, vals
        T *= 1.4
    raise GridTooShort("could not find a grid with weighted decay below 1e-12")


def _check_grid(t, fvals, beta):
    fv = np.asarray(fvals)
    if fv.ndim == 1:
        fv = fv[:, None]
    w = np.abs(np.exp(beta * t)[:, None] * fv)
    edge = max(float(np.max(w[:8])), float(np.max(w[-8:])))
    if edge > _DECAY_TOL * max(float(np.max(w)), 1e-300):
        raise GridTooShort(
            f"weighted data does not decay below 1e-12 at the ends (beta={beta})")


@dataclass
class LineSolution:
    beta: float
    t: np.ndarray
    u: np.ndarray            # shape (N,) scalar mode or (N, q) block
    ode_residual: float


def solve_on_line(mp: ModePencil, f, beta: float, t=None) -> LineSolution:
    """Invert b(D_t) u = f along the weight line Im lambda = beta.

    `f` is either a callable or an array of samples on the uniform grid
    `t`; samples must decay (weighted) below 1e-12 at both grid ends.
    """
    poles = mp.eigenvalues()
    gap = min((abs(p.imag - beta) for p in poles), default=math.inf)
    if gap < _LINE_TOL:
        raise LineTooClose(f"line beta={beta} within {gap:.2e} of a mode eigenvalue")
    if t is None:
        if not callable(f):
            raise ValueError("provide t when passing raw samples")
        # the weighted solution decays only at rate `gap`, so the periodic
        # transform needs a grid long enough for that tail to vanish
        t, fvals = choose_grid(f, [beta], min_T=30.0 / max(min(gap, 4.0), 0.25))
    else:
        fvals = np.asarray(f(t)) if callable(f) else np.asarray(f)
    q = mp.size
    fvals = fvals if fvals.ndim > 1 else (fvals[:, None] if q == 1 else fvals)
    if fvals.shape != (len(t), q):
        raise ValueError(f"f samples must have shape ({len(t)}, {q})")
    _check_grid(t, fvals[:, 0] if q == 1 else fvals, beta)

    dt = t[1] - t[0]
    sigma = 2 * math.pi * np.fft.fftfreq(len(t), d=dt)
    g = np.exp(beta * t)[:, None] * fvals
    ghat = np.fft.fft(g, axis=0)
    if q == 1:
        bvals = _polyval_blocks(mp, sigma + 1j * beta)[:, 0, 0]
        what = ghat[:, 0] / bvals
        w = np.fft.ifft(what)
        u = (np.exp(-beta * t) * w)[:, None]
    else:
        mats = _polyval_blocks(mp, sigma + 1j * beta)
        what = np.linalg.solve(mats, ghat[..., None])[..., 0]
        u = np.exp(-beta * t)[:, None] * np.fft.ifft(what, axis=0)

    res = ode_residual(mp, u, fvals, t, beta)
    return LineSolution(beta, t, u if q > 1 else u[:, 0], res)


def _polyval_blocks(mp: ModePencil, lams):
    lams = np.asarray(lams, dtype=complex)
    q = mp.size
    out = np.zeros(lams.shape + (q, q), dtype=complex)
    out[:] = mp.blocks[-1]
    for j in range(len(mp.blocks) - 2, -1, -1):
        out = out * lams[..., None, None] + mp.blocks[j]
    return out


def ode_residual(mp: ModePencil, u, fvals, t, beta) -> float:
    """Relative residual of b(D_t) u = f via an independently weighted path.

    Applies the multiplier at a shifted weight (kept inside the same
    eigenvalue gap and scaled to the grid length so the exponential
    reweighting does not amplify edge round-off), comparing against f in
    the weighted L^2 norm; this does not simply invert the solve.
    """
    u = np.atleast_2d(u.T).T
    fvals = np.atleast_2d(fvals.T).T
    poles = mp.eigenvalues()
    T = float(-t[0])
    delta = min(0.25, 4.0 / max(T, 1.0))
    for cand in (beta + delta, beta - delta, beta + delta / 4, beta - delta / 4):
        if all(not (min(beta, cand) - 1e-9 <= p.imag <= max(beta, cand) + 1e-9)
               for p in poles):
            beta_c = cand
            break
    else:
        beta_c = beta
    w = np.exp(beta_c * t)[:, None] * u
    sigma = 2 * math.pi * np.fft.fftfreq(len(t), d=t[1] - t[0])
    mats = _polyval_blocks(mp, sigma + 1j * beta_c)
    bw = (mats @ np.fft.fft(w, axis=0)[..., None])[..., 0]
    lhs = np.fft.ifft(bw, axis=0)
    rhs = np.exp(beta_c * t)[:, None] * fvals
    # the reweighting amplifies edge round-off exponentially; compare where
    # the residual is meaningful
    mask = np.abs(t) <= T / 2
    num = float(np.max(np.abs((lhs - rhs)[mask])))
    den = float(np.max(np.abs(rhs))) or 1.0
    return num / den


# ---------------------------------------------------------------------------
# line-difference expansion
# ---------------------------------------------------------------------------

@dataclass
class ExpansionCoefficient:
    lambda0: complex
    j: int
    m: int
    value: complex

    def to_json(self):
        return {"lambda0": [self.lambda0.real, self.lambda0.imag],
                "j": self.j, "m": self.m,
                "value": [self.value.real, self.value.imag]}


@dataclass
class ModeEigenData:
    lambda0: complex
    partial: list
    chains: list
    adjoint_chains: list
    biorth_residual: float


@dataclass
class ExpansionResult:
    t: np.ndarray
    beta1: float
    beta2: float
    diff_solve: np.ndarray
    diff_residue: np.ndarray
    diff_coeff: np.ndarray
    coeffs_direct: list       # ExpansionCoefficient, from the pairing formula
    coeffs_residue: list      # ExpansionCoefficient, from Laurent data
    eigendata: list           # ModeEigenData per pole
    deviations: dict

    def to_json(self):
        return {
            "beta1": self.beta1, "beta2": self.beta2,
            "deviations": self.deviations,
            "coeffs_direct": [c.to_json() for c in self.coeffs_direct],
            "coeffs_residue": [c.to_json() for c in self.coeffs_residue],
            "poles": [[d.lambda0.real, d.lambda0.imag] for d in self.eigendata],
        }


def _fhat_at(t, fvals, lam):
    """Continuous Fourier transform integral f^(lam) = int f e^(-i lam t) dt."""
    dt = t[1] - t[0]
    ker = np.exp(-1j * np.multiply.outer(np.asarray(lam, complex), t))
    return dt * (ker @ fvals)


def _laurent_coefficients(mp, t, fvals, lam0, radius, max_order, nodes=128):
    """Laurent coefficients a_(-1-s), s = 0..max_order-1, of
    b(lam)^(-1) fhat(lam) at lam0, by FFT on a circle."""
    thetas = 2 * math.pi * np.arange(nodes) / nodes
    lams = lam0 + radius * np.exp(1j * thetas)
    fh = _fhat_at(t, fvals, lams)
    mats = _polyval_blocks(mp, lams)
    g = np.linalg.solve(mats, fh[..., None])[..., 0]   # (nodes, q)
    coeffs = np.fft.fft(g, axis=0) / nodes              # c_j r^j for j >= 0 ...
    out = []
    for s in range(max_order):
        # coefficient of (lam-lam0)^(-1-s) is the e^(+i(1+s)theta) Fourier mode
        out.append(coeffs[-(1 + s) % nodes] * radius ** (1 + s))
    return out


def line_difference_expansion(mp: ModePencil, f, beta1: float, beta2: float,
                              t=None) -> ExpansionResult:
    """Compare the two line solves against the residue/coefficient expansions.

    Returns the solve difference, the residue-calculus reconstruction, the
    coefficient-formula reconstruction (c_(j,m) = <f, i v_(j,m)> against
    biorthogonal adjoint chains), both coefficient sets, and their mutual
    deviations (max-norm, relative to the difference magnitude).
    """
    if beta1 >= beta2:
        raise ValueError("need beta1 < beta2")
    poles = mp.eigenvalues()
    for b in (beta1, beta2):
        if min((abs(p.imag - b) for p in poles), default=math.inf) < _LINE_TOL:
            raise PoleOnLine(f"mode eigenvalue on the line Im lambda = {b}")
    if t is None:
        if not callable(f):
            raise ValueError("provide t when passing raw samples")
        # weighted solutions decay at rate gap = dist(line, nearest pole);
        # the grid must be long enough for that tail to die out too
        gap = min((abs(p.imag - b) for p in poles for b in (beta1, beta2)),
                  default=1.0)
        t, _ = choose_grid(f, [beta1, beta2], min_T=30.0 / max(gap, 0.25))
    sol1 = solve_on_line(mp, f, beta1, t)
    sol2 = solve_on_line(mp, f, beta2, t)
    q = mp.size
    fvals = np.asarray(f(t)) if callable(f) else np.asarray(f)
    fvals = fvals if fvals.ndim > 1 else (fvals[:, None] if q == 1 else fvals)
    u1 = np.atleast_2d(sol1.u.T).T
    u2 = np.atleast_2d(sol2.u.T).T
    diff_solve = u1 - u2

    strip_poles = [p for p in poles if beta1 < p.imag < beta2]
    clusters = cluster_eigenvalues(strip_poles)
    all_centers = [c for c, _ in cluster_eigenvalues(poles)]

    diff_residue = np.zeros_like(diff_solve)
    diff_coeff = np.zeros_like(diff_solve)
    coeffs_direct = []
    coeffs_residue = []
    eigendata = []
    scale = mp.scale()

    for lam0, _count in clusters:
        iso = min([abs(c - lam0) for c in all_centers if abs(c - lam0) > 1e-8]
                  + [lam0.imag - beta1, beta2 - lam0.imag])
        radius = max(min(0.45 * iso, 0.5), 1e-4)

        # chains of the mode pencil at lam0
        T_s = lambda s, lam0=lam0: mp.taylor(s, lam0) if s <= mp.m else \
            np.zeros_like(mp.blocks[0])
        sc = scale * max(1.0, abs(lam0)) ** mp.m
        J, partial, chains, _res = chains_from_matrices(T_s, q, q, sc)
        psis, biorth_res, _cres = normalize_biorthogonal(
            T_s, chains, np.arange(q), q, sc)
        M_total = sum(partial)
        eigendata.append(ModeEigenData(lam0, partial, chains, psis, biorth_res))

        # residue route: the two line integrals differ by the counterclockwise
        # strip contour, so diff = i * sum of residues of b^(-1) fhat e^(i lam t)
        laurent = _laurent_coefficients(mp, t, fvals, lam0, radius,
                                        max_order=max(partial))
        for s, a in enumerate(laurent):
            diff_residue += 1j * np.exp(1j * lam0 * t)[:, None] * \
                ((1j * t) ** s / math.factorial(s))[:, None] * a[None, :]

        # coefficient formula route: c_(j,m) = i <f, v_(j,m)> with the
        # sesquilinear cylinder pairing (the i sits outside the pairing;
        # cross-validated against the solve difference and the residues)
        dt = t[1] - t[0]
        for j, chain in enumerate(chains):
            Mj = len(chain)
            for mm in range(Mj):
                v = np.zeros((len(t), q), dtype=complex)
                for l in range(mm + 1):
                    v += ((1j * t) ** l / math.factorial(l))[:, None] * \
                        psis[j][mm - l][None, :q]
                v = np.exp(1j * np.conj(lam0) * t)[:, None] * v
                c = 1j * dt * np.sum(fvals * np.conj(v))
                coeffs_direct.append(ExpansionCoefficient(lam0, j, mm, complex(c)))

        # reconstruct from the direct coefficients
        for ec in coeffs_direct:
            if ec.lambda0 != lam0:
                continue
            chain = chains[ec.j]
            Mj = len(chain)
            target = Mj - 1 - ec.m
            for l in range(target + 1):
                diff_coeff += ec.value * \
                    ((1j * t) ** l / math.factorial(l))[:, None] * \
                    (np.exp(1j * lam0 * t)[:, None] * chain[target - l][None, :q])

        # residue-derived coefficients: match the (it)^s/s! polynomial data,
        # sum_(j,m) c_(j,m) phi_(j, Mj-1-m-s) = i a_(-1-s)
        cols = [(j, mm) for j, ch in enumerate(chains) for mm in range(len(ch))]
        A = np.zeros((len(laurent) * q, len(cols)), dtype=complex)
        bvec = 1j * np.concatenate([a for a in laurent])
        for cidx, (j, mm) in enumerate(cols):
            chain = chains[j]
            for s in range(len(laurent)):
                pos = len(chain) - 1 - mm - s
                if 0 <= pos < len(chain):
                    A[s * q:(s + 1) * q, cidx] = chain[pos][:q]
        sol, *_ = np.linalg.lstsq(A, bvec, rcond=None)
        for cidx, (j, mm) in enumerate(cols):
            coeffs_residue.append(ExpansionCoefficient(lam0, j, mm, complex(sol[cidx])))

    # compare on the central window: near the grid ends the solves carry
    # exponentially reweighted round-off while the true difference itself is
    # exponentially large, so the honest comparison region is |t| <= T/2
    mask = np.abs(t) <= float(-t[0]) / 2
    ref = float(np.max(np.abs(diff_solve[mask]))) or 1.0

    def dev(a, b):
        return float(np.max(np.abs((a - b)[mask]))) / ref

    deviations = {
        "solve_vs_residue": dev(diff_solve, diff_residue),
        "solve_vs_coeff": dev(diff_solve, diff_coeff),
        "residue_vs_coeff": dev(diff_residue, diff_coeff),
    }
    return ExpansionResult(t, beta1, beta2, diff_solve, diff_residue, diff_coeff,
                           coeffs_direct, coeffs_residue, eigendata, deviations)


def verify_coefficient_formula(result: ExpansionResult,
                               tol: float = 1e-6) -> dict:
    """Check the directly integrated coefficients against the residue route."""
    by_key = {(c.lambda0, c.j, c.m): c.value for c in result.coeffs_residue}
    scale = max((abs(c.value) for c in result.coeffs_direct), default=1.0) or 1.0
    mismatches = []
    for c in result.coeffs_direct:
        other = by_key.get((c.lambda0, c.j, c.m))
        if other is None:
            mismatches.append(f"missing residue coefficient for {(c.j, c.m)}")
            continue
        if abs(c.value - other) > tol * scale:
            mismatches.append(
                f"({c.j},{c.m}) at {c.lambda0}: {c.value} vs {other}")
    return {
        "passed": not mismatches and result.deviations["solve_vs_coeff"] < tol,
        "mismatches": mismatches,
        "deviations": result.deviations,
        "tolerance": tol,
    }
