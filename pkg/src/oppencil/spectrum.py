"""Polynomial eigenvalue problem for the pencil: spectrum, Jordan chains,
biorthogonal adjoint chains, power-exponential solutions, critical lines.

Eigenvalues are found through companion linearization (QZ).  When the
pencil couples harmonic degrees upward (nonzero bandwidth) the square
truncation is structurally singular, so the solve works with the exact
rectangular restriction to the fully-resolved columns and compresses it
with a fixed random matrix; every candidate eigenvalue is then certified
by a small singular value of the rectangular pencil, and eigenvectors
supported near the truncation boundary are discarded.

Jordan chains at an eigenvalue lam0 solve the coupled system

    sum_(j=0..M') (1/j!) d^j pencil(lam0) phi_(M'-j) = 0,   M' = 0..M-1,

extracted from nested block-Toeplitz nullspaces (longest chains first).
The algebraic count is cross-checked against the vanishing order of
det pencil at lam0 (Taylor coefficients by FFT on a circle).  Adjoint
chains at conj(lam0) of the cylinder-level adjoint pencil are normalized
to the Kronecker biorthogonality pattern by one least-squares solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .errors import (
    DegenerateNormalization,
    MultiplicityMismatch,
    NotAnEigenvalue,
    RefuseBoundary,
    SingularLeadingCoeff,
    UnstableSpectrum,
)
from .operator_ast import SystemOperator, principal_part
from .pencil import PencilMatrices, assemble_pencil, evaluate_pencil

_RANK_TOL = 1e-8        # relative SVD rank cut
_CHAIN_TOL = 1e-8       # chain extension residual
_CLUSTER_RADIUS = 1e-6  # eigenvalue cluster radius
_DRIFT_TOL = 1e-6       # truncation stability drift
_SUPPORT_TOL = 1e-8     # eigenvector mass threshold per degree


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass
class Eigenpoint:
    lambda0: complex
    geometric: int
    partial_multiplicities: list
    algebraic: int
    chains: list            # J lists of chain vectors (full basis coords)
    residuals: list         # per-chain max residual (relative)
    det_order: int

    def to_json(self):
        return {
            "lambda0": [self.lambda0.real, self.lambda0.imag],
            "geometric": self.geometric,
            "partial_multiplicities": list(self.partial_multiplicities),
            "algebraic": self.algebraic,
            "residuals": self.residuals,
            "det_order": self.det_order,
            "chains": [[[ [v.real, v.imag] for v in vec] for vec in chain]
                       for chain in self.chains],
        }


@dataclass
class AdjointChains:
    lambda0_adj: complex
    chains: list            # same shape as the primal chains
    biorth_residual: float
    chain_residual: float


@dataclass
class PowerExpSolution:
    """u(t, omega) = e^(i lam0 t) sum_l (it)^l / l! * coeff[l](omega)."""

    lambda0: complex
    j: int
    m: int
    coeffs: list            # coeff[l] = chain vector phi_(j, m-l), basis coords

    def evaluate_t(self, t, pairing_vectors=None):
        """Coefficient vector at time t: sum_l (it)^l/l! coeff[l]."""
        t = np.asarray(t, dtype=float)
        acc = np.zeros(t.shape + (len(self.coeffs[0]),), dtype=complex)
        for l, vec in enumerate(self.coeffs):
            acc += ((1j * t) ** l / math.factorial(l))[..., None] * np.asarray(vec)
        return np.exp(1j * self.lambda0 * t)[..., None] * acc


@dataclass
class SpectrumReport:
    op: SystemOperator
    beta1: float
    beta2: float
    degree: int
    eigenpoints: list
    res_lines: dict          # Im lambda -> total algebraic multiplicity
    x_sigma: list            # PowerExpSolutions spanning the jump space
    convergence: dict        # lambda0 -> drift between degree and degree+2
    pencil: PencilMatrices

    def total_multiplicity(self):
        return sum(e.algebraic for e in self.eigenpoints)

    def to_json(self):
        return {
            "operator_fingerprint": self.pencil.fingerprint,
            "strip": [self.beta1, self.beta2],
            "degree": self.degree,
            "eigenpoints": [e.to_json() for e in self.eigenpoints],
            "res_lines": {f"{line:.12g}": mult for line, mult in
                          sorted(self.res_lines.items())},
            "x_sigma_dim": len(self.x_sigma),
            "convergence": {f"{l.real:.12g}{l.imag:+.12g}j": d
                            for l, d in self.convergence.items()},
        }

    def res_lines_csv(self):
        rows = ["line,multiplicity"]
        for line, mult in sorted(self.res_lines.items()):
            rows.append(f"{line:.12g},{mult}")
        return "\n".join(rows) + "\n"


# ---------------------------------------------------------------------------
# eigenvalue solvers
# ---------------------------------------------------------------------------

def _kept_columns(P: PencilMatrices, down: bool = False):
    degs = P.degrees_vector()
    bw = P.bandwidth
    return np.where(degs <= P.basis.l_max - bw)[0]


def _companion_eigenvalues(Bs):
    """Eigenvalues of sum B_j lam^j via companion linearization + QZ."""
    m = len(Bs) - 1
    N = Bs[0].shape[0]
    if N == 0:
        return np.array([], dtype=complex)
    if m == 1:
        A, B = -Bs[0], Bs[1]
    else:
        A = np.zeros((N * m, N * m), dtype=complex)
        B = np.eye(N * m, dtype=complex)
        A[:N * (m - 1), N:] = np.eye(N * (m - 1))
        for j in range(m):
            A[N * (m - 1):, N * j:N * (j + 1)] = -Bs[j]
        B[N * (m - 1):, N * (m - 1):] = Bs[m]
    vals = sla.eigvals(A, B)
    vals = vals[np.isfinite(vals)]
    return vals[np.abs(vals) < 1e8]


def _block_components(P: PencilMatrices):
    """Connected components of the coupling graph over (component, degree)."""
    degs = np.array(P.basis.degrees)
    nb = len(P.basis)
    nodes = [(c, l) for c in range(P.k) for l in range(P.basis.l_max + 1)]
    node_id = {nd: i for i, nd in enumerate(nodes)}
    parent = list(range(len(nodes)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[rb] = ra

    scale = P.scale()
    slices = {}
    for c in range(P.k):
        for l in range(P.basis.l_max + 1):
            idx = np.where(degs == l)[0] + c * nb
            slices[(c, l)] = idx
    for Bj in P.B:
        for a in nodes:
            for b in nodes:
                if a >= b:
                    continue
                blk = Bj[np.ix_(slices[a], slices[b])]
                blk2 = Bj[np.ix_(slices[b], slices[a])]
                if (np.max(np.abs(blk), initial=0.0) > 1e-12 * scale or
                        np.max(np.abs(blk2), initial=0.0) > 1e-12 * scale):
                    union(node_id[a], node_id[b])
    comps = {}
    for nd in nodes:
        comps.setdefault(find(node_id[nd]), []).append(nd)
    return [np.concatenate([slices[nd] for nd in grp]) for grp in comps.values()]


def _compressed_square(P: PencilMatrices):
    """Fixed random compression Q R_j of the exact rectangular restriction."""
    keep = _kept_columns(P)
    R = [Bj[:, keep] for Bj in P.B]
    n_r, n_c = R[0].shape
    rng = np.random.default_rng(20240900 + 7 * n_r + n_c)
    Q = (rng.standard_normal((n_c, n_r)) + 1j * rng.standard_normal((n_c, n_r)))
    Q /= math.sqrt(2 * n_r)
    return keep, R, [Q @ Rj for Rj in R]


def rect_sigma_min(P: PencilMatrices, lam: complex) -> float:
    keep = _kept_columns(P)
    mat = evaluate_pencil(P, lam)[:, keep]
    sv = np.linalg.svd(mat, compute_uv=False)
    return float(sv[-1])


def solve_pencil_eigenvalues(P: PencilMatrices) -> list:
    """All (finite, certified) eigenvalues of the truncated pencil."""
    if P._eig_cache is not None:
        return list(P._eig_cache)
    scale = P.scale()
    if P.bandwidth == 0:
        uniform = len(set(P.mu)) == 1 and len(set(P.nu)) == 1
        vals = []
        for idx in _block_components(P):
            Bs = [Bj[np.ix_(idx, idx)] for Bj in P.B]
            if uniform:
                cond = np.linalg.cond(Bs[-1])
                if not np.isfinite(cond) or cond > 1e12:
                    raise SingularLeadingCoeff(
                        f"leading coefficient condition {cond:.2e} on a block")
            vals.extend(_companion_eigenvalues(Bs))
        out = np.array(vals, dtype=complex)
    else:
        keep, R, S = _compressed_square(P)
        cands = _companion_eigenvalues(S)
        certified = []
        for lam in cands:
            mat = evaluate_pencil(P, lam)[:, keep]
            sv = np.linalg.svd(mat, compute_uv=False)
            if sv[-1] < _RANK_TOL * max(sv[0], scale):
                certified.append(lam)
        out = np.array(certified, dtype=complex)
    P._eig_cache = list(out)
    return list(out)


def cluster_eigenvalues(vals, radius=_CLUSTER_RADIUS):
    """Greedy clustering; returns list of (center, count) sorted by (Im, Re)."""
    vals = sorted(vals, key=lambda z: (z.imag, z.real))
    clusters = []
    for v in vals:
        if clusters and abs(v - clusters[-1][-1]) <= radius:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    return [(complex(np.mean(c)), len(c)) for c in clusters]


# ---------------------------------------------------------------------------
# determinant order cross-check
# ---------------------------------------------------------------------------

def _det_values_on_circle(P: PencilMatrices, lam0, radius, nodes=64):
    if P.bandwidth == 0:
        matfun = lambda lam: evaluate_pencil(P, lam)
    else:
        _, _, S = _compressed_square(P)

        def matfun(lam):
            out = S[-1].copy()
            for j in range(len(S) - 2, -1, -1):
                out = out * lam + S[j]
            return out

    thetas = 2 * math.pi * np.arange(nodes) / nodes
    logs = []
    for th in thetas:
        sign, logabs = np.linalg.slogdet(matfun(lam0 + radius * np.exp(1j * th)))
        logs.append((sign, logabs))
    mean_log = np.mean([la for _, la in logs])
    return np.array([s * np.exp(la - mean_log) for s, la in logs])


def det_vanishing_order(P: PencilMatrices, lam0: complex, radius: float,
                        rel_tol: float = 1e-6) -> int:
    """Order of the zero of det pencil at lam0 from scaled Taylor coefficients.

    FFT of determinant values on a circle of the given radius gives the
    scaled derivatives c_j rho^j; the order is the first coefficient that
    is non-negligible.  The circle must isolate lam0 from the rest of the
    spectrum.
    """
    w = _det_values_on_circle(P, lam0, radius)
    t = np.fft.fft(w) / len(w)
    t = t[:len(t) // 2]
    mx = np.max(np.abs(t))
    if mx == 0.0:
        return -1
    return int(np.argmax(np.abs(t) > rel_tol * mx))


# ---------------------------------------------------------------------------
# Jordan chains
# ---------------------------------------------------------------------------

def _null_space(mat, rel_tol=_RANK_TOL, scale=None):
    """Numerical nullspace under the relative ceiling rel_tol * scale.

    Eigenvalues of the pencil that are distinct but close (separation d)
    leave almost-null directions with singular values ~ d^2 that can creep
    under the ceiling while genuine nulls sit at round-off; when the
    below-ceiling values show a clear gap and the upper group is far from
    round-off, the upper group is treated as non-null.  The determinant
    vanishing-order guard remains the final arbiter.
    """
    if mat.size == 0:
        return np.zeros((mat.shape[1], 0), dtype=complex), np.array([])
    U, sv, Vh = np.linalg.svd(mat)
    smax = max(sv[0] if sv.size else 0.0, scale or 0.0)
    svp = np.concatenate([sv, np.zeros(mat.shape[1] - sv.size)])
    below = np.where(svp < rel_tol * smax)[0]
    if len(below) > 1:
        vals = svp[below]
        logs = np.log10(np.maximum(vals, 1e-300))
        gaps = logs[:-1] - logs[1:]
        k = int(np.argmax(gaps))
        if gaps[k] >= 3.0 and vals[k] > 1e-11 * smax:
            below = below[k + 1:]
    return Vh.conj().T[:, below], sv


def chains_from_matrices(T_s, n_r, n_c, scale):
    """Canonical Jordan chains for a matrix polynomial given its scaled
    derivatives T_s(s) = (1/s!) d^s pencil(lam0).

    Returns (J, partial_multiplicities, chains, residuals); raises
    NotAnEigenvalue when pencil(lam0) has full column rank.
    """
    sv0 = np.linalg.svd(T_s(0), compute_uv=False)
    if sv0[-1] >= _RANK_TOL * max(sv0[0], scale):
        raise NotAnEigenvalue(f"sigma_min = {sv0[-1]:.3e}")

    # nested Toeplitz nullspaces: d_s = #properly extendable leading vectors
    d = []
    null_bases = []
    s = 1
    while True:
        S_rows = []
        for Mp in range(s):
            row = [T_s(Mp - q) if 0 <= Mp - q else np.zeros((n_r, n_c))
                   for q in range(s)]
            S_rows.append(np.hstack(row))
        S_mat = np.vstack(S_rows)
        N, _ = _null_space(S_mat, scale=scale)
        lead = N[:n_c, :]
        if N.shape[1] == 0:
            d_s = 0
        else:
            # null basis vectors are unit norm, so the cut is absolute
            svl = np.linalg.svd(lead, compute_uv=False)
            d_s = int(np.sum(svl > _RANK_TOL))
        if d_s == 0:
            break
        d.append(d_s)
        null_bases.append(N)
        s += 1
        if s > 40:
            raise MultiplicityMismatch("chain length exploding; unstable point")
    if not d:
        raise NotAnEigenvalue("no nullspace")

    J = d[0]
    partial = [sum(1 for ds in d if ds >= j + 1) for j in range(J)]

    chains = []
    residuals = []
    picked = np.zeros((n_c, 0), dtype=complex)
    for length in sorted(set(partial), reverse=True):
        count = partial.count(length)
        N = null_bases[length - 1]
        lead = N[:n_c, :]
        # directions independent of already picked leading vectors
        if picked.shape[1]:
            lead_perp = lead - picked @ (picked.conj().T @ lead)
        else:
            lead_perp = lead
        U, sv, Vh = np.linalg.svd(lead_perp, full_matrices=False)
        for t in range(count):
            phi0 = U[:, t]
            z, *_ = np.linalg.lstsq(lead, phi0, rcond=None)
            stack = N @ z
            chain = [stack[q * n_c:(q + 1) * n_c] for q in range(length)]
            chain[0] = phi0  # exact leading vector
            res = 0.0
            for Mp in range(length):
                acc = np.zeros(n_r, dtype=complex)
                for jj in range(Mp + 1):
                    acc += T_s(jj) @ chain[Mp - jj]
                res = max(res, float(np.linalg.norm(acc)) / scale)
            chains.append([vec.copy() for vec in chain])
            residuals.append(res)
            picked = np.linalg.qr(np.hstack([picked, phi0[:, None]]))[0]

    order = sorted(range(len(chains)), key=lambda i: -len(chains[i]))
    return (J, partial, [chains[i] for i in order],
            [residuals[i] for i in order])


def jordan_chains(P: PencilMatrices, lambda0: complex,
                  isolation: float | None = None) -> Eigenpoint:
    """Canonical system of Jordan chains at lambda0.

    Geometric multiplicity from the SVD nullspace of pencil(lambda0);
    chains from nested block-Toeplitz nullspaces, extended longest-first;
    the total count is cross-checked against the determinant vanishing
    order (MultiplicityMismatch on disagreement).
    """
    lambda0 = complex(lambda0)
    keep = _kept_columns(P)
    scale = P.scale() * max(1.0, abs(lambda0)) ** P.m
    T = [P.taylor_matrix(s, lambda0)[:, keep] for s in range(P.m + 1)]
    n_r, n_c = T[0].shape

    def T_s(s):
        if s <= P.m:
            return T[s]
        return np.zeros_like(T[0])

    try:
        J, partial, chains, residuals = chains_from_matrices(T_s, n_r, n_c, scale)
    except NotAnEigenvalue as exc:
        raise NotAnEigenvalue(f"{exc} at lambda0 = {lambda0}") from None
    M = sum(partial)

    # determinant-order cross-check
    if isolation is None:
        others = [v for v in solve_pencil_eigenvalues(P)
                  if abs(v - lambda0) > _CLUSTER_RADIUS]
        isolation = min((abs(v - lambda0) for v in others), default=1.0)
    radius = max(min(0.45 * isolation, 0.1), 1e-5)
    order_det = det_vanishing_order(P, lambda0, radius)
    if order_det != M:
        raise MultiplicityMismatch(
            f"chain count {M} != det root order {order_det} at {lambda0}")

    chains_full = [[_pad(vec, keep, P.size) for vec in chain] for chain in chains]
    return Eigenpoint(lambda0, J, partial, M, chains_full, residuals, order_det)


def _pad(vec, keep, size):
    out = np.zeros(size, dtype=complex)
    out[keep] = vec
    return out


def eigenvector_support_degree(P: PencilMatrices, vec) -> int:
    degs = P.degrees_vector()
    amp = np.abs(np.asarray(vec))
    scale = float(np.max(amp)) or 1.0
    sig = degs[amp > _SUPPORT_TOL * scale]
    return int(np.max(sig)) if sig.size else 0


def eigenvector_tail_mass(P: PencilMatrices, vec, degree: int) -> float:
    """Relative squared mass carried by harmonic degrees above `degree`."""
    degs = P.degrees_vector()
    v = np.asarray(vec)
    total = float(np.vdot(v, v).real) or 1.0
    tail = v[degs > degree]
    return float(np.vdot(tail, tail).real) / total


# ---------------------------------------------------------------------------
# biorthogonal adjoint chains
# ---------------------------------------------------------------------------

def biorthogonalize(P: PencilMatrices, P_adj: PencilMatrices,
                    e: Eigenpoint) -> AdjointChains:
    """Adjoint Jordan chains at conj(lambda0), biorthogonally normalized.

    The adjoint chains belong to the cylinder-level adjoint pencil
    sum B_j^H lam^j, evaluated at conj(lambda0); P_adj (the pencil of the
    formally adjoint operator) is validated against it through the shift
    identity pencil_adj(lam) = pencil(conj(lam) + i(n+m))^H.  Chain
    equations and the Kronecker-pattern normalization are solved jointly
    by least squares.
    """
    from .pencil import adjoint_identity_residual

    if P_adj.k != P.k or P_adj.n != P.n or P_adj.m != P.m:
        raise ValueError("P_adj is not compatible with P")
    if adjoint_identity_residual(P, P_adj) > 1e-6:
        raise ValueError("P_adj does not satisfy the adjoint pencil identity")

    lam0 = e.lambda0
    size = P.size
    degs = P.degrees_vector()
    # adjoint upward bandwidth = primal downward bandwidth <= bandwidth bound;
    # reuse the primal bandwidth as a safe symmetric margin.
    keep_adj = np.where(degs <= P.basis.l_max - P.bandwidth)[0]
    T_full = [P.taylor_matrix(s, lam0) for s in range(P.m + 1)]

    def T_s(s):
        if s <= P.m:
            return T_full[s]
        return np.zeros_like(T_full[0])

    scale = P.scale() * max(1.0, abs(lam0)) ** P.m
    psis, biorth_res, chain_res = normalize_biorthogonal(
        T_s, e.chains, keep_adj, size, scale)
    return AdjointChains(np.conj(lam0), psis, biorth_res, chain_res)


def normalize_biorthogonal(T_s, chains, keep_adj, size, scale):
    """Solve for adjoint chains satisfying the Kronecker biorthogonality.

    `T_s(s)` returns (1/s!) d^s pencil(lam0) as a full square matrix; the
    adjoint chain unknowns are restricted to the `keep_adj` coordinates
    (their action is exact there).  Returns (psis, biorth_residual,
    chain_residual).
    """
    n_ca = len(keep_adj)
    struct = [(j, mm) for j, chain in enumerate(chains)
              for mm in range(len(chain))]
    M = len(struct)
    unknown_index = {key: i for i, key in enumerate(struct)}

    rows = []
    rhs = []

    # chain equations for the adjoint pencil at conj(lam0):
    # sum_s conj(T_s)^T w_(j, M'-s) = 0  (w = conj(psi))
    for j, chain in enumerate(chains):
        for Mp in range(len(chain)):
            block = np.zeros((size, M * n_ca), dtype=complex)
            for s in range(Mp + 1):
                col = unknown_index[(j, Mp - s)]
                block[:, col * n_ca:(col + 1) * n_ca] = T_s(s).T[:, keep_adj]
            rows.append(block / max(scale, 1e-300))
            rhs.append(np.zeros(size, dtype=complex))

    # biorthogonality rows
    for j, chain in enumerate(chains):
        Mj = len(chain)
        for mm in range(Mj):
            for jp, chain_p in enumerate(chains):
                for mp in range(len(chain_p)):
                    row = np.zeros(M * n_ca, dtype=complex)
                    for l in range(mm + 1):
                        for lp in range(mp + 1):
                            col = unknown_index[(jp, mp - lp)]
                            g = T_s(l + lp + 1) @ chains[j][mm - l]
                            row[col * n_ca:(col + 1) * n_ca] += g[keep_adj]
                    rows.append(row[None, :] / max(scale, 1e-300))
                    want = 1.0 if (j == jp and Mj - 1 - mm == mp) else 0.0
                    rhs.append(np.array([want / max(scale, 1e-300)]))

    A = np.vstack(rows)
    b = np.concatenate(rhs)
    w, res_, rank_, sv_ = np.linalg.lstsq(A, b, rcond=None)
    resid = float(np.linalg.norm(A @ w - b) / max(np.linalg.norm(b), 1e-300))
    if resid > 1e-6:
        raise DegenerateNormalization(
            f"biorthogonal normalization residual {resid:.3e}")

    psis = []
    for j, chain in enumerate(chains):
        vecs = []
        for mm in range(len(chain)):
            col = unknown_index[(j, mm)]
            wvec = w[col * n_ca:(col + 1) * n_ca]
            vecs.append(_pad(np.conj(wvec), keep_adj, size))
        psis.append(vecs)

    # exact biorthogonality residual for the returned system
    biorth_res = 0.0
    for j, chain in enumerate(chains):
        for mm in range(len(chain)):
            for jp, chain_p in enumerate(psis):
                for mp in range(len(chain_p)):
                    acc = 0.0 + 0.0j
                    for l in range(mm + 1):
                        for lp in range(mp + 1):
                            g = T_s(l + lp + 1) @ chains[j][mm - l]
                            acc += np.vdot(chain_p[mp - lp], g)
                    want = 1.0 if (j == jp and len(chain) - 1 - mm == mp) else 0.0
                    biorth_res = max(biorth_res, abs(acc - want))

    # adjoint chain equation residual
    chain_res = 0.0
    for vecs in psis:
        for Mp in range(len(vecs)):
            acc = np.zeros(size, dtype=complex)
            for s in range(Mp + 1):
                acc += T_s(s).conj().T @ vecs[Mp - s]
            chain_res = max(chain_res, float(np.linalg.norm(acc[keep_adj]))
                            / max(scale, 1e-300))

    return psis, float(biorth_res), float(chain_res)


# ---------------------------------------------------------------------------
# power-exponential solutions
# ---------------------------------------------------------------------------

def power_solutions(e: Eigenpoint) -> list:
    """Materialize u_(j,m) = e^(i lam0 t) sum_l (it)^l/l! phi_(j, m-l)."""
    out = []
    for j, chain in enumerate(e.chains):
        for mm in range(len(chain)):
            coeffs = [chain[mm - l] for l in range(mm + 1)]
            out.append(PowerExpSolution(e.lambda0, j, mm, coeffs))
    return out


# ---------------------------------------------------------------------------
# strip spectrum
# ---------------------------------------------------------------------------

def default_l_max(op: SystemOperator, degree: int) -> int:
    m = principal_part(op).m
    return degree + op.max_poly_degree() * m + 2


def _strip_eigenpoints(P: PencilMatrices, beta1, beta2, degree):
    vals = solve_pencil_eigenvalues(P)
    in_strip = [v for v in vals if beta1 <= v.imag <= beta2]
    clusters = cluster_eigenvalues(in_strip)
    eigenpoints = []
    centers = [c for c, _ in clusters]
    for center, _count in clusters:
        others = [c for c in centers if abs(c - center) > _CLUSTER_RADIUS] + \
                 [v for v in vals if abs(v - center) > _CLUSTER_RADIUS]
        isolation = min((abs(v - center) for v in others), default=1.0)
        ep = jordan_chains(P, center, isolation=isolation)
        # coupled eigenvectors carry exponentially decaying tails, so the
        # interior test is on the mass beyond the analysis degree, not on
        # the last nonzero amplitude
        tail = max(eigenvector_tail_mass(P, chain[0], degree)
                   for chain in ep.chains)
        if tail > 1e-6:
            continue  # boundary-truncation artifact or out-of-range mode
        eigenpoints.append(ep)
    return eigenpoints, vals


def strip_spectrum(op: SystemOperator, beta1: float, beta2: float,
                   degree: int) -> SpectrumReport:
    """Spectrum of the associated pencil in the strip beta1 <= Im lam <= beta2.

    Assembles the pencil with the coupling margin on top of `degree`,
    solves, clusters, computes Jordan chains, and keeps only eigenpoints
    whose eigenvectors are supported at harmonic degree <= degree and that
    are stable (drift < 1e-6) against re-solving with degree + 2.
    """
    if beta1 > beta2:
        raise ValueError("beta1 must be <= beta2")
    P = assemble_pencil(op, default_l_max(op, degree), analysis_degree=degree)
    eigenpoints, _ = _strip_eigenpoints(P, beta1, beta2, degree)

    # truncation-stability filter
    P2 = assemble_pencil(op, default_l_max(op, degree + 2),
                         analysis_degree=degree + 2)
    vals2 = solve_pencil_eigenvalues(P2)
    convergence = {}
    for ep in eigenpoints:
        drift = min((abs(v - ep.lambda0) for v in vals2), default=math.inf)
        if drift > _DRIFT_TOL:
            raise UnstableSpectrum(
                f"eigenvalue {ep.lambda0} drifted by {drift:.3e}; raise degree")
        convergence[ep.lambda0] = float(drift)

    for ep in eigenpoints:
        for b in (beta1, beta2):
            if abs(ep.lambda0.imag - b) < _CLUSTER_RADIUS:
                raise RefuseBoundary(
                    f"strip boundary {b} lies on the critical line "
                    f"Im lambda = {ep.lambda0.imag:.9g}")

    res_lines = {}
    for ep in eigenpoints:
        line = ep.lambda0.imag
        key = next((l for l in res_lines if abs(l - line) < _CLUSTER_RADIUS), line)
        res_lines[key] = res_lines.get(key, 0) + ep.algebraic

    x_sigma = []
    for ep in eigenpoints:
        x_sigma.extend(power_solutions(ep))

    return SpectrumReport(op, beta1, beta2, degree, eigenpoints, res_lines,
                          x_sigma, convergence, P)
