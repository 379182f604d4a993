"""First-order conic solver for the exported standard form.

Operator-splitting (ADMM) on

    minimize c^T x   s.t.  A x = b,   x in K = R^free x PSD x ... x PSD,

alternating an affine projection onto the equality constraints, a
Euclidean projection onto the cone product, and an over-relaxed dual
update.  The equality step needs one linear solve with G = A A^T per
iteration; its factorization is computed once and reused, and is
independent of the penalty parameter, so residual-balancing rho updates
cost nothing.

Problems assembled by the sdp module have a special shape that the
equality step detects and exploits: every cone coordinate appears in
exactly one constraint row (the LMI entry pinning rows), so G splits
into a diagonal-plus-low-rank block and a small Schur complement over
the remaining pure-free rows.  Both reduce to one sparse factorization
of I + B^T D^{-1} B over the free variables plus a dense Cholesky of
the Schur matrix.  Generic problems fall back to a sparse LU of G.

Residuals are always reported in original (unscaled) units and use the
exact dual-cone distance, so they agree with independent recomputation
from the exported problem data.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from ._pack import svec_len, unsvec, svec

RHO_MIN = 1e-6
RHO_MAX = 1e6
RHO_FACTOR = 2.0       # multiplicative rho update
RHO_TRIGGER = 10.0     # residual imbalance triggering an update


# -----------------------------------------------------------------
# Options and results
# -----------------------------------------------------------------

@dataclass
class SolverOptions:
    """Tuning knobs for the operator-splitting solver.

    The defaults favor accuracy over speed; dual-polynomial peak
    localization degrades visibly when feasibility is looser than
    about 1e-5, so the shipped tolerance sits well under that.
    """

    eps_abs: float = 1e-7
    eps_rel: float = 1e-7
    max_iters: int = 200_000
    over_relax: float = 1.6
    scaling: bool = True
    check_interval: int = 50
    rho: float = 1.0
    adaptive_rho: bool = True
    ruiz_iters: int = 10

    def validate(self):
        if self.eps_abs <= 0 or self.eps_rel <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not (0.0 < self.over_relax < 2.0):
            raise ValueError("over_relax must lie in (0, 2)")
        if self.rho <= 0:
            raise ValueError("rho must be positive")
        if self.check_interval < 1:
            raise ValueError("check_interval must be at least 1")


@dataclass
class RawSolution:
    """Solver output in original units.

    primal is the cone-feasible iterate z, dual the equality
    multipliers, slack the dual-cone point s = -rho*u with
    c - A^T dual ~ slack at optimality.
    """

    primal: np.ndarray
    dual: np.ndarray
    slack: np.ndarray
    status: str
    iterations: int
    residuals: dict
    objective: float
    wall_time: float
    history: list = field(default_factory=list)


class ResidualReport(NamedTuple):
    """Primal/dual residuals and objective gap, absolute then relative."""

    primal: float
    dual: float
    gap: float
    primal_rel: float
    dual_rel: float
    gap_rel: float


# -----------------------------------------------------------------
# Cone projection
# -----------------------------------------------------------------

def project_psd_block(S: np.ndarray) -> np.ndarray:
    """Project a real symmetric matrix onto the PSD cone.

    Eigendecomposition with negative eigenvalues clipped to zero.
    """
    S = np.asarray(S, dtype=float)
    S = 0.5 * (S + S.T)
    try:
        w, V = np.linalg.eigh(S)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            "eigendecomposition failed; matrix scaling is pathological") from exc
    if w[0] >= 0.0:
        return S
    w = np.clip(w, 0.0, None)
    P = (V * w) @ V.T
    return 0.5 * (P + P.T)


def _block_views(problem):
    """(start, stop, D) per PSD block of the packed vector."""
    out = []
    base = problem.free_dim
    for D in problem.psd_dims:
        ln = svec_len(D)
        out.append((base, base + ln, D))
        base += ln
    return out


def _project_cone(v: np.ndarray, blocks) -> np.ndarray:
    """Project onto R^free x PSD x ... x PSD (free part passes through)."""
    z = v.copy()
    for a, b, D in blocks:
        z[a:b] = svec(project_psd_block(unsvec(v[a:b], D)))
    return z


def _dual_cone_distance(v: np.ndarray, free_dim: int, blocks) -> float:
    """Distance from v to the dual cone {0}^free x PSD x ... x PSD."""
    sq = float(v[:free_dim] @ v[:free_dim])
    for a, b, D in blocks:
        S = unsvec(v[a:b], D)
        w = np.linalg.eigvalsh(0.5 * (S + S.T))
        neg = w[w < 0.0]
        sq += float(neg @ neg)
    return np.sqrt(sq)


# -----------------------------------------------------------------
# Residuals
# -----------------------------------------------------------------

def _residuals_with_scales(problem, x, mu):
    """ResidualReport plus the three data scales the tolerances use."""
    blocks = _block_views(problem)
    Ax = problem.A @ x
    At_mu = problem.A.T @ mu
    rp = float(np.linalg.norm(Ax - problem.b))
    rd = _dual_cone_distance(problem.c - At_mu, problem.free_dim, blocks)
    cx = float(problem.c @ x)
    bmu = float(problem.b @ mu)
    gap = abs(cx - bmu)
    scale_p = max(np.linalg.norm(Ax), np.linalg.norm(problem.b))
    scale_d = max(np.linalg.norm(At_mu), np.linalg.norm(problem.c))
    scale_g = max(abs(cx), abs(bmu))
    rep = ResidualReport(rp, float(rd), gap,
                         float(rp / max(1.0, scale_p)),
                         float(rd / max(1.0, scale_d)),
                         float(gap / max(1.0, scale_g)))
    return rep, scale_p, scale_d, scale_g


def residuals(problem, primal: np.ndarray, dual: np.ndarray) -> ResidualReport:
    """Exact KKT residuals of a candidate pair in original units.

    Primal: ||A x - b||.  Dual: distance of c - A^T mu from the dual
    cone.  Gap: |c^T x - b^T mu|.  Relative forms divide by
    max(1, data scale) per the standard operator-splitting convention.
    """
    x = np.asarray(primal, dtype=float)
    mu = np.asarray(dual, dtype=float)
    if x.shape != (problem.n_vars,) or mu.shape != (problem.n_rows,):
        raise ValueError("primal/dual vector shapes do not match the problem")
    rep, _, _, _ = _residuals_with_scales(problem, x, mu)
    return rep


# -----------------------------------------------------------------
# Equality-projection linear algebra
# -----------------------------------------------------------------

class _PinnedEqualitySolver:
    """Solve G y = r for G = A A^T when A has the pinning shape.

    Requires every cone column to hold exactly one nonzero and every
    row to touch at most one cone column.  Rows then split into pinning
    rows [B | E] with E holding one entry per row and pure rows
    [T | 0], giving

        G = [[B B^T + D, B T^T], [T B^T, T T^T]],   D = diag(E E^T).

    Woodbury turns the top-left inverse into solves with the sparse
    SPD matrix M = I + B^T D^{-1} B over the free variables, and the
    Schur complement collapses to S = T M^{-1} T^T (dense Cholesky).
    """

    def __init__(self, A: sp.csr_matrix, free_dim: int):
        m = A.shape[0]
        csc = A.tocsc()
        cone = csc[:, free_dim:]
        per_col = np.diff(cone.indptr)
        if cone.shape[1] == 0 or np.any(per_col != 1):
            raise _StructureMismatch
        pin_rows = cone.indices
        if np.unique(pin_rows).size != pin_rows.size:
            raise _StructureMismatch
        pin_mask = np.zeros(m, dtype=bool)
        pin_mask[pin_rows] = True
        # rows holding a cone entry, in the cone-column order
        self.pin = pin_rows
        self.pure = np.flatnonzero(~pin_mask)
        Af = A[:, :free_dim].tocsr()
        self.B = Af[self.pin, :]
        self.T = Af[self.pure, :]
        self.d = cone.data.astype(float) ** 2
        M = (self.B.T @ sp.diags(1.0 / self.d) @ self.B).tocsc()
        M = M + sp.eye(free_dim, format="csc")
        try:
            self._M_lu = splu(M)
        except RuntimeError as exc:
            raise ValueError(
                "equality system is rank deficient "
                f"(redundant constraints): {exc}") from exc
        n_pure = self.pure.size
        if n_pure:
            S = np.empty((n_pure, n_pure))
            Tt = self.T.T.tocsc()
            chunk = max(1, min(n_pure, 64))
            for lo in range(0, n_pure, chunk):
                hi = min(lo + chunk, n_pure)
                X = self._M_lu.solve(Tt[:, lo:hi].toarray())
                S[:, lo:hi] = self.T @ X
            try:
                self._S_chol = scipy.linalg.cho_factor(S, lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise ValueError(
                    "equality system is rank deficient (redundant "
                    f"constraints among {n_pure} trace rows): {exc}") from exc
        else:
            self._S_chol = None

    def _top_left_solve(self, v):
        # (D + B B^T)^{-1} v by Woodbury
        w = v / self.d
        h = self._M_lu.solve(self.B.T @ w)
        return w - (self.B @ h) / self.d

    def solve(self, r: np.ndarray) -> np.ndarray:
        r1 = r[self.pin]
        out = np.empty_like(r)
        if self._S_chol is None:
            out[self.pin] = self._top_left_solve(r1)
            return out
        r2 = r[self.pure]
        t1 = self._top_left_solve(r1)
        rhs2 = r2 - self.T @ (self.B.T @ t1)
        mu2 = scipy.linalg.cho_solve(self._S_chol, rhs2)
        mu1 = self._top_left_solve(r1 - self.B @ (self.T.T @ mu2))
        out[self.pin] = mu1
        out[self.pure] = mu2
        return out


class _StructureMismatch(Exception):
    """Problem rows do not have the pinning shape; use the generic path."""


class _GenericEqualitySolver:
    """Sparse LU of G = A A^T for problems without special structure."""

    def __init__(self, A: sp.csr_matrix):
        G = (A @ A.T).tocsc()
        try:
            self._lu = splu(G)
        except RuntimeError as exc:
            raise ValueError(
                "equality system is rank deficient "
                f"(redundant constraints): {exc}") from exc
        # SuperLU can succeed on a numerically singular matrix and
        # return garbage; probe one solve for finiteness.
        probe = self._lu.solve(np.ones(G.shape[0]))
        if not np.all(np.isfinite(probe)):
            raise ValueError("equality system is rank deficient "
                             "(singular normal equations)")

    def solve(self, r: np.ndarray) -> np.ndarray:
        return self._lu.solve(r)


def _make_equality_solver(A: sp.csr_matrix, free_dim: int):
    try:
        return _PinnedEqualitySolver(A, free_dim)
    except _StructureMismatch:
        return _GenericEqualitySolver(A)


# -----------------------------------------------------------------
# Data scaling
# -----------------------------------------------------------------

class _Scaling:
    """Ruiz row/column equilibration plus objective/rhs normalization.

    Column scales are uniform within each PSD block (a uniform scalar
    per block keeps the cone invariant), individual on free columns.
    """

    def __init__(self, problem, enable: bool, ruiz_iters: int):
        A = problem.A.tocsr().astype(float)
        m, n = A.shape
        self.d_row = np.ones(m)
        self.d_col = np.ones(n)
        blocks = _block_views(problem)
        if enable:
            for _ in range(ruiz_iters):
                absA = abs(A)
                r = absA.max(axis=1).toarray().ravel()
                c = absA.max(axis=0).toarray().ravel()
                for a, b, _ in blocks:
                    c[a:b] = c[a:b].max() if b > a else 1.0
                r = np.sqrt(np.where(r > 0, r, 1.0))
                c = np.sqrt(np.where(c > 0, c, 1.0))
                Dr = sp.diags(1.0 / r)
                Dc = sp.diags(1.0 / c)
                A = (Dr @ A @ Dc).tocsr()
                self.d_row /= r
                self.d_col /= c
        b_s = self.d_row * problem.b
        c_s = self.d_col * problem.c
        if enable:
            nb = np.linalg.norm(b_s)
            nc = np.linalg.norm(c_s)
            self.sigma_b = 1.0 / nb if nb > 1e-12 else 1.0
            self.sigma_c = 1.0 / nc if nc > 1e-12 else 1.0
        else:
            self.sigma_b = 1.0
            self.sigma_c = 1.0
        self.A = A
        self.b = self.sigma_b * b_s
        self.c = self.sigma_c * c_s

    # maps between original and scaled spaces ----------------------

    def x_to_orig(self, x_s):
        return self.d_col * x_s / self.sigma_b

    def x_to_scaled(self, x):
        return self.sigma_b * x / self.d_col

    def mu_to_orig(self, mu_s):
        return self.d_row * mu_s / self.sigma_c

    def slack_to_orig(self, s_s):
        return s_s / self.d_col / self.sigma_c

    def slack_to_scaled(self, s):
        return self.sigma_c * self.d_col * s


# -----------------------------------------------------------------
# Main loop
# -----------------------------------------------------------------

def solve(problem, opts: SolverOptions | None = None,
          warm_start: RawSolution | None = None) -> RawSolution:
    """Run the operator-splitting iteration on a conic standard form.

    Parameters
    ----------
    problem : ConicProblem
        Exported standard form (equalities, free block, PSD blocks).
    opts : SolverOptions, optional
        Tolerances and iteration controls.
    warm_start : RawSolution, optional
        Previous solution of a nearby problem; its primal and slack
        vectors seed the iteration.

    Returns
    -------
    RawSolution
        Status "optimal" when all residuals met the tolerance, else
        "max_iters" with the best available iterates.
    """
    if opts is None:
        opts = SolverOptions()
    opts.validate()
    if problem.A.shape != (problem.n_rows, problem.n_vars):
        raise ValueError("constraint matrix shape is inconsistent")
    if problem.b.shape != (problem.n_rows,) or problem.c.shape != (problem.n_vars,):
        raise ValueError("objective/rhs lengths are inconsistent")

    t0 = time.perf_counter()
    scal = _Scaling(problem, opts.scaling, opts.ruiz_iters)
    A_s = scal.A
    At_s = A_s.T.tocsr()
    b_s, c_s = scal.b, scal.c
    Ac_s = A_s @ c_s
    lin = _make_equality_solver(A_s, problem.free_dim)
    blocks = _block_views(problem)

    rho = opts.rho
    alpha = opts.over_relax
    n = problem.n_vars
    if warm_start is not None:
        z = scal.x_to_scaled(np.asarray(warm_start.primal, dtype=float))
        u = -scal.slack_to_scaled(np.asarray(warm_start.slack, dtype=float)) / rho
    else:
        z = np.zeros(n)
        u = np.zeros(n)

    mu_s = np.zeros(problem.n_rows)
    history = []
    status = "max_iters"
    iters_used = opts.max_iters
    rep = None

    for it in range(1, opts.max_iters + 1):
        w = z - u
        rhs = rho * (b_s - A_s @ w) + Ac_s
        mu_s = lin.solve(rhs)
        x = w - c_s / rho + (At_s @ mu_s) / rho
        x_r = alpha * x + (1.0 - alpha) * z
        v = x_r + u
        z = _project_cone(v, blocks)
        u = v - z

        if it % opts.check_interval == 0 or it == opts.max_iters:
            z_o = scal.x_to_orig(z)
            mu_o = scal.mu_to_orig(mu_s)
            rep, scale_p, scale_d, scale_g = _residuals_with_scales(
                problem, z_o, mu_o)
            if not all(np.isfinite(rep)):
                raise ValueError("solver iterates diverged "
                                 "(non-finite residuals)")
            history.append({"iter": it, "rho": rho,
                            "primal": rep.primal, "dual": rep.dual,
                            "gap": rep.gap, "primal_rel": rep.primal_rel,
                            "dual_rel": rep.dual_rel,
                            "gap_rel": rep.gap_rel})
            ok_p = rep.primal <= opts.eps_abs + opts.eps_rel * scale_p
            ok_d = rep.dual <= opts.eps_abs + opts.eps_rel * scale_d
            ok_g = rep.gap <= opts.eps_abs + opts.eps_rel * scale_g
            if ok_p and ok_d and ok_g:
                status = "optimal"
                iters_used = it
                break
            if opts.adaptive_rho:
                if rep.primal_rel > RHO_TRIGGER * rep.dual_rel and rho < RHO_MAX:
                    rho *= RHO_FACTOR
                    u /= RHO_FACTOR
                elif rep.dual_rel > RHO_TRIGGER * rep.primal_rel and rho > RHO_MIN:
                    rho /= RHO_FACTOR
                    u *= RHO_FACTOR

    z_o = scal.x_to_orig(z)
    mu_o = scal.mu_to_orig(mu_s)
    s_o = scal.slack_to_orig(-rho * u)
    if rep is None:
        rep = residuals(problem, z_o, mu_o)
    wall = time.perf_counter() - t0
    return RawSolution(
        primal=z_o,
        dual=mu_o,
        slack=s_o,
        status=status,
        iterations=iters_used,
        residuals={"primal": rep.primal, "dual": rep.dual, "gap": rep.gap,
                   "primal_rel": rep.primal_rel, "dual_rel": rep.dual_rel,
                   "gap_rel": rep.gap_rel},
        objective=float(problem.c @ z_o),
        wall_time=wall,
        history=history,
    )


# Pluggable backends: external solvers can be registered for
# cross-validation against the native method on the exported form.
BACKENDS = {"native": solve}


def solve_with(backend: str, problem, opts: SolverOptions | None = None):
    try:
        fn = BACKENDS[backend]
    except KeyError:
        raise ValueError(f"unknown solver backend {backend!r}; "
                         f"registered: {sorted(BACKENDS)}") from None
    return fn(problem, opts)
