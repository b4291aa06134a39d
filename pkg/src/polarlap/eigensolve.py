"""First eigenpair of the p-Laplacian on a triangulated punctured domain.

The general path is inverse iteration: each outer step solves the convex
problem min_v energy_p(v)/p - <w, v> with w the lumped p-force of the
previous iterate, takes |v|, renormalizes, and re-evaluates the Rayleigh
quotient.  At p = 2 the inner problem is linear and the classical inverse
power iteration with conjugate-gradient solves is used as the fast exact
path.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import NoFreeNodes, ZeroFunction
from .discretize import (
    TriMesh,
    energy_p,
    grad_energy_p,
    grad_mass_p,
    mass_p,
)
from .rearrange import GridFunction


@dataclass(frozen=True)
class SolverConfig:
    p: float = 2.0
    outer_tol: float = 1e-8
    inner_tol: float = 1e-9
    max_outer: int = 200
    max_inner: int = 5000
    smoothing_eps: float = 1e-10

    def __post_init__(self):
        if not self.p > 1.0:
            raise ValueError("p must exceed 1")
        for name in ("outer_tol", "inner_tol", "smoothing_eps"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass(frozen=True)
class EigenResult:
    lam: float
    u: GridFunction
    outer_iters: int
    residual: float
    converged: bool
    p: float = 2.0

    def to_record(self) -> dict:
        return {
            "lambda": self.lam,
            "iterations": self.outer_iters,
            "residual": self.residual,
            "converged": self.converged,
        }


def rayleigh(M: TriMesh, u: GridFunction, p: float) -> float:
    """energy_p(u) / mass_p(u); scale-invariant."""
    flat = M.flat_values(u)
    if M.free_nodes.size == 0 or not np.any(flat[M.free_nodes]):
        raise ZeroFunction("Rayleigh quotient of a function vanishing on free nodes")
    return energy_p(M, u, p) / mass_p(M, u, p)


class _Assembler:
    """Cached index structure for repeated free-node matrix assembly."""

    def __init__(self, M: TriMesh):
        self.M = M
        tn = M.tri_nodes
        rows = np.repeat(tn, 3, axis=1).ravel()
        cols = np.tile(tn, (1, 3)).ravel()
        fi = M.free_index
        r = fi[rows]
        c = fi[cols]
        self.keep = (r >= 0) & (c >= 0)
        self.rows = r[self.keep]
        self.cols = c[self.keep]
        gx, gy = M.grad_x, M.grad_y
        # constant per-triangle local blocks of the quadratic form
        self.base_local = M.area * (gx[:, :, None] * gx[:, None, :] +
                                    gy[:, :, None] * gy[:, None, :])

    def stiffness(self, weights=None, rank_one=None) -> sp.csr_matrix:
        """sum_T area w_T (grad phi_i . grad phi_j) [+ q_T q_T^T terms]."""
        local = self.base_local
        if weights is not None:
            local = local * weights[:, None, None]
        if rank_one is not None:
            fac, q = rank_one  # (T,), (T,3)
            local = local + (self.M.area * fac)[:, None, None] * \
                (q[:, :, None] * q[:, None, :])
        n = self.M.n_free
        K = sp.coo_matrix((local.reshape(-1)[self.keep],
                           (self.rows, self.cols)), shape=(n, n))
        return K.tocsr()


def _assemble_p2_stiffness(M: TriMesh, weights=None) -> sp.csr_matrix:
    """Free-node stiffness sum_T w_T area (grad phi_i . grad phi_j)."""
    return _Assembler(M).stiffness(weights)


def _embed(M: TriMesh, free_vals: np.ndarray) -> GridFunction:
    flat = np.zeros(M.n_nodes)
    flat[M.free_nodes] = free_vals
    return M.function_from_flat(flat)


def _mass_normalize(M: TriMesh, free_vals: np.ndarray, p: float):
    u = _embed(M, free_vals)
    m = mass_p(M, u, p)
    if m <= 0.0:
        raise ZeroFunction("cannot normalize the zero function")
    scaled = free_vals / m ** (1.0 / p)
    return scaled, _embed(M, scaled)


def _constant_result(M: TriMesh, p: float) -> EigenResult:
    # no Dirichlet nodes: constants are admissible and the quotient is 0
    ones = np.ones(M.n_free)
    _, u = _mass_normalize(M, ones, p)
    return EigenResult(0.0, u, 0, 0.0, True, p)


def _residual(M: TriMesh, u: GridFunction, lam: float, p: float) -> float:
    r = grad_energy_p(M, u, p) - lam * grad_mass_p(M, u, p)
    return float(np.abs(r).max()) if r.size else 0.0


def solve_p2(M: TriMesh, cfg: SolverConfig | None = None) -> EigenResult:
    """Smallest eigenpair of (stiffness, lumped mass) by inverse power
    iteration with conjugate-gradient inner solves."""
    cfg = cfg or SolverConfig(p=2.0)
    if M.n_free == 0:
        raise NoFreeNodes("mesh has no free nodes")
    if M.dirichlet_nodes.size == 0:
        return _constant_result(M, 2.0)
    K = _assemble_p2_stiffness(M)
    m = M.mass_w[M.free_nodes]
    x = np.ones(M.n_free)
    x /= np.sqrt((m * x * x).sum())
    lam = float(x @ (K @ x))
    converged = False
    iters = 0
    for k in range(cfg.max_outer):
        iters = k + 1
        y, info = spla.cg(K, m * x, x0=x, rtol=1e-12, atol=0.0,
                          maxiter=20 * M.n_free)
        y /= np.sqrt((m * y * y).sum())
        lam_new = float(y @ (K @ y))
        x = y
        if info == 0 and abs(lam_new - lam) <= cfg.outer_tol * abs(lam_new):
            lam = lam_new
            converged = True
            break
        lam = lam_new
    if x[np.argmax(np.abs(x))] < 0.0:
        x = -x
    x = np.maximum(x, 0.0)
    x, u = _mass_normalize(M, x, 2.0)
    lam = rayleigh(M, u, 2.0)
    return EigenResult(lam, u, iters, _residual(M, u, lam, 2.0), converged, 2.0)


def _objective(M: TriMesh, v: GridFunction, w: np.ndarray, p: float) -> float:
    flat = M.flat_values(v)
    return energy_p(M, v, p) / p - float(w @ flat[M.free_nodes])


def _solve_inner(M: TriMesh, asm: _Assembler, v0: np.ndarray, w: np.ndarray,
                 cfg: SolverConfig, lap_solve) -> np.ndarray:
    """Minimize energy_p(v)/p - <w, v> over the free nodes.

    p = 2: one linear solve.  p > 2: damped Newton (the Hessian is bounded
    there), floored by smoothing_eps to stay definite on flat triangles.
    p < 2: preconditioned gradient steps in the p = 2 stiffness metric with
    smoothing_eps guarding the |g|^(p-2) factor; the Hessian is unbounded
    at flat gradients and is never formed.  All steps use Armijo
    backtracking (c = 1e-4, halving).
    """
    p = cfg.p
    if p == 2.0:
        return lap_solve(w)
    smoothing = cfg.smoothing_eps if p < 2.0 else 0.0
    v = v0.copy()

    def grad(vec):
        u = _embed(M, vec)
        return grad_energy_p(M, u, p, smoothing=smoothing) / p - w

    def fval(vec):
        return _objective(M, _embed(M, vec), w, p)

    f = fval(v)
    for _ in range(cfg.max_inner):
        g = grad(v)
        if np.abs(g).max() < cfg.inner_tol:
            break
        if p > 2.0:
            vals = np.zeros(M.n_nodes)
            vals[M.free_nodes] = v
            tri = vals[M.tri_nodes]
            tgx = np.einsum("tk,tk->t", M.grad_x, tri)
            tgy = np.einsum("tk,tk->t", M.grad_y, tri)
            g2 = tgx * tgx + tgy * tgy
            d2 = g2 + max(cfg.smoothing_eps,
                          1e-10 * float(np.sqrt(g2.max(initial=0.0)))) ** 2
            wts = d2 ** (0.5 * p - 1.0)
            fac = (p - 2.0) * d2 ** (0.5 * p - 2.0)
            q = tgx[:, None] * M.grad_x + tgy[:, None] * M.grad_y
            Kh = asm.stiffness(weights=wts, rank_one=(fac, q))
            d = -spla.splu(Kh.tocsc()).solve(g)
        else:
            d = -lap_solve(g)
        slope = float(g @ d)
        if slope >= 0.0:
            d = -g
            slope = float(g @ d)
        t = 1.0
        for _ in range(60):
            f_new = fval(v + t * d)
            if f_new <= f + 1e-4 * t * slope:
                break
            t *= 0.5
        else:
            break
        v = v + t * d
        f = f_new
    return v


def solve_p(M: TriMesh, cfg: SolverConfig) -> EigenResult:
    """Inverse iteration for the first eigenpair at general p > 1."""
    if M.n_free == 0:
        raise NoFreeNodes("mesh has no free nodes")
    p = cfg.p
    if M.dirichlet_nodes.size == 0:
        return _constant_result(M, p)
    asm = _Assembler(M)
    K = asm.stiffness()
    lap = spla.splu(K.tocsc())
    lap_solve = lap.solve

    x, u = _mass_normalize(M, np.ones(M.n_free), p)
    lam = rayleigh(M, u, p)
    converged = False
    iters = 0
    v_guess = None
    for k in range(cfg.max_outer):
        iters = k + 1
        w = grad_mass_p(M, u, p) / p
        v0 = lap_solve(w) if v_guess is None else v_guess
        v = _solve_inner(M, asm, v0, w, cfg, lap_solve)
        v = np.abs(v)
        x, u = _mass_normalize(M, v, p)
        v_guess = x
        lam_new = rayleigh(M, u, p)
        if abs(lam_new - lam) <= cfg.outer_tol * abs(lam_new):
            lam = lam_new
            converged = True
            break
        lam = lam_new
    return EigenResult(lam, u, iters, _residual(M, u, lam, p), converged, p)


def solve(M: TriMesh, cfg: SolverConfig | None = None) -> EigenResult:
    """Dispatch to the fast p = 2 path or the general inverse iteration."""
    cfg = cfg or SolverConfig()
    if cfg.p == 2.0:
        return solve_p2(M, cfg)
    return solve_p(M, cfg)


def check_weak_form(M: TriMesh, r: EigenResult, trial_count: int,
                    seed: int = 0) -> float:
    """Max weak-form defect against random normalized trial functions.

    Each trial vanishes on the Dirichlet nodes and is normalized in the
    lumped 2-norm.  The defect of a trial v is the p-stiffness pairing
    <|grad u|^{p-2} grad u, grad v> minus lam times the lumped mass pairing,
    which equals (grad_energy_p(u) - lam grad_mass_p(u)) . v / p.
    """
    rng = np.random.default_rng(seed)
    g = grad_energy_p(M, r.u, r.p) - r.lam * grad_mass_p(M, r.u, r.p)
    m = M.mass_w[M.free_nodes]
    worst = 0.0
    for _ in range(trial_count):
        v = rng.standard_normal(M.n_free)
        v /= np.sqrt((m * v * v).sum())
        worst = max(worst, abs(float(g @ v)) / r.p)
    return worst
