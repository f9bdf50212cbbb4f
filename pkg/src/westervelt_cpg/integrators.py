"""Energy-preserving continuous Petrov-Galerkin time stepping and baselines.

Unknowns of a slab are ordered node-major: for spatial node ``i`` the block
``[psi_i(s_1..s_q), p_i(s_1..s_q)]`` is contiguous, so every Jacobian is
banded with half-bandwidth below ``2q(k+1)``.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg.lapack import dgbsv as _gbsv
import scipy.sparse as sp

from .assembly import LumpedInner
from .errors import NewtonError
from .mesh import gauss_legendre, gauss_lobatto, lagrange_basis
from .model import ModelParams, State, check_degeneracy


@dataclass(frozen=True)
class NewtonConfig:
    rtol: float = 1e-12
    atol: float = 1e-14
    max_iter: int = 50
    line_search: bool = False
    # quadratic convergence: after an update below stol * (1 + max|x|) the
    # remaining error is O(stol**2), i.e. roundoff
    stol: float = 1e-10

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0 or self.stol <= 0 or self.max_iter < 1:
            raise ValueError("Newton tolerances must be > 0 and max_iter >= 1")
        if self.line_search:
            raise ValueError("line search is not supported")


@dataclass
class NewtonResult:
    x: np.ndarray
    iterations: int
    residual_norms: list = field(default_factory=list)


@dataclass(frozen=True, eq=False)
class SlabSolution:
    """psi_h and p_h at the q+1 Gauss-Lobatto nodes of [t0, t0 + tau]."""

    t0: float
    tau: float
    psi: np.ndarray
    p: np.ndarray
    iterations: int = 0

    @property
    def q(self) -> int:
        return self.psi.shape[0] - 1

    @property
    def time_nodes(self) -> np.ndarray:
        return self.t0 + self.tau * time_basis(self.q).nodes

    def evaluate(self, t):
        """(psi_h(t), p_h(t)) for t inside the slab."""
        L, _ = lagrange_basis(time_basis(self.q).nodes, (t - self.t0) / self.tau)
        return L[0] @ self.psi, L[0] @ self.p


@dataclass(frozen=True, eq=False)
class TimeBasis:
    nodes: np.ndarray   # q+1 Gauss-Lobatto trial nodes on [0, 1]
    quad_w: np.ndarray  # 2q Gauss-Legendre weights
    L: np.ndarray       # trial values at quadrature points, (2q, q+1)
    dL: np.ndarray      # trial derivatives d/ds, (2q, q+1)
    T: np.ndarray       # test basis (Lagrange at q Gauss points), (2q, q)


@functools.lru_cache(maxsize=None)
def time_basis(q: int) -> TimeBasis:
    if q < 1:
        raise ValueError(f"time order q must be >= 1, got {q}")
    nodes, _ = gauss_lobatto(q)
    g, wg = gauss_legendre(2 * q)
    test_nodes, _ = gauss_legendre(q)
    L, dL = lagrange_basis(nodes, g)
    T, _ = lagrange_basis(test_nodes, g)
    return TimeBasis(nodes, wg, L, dL, T)


# -- linear algebra ----------------------------------------------------------

def solve_banded_sparse(A, b) -> np.ndarray:
    """Direct banded LU solve (LAPACK gbsv) of a sparse matrix with small bandwidth.

    Duplicate COO entries are summed.
    """
    A = A if sp.isspmatrix_coo(A) else sp.coo_matrix(A)
    n = A.shape[0]
    offs = A.row.astype(np.int64) - A.col
    lower = max(int(offs.max(initial=0)), 0)
    upper = max(int(-offs.min(initial=0)), 0)
    nrows = 2 * lower + upper + 1
    # gbsv wants `lower` extra leading rows of workspace for fill-in
    flat = (lower + upper + offs) * n + A.col
    ab = np.bincount(flat, weights=A.data, minlength=nrows * n).reshape(nrows, n)
    _, _, x, info = _gbsv(lower, upper, ab, b, overwrite_ab=True)
    if info != 0:
        raise NewtonError(f"singular Jacobian (gbsv info={info})")
    return x


def newton_solve(residual: Callable, jacobian: Callable, x0, cfg: NewtonConfig) -> NewtonResult:
    """Plain Newton iteration with banded direct solves.

    Stops once ||R(x)|| <= atol + rtol * ||R(x0)||, or once an update is
    below ``stol`` relative to the iterate (the residual has then reached its
    floating point floor).
    """
    x = np.array(x0, dtype=float)
    r = residual(x)
    norms = [float(np.linalg.norm(r))]
    tol = cfg.atol + cfg.rtol * norms[0]
    it = 0
    while norms[-1] > tol:
        if it >= cfg.max_iter:
            raise NewtonError(
                f"no convergence after {it} iterations (residual {norms[-1]:.3e}, tol {tol:.3e})"
            )
        dx = solve_banded_sparse(jacobian(x), r)
        x -= dx
        it += 1
        r = residual(x)
        norms.append(float(np.linalg.norm(r)))
        if not np.isfinite(norms[-1]):
            raise NewtonError("residual became non-finite")
        if np.max(np.abs(dx)) <= cfg.stol * (1.0 + np.max(np.abs(x))):
            break
    return NewtonResult(x, it, norms)


# -- continuous Petrov-Galerkin slab system ---------------------------------

def _slab_values(x, state: State, q: int):
    n = len(state.p)
    X = np.asarray(x).reshape(n, 2, q)
    psi = np.vstack([state.psi, X[:, 0, :].T])
    p = np.vstack([state.p, X[:, 1, :].T])
    return psi, p


def _pack(psi_tail, p_tail) -> np.ndarray:
    return np.stack([psi_tail.T, p_tail.T], axis=1).ravel()


def initial_guess(state: State, q: int) -> np.ndarray:
    """Constant-in-time extrapolation of the incoming state."""
    return _pack(np.tile(state.psi, (q, 1)), np.tile(state.p, (q, 1)))


def cpg_residual(x, state: State, tau: float, q: int, params: ModelParams,
                 K, w: LumpedInner) -> np.ndarray:
    """Slab residuals R1, R2 tested against the q Gauss-point Lagrange basis."""
    tb = time_basis(q)
    psi, p = _slab_values(x, state, q)
    pg = tb.L @ p
    c = 1.0 - 2.0 * params.beta * pg
    if params.beta:
        check_degeneracy(c, " at a time quadrature point")
        check_degeneracy(1.0 - 2.0 * params.beta * p, " at a slab node")
    psig = tb.L @ psi
    dpsi = tb.dL @ psi / tau
    dp = tb.dL @ p / tau
    wt = tau * tb.quad_w[:, None] * tb.T
    W = w.weights
    r1 = wt.T @ (W * c * dp) + (K @ (wt.T @ (params.alpha * dpsi + psig)).T).T
    r2 = wt.T @ (W * c * (dpsi - pg))
    return _pack(r1, r2)


def cpg_jacobian(x, state: State, tau: float, q: int, params: ModelParams,
                 K, w: LumpedInner) -> sp.coo_matrix:
    """Exact derivative of :func:`cpg_residual` with respect to ``x``."""
    tb = time_basis(q)
    psi, p = _slab_values(x, state, q)
    n = len(state.p)
    W = w.weights
    beta, alpha = params.beta, params.alpha
    pg = tb.L @ p
    c = 1.0 - 2.0 * beta * pg
    dp = tb.dL @ p / tau
    dpsi = tb.dL @ psi / tau
    wt = tau * tb.quad_w[:, None] * tb.T
    Lm, dLm = tb.L[:, 1:], tb.dL[:, 1:] / tau

    def block(weights, basis):
        # sum_g wt[g, j] * weights[g, i] * basis[g, m]  ->  (n, q, q)
        kernel = (wt[:, :, None] * basis[:, None, :]).reshape(len(wt), q * q)
        return (weights.T @ kernel).reshape(n, q, q)

    # node-diagonal blocks of the three lumped terms
    r1_p = block(c, dLm) - 2.0 * beta * block(dp, Lm)
    r2_psi = block(c, dLm)
    r2_p = -2.0 * beta * block(dpsi - pg, Lm) - block(c, Lm)
    blocks = [(0, 1, r1_p), (1, 0, r2_psi), (1, 1, r2_p)]

    node = np.arange(n)[:, None, None]
    jj = np.arange(q)[None, :, None]
    mm = np.arange(q)[None, None, :]
    rows, cols, vals = [], [], []
    for fr, fc, blk in blocks:
        rows.append(np.broadcast_to(node * 2 * q + fr * q + jj, blk.shape).ravel())
        cols.append(np.broadcast_to(node * 2 * q + fc * q + mm, blk.shape).ravel())
        vals.append((W[:, None, None] * blk).ravel())

    # stiffness coupling of R1 to psi: K_il * A_jm
    A = wt.T @ (alpha * dLm + Lm)
    Kc = sp.coo_matrix(K)
    ri = Kc.row[:, None, None] * 2 * q + jj
    ci = Kc.col[:, None, None] * 2 * q + mm
    shape = (len(Kc.data), q, q)
    rows.append(np.broadcast_to(ri, shape).ravel())
    cols.append(np.broadcast_to(ci, shape).ravel())
    vals.append((Kc.data[:, None, None] * A[None, :, :]).ravel())

    N = 2 * q * n
    # duplicates are left in place; they sum on conversion
    return sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                         shape=(N, N))


def step_cpg(state: State, tau: float, q: int, params: ModelParams, K, w: LumpedInner,
             cfg: NewtonConfig = NewtonConfig()) -> tuple[State, SlabSolution]:
    """Advance one slab of length ``tau`` with the order-q cPG scheme."""
    check_degeneracy(1.0 - 2.0 * params.beta * np.asarray(state.p), " in the incoming state")
    res = newton_solve(
        lambda x: cpg_residual(x, state, tau, q, params, K, w),
        lambda x: cpg_jacobian(x, state, tau, q, params, K, w),
        initial_guess(state, q),
        cfg,
    )
    psi, p = _slab_values(res.x, state, q)
    slab = SlabSolution(state.time, tau, psi, p, res.iterations)
    return State(psi[-1].copy(), p[-1].copy(), state.time + tau), slab


# -- one-step (q = 1) schemes ---------------------------------------------------

def _interleave(blocks) -> sp.csr_matrix:
    """2x2 block matrix [[A, B], [C, D]] reordered node-major."""
    M = sp.coo_matrix(sp.bmat(blocks))
    n = M.shape[0] // 2
    perm = lambda idx: (idx % n) * 2 + idx // n
    return sp.csr_matrix((M.data, (perm(M.row), perm(M.col))), shape=M.shape)


def _split(x):
    X = np.asarray(x).reshape(-1, 2)
    return X[:, 0], X[:, 1]


def _q1_residual(x, state, tau, params, K, w, correction):
    psi1, p1 = _split(x)
    W, beta = w.weights, params.beta
    dpsi, dp = psi1 - state.psi, p1 - state.p
    pm = 0.5 * (state.p + p1)
    cm = 1.0 - 2.0 * beta * pm
    if beta:
        check_degeneracy(cm, " at the slab midpoint")
        check_degeneracy(1.0 - 2.0 * beta * p1, " at the new time level")
    f1 = W * cm * dp + K @ (params.alpha * dpsi + 0.5 * tau * (state.psi + psi1))
    f2 = W * cm * dpsi - tau * W * cm * pm
    if correction:
        f2 += tau * beta / 6.0 * W * dp * dp
    return np.stack([f1, f2], axis=1).ravel()


def _q1_jacobian(x, state, tau, params, K, w, correction):
    psi1, p1 = _split(x)
    W, beta = w.weights, params.beta
    dpsi, dp = psi1 - state.psi, p1 - state.p
    pm = 0.5 * (state.p + p1)
    cm = 1.0 - 2.0 * beta * pm
    d_f2_p = W * (-beta * dpsi - tau * (cm / 2.0 - beta * pm))
    if correction:
        d_f2_p += tau * beta / 3.0 * W * dp
    return _interleave([
        [(params.alpha + 0.5 * tau) * K, sp.diags(W * (cm - beta * dp))],
        [sp.diags(W * cm), sp.diags(d_f2_p)],
    ])


def _trapezoid_residual(x, state, tau, params, K, w):
    psi1, p1 = _split(x)
    W, beta, alpha = w.weights, params.beta, params.alpha
    c0 = 1.0 - 2.0 * beta * state.p
    c1 = 1.0 - 2.0 * beta * p1
    if beta:
        check_degeneracy(c1, " at the new time level")
    r0 = K @ (state.psi + alpha * state.p)
    r1 = K @ (psi1 + alpha * p1)
    g1 = W * (psi1 - state.psi - 0.5 * tau * (state.p + p1))
    g2 = W * (p1 - state.p) + 0.5 * tau * (r0 / c0 + r1 / c1)
    return np.stack([g1, g2], axis=1).ravel()


def _trapezoid_jacobian(x, state, tau, params, K, w):
    psi1, p1 = _split(x)
    W, beta, alpha = w.weights, params.beta, params.alpha
    c1 = 1.0 - 2.0 * beta * p1
    r1 = K @ (psi1 + alpha * p1)
    inv_c = sp.diags(1.0 / c1)
    return _interleave([
        [sp.diags(W), sp.diags(-0.5 * tau * W)],
        [0.5 * tau * inv_c @ K,
         sp.diags(W + tau * beta * r1 / c1**2) + 0.5 * tau * alpha * inv_c @ K],
    ])


_ONE_STEP = {
    "q1": (functools.partial(_q1_residual, correction=True),
           functools.partial(_q1_jacobian, correction=True)),
    "implicit_midpoint": (functools.partial(_q1_residual, correction=False),
                          functools.partial(_q1_jacobian, correction=False)),
    "lobatto_iiia2": (_trapezoid_residual, _trapezoid_jacobian),
}


def one_step(kind: str, state: State, tau: float, params: ModelParams, K,
             w: LumpedInner, cfg: NewtonConfig = NewtonConfig()) -> tuple[State, int]:
    """Single-step scheme selected by name; returns the new state and Newton count.

    ``kind`` is ``"q1"`` (energy-preserving), ``"implicit_midpoint"`` or
    ``"lobatto_iiia2"``.
    """
    try:
        res, jac = _ONE_STEP[kind]
    except KeyError:
        raise ValueError(f"unknown one-step scheme {kind!r}") from None
    check_degeneracy(1.0 - 2.0 * params.beta * np.asarray(state.p), " in the incoming state")
    x0 = np.stack([state.psi, state.p], axis=1).ravel()
    out = newton_solve(lambda x: res(x, state, tau, params, K, w),
                       lambda x: jac(x, state, tau, params, K, w), x0, cfg)
    psi1, p1 = _split(out.x)
    return State(psi1.copy(), p1.copy(), state.time + tau), out.iterations


def step_q1(state: State, tau: float, params: ModelParams, K, w: LumpedInner,
            cfg: NewtonConfig = NewtonConfig()) -> State:
    """Closed-form q=1 update obtained by exact slab integration.

    The nonlinear flux integral evaluates to
    ``(1 - 2 beta p_mid) p_mid - beta/6 (p1 - p0)**2``; keeping the second
    term is what makes the discrete energy exactly conserved.
    """
    return one_step("q1", state, tau, params, K, w, cfg)[0]


def baseline_implicit_midpoint(state: State, tau: float, params: ModelParams, K,
                               w: LumpedInner, cfg: NewtonConfig = NewtonConfig()) -> State:
    """One-stage Gauss Runge-Kutta step: nonlinearity sampled at the midpoint only."""
    return one_step("implicit_midpoint", state, tau, params, K, w, cfg)[0]


def baseline_lobatto_iiia2(state: State, tau: float, params: ModelParams, K,
                           w: LumpedInner, cfg: NewtonConfig = NewtonConfig()) -> State:
    """Two-stage Lobatto IIIA (trapezoidal rule) on psi' = p, p' = -K(psi + alpha p) / (w c)."""
    return one_step("lobatto_iiia2", state, tau, params, K, w, cfg)[0]
