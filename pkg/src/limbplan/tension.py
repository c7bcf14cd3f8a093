"""Risk-aware tension distribution for a fixed stance.

Maximizes sum_i log Phi((mu_i - t_i) / sigma_i) — the log of the joint
probability that no commanded tension exceeds its grasp's maximum pull force —
subject to exact wrench equality and box bounds. The objective is smooth and
concave, so a feasible-start log-barrier Newton method on the equality
null space finds the global optimum; an LP supplies the strictly interior
start (and detects infeasible wrenches). Shoulder-moment slacks enter the
equality system with zero objective weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import erfc

from .geometry import TORQUE
from .opt.linprog import LinearProgram, solve_lp
from .wrench import GeneratorSet

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)
_SQRT2 = math.sqrt(2.0)
_SERIES_CUT = -20.0
_SERIES_TERMS = 12
_PIN_TOL = 1e-12
_RANK_TOL = 1e-10

# (2k-1)!! for k = 1.._SERIES_TERMS
_DOUBLE_FACT = np.cumprod(np.arange(1, 2 * _SERIES_TERMS, 2, dtype=float))


def log_gaussian_cdf(x):
    """log Phi(x), numerically stable across [-40, 40] (scalar or array).

    Three regimes: an asymptotic tail expansion far below zero (where erfc
    underflows), the direct complementary-error-function form on [-20, 0],
    and log1p of the upper tail for x > 0 (avoiding 1 - tiny cancellation).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xa = np.atleast_1d(x)
    out = np.empty_like(xa)

    tail = xa < _SERIES_CUT
    if np.any(tail):
        y = -xa[tail]
        inv_y2 = 1.0 / (y * y)
        s = np.ones_like(y)
        term_sign = -1.0
        p = inv_y2.copy()
        for k in range(_SERIES_TERMS):
            s += term_sign * _DOUBLE_FACT[k] * p
            term_sign = -term_sign
            p *= inv_y2
        out[tail] = -0.5 * y * y - _LOG_SQRT_2PI - np.log(y) + np.log(s)

    mid = (~tail) & (xa <= 0.0)
    if np.any(mid):
        out[mid] = np.log(0.5 * erfc(-xa[mid] / _SQRT2))

    pos = xa > 0.0
    if np.any(pos):
        out[pos] = np.log1p(-0.5 * erfc(xa[pos] / _SQRT2))

    return float(out[0]) if scalar else out


def _hazard(z):
    """phi(z) / Phi(z), stable for very negative z (grows like -z)."""
    z = np.asarray(z, dtype=float)
    log_phi = -0.5 * z * z - _LOG_SQRT_2PI
    return np.exp(log_phi - log_gaussian_cdf(z))


def objective(t, pull_means, pull_stds):
    """Value and gradient of sum log Phi((mu - t) / sigma) at tensions t."""
    t = np.asarray(t, dtype=float)
    mu = np.asarray(pull_means, dtype=float)
    sigma = np.asarray(pull_stds, dtype=float)
    z = (mu - t) / sigma
    value = float(np.sum(log_gaussian_cdf(z)))
    grad = -_hazard(z) / sigma
    return value, grad


def _objective_hessian_diag(t, mu, sigma):
    z = (mu - t) / sigma
    r = _hazard(z)
    return (-z * r - r * r) / (sigma * sigma)


@dataclass(frozen=True)
class TensionProblem:
    """Fixed stance generators, per-boom pull-force models, desired wrench."""

    generators: GeneratorSet
    pull_means: np.ndarray
    pull_stds: np.ndarray
    w_des: np.ndarray

    def __post_init__(self):
        n = self.generators.n
        mu = np.asarray(self.pull_means, dtype=float).ravel()
        sigma = np.asarray(self.pull_stds, dtype=float).ravel()
        w = np.asarray(self.w_des, dtype=float).reshape(6)
        if mu.shape != (n,) or sigma.shape != (n,):
            raise ValueError("pull model arrays must match the generator count")
        if np.any(sigma <= 0):
            raise ValueError("pull_stds must be positive")
        if np.any(mu <= 0):
            raise ValueError("pull_means must be positive")
        for arr, name in ((mu, "pull_means"), (sigma, "pull_stds"), (w, "w_des")):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be finite")
            arr.setflags(write=False)
        object.__setattr__(self, "pull_means", mu)
        object.__setattr__(self, "pull_stds", sigma)
        object.__setattr__(self, "w_des", w)


@dataclass
class TensionPlan:
    """status: optimal | boundary (feasible set has empty interior; the
    returned point is feasible but not certified stationary) | infeasible."""

    status: str
    tensions: Optional[np.ndarray]
    torque_slack: Optional[np.ndarray]
    log_success: float
    residual: float
    converged: bool
    newton_iterations: int = 0


def _kkt_certified(x, g, A, lo, hi, grad_tol, comp_budget=1e-8):
    """KKT certificate at x for max f s.t. Ax=b, lo<=x<=hi, by LP.

    Searches for equality multipliers y and bound multipliers z >= 0 that make
    the stationarity residual q + A^T y - z_lo + z_hi small (q = -g), where
    each z is capped by comp_budget / bound-distance so that the certified
    point carries a complementarity (duality-gap) contribution of at most
    comp_budget per bound. Certifies when the smallest achievable residual is
    within grad_tol scaled by the gradient magnitude.
    """
    q = -g
    tol = grad_tol * (1.0 + float(np.linalg.norm(g)))
    nf = x.size
    m = A.shape[0]
    d_lo = np.maximum(x - lo, 1e-300)
    d_hi = np.maximum(hi - x, 1e-300)
    cap_lo = np.minimum(comp_budget / d_lo, 1e300)
    cap_hi = np.minimum(comp_budget / d_hi, 1e300)

    # Variables [y (m, free), z_lo (nf), z_hi (nf), s]; maximize -s subject to
    # |q + A^T y - z_lo + z_hi| <= s componentwise.
    nv = m + 2 * nf + 1
    rows = np.zeros((2 * nf, nv))
    rhs = np.zeros(2 * nf)
    At = A.T
    for i in range(nf):
        r = np.zeros(nv)
        r[:m] = At[i]
        r[m + i] = -1.0
        r[m + nf + i] = 1.0
        r[-1] = -1.0
        rows[2 * i] = r
        rhs[2 * i] = -q[i]
        rows[2 * i + 1] = -r
        rows[2 * i + 1, -1] = -1.0
        rhs[2 * i + 1] = q[i]
    c = np.zeros(nv)
    c[-1] = -1.0
    lo_v = np.concatenate([np.full(m, -np.inf), np.zeros(2 * nf + 1)])
    hi_v = np.concatenate([np.full(m, np.inf), cap_lo, cap_hi, [np.inf]])
    lp = LinearProgram(c=c, A_ub=rows, b_ub=rhs, lo=lo_v, hi=hi_v)
    rep = solve_lp(lp)
    return rep.status == "optimal" and -rep.objective <= tol


def _interior_start(A, b, lo, hi):
    """Max-margin LP start: returns (status, x, margin)."""
    nf = A.shape[1]
    c = np.zeros(nf + 1)
    c[-1] = 1.0
    A_eq = np.hstack([A, np.zeros((A.shape[0], 1))])
    rows = []
    rhs = []
    for j in range(nf):
        rj = np.zeros(nf + 1)
        rj[j] = -1.0
        rj[-1] = 1.0
        rows.append(rj)
        rhs.append(-lo[j])
        rj = np.zeros(nf + 1)
        rj[j] = 1.0
        rj[-1] = 1.0
        rows.append(rj)
        rhs.append(hi[j])
    lp = LinearProgram(
        c=c,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        A_eq=A_eq,
        b_eq=b,
        lo=np.concatenate([lo, [0.0]]),
        hi=np.concatenate([hi, [np.inf]]),
    )
    rep = solve_lp(lp)
    if rep.status != "optimal":
        return "infeasible", None, 0.0
    return "ok", rep.x[:nf], float(rep.objective)


def solve_tensions(problem: TensionProblem, grad_tol: float = 1e-8,
                   resid_tol: float = 1e-6, barrier_tol: float = 1e-9) -> TensionPlan:
    """Globally optimal tensions for the concave success-probability program."""
    gen = problem.generators
    n = gen.n
    mu = problem.pull_means
    sigma = problem.pull_stds
    w = problem.w_des

    # Variables x = [t_1..t_n, tau_x, tau_y, tau_z].
    box = gen.torque_halfwidth
    A = np.zeros((6, n + 3))
    if n:
        A[:, :n] = gen.matrix()
    A[TORQUE, n:] = np.eye(3)
    lo = np.concatenate([np.zeros(n), np.full(3, -box)])
    hi = np.concatenate([gen.upper_bounds(), np.full(3, box)])

    # Pin zero-width variables (cables: the whole torque box) and move them
    # to the right-hand side.
    pinned = (hi - lo) <= _PIN_TOL
    x_full = np.zeros(n + 3)
    x_full[pinned] = 0.5 * (lo[pinned] + hi[pinned])
    free = np.flatnonzero(~pinned)
    Af = A[:, free]
    bf = w - A[:, pinned] @ x_full[pinned]

    def finish(x_free, status, converged, iters):
        x = x_full.copy()
        if x_free is not None:
            x[free] = x_free
        t = x[:n]
        tau = x[n:]
        resid = float(np.linalg.norm(A @ x - w))
        value = float(np.sum(log_gaussian_cdf((mu - t) / sigma))) if n else 0.0
        return TensionPlan(status=status, tensions=t, torque_slack=tau,
                           log_success=value, residual=resid,
                           converged=converged, newton_iterations=iters)

    if free.size == 0:
        if np.linalg.norm(A @ x_full - w) <= resid_tol:
            return finish(None, "optimal", True, 0)
        return TensionPlan("infeasible", None, None, -np.inf, np.inf, False)

    free_is_tension = free < n
    mu_f = mu[free[free_is_tension]]
    sigma_f = sigma[free[free_is_tension]]
    lof = lo[free]
    hif = hi[free]

    def value_grad(xf):
        val = 0.0
        g = np.zeros(xf.size)
        if mu_f.size:
            tf = xf[free_is_tension]
            zf = (mu_f - tf) / sigma_f
            val = float(np.sum(log_gaussian_cdf(zf)))
            g[free_is_tension] = -_hazard(zf) / sigma_f
        return val, g

    def hess_diag(xf):
        h = np.zeros(xf.size)
        if mu_f.size:
            h[free_is_tension] = _objective_hessian_diag(xf[free_is_tension], mu_f, sigma_f)
        return h

    st, x0, margin = _interior_start(Af, bf, lof, hif)
    if st == "infeasible":
        return TensionPlan("infeasible", None, None, -np.inf, np.inf, False)
    if margin <= 1e-9:
        # Feasible set has an empty interior; the max-margin vertex may still
        # be the optimum (e.g. a unique feasible point), so try to certify it.
        _, g0 = value_grad(x0)
        if _kkt_certified(x0, g0, Af, lof, hif, grad_tol):
            return finish(x0, "optimal", True, 0)
        return finish(x0, "boundary", False, 0)

    # Null-space parameterization of {x : Af x = bf}; dependent equality rows
    # fall out of the SVD automatically.
    N = scipy.linalg.null_space(Af, rcond=_RANK_TOL)
    if N.shape[1] == 0:
        # Unique feasible point: nothing to optimize over.
        return finish(x0, "optimal", True, 0)

    x = x0.copy()
    m_terms = 2 * x.size
    bar_mu = 1.0
    total_newton = 0
    converged = False
    while True:
        # Center for the current barrier weight until the projected barrier
        # gradient meets the certificate we will report at the end.
        inner_tol = max(0.1 * bar_mu, 0.5 * grad_tol)
        for _ in range(60):
            val, g = value_grad(x)
            gb = g + bar_mu * (1.0 / (x - lof) - 1.0 / (hif - x))
            gv = N.T @ gb
            if float(np.linalg.norm(gv)) <= inner_tol:
                break
            total_newton += 1
            hb = hess_diag(x) - bar_mu * (1.0 / (x - lof) ** 2 + 1.0 / (hif - x) ** 2)
            Hv = (N.T * hb) @ N
            try:
                L = scipy.linalg.cho_factor(-Hv)
                dv = scipy.linalg.cho_solve(L, gv)
            except scipy.linalg.LinAlgError:
                ridge = 1e-10 * (1.0 + np.abs(np.diag(Hv)).max())
                dv = scipy.linalg.solve(-(Hv - ridge * np.eye(Hv.shape[0])), gv,
                                        assume_a="pos")
            decrement = float(gv @ dv)
            if not np.isfinite(decrement) or decrement <= 0.0:
                break
            dx = N @ dv
            alpha = 1.0
            # Stay strictly inside the box, then Armijo on the barrier value.
            for _ in range(80):
                xn = x + alpha * dx
                if np.all(xn > lof) and np.all(xn < hif):
                    break
                alpha *= 0.5
            else:
                break

            def bar_value(xq):
                v, _ = value_grad(xq)
                return v + bar_mu * float(np.sum(np.log(xq - lof) + np.log(hif - xq)))

            f0 = bar_value(x)
            for _ in range(60):
                xn = x + alpha * dx
                if bar_value(xn) >= f0 + 1e-4 * alpha * decrement:
                    break
                alpha *= 0.5
            else:
                break
            x = x + alpha * dx
        if m_terms * bar_mu <= barrier_tol:
            _, g = value_grad(x)
            converged = _kkt_certified(x, g, Af, lof, hif, grad_tol)
            break
        bar_mu *= 0.2

    plan = finish(x, "optimal", converged, total_newton)
    if plan.residual > resid_tol:
        plan.converged = False
    return plan


def success_probability(plan: TensionPlan, problem: TensionProblem) -> float:
    """Joint probability that no commanded tension exceeds its pull capacity."""
    if plan.tensions is None:
        return 0.0
    z = (problem.pull_means - plan.tensions) / problem.pull_stds
    return float(np.exp(np.sum(log_gaussian_cdf(z))))
