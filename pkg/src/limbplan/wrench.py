"""Achievable wrench sets and task polytopes.

The wrench set of a stance is a zonotope (Minkowski sum of the tension
segments t_i * g_i, 0 <= t_i <= u_i) plus an l-inf torque box of half-width
m_max * attached_count that models the small bending moment each attached boom
shoulder can resist (cables: m_max = 0). Containment and inscribed-margin
queries are answered by small LPs, never by explicit 6-D hulls.

Units are raw newtons / newton-metres inside each 6-vector; task-polytope
weights carry the normalization between the two blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple

import numpy as np

from .geometry import FORCE, TORQUE, GraspSite, Pose, RobotModel, boom_generator
from .opt import core
from .opt.linprog import solve_canonical

_UNIT_TOL = 1e-9


def _readonly(a):
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GeneratorSet:
    """Wrench generators of one stance at one pose.

    generators: tuple of (g_i, u_i) pairs — unit-force-direction wrench
    generator and tension upper bound u_i = t_max * q_j in newtons.
    m_max: shoulder bending-moment bound per attached boom (Nm).
    attached_count: number of attached booms (defaults to len(generators)).
    """

    generators: Tuple[Tuple[np.ndarray, float], ...]
    m_max: float
    attached_count: int = -1

    def __post_init__(self):
        gens = []
        for g, u in self.generators:
            g = _readonly(np.asarray(g, dtype=float).reshape(6))
            u = float(u)
            if u < 0:
                raise ValueError("tension upper bound must be >= 0")
            if abs(np.linalg.norm(g[FORCE]) - 1.0) > _UNIT_TOL:
                raise ValueError("generator force part must have unit norm")
            gens.append((g, u))
        object.__setattr__(self, "generators", tuple(gens))
        if self.m_max < 0:
            raise ValueError("m_max must be >= 0")
        count = self.attached_count
        if count < 0:
            count = len(gens)
        object.__setattr__(self, "attached_count", int(count))

    @property
    def n(self) -> int:
        return len(self.generators)

    @property
    def torque_halfwidth(self) -> float:
        return self.m_max * self.attached_count

    def matrix(self) -> np.ndarray:
        """Generator matrix G whose columns are the unit-force g_i."""
        if not self.generators:
            return np.zeros((6, 0))
        return np.column_stack([g for g, _ in self.generators])

    def upper_bounds(self) -> np.ndarray:
        return np.array([u for _, u in self.generators])


@dataclass(frozen=True)
class TaskPolytope:
    """Convex hull directions B_k (unit 6-vectors) with positive weights."""

    basis: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2 or B.shape[1] != 6 or B.shape[0] < 1:
            raise ValueError("basis must be a (p, 6) array with p >= 1")
        norms = np.linalg.norm(B, axis=1)
        if np.any(np.abs(norms - 1.0) > _UNIT_TOL):
            raise ValueError("every basis direction must be a unit vector")
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape != (B.shape[0],):
            raise ValueError("weights must match the number of basis directions")
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
        object.__setattr__(self, "basis", _readonly(B))
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def p(self) -> int:
        return self.basis.shape[0]

    def torque_mask(self) -> np.ndarray:
        """True where a basis direction lives mostly in the torque block."""
        tsq = np.sum(self.basis[:, TORQUE] ** 2, axis=1)
        return tsq > 0.5

    @staticmethod
    def axis_aligned(force_weights, torque_weights) -> "TaskPolytope":
        """The 12 signed axis directions +-e_k, ordered (+e0, -e0, +e1, ...)."""
        fw = np.asarray(force_weights, dtype=float).ravel()
        tw = np.asarray(torque_weights, dtype=float).ravel()
        if fw.shape != (3,) or tw.shape != (3,):
            raise ValueError("force/torque weights must each have 3 entries")
        basis = []
        weights = []
        for k in range(6):
            e = np.zeros(6)
            e[k] = 1.0
            wk = fw[k] if k < 3 else tw[k - 3]
            basis.extend([e, -e])
            weights.extend([wk, wk])
        return TaskPolytope(basis=np.array(basis), weights=np.array(weights))


def generator_set(pose: Pose, model: RobotModel,
                  attachments: Iterable[Tuple[int, GraspSite]]) -> GeneratorSet:
    """GeneratorSet for the booms attached at the given pose.

    attachments: (boom_index, site) pairs. Length/cone feasibility is not
    checked here — planners prune infeasible pairs and the simulator probes
    perturbed poses on purpose.
    """
    gens = []
    for boom_idx, site in attachments:
        g, _ = boom_generator(pose, model.attachment_points[boom_idx], site.position)
        gens.append((g, model.t_max * site.quality))
    return GeneratorSet(generators=tuple(gens), m_max=model.m_max)


def _stance_arrays(gen: GeneratorSet, extra_cols: int = 0):
    """Equality system [G | torque-box columns | extras] with row scaling.

    Returns (A, lo, hi, scale) where A is 6 x (n + 3 + extra_cols) and scale
    holds the per-row divisors applied (callers must scale rhs the same way).
    """
    n = gen.n
    A = np.zeros((6, n + 3 + extra_cols))
    if n:
        A[:, :n] = gen.matrix()
    A[TORQUE, n:n + 3] = np.eye(3)
    box = gen.torque_halfwidth
    lo = np.concatenate([np.zeros(n), np.full(3, -box), np.zeros(extra_cols)])
    hi = np.concatenate([gen.upper_bounds(), np.full(3, box), np.zeros(extra_cols)])
    scale = np.abs(A).max(axis=1, initial=0.0)
    scale[scale < 1e-300] = 1.0
    A /= scale[:, None]
    return A, lo, hi, scale


def achievable(gen: GeneratorSet, w) -> bool:
    """Whether w lies in the achievable wrench set (LP feasibility)."""
    w = np.asarray(w, dtype=float).reshape(6)
    A, lo, hi, scale = _stance_arrays(gen)
    c = np.zeros(A.shape[1])
    status, *_ = solve_canonical(A, w / scale, c, lo, hi)
    return status == core.OPTIMAL


def inscribed_margin(gen: GeneratorSet, w_des, poly: TaskPolytope) -> float:
    """Largest z such that w_des + z * sigma_k * B_k is achievable for every k.

    Returns -inf when w_des itself is unachievable.
    """
    w_des = np.asarray(w_des, dtype=float).reshape(6)
    A, lo, hi, scale = _stance_arrays(gen, extra_cols=1)
    ncols = A.shape[1]
    c = np.zeros(ncols)
    c[-1] = 1.0
    lo[-1] = 0.0
    hi[-1] = np.inf
    b = w_des / scale
    z_star = np.inf
    for k in range(poly.p):
        A[:, -1] = -(poly.weights[k] * poly.basis[k]) / scale
        status, _, obj, *_ = solve_canonical(A, b, c, lo, hi)
        if status == core.INFEASIBLE:
            return -np.inf
        if status != core.OPTIMAL:
            raise RuntimeError(f"margin LP ended with status {status}")
        z_star = min(z_star, obj)
        if z_star <= 0.0:
            # Boundary point: no direction can do worse than 0 once one hits it.
            return max(z_star, 0.0)
    return float(z_star)


def scale_torque_weights(poly: TaskPolytope, dtheta_norm: float) -> TaskPolytope:
    """Re-weight torque directions for pose uncertainty.

    lambda = 1 + |sigma_F| * dtheta / |sigma_tau| (exactly 1 at dtheta = 0);
    force-direction weights are preserved untouched.
    """
    if dtheta_norm < 0:
        raise ValueError("dtheta_norm must be >= 0")
    tmask = poly.torque_mask()
    s_tau = float(np.linalg.norm(poly.weights[tmask]))
    if s_tau <= 0.0 or not np.any(tmask):
        raise ValueError("polytope has no torque-weighted directions")
    if dtheta_norm == 0.0:
        return poly
    s_f = float(np.linalg.norm(poly.weights[~tmask]))
    lam = 1.0 + s_f * dtheta_norm / s_tau
    w = poly.weights.copy()
    w[tmask] *= lam
    return TaskPolytope(basis=poly.basis.copy(), weights=w)


def support_points(gen: GeneratorSet, directions: Sequence) -> list:
    """Achievable wrench maximizing d . w for each unit direction d.

    Closed form for a zonotope-plus-box: include u_i g_i wherever
    d . (u_i g_i) > 0, and push the torque slack to the box corner sign(d_tau).
    """
    out = []
    box = gen.torque_halfwidth
    for d in directions:
        d = np.asarray(d, dtype=float).reshape(6)
        if abs(np.linalg.norm(d) - 1.0) > 1e-6:
            raise ValueError("directions must be unit vectors")
        w = np.zeros(6)
        for g, u in gen.generators:
            if d @ (u * g) > 0.0:
                w += u * g
        w[TORQUE] += box * np.sign(d[TORQUE])
        out.append(w)
    return out


def sampled_ellipsoid_margin(gen: GeneratorSet, w_des, sigma, n_samples: int = 64,
                             seed: int = 0) -> float:
    """Diagnostic: min over sampled unit directions of the largest rho with
    w_des + rho * (sigma ⊙ d) achievable. Logged alongside the polytope margin;
    no claims are made about their relation."""
    sigma = np.asarray(sigma, dtype=float).reshape(6)
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_samples, 6))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    w_des = np.asarray(w_des, dtype=float).reshape(6)
    A, lo, hi, scale = _stance_arrays(gen, extra_cols=1)
    c = np.zeros(A.shape[1])
    c[-1] = 1.0
    lo[-1] = 0.0
    hi[-1] = np.inf
    b = w_des / scale
    rho_min = np.inf
    for d in dirs:
        A[:, -1] = -(sigma * d) / scale
        status, _, obj, *_ = solve_canonical(A, b, c, lo, hi)
        if status == core.INFEASIBLE:
            return -np.inf
        if status != core.OPTIMAL:
            raise RuntimeError(f"ellipsoid margin LP ended with status {status}")
        rho_min = min(rho_min, obj)
    return float(rho_min)
