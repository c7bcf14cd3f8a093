"""Monte-Carlo validation of planned stances under task perturbations.

Each trial perturbs the task (orientation, position, wrench) and grades the
fixed, pre-planned stance in two steps. Step one asks whether every perturbed
pose/wrench pair is still inside the stance's achievable wrench set; if not
the trial is a ``geometric_failure``. Only then are risk-optimal tensions
commanded at every point and one maximum-pull strength drawn per grasp site;
if any commanded tension exceeds its site's sampled strength the trial is a
``stochastic_failure``, otherwise a ``success``. A stochastic failure can
therefore never be recorded for a geometrically infeasible trial.

The study harness sweeps randomized environments crossed with a condition
grid (planner variant x morphology x task kind), planning once per condition
and aggregating success rates with Wilson 95% confidence intervals. The same
trial seeds are reused across planner variants, and a site's sampled strength
depends only on (trial, site), so variants face identical disturbances —
comparisons between planners are paired. Everything is deterministic in the
master seed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .geometry import RobotModel, default_robot
from .scenario import (Environment, TaskSpec, compose_gravity,
                       generate_environment, sample_task)
from .stance import StancePlan, apply_pose_uncertainty, build_problem, plan
from .tension import TensionProblem, solve_tensions
from .wrench import TaskPolytope, achievable, generator_set

RESULTS = ("success", "geometric_failure", "stochastic_failure")

_KIND_CODE = {"single_pose": 0, "multi_pose": 1}
_MORPH_CODE = {"boom": 0, "cable": 1}
_TASK_STREAM = 0
_TRIAL_STREAM = 1


@dataclass(frozen=True)
class PerturbationConfig:
    """Per-point disturbance model applied to the nominal task each trial.

    ``wrench_sigma_scale`` multiplies the per-axis stds read off the task
    polytope; ``dtheta_std`` is the std of the orientation perturbation angle
    in radians (axis uniform on the sphere, angle = |Normal(0, std)|);
    ``position_std`` is meters per axis; ``pull_noise_scale`` scales the
    spread of the sampled grasp strengths (0 pins every site at its mean).
    """

    wrench_sigma_scale: float = 1.0
    dtheta_std: float = float(np.deg2rad(5.0))
    position_std: float = 0.05
    pull_noise_scale: float = 1.0

    @staticmethod
    def nominal() -> "PerturbationConfig":
        """No disturbances at all: every trial replays the certified task."""
        return PerturbationConfig(0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class TrialOutcome:
    """One graded trial; ``result`` is one of ``RESULTS``.

    ``failed_point`` is the index of the first task point that failed
    (-1 for success); ``max_tension`` is the largest commanded tension across
    points (NaN when the trial never reached the tensioning step);
    ``tensions`` holds the commanded tensions per (point, attached boom).
    """

    variant: str
    morphology: str
    kind: str
    result: str
    margin: float
    max_tension: float
    failed_point: int
    trial_seed: int
    env_seed: int
    tensions: Optional[np.ndarray] = None


def _derived_seed(*parts: int) -> int:
    """Stable, collision-resistant child seed from integer coordinates."""
    ss = np.random.SeedSequence(entropy=tuple(int(p) for p in parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _random_unit_axis(rng) -> np.ndarray:
    v = rng.normal(size=3)
    n = float(np.linalg.norm(v))
    while n < 1e-12:
        v = rng.normal(size=3)
        n = float(np.linalg.norm(v))
    return v / n


def _polytope_axis_sigmas(poly: TaskPolytope) -> np.ndarray:
    """Per-axis stds encoded by the task polytope: for each wrench axis the
    largest weight among directions dominated by that axis."""
    sig = np.zeros(6)
    axes = np.argmax(np.abs(poly.basis), axis=1)
    for k, wk in zip(axes, poly.weights):
        sig[k] = max(sig[k], float(wk))
    return sig


def _morphology_of(robot: RobotModel) -> str:
    return "cable" if robot.m_max == 0.0 else "boom"


def run_trial(env: Environment, robot: RobotModel, stance: StancePlan,
              task: TaskSpec, trial_seed: int,
              perturb: PerturbationConfig = PerturbationConfig()) -> TrialOutcome:
    """Perturb the task and grade the fixed stance.

    The stance must have been planned against ``task`` (wrenches already
    composed with any constant loads such as gravity compensation — trials
    perturb whatever they are given). Site strengths are drawn from streams
    keyed by (trial, site id), so two stances graded with the same seed face
    the same world.
    """
    ss = np.random.SeedSequence(trial_seed)
    pert_seed, pull_seed = (int(s) for s in ss.generate_state(2, dtype=np.uint64))
    rng = np.random.default_rng(pert_seed)
    sig6 = perturb.wrench_sigma_scale * _polytope_axis_sigmas(task.polytope)

    by_id = {s.id: s for s in env.sites}
    attachments = [(i, by_id[sid]) for i, sid in sorted(stance.assignment.items())]

    def outcome(result, failed_point, max_tension, tensions=None):
        return TrialOutcome(
            variant=stance.variant, morphology=_morphology_of(robot),
            kind=task.kind, result=result, margin=stance.margin,
            max_tension=max_tension, failed_point=failed_point,
            trial_seed=int(trial_seed), env_seed=env.seed, tensions=tensions)

    # Perturb every point up front so RNG consumption never depends on where
    # a failure lands (draws are scaled by the stds, so a zero-perturbation
    # config consumes the identical stream and replays the nominal task).
    points = []
    for pt in task.points:
        angle = abs(rng.normal(0.0, 1.0)) * perturb.dtheta_std
        axis = _random_unit_axis(rng)
        delta_pos = rng.normal(0.0, 1.0, 3) * perturb.position_std
        wrench = pt.wrench + rng.normal(0.0, 1.0, 6) * sig6
        points.append((pt.pose.rotated_by(axis, angle).translated_by(delta_pos),
                       wrench))

    gens = [generator_set(pose, robot, attachments) for pose, _w in points]

    for idx, (gen, (_pose, wrench)) in enumerate(zip(gens, points)):
        if not achievable(gen, wrench):
            return outcome("geometric_failure", idx, float("nan"))

    # Tensioning step: risk-optimal tensions per point against the modeled
    # grasp distributions, one realized strength per site for the whole trial.
    mu = np.array([s.pull_mean for _i, s in attachments])
    sd = np.array([s.pull_std for _i, s in attachments])
    strength = np.empty(len(attachments))
    for a, (_i, s) in enumerate(attachments):
        draw = np.random.default_rng(
            np.random.SeedSequence((pull_seed, s.id))).normal()
        strength[a] = max(0.0, s.pull_mean
                          + perturb.pull_noise_scale * s.pull_std * draw)

    tensions = np.zeros((len(points), len(attachments)))
    for idx, (gen, (_pose, wrench)) in enumerate(zip(gens, points)):
        tp = solve_tensions(TensionProblem(generators=gen, pull_means=mu,
                                           pull_stds=sd, w_des=wrench))
        if tp.tensions is None:
            # The feasibility LP accepted this wrench but the tension solver
            # could not produce a point (numerical edge): attribute it
            # geometrically, the conservative direction.
            return outcome("geometric_failure", idx, float("nan"))
        tensions[idx] = tp.tensions

    max_tension = float(tensions.max()) if tensions.size else 0.0
    for idx in range(len(points)):
        if np.any(tensions[idx] > strength):
            return outcome("stochastic_failure", idx, max_tension, tensions)
    return outcome("success", -1, max_tension, tensions)


# ---------------------------------------------------------------------------
# Study harness


@dataclass(frozen=True)
class StudyConfig:
    """Condition grid and budgets for one Monte-Carlo study.

    ``trials`` is per condition per environment. ``reweight_dtheta`` (radians)
    optionally grows torque weights before planning; grading always uses the
    original task.
    """

    master_seed: int = 0
    n_envs: int = 10
    trials: int = 100
    n_sites: int = 10
    variants: Tuple[str, ...] = ("optimal", "naive")
    morphologies: Tuple[str, ...] = ("boom", "cable")
    kinds: Tuple[str, ...] = ("single_pose", "multi_pose")
    sigma_force: Tuple[float, float, float] = (2.0, 2.0, 6.0)
    sigma_torque: Tuple[float, float, float] = (0.5, 0.5, 0.5)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    reweight_dtheta: float = 0.0
    gap_tol: float = 1e-6
    plan_time_limit: float = 120.0


@dataclass
class ConditionStats:
    """Aggregated counts for one (variant, morphology, kind) cell."""

    variant: str
    morphology: str
    kind: str
    trials: int
    success: int
    geometric_failure: int
    stochastic_failure: int
    success_rate: float
    ci_low: float
    ci_high: float
    environments: int
    excluded_envs: Tuple[int, ...]


@dataclass
class PlanRecord:
    """One planner invocation inside a study."""

    env_seed: int
    variant: str
    morphology: str
    kind: str
    status: str
    margin: float
    assignment: Dict[int, int]
    seconds: float


@dataclass
class StudyReport:
    config: StudyConfig
    conditions: List[ConditionStats]
    outcomes: List[TrialOutcome]
    plans: List[PlanRecord]
    wall_time_s: float


def wilson_interval(successes: int, trials: int,
                    z: float = 1.959963984540054) -> Tuple[float, float]:
    """95% (by default) binomial confidence interval, Wilson score form."""
    if trials <= 0:
        return (0.0, 1.0)
    p = successes / trials
    zz = z * z
    denom = 1.0 + zz / trials
    center = (p + zz / (2.0 * trials)) / denom
    half = z * np.sqrt(p * (1.0 - p) / trials + zz / (4.0 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def run_study(config: StudyConfig = StudyConfig()) -> StudyReport:
    """Plan once per (environment, condition), grade ``config.trials`` trials.

    Conditions whose planner reports infeasibility in an environment are
    excluded from that cell's rates and listed in ``excluded_envs``.
    """
    t_start = time.perf_counter()
    env_seeds = [int(s) for s in np.random.SeedSequence(config.master_seed)
                 .generate_state(config.n_envs, dtype=np.uint32)]
    robots = {m: default_robot(morphology=m) for m in config.morphologies}

    outcomes: List[TrialOutcome] = []
    plans: List[PlanRecord] = []
    excluded: Dict[Tuple[str, str, str], List[int]] = {}

    for e, env_seed in enumerate(env_seeds):
        env = generate_environment(env_seed, n_sites=config.n_sites)
        for kind in config.kinds:
            for morph in config.morphologies:
                robot = robots[morph]
                task_seed = _derived_seed(config.master_seed, e,
                                          _KIND_CODE[kind], _MORPH_CODE[morph],
                                          _TASK_STREAM)
                try:
                    raw = sample_task(task_seed, env, kind=kind,
                                      sigma_force=config.sigma_force,
                                      sigma_torque=config.sigma_torque,
                                      robot=robot)
                except RuntimeError:
                    # The sampler's feasibility guard exhausted its retries:
                    # this environment cannot host the condition at all.
                    for variant in config.variants:
                        plans.append(PlanRecord(
                            env_seed=env_seed, variant=variant,
                            morphology=morph, kind=kind,
                            status="task_infeasible", margin=-np.inf,
                            assignment={}, seconds=0.0))
                        excluded.setdefault((variant, morph, kind),
                                            []).append(env_seed)
                    continue
                task = compose_gravity(raw, robot)
                plan_task = (apply_pose_uncertainty(task, config.reweight_dtheta)
                             if config.reweight_dtheta > 0.0 else task)
                problem = build_problem(robot, env.sites, plan_task)
                trial_seeds = [
                    _derived_seed(config.master_seed, e, _KIND_CODE[kind],
                                  _MORPH_CODE[morph], _TRIAL_STREAM, t)
                    for t in range(config.trials)]
                for variant in config.variants:
                    t0 = time.perf_counter()
                    pl = plan(problem, variant, gap_tol=config.gap_tol,
                              time_limit=config.plan_time_limit)
                    seconds = time.perf_counter() - t0
                    plans.append(PlanRecord(
                        env_seed=env_seed, variant=variant, morphology=morph,
                        kind=kind, status=pl.status, margin=pl.margin,
                        assignment=dict(pl.assignment), seconds=seconds))
                    if pl.margin == -np.inf or not pl.assignment:
                        excluded.setdefault((variant, morph, kind),
                                            []).append(env_seed)
                        continue
                    for tseed in trial_seeds:
                        outcomes.append(run_trial(env, robot, pl, task, tseed,
                                                  config.perturbation))

    conditions: List[ConditionStats] = []
    for variant in config.variants:
        for morph in config.morphologies:
            for kind in config.kinds:
                sub = [o for o in outcomes
                       if (o.variant, o.morphology, o.kind) == (variant, morph, kind)]
                n = len(sub)
                succ = sum(o.result == "success" for o in sub)
                geo = sum(o.result == "geometric_failure" for o in sub)
                sto = sum(o.result == "stochastic_failure" for o in sub)
                lo, hi = wilson_interval(succ, n)
                bad = tuple(excluded.get((variant, morph, kind), ()))
                conditions.append(ConditionStats(
                    variant=variant, morphology=morph, kind=kind, trials=n,
                    success=succ, geometric_failure=geo, stochastic_failure=sto,
                    success_rate=(succ / n if n else 0.0), ci_low=lo, ci_high=hi,
                    environments=config.n_envs - len(bad),
                    excluded_envs=bad))

    return StudyReport(config=config, conditions=conditions, outcomes=outcomes,
                       plans=plans, wall_time_s=time.perf_counter() - t_start)


def trials_csv(report: StudyReport) -> str:
    """Flat one-row-per-trial CSV (the plotting component's input)."""
    lines = ["trial_id,env_seed,variant,morphology,kind,result,margin,max_tension"]
    for k, o in enumerate(report.outcomes):
        margin = f"{o.margin:.12g}"
        mt = "" if np.isnan(o.max_tension) else f"{o.max_tension:.12g}"
        lines.append(f"{k},{o.env_seed},{o.variant},{o.morphology},{o.kind},"
                     f"{o.result},{margin},{mt}")
    return "\n".join(lines) + "\n"
