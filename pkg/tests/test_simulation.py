"""Trial grading and study aggregation.

Fixtures pin environment parameters explicitly so these tests are insensitive
to default tweaks; the expensive planned-stance fixture is shared per module.
"""

import dataclasses

import numpy as np
import pytest
import scipy.stats

from limbplan.geometry import GraspSite, Pose, RobotModel, default_robot
from limbplan.scenario import (Environment, TaskPoint, TaskSpec, compose_gravity,
                               generate_environment, sample_task)
from limbplan.simulation import (
    PerturbationConfig,
    StudyConfig,
    _polytope_axis_sigmas,
    run_study,
    run_trial,
    trials_csv,
    wilson_interval,
)
from limbplan.stance import build_problem, plan
from limbplan.wrench import TaskPolytope, inscribed_margin, generator_set


@pytest.fixture(scope="module")
def fixture_scene():
    """A feasible multi-pose scene with planned optimal and naive stances."""
    env = generate_environment(12, n_sites=10, quality_range=(0.5, 1.0))
    robot = default_robot()
    raw = sample_task(1012, env, kind="multi_pose", robot=robot)
    task = compose_gravity(raw, robot)
    problem = build_problem(robot, env.sites, task)
    optimal = plan(problem, "optimal")
    naive = plan(problem, "naive")
    assert optimal.margin > 0.5  # the scene must stay comfortably feasible
    return env, robot, task, optimal, naive


def test_nominal_replay_succeeds(fixture_scene):
    env, robot, task, optimal, _naive = fixture_scene
    for seed in (0, 123, 9_999):
        out = run_trial(env, robot, optimal, task, seed, PerturbationConfig.nominal())
        assert out.result == "success"
        assert out.failed_point == -1
        assert np.isfinite(out.max_tension)
        assert out.tensions is not None and out.tensions.shape[0] == len(task.points)
        assert out.variant == "optimal"
        assert out.morphology == "boom"
        assert out.kind == "multi_pose"
        assert out.env_seed == env.seed
        assert out.margin == optimal.margin


def _directional_headroom(gen, wrench, poly, k):
    """Largest feasible step along the polytope's k-th weighted direction."""
    single = TaskPolytope(basis=poly.basis[k : k + 1], weights=poly.weights[k : k + 1])
    return inscribed_margin(gen, wrench, single)


def test_overshoot_past_margin_is_geometric_failure(fixture_scene):
    env, robot, task, optimal, _naive = fixture_scene
    by_id = {s.id: s for s in env.sites}
    attachments = [(i, by_id[sid]) for i, sid in sorted(optimal.assignment.items())]

    # The stance's margin is the worst directional headroom across points and
    # polytope directions; find that binding (point, direction) pair.
    best = None
    for p_idx, pt in enumerate(task.points):
        gen = generator_set(pt.pose, robot, attachments)
        for k in range(task.polytope.p):
            headroom = _directional_headroom(gen, pt.wrench, task.polytope, k)
            if best is None or headroom < best[0]:
                best = (headroom, p_idx, k)
    headroom, p_idx, k = best
    assert headroom == pytest.approx(optimal.margin, abs=1e-5)

    step = task.polytope.weights[k] * task.polytope.basis[k]

    def shifted(scale):
        points = list(task.points)
        pt = points[p_idx]
        points[p_idx] = TaskPoint(pt.pose, pt.wrench + scale * step)
        return TaskSpec(points=tuple(points), polytope=task.polytope, kind=task.kind)

    inside = run_trial(env, robot, optimal, shifted(headroom - 1e-2), 5,
                       PerturbationConfig.nominal())
    assert inside.result != "geometric_failure"

    outside = run_trial(env, robot, optimal, shifted(headroom + 1e-2), 5,
                        PerturbationConfig.nominal())
    assert outside.result == "geometric_failure"
    assert outside.failed_point == p_idx
    assert np.isnan(outside.max_tension)
    assert outside.tensions is None


def _single_boom_scene(pull_mean):
    robot = RobotModel(
        attachment_points=np.zeros((1, 3)),
        cone_axes=np.array([[1.0, 0.0, 0.0]]),
        cone_half_angle=np.deg2rad(60.0),
        t_max=30.0,
        m_max=0.0,
        mass=5.0,
        gravity=np.array([0.0, 0.0, -3.71]),
    )
    site = GraspSite(id=0, position=np.array([2.0, 0.0, 0.0]), quality=1.0,
                     pull_mean=pull_mean, pull_std=1e-6)
    env = Environment(sites=(site,), radius=2.5, length=6.0, seed=0)
    wrench = np.array([20.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    poly = TaskPolytope.axis_aligned(np.full(3, 1e-3), np.full(3, 1e-3))
    task = TaskSpec(points=(TaskPoint(Pose.identity(), wrench),),
                    polytope=poly, kind="single_pose")
    stance = plan(build_problem(robot, env.sites, task), "optimal")
    assert stance.assignment == {0: 0}
    return env, robot, task, stance


def test_weak_grasp_is_stochastic_failure():
    # The only achievable tension (20 N) exceeds the site's pinned strength.
    env, robot, task, stance = _single_boom_scene(pull_mean=15.0)
    out = run_trial(env, robot, stance, task, 3, PerturbationConfig.nominal())
    assert out.result == "stochastic_failure"
    assert out.failed_point == 0
    assert out.max_tension == pytest.approx(20.0, abs=1e-6)


def test_strong_grasp_succeeds():
    env, robot, task, stance = _single_boom_scene(pull_mean=25.0)
    out = run_trial(env, robot, stance, task, 3, PerturbationConfig.nominal())
    assert out.result == "success"
    assert out.max_tension == pytest.approx(20.0, abs=1e-6)


def test_failures_respect_two_step_structure(fixture_scene):
    env, robot, task, optimal, naive = fixture_scene
    seen = set()
    for stance in (optimal, naive):
        for seed in range(40):
            out = run_trial(env, robot, stance, task, seed)
            seen.add(out.result)
            if out.result == "geometric_failure":
                # never tensioned: the stochastic step must not have run
                assert np.isnan(out.max_tension)
                assert out.tensions is None
                assert out.failed_point >= 0
            elif out.result == "stochastic_failure":
                assert np.isfinite(out.max_tension)
                assert out.tensions is not None
                assert out.failed_point >= 0
            else:
                assert out.result == "success"
                assert out.failed_point == -1
    assert seen == {"success", "geometric_failure", "stochastic_failure"}


def test_trial_determinism_and_order_independence(fixture_scene):
    env, robot, task, optimal, _naive = fixture_scene

    def key(out):
        mt = None if np.isnan(out.max_tension) else round(out.max_tension, 12)
        return (out.result, out.failed_point, mt)

    forward = {s: key(run_trial(env, robot, optimal, task, s)) for s in range(12)}
    scrambled_order = [7, 0, 11, 3, 9, 1, 5, 10, 2, 8, 4, 6]
    backward = {s: key(run_trial(env, robot, optimal, task, s))
                for s in scrambled_order}
    assert forward == backward


def test_pull_noise_scale_only_affects_stochastic_step(fixture_scene):
    env, robot, task, optimal, _naive = fixture_scene
    for seed in range(20):
        noisy = run_trial(env, robot, optimal, task, seed,
                          PerturbationConfig(pull_noise_scale=1.0))
        quiet = run_trial(env, robot, optimal, task, seed,
                          PerturbationConfig(pull_noise_scale=0.0))
        # identical perturbation stream: the geometric verdict cannot differ
        assert ((noisy.result == "geometric_failure")
                == (quiet.result == "geometric_failure"))
        if np.isfinite(noisy.max_tension):
            assert noisy.max_tension == pytest.approx(quiet.max_tension, abs=1e-9)


def test_compose_gravity_shifts_wrenches_only():
    robot = default_robot()
    env = generate_environment(4, n_sites=6, quality_range=(0.5, 1.0))
    raw = sample_task(77, env, kind="multi_pose", robot=robot)
    task = compose_gravity(raw, robot)
    assert task.kind == raw.kind
    assert task.polytope is raw.polytope
    for before, after in zip(raw.points, task.points):
        assert after.pose is before.pose
        assert after.wrench[:3] == pytest.approx(before.wrench[:3] - robot.mass * robot.gravity)
        assert after.wrench[3:] == pytest.approx(before.wrench[3:])


def test_polytope_axis_sigmas_reads_weights_per_axis():
    poly = TaskPolytope.axis_aligned(np.array([2.0, 2.0, 6.0]), np.array([0.5, 0.5, 0.5]))
    assert _polytope_axis_sigmas(poly) == pytest.approx([2.0, 2.0, 6.0, 0.5, 0.5, 0.5])


def test_wilson_interval_against_scipy():
    for succ, n in ((80, 100), (0, 40), (40, 40), (3, 7), (999, 1000)):
        lo, hi = wilson_interval(succ, n)
        ref = scipy.stats.binomtest(succ, n).proportion_ci(confidence_level=0.95,
                                                           method="wilson")
        assert lo == pytest.approx(ref.low, abs=1e-12)
        assert hi == pytest.approx(ref.high, abs=1e-12)
        assert 0.0 <= lo <= succ / n <= hi <= 1.0
    assert wilson_interval(0, 0) == (0.0, 1.0)


@pytest.fixture(scope="module")
def mini_report():
    cfg = StudyConfig(master_seed=3, n_envs=2, trials=5, n_sites=10)
    return cfg, run_study(cfg)


def test_study_counts_and_rates(mini_report):
    cfg, rep = mini_report
    assert len(rep.conditions) == 8
    assert len(rep.plans) == cfg.n_envs * 8
    for c in rep.conditions:
        assert c.success + c.geometric_failure + c.stochastic_failure == c.trials
        assert c.trials == c.environments * cfg.trials
        assert c.environments == cfg.n_envs - len(c.excluded_envs)
        assert 0.0 <= c.success_rate <= 1.0
        if c.trials:
            assert c.ci_low <= c.success_rate <= c.ci_high
    assert sum(c.trials for c in rep.conditions) == len(rep.outcomes)
    assert rep.wall_time_s > 0.0


def test_study_excluded_conditions_are_recorded(mini_report):
    cfg, rep = mini_report
    infeasible = [p for p in rep.plans if p.margin == -np.inf]
    by_cell = {}
    for p in infeasible:
        by_cell.setdefault((p.variant, p.morphology, p.kind), []).append(p.env_seed)
    for c in rep.conditions:
        expect = sorted(by_cell.get((c.variant, c.morphology, c.kind), []))
        assert sorted(c.excluded_envs) == expect


def test_study_deterministic(mini_report):
    cfg, rep = mini_report
    rep2 = run_study(cfg)
    assert len(rep.outcomes) == len(rep2.outcomes)
    for a, b in zip(rep.outcomes, rep2.outcomes):
        assert (a.result, a.failed_point, a.trial_seed, a.env_seed) == \
            (b.result, b.failed_point, b.trial_seed, b.env_seed)
        assert (a.margin, a.variant, a.morphology, a.kind) == \
            (b.margin, b.variant, b.morphology, b.kind)
        if np.isnan(a.max_tension):
            assert np.isnan(b.max_tension)
        else:
            assert a.max_tension == b.max_tension
    assert rep.conditions == rep2.conditions


def test_trials_csv_recount_matches_report(mini_report):
    _cfg, rep = mini_report
    csv = trials_csv(rep)
    lines = csv.strip().split("\n")
    assert lines[0] == "trial_id,env_seed,variant,morphology,kind,result,margin,max_tension"
    assert len(lines) - 1 == len(rep.outcomes)
    counts = {}
    for line in lines[1:]:
        trial_id, env_seed, variant, morphology, kind, result, margin, mt = line.split(",")
        counts.setdefault((variant, morphology, kind), []).append(result)
        if result == "geometric_failure":
            assert mt == ""
        else:
            assert float(mt) >= 0.0
    for c in rep.conditions:
        rows = counts.get((c.variant, c.morphology, c.kind), [])
        assert len(rows) == c.trials
        assert rows.count("success") == c.success
        assert rows.count("geometric_failure") == c.geometric_failure
        assert rows.count("stochastic_failure") == c.stochastic_failure


def test_nominal_guarantee_mini_study():
    cfg = StudyConfig(master_seed=3, n_envs=2, trials=4, n_sites=10,
                      kinds=("single_pose",),
                      perturbation=PerturbationConfig.nominal())
    rep = run_study(cfg)
    graded = [c for c in rep.conditions if c.trials > 0]
    assert graded, "nominal study graded nothing"
    for c in graded:
        assert c.success_rate == 1.0
        assert c.geometric_failure == 0
        assert c.stochastic_failure == 0
