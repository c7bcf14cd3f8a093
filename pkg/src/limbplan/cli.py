"""Command-line tools: generate scenarios, plan, simulate, sweep workspaces.

Subcommands
    gen-env      sample a tube environment        -> environment.json
    gen-task     sample a task for an environment -> task.json
    plan-stance  choose attachment sites          -> stance.json
    plan-tension distribute tensions for a wrench -> tension.json
    simulate     Monte-Carlo success-rate study   -> study.json + trials.csv
    workspace    voxel workspace comparison       -> workspace.json

Exit codes: 0 success, 1 usage or validation error, 2 infeasible problem,
3 solver hit a node/time limit. Infeasibility prints a structured JSON
reason on stdout; usage errors print a message on stderr.

Every output document embeds the tool version, the fully resolved
configuration (defaults included), and the master seed, per the envelope in
``serialize``. Units are SI throughout; angles enter only through flags with
a ``_deg`` suffix. Schemas are documented in docs/formats.md.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any, Dict, List, Optional

import numpy as np

from . import __version__, serialize
from .geometry import default_robot
from .scenario import compose_gravity, generate_environment, sample_task
from .simulation import PerturbationConfig, StudyConfig, run_study, trials_csv
from .stance import apply_pose_uncertainty, build_problem, plan
from .tension import TensionProblem, solve_tensions
from .workspace import GridParams, compare_morphologies, default_grid
from .wrench import generator_set, support_points

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INFEASIBLE = 2
EXIT_SOLVER_LIMIT = 3

_SUPPORT_DIRECTIONS = 64


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to this tool's exit code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _print_failure(error: str, message: str, **extra: Any) -> None:
    """Structured machine-readable failure reason on stdout."""
    doc = {"error": error, "message": message}
    doc.update(extra)
    print(json.dumps(serialize.jsonable(doc), sort_keys=True))


def _config_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Every resolved semantic flag; output locations are not configuration."""
    skip = {"func", "command", "out", "trials_out"}
    out = {}
    for k, v in vars(args).items():
        if k in skip:
            continue
        out[k] = list(v) if isinstance(v, tuple) else v
    return out


# ---------------------------------------------------------------------------
# Shared flag groups


def _add_robot_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("robot")
    g.add_argument("--morphology", choices=("boom", "cable"), default="boom",
                   help="boom shoulders resist bending; cables cannot")
    g.add_argument("--cone-half-angle-deg", type=float, default=60.0,
                   help="pointing cone half-angle per limb (degrees)")
    g.add_argument("--t-max", type=float, default=30.0,
                   help="tension bound per limb at quality 1 (N)")
    g.add_argument("--m-max", type=float, default=None,
                   help="shoulder moment bound (Nm); default 1 for boom, "
                        "forced to 0 for cable")
    g.add_argument("--mass", type=float, default=10.0, help="body mass (kg)")
    g.add_argument("--body-half-width", type=float, default=0.1,
                   help="half-width of the cubic body (m)")
    g.add_argument("--boom-min", type=float, default=0.5,
                   help="minimum limb extension (m)")
    g.add_argument("--boom-max", type=float, default=5.0,
                   help="maximum limb extension (m)")
    g.add_argument("--gravity", type=float, nargs=3, default=(0.0, 0.0, -3.71),
                   metavar=("GX", "GY", "GZ"),
                   help="gravity vector (m/s^2), default Mars")


def _robot_from_config(cfg: Dict[str, Any]):
    kwargs = dict(
        morphology=cfg["morphology"],
        body_half_width=float(cfg["body_half_width"]),
        cone_half_angle_deg=float(cfg["cone_half_angle_deg"]),
        t_max=float(cfg["t_max"]),
        mass=float(cfg["mass"]),
        gravity=tuple(float(g) for g in cfg["gravity"]),
        boom_min=float(cfg["boom_min"]),
        boom_max=float(cfg["boom_max"]),
    )
    if cfg.get("m_max") is not None:
        kwargs["m_max"] = float(cfg["m_max"])
    return default_robot(**kwargs)


def _robot_from_args(args: argparse.Namespace):
    return _robot_from_config(vars(args))


def _add_sigma_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma-force", type=float, nargs=3, default=(2.0, 2.0, 6.0),
                   metavar=("SX", "SY", "SZ"),
                   help="force direction weights of the task polytope (N)")
    p.add_argument("--sigma-torque", type=float, nargs=3, default=(0.5, 0.5, 0.5),
                   metavar=("SX", "SY", "SZ"),
                   help="torque direction weights of the task polytope (Nm)")


# ---------------------------------------------------------------------------
# gen-env


def cmd_gen_env(args: argparse.Namespace) -> int:
    env = generate_environment(
        seed=args.seed, n_sites=args.sites, radius=args.radius,
        length=args.length, quality_range=(args.quality_min, args.quality_max),
        t_max=args.t_max, z_min=args.z_min)
    doc = serialize.document("environment", _config_from_args(args), args.seed,
                             serialize.environment_payload(env))
    serialize.write_document(args.out, doc)
    print(args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen-task


def cmd_gen_task(args: argparse.Namespace) -> int:
    env = serialize.load_environment(args.env)
    robot = _robot_from_args(args)
    try:
        task = sample_task(args.seed, env, kind=args.kind,
                           sigma_force=tuple(args.sigma_force),
                           sigma_torque=tuple(args.sigma_torque),
                           robot=robot)
    except RuntimeError as e:
        _print_failure("infeasible", str(e), env=args.env)
        return EXIT_INFEASIBLE
    doc = serialize.document("task", _config_from_args(args), args.seed,
                             serialize.task_payload(task))
    serialize.write_document(args.out, doc)
    print(args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# plan-stance


def _support_samples(robot, env, assignment, task) -> List[Dict[str, Any]]:
    """Boundary samples of the achievable set at each task pose.

    Per pose: support points along 64 deterministic unit directions in the
    pure-force subspace (force components kept) and likewise in the
    pure-torque subspace. These are boundary points of the corresponding
    3-D projections, so a consumer can draw the projected hulls without
    touching 6-D geometry.
    """
    site_by_id = {s.id: s for s in env.sites}
    dirs3 = serialize.sphere_directions(_SUPPORT_DIRECTIONS)
    zeros = np.zeros_like(dirs3)
    force_dirs = np.hstack([dirs3, zeros])
    torque_dirs = np.hstack([zeros, dirs3])
    attached = [(b, site_by_id[sid]) for b, sid in sorted(assignment.items())]
    out = []
    for i, pt in enumerate(task.points):
        gen = generator_set(pt.pose, robot, attached)
        force = [w[:3] for w in support_points(gen, force_dirs)]
        torque = [w[3:] for w in support_points(gen, torque_dirs)]
        out.append({"point": i, "force": force, "torque": torque})
    return out


def cmd_plan_stance(args: argparse.Namespace) -> int:
    env = serialize.load_environment(args.env)
    task = serialize.load_task(args.task)
    robot = _robot_from_args(args)
    planned = compose_gravity(task, robot)
    if args.reweight_dtheta_deg > 0.0:
        planned = apply_pose_uncertainty(planned,
                                         math.radians(args.reweight_dtheta_deg))
    problem = build_problem(robot, env.sites, planned)
    pl = plan(problem, args.variant, gap_tol=args.gap_tol,
              node_limit=args.node_limit, time_limit=args.time_limit)
    if not pl.assignment:
        if pl.status in ("node_limit", "gap_limit"):
            _print_failure("solver_limit", "search budget exhausted before "
                           "any feasible stance was found", status=pl.status)
            return EXIT_SOLVER_LIMIT
        _print_failure("infeasible",
                       f"{args.variant} planner found no feasible "
                       f"{args.morphology} stance", status=pl.status)
        return EXIT_INFEASIBLE
    samples = _support_samples(robot, env, pl.assignment, planned)
    payload = serialize.stance_payload(pl, args.morphology, planned, samples)
    doc = serialize.document("stance", _config_from_args(args), None, payload)
    serialize.write_document(args.out, doc)
    print(args.out)
    if pl.status in ("node_limit", "gap_limit"):
        return EXIT_SOLVER_LIMIT
    return EXIT_OK


# ---------------------------------------------------------------------------
# plan-tension


def cmd_plan_tension(args: argparse.Namespace) -> int:
    stance_doc = serialize.load_stance(args.stance)
    env = serialize.load_environment(args.env)
    task = serialize.load_task(args.task)
    robot = _robot_from_config(stance_doc["config"])
    composed = compose_gravity(task, robot)
    if not 0 <= args.point < len(composed.points):
        raise ValueError(f"--point {args.point} out of range "
                         f"(task has {len(composed.points)} points)")
    assignment = serialize.assignment_from_payload(
        stance_doc["stance"]["assignment"], args.stance)
    site_by_id = {s.id: s for s in env.sites}
    try:
        attached = [(b, site_by_id[sid]) for b, sid in sorted(assignment.items())]
    except KeyError as e:
        raise ValueError(f"stance references unknown site id {e.args[0]}")
    pt = composed.points[args.point]
    gen = generator_set(pt.pose, robot, attached)
    problem = TensionProblem(
        generators=gen,
        pull_means=np.array([s.pull_mean for _, s in attached]),
        pull_stds=np.array([s.pull_std for _, s in attached]),
        w_des=pt.wrench)
    tp = solve_tensions(problem, grad_tol=args.grad_tol,
                        resid_tol=args.resid_tol)
    if tp.status == "infeasible":
        _print_failure("infeasible", "desired wrench is outside the "
                       "achievable set of this stance", point=args.point)
        return EXIT_INFEASIBLE
    per_boom = [
        {"boom": b, "site": s.id, "tension": tp.tensions[i],
         "pull_mean": s.pull_mean, "pull_std": s.pull_std}
        for i, (b, s) in enumerate(attached)
    ]
    doc = serialize.document("tension", _config_from_args(args), None,
                             serialize.tension_payload(tp, per_boom))
    serialize.write_document(args.out, doc)
    print(args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate


def cmd_simulate(args: argparse.Namespace) -> int:
    config = StudyConfig(
        master_seed=args.master_seed,
        n_envs=args.envs,
        trials=args.trials,
        n_sites=args.sites,
        variants=tuple(args.variants),
        morphologies=tuple(args.morphologies),
        kinds=tuple(args.kinds),
        sigma_force=tuple(args.sigma_force),
        sigma_torque=tuple(args.sigma_torque),
        perturbation=PerturbationConfig(
            wrench_sigma_scale=args.wrench_sigma_scale,
            dtheta_std=math.radians(args.dtheta_std_deg),
            position_std=args.position_std,
            pull_noise_scale=args.pull_noise_scale),
        reweight_dtheta=math.radians(args.reweight_dtheta_deg),
        gap_tol=args.gap_tol,
        plan_time_limit=args.plan_time_limit)
    report = run_study(config)
    doc = serialize.document("study", _config_from_args(args),
                             args.master_seed, serialize.study_payload(report))
    serialize.write_document(args.out, doc)
    with open(args.trials_out, "w", encoding="utf-8") as fh:
        fh.write(trials_csv(report))
    print(args.out)
    print(args.trials_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# workspace


def cmd_workspace(args: argparse.Namespace) -> int:
    env = serialize.load_environment(args.env)
    task = serialize.load_task(args.task)
    if (args.lower is None) != (args.upper is None):
        raise ValueError("--lower and --upper must be given together")
    if args.lower is not None:
        grid = GridParams(np.array(args.lower), np.array(args.upper),
                          (args.resolution,) * 3)
    else:
        grid = default_grid(env, resolution=args.resolution)
    try:
        table = compare_morphologies(
            env, task, grid, variants=tuple(args.variants),
            morphologies=tuple(args.morphologies),
            gap_tol=args.gap_tol, time_limit=args.time_limit)
    except RuntimeError as e:
        _print_failure("infeasible", str(e))
        return EXIT_INFEASIBLE
    entries = [table[(m, v)] for m in args.morphologies for v in args.variants]
    payload = serialize.workspace_payload(
        grid, task.points[0].pose.quaternion, entries)
    doc = serialize.document("workspace", _config_from_args(args), None, payload)
    serialize.write_document(args.out, doc)
    print(args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="limbplan",
                     description="Stance and tension planning for "
                                 "limbed tube-climbing robots.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("gen-env", help="sample a tube environment")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--sites", type=int, default=10, help="number of grasp sites")
    p.add_argument("--radius", type=float, default=2.5, help="tube radius (m)")
    p.add_argument("--length", type=float, default=6.0, help="tube length (m)")
    p.add_argument("--quality-min", type=float, default=0.5)
    p.add_argument("--quality-max", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=30.0,
                   help="tension bound at quality 1 (N)")
    p.add_argument("--z-min", type=float, default=None,
                   help="keep only wall sites at or above this height (m)")
    p.add_argument("--out", default="environment.json")
    p.set_defaults(func=cmd_gen_env)

    p = sub.add_parser("gen-task", help="sample a task for an environment")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--env", required=True, help="environment.json path")
    p.add_argument("--kind", choices=("single_pose", "multi_pose"),
                   default="single_pose")
    _add_sigma_flags(p)
    _add_robot_flags(p)
    p.add_argument("--out", default="task.json")
    p.set_defaults(func=cmd_gen_task)

    p = sub.add_parser("plan-stance", help="choose attachment sites")
    p.add_argument("--env", required=True, help="environment.json path")
    p.add_argument("--task", required=True, help="task.json path")
    p.add_argument("--variant", choices=("optimal", "naive"), default="optimal")
    p.add_argument("--gap-tol", type=float, default=1e-6,
                   help="relative optimality gap to stop at")
    p.add_argument("--node-limit", type=int, default=200_000)
    p.add_argument("--time-limit", type=float, default=300.0,
                   help="solve budget (s)")
    p.add_argument("--reweight-dtheta-deg", type=float, default=0.0,
                   help="orientation uncertainty driving torque re-weighting")
    _add_robot_flags(p)
    p.add_argument("--out", default="stance.json")
    p.set_defaults(func=cmd_plan_stance)

    p = sub.add_parser("plan-tension",
                       help="distribute tensions for one task point")
    p.add_argument("--env", required=True, help="environment.json path")
    p.add_argument("--task", required=True, help="task.json path")
    p.add_argument("--stance", required=True, help="stance.json path")
    p.add_argument("--point", type=int, default=0, help="task point index")
    p.add_argument("--grad-tol", type=float, default=1e-8)
    p.add_argument("--resid-tol", type=float, default=1e-6)
    p.add_argument("--out", default="tension.json")
    p.set_defaults(func=cmd_plan_tension)

    p = sub.add_parser("simulate", help="Monte-Carlo success-rate study")
    p.add_argument("--master-seed", type=int, default=0)
    p.add_argument("--envs", type=int, default=10,
                   help="environments per condition")
    p.add_argument("--trials", type=int, default=100,
                   help="trials per condition per environment")
    p.add_argument("--sites", type=int, default=10, help="sites per environment")
    p.add_argument("--variants", nargs="+", choices=("optimal", "naive"),
                   default=["optimal", "naive"])
    p.add_argument("--morphologies", nargs="+", choices=("boom", "cable"),
                   default=["boom", "cable"])
    p.add_argument("--kinds", nargs="+", choices=("single_pose", "multi_pose"),
                   default=["single_pose", "multi_pose"])
    _add_sigma_flags(p)
    p.add_argument("--wrench-sigma-scale", type=float, default=1.0,
                   help="perturbation scale on the task wrench")
    p.add_argument("--dtheta-std-deg", type=float, default=5.0,
                   help="orientation perturbation std (degrees)")
    p.add_argument("--position-std", type=float, default=0.05,
                   help="position perturbation std (m)")
    p.add_argument("--pull-noise-scale", type=float, default=1.0,
                   help="scale on per-site grasp strength noise")
    p.add_argument("--reweight-dtheta-deg", type=float, default=0.0,
                   help="torque re-weighting applied at planning time")
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--plan-time-limit", type=float, default=120.0)
    p.add_argument("--out", default="study.json")
    p.add_argument("--trials-out", default="trials.csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("workspace", help="voxel workspace comparison")
    p.add_argument("--env", required=True, help="environment.json path")
    p.add_argument("--task", required=True, help="task.json path")
    p.add_argument("--resolution", type=int, default=40,
                   help="voxels per axis")
    p.add_argument("--lower", type=float, nargs=3, default=None,
                   metavar=("X", "Y", "Z"), help="grid lower corner (m)")
    p.add_argument("--upper", type=float, nargs=3, default=None,
                   metavar=("X", "Y", "Z"), help="grid upper corner (m)")
    p.add_argument("--variants", nargs="+", choices=("optimal", "naive"),
                   default=["naive", "optimal"])
    p.add_argument("--morphologies", nargs="+", choices=("boom", "cable"),
                   default=["cable", "boom"])
    p.add_argument("--gap-tol", type=float, default=1e-6)
    p.add_argument("--time-limit", type=float, default=120.0,
                   help="stance solve budget per entry (s)")
    p.add_argument("--out", default="workspace.json")
    p.set_defaults(func=cmd_workspace)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "func"):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ValueError, OSError, json.JSONDecodeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
