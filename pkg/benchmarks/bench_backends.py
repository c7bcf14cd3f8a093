"""Compare the compiled and pure-numpy simplex backends on shared workloads.

Usage:
    python3 benchmarks/bench_backends.py [--full]

The kernel binds at import time, so this script re-executes itself in a
subprocess per backend (with LIMBPLAN_BACKEND set) and prints a side-by-side
table. Results must agree across backends — the table includes that check.
``--full`` adds the larger 30-site stance instance (slow on the numpy
backend, which exists for portability rather than speed).
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


# --------------------------------------------------------------------------
# Workloads (run inside the per-backend worker process)


def _random_box_lp(rng):
    n = int(rng.integers(2, 7))
    m_ub = int(rng.integers(1, 6))
    lo = rng.uniform(-3.0, 0.0, n)
    hi = lo + rng.uniform(0.5, 4.0, n)
    A_ub = rng.normal(0.0, 1.0, (m_ub, n))
    if rng.integers(0, 2):
        x0 = rng.uniform(lo, hi)
        b_ub = A_ub @ x0 + rng.uniform(0.05, 1.5, m_ub)
    else:
        b_ub = rng.normal(0.0, 1.0, m_ub)
    c = rng.normal(0.0, 1.0, n)
    return dict(c=c, A_ub=A_ub, b_ub=b_ub, lo=lo, hi=hi)


def run_lp_battery(n_instances=400):
    from limbplan.opt.linprog import LinearProgram, canonicalize
    from limbplan.opt import core

    rng = np.random.default_rng(7)
    problems = [_random_box_lp(rng) for _ in range(n_instances)]
    canon = [canonicalize(LinearProgram(**kw))[:5] for kw in problems]
    t0 = time.perf_counter()
    total_obj = 0.0
    optimal = 0
    iters = 0
    for A, b, c, lo, hi in canon:
        status, x, obj, it, _basis, _vstat = core.kernel.cold_solve(A, b, c, lo, hi)
        iters += it
        if status == core.OPTIMAL:
            optimal += 1
            total_obj += obj
    return {
        "seconds": time.perf_counter() - t0,
        "optimal": optimal,
        "objective_sum": total_obj,
        "iterations": iters,
    }


def run_stance(env_seed, n_sites, task_seed, kind):
    from limbplan.geometry import default_robot, gravity_wrench
    from limbplan.scenario import TaskPoint, TaskSpec, generate_environment, sample_task
    from limbplan.stance import build_problem, plan

    robot = default_robot()
    w_gc = gravity_wrench(robot)
    env = generate_environment(env_seed, n_sites=n_sites)
    task = sample_task(task_seed, env, kind=kind)
    shifted = TaskSpec(
        points=tuple(TaskPoint(pt.pose, pt.wrench - w_gc) for pt in task.points),
        polytope=task.polytope, kind=task.kind)
    problem = build_problem(robot, env.sites, shifted)
    t0 = time.perf_counter()
    pl = plan(problem, "optimal")
    seconds = time.perf_counter() - t0
    return {
        "seconds": seconds,
        "margin": pl.margin,
        "nodes": pl.report.nodes,
        "iterations": pl.report.iterations,
    }


def worker(full):
    from limbplan.opt import core

    out = {"backend": core.BACKEND, "workloads": {}}
    out["workloads"]["lp battery (400 solves)"] = run_lp_battery()
    out["workloads"]["stance: 10 sites, 4 poses"] = run_stance(12, 10, 1012, "multi_pose")
    if full:
        out["workloads"]["stance: 30 sites, 1 pose"] = run_stance(21, 30, 2030, "single_pose")
    cache = getattr(core.kernel, "warm_cache_stats", None)
    if cache is not None and (cache["hit"] or cache["miss"]):
        out["warm_cache_hit_rate"] = cache["hit"] / (cache["hit"] + cache["miss"])
    print(json.dumps(out))


# --------------------------------------------------------------------------
# Orchestrator


def run_backend(backend, full):
    env = dict(os.environ, LIMBPLAN_BACKEND=backend)
    cmd = [sys.executable, os.path.abspath(__file__), "--worker"]
    if full:
        cmd.append("--full")
    proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{backend} worker failed:\n{proc.stderr}")
    data = json.loads(proc.stdout.strip().splitlines()[-1])
    if data["backend"] != backend:
        raise RuntimeError(
            f"asked for backend {backend!r} but worker bound {data['backend']!r} "
            "(is the compiled extension built?)")
    return data


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--full", action="store_true",
                    help="include the 30-site stance instance (slow in numpy)")
    ap.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = ap.parse_args()
    if args.worker:
        worker(args.full)
        return

    results = {b: run_backend(b, args.full) for b in ("python", "cython")}
    names = list(results["python"]["workloads"].keys())

    print(f"{'workload':<28}{'python':>12}{'cython':>12}{'speedup':>10}")
    print("-" * 62)
    agree = True
    for name in names:
        py = results["python"]["workloads"][name]
        cy = results["cython"]["workloads"][name]
        speed = py["seconds"] / cy["seconds"] if cy["seconds"] > 0 else float("inf")
        print(f"{name:<28}{py['seconds']:>11.2f}s{cy['seconds']:>11.2f}s{speed:>9.1f}x")
        for key in ("margin", "objective_sum", "optimal"):
            if key in py and abs(py[key] - cy[key]) > 1e-6 * (1 + abs(py[key])):
                agree = False
                print(f"  !! {key} differs: python={py[key]!r} cython={cy[key]!r}")
    print("-" * 62)
    hit = results["cython"].get("warm_cache_hit_rate")
    if hit is not None:
        print(f"cython warm-start cache hit rate: {hit:.0%}")
    print("results agree across backends" if agree
          else "RESULT MISMATCH — see lines above")
    if not agree:
        sys.exit(1)


if __name__ == "__main__":
    main()
