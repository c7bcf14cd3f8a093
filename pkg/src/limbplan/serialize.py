"""JSON document layer shared by the command-line tools and their consumers.

Every file the tools emit uses one envelope::

    {
      "config":  {...},          # every semantic parameter, defaults included
      "kind":    "environment",  # document kind; also the payload key below
      "seed":    7,              # master seed driving the run (null if none)
      "tool":    "limbplan",
      "version": "0.1.0",
      "<kind>":  {...}           # the payload
    }

Serialization rules (see docs/formats.md for the field-by-field schemas):

* numbers carry 12 significant digits; non-finite values are the strings
  ``"inf"``, ``"-inf"``, ``"nan"``;
* arrays are row-major nested lists;
* voxel bitmaps are packed bits, base64-encoded, C order;
* keys are emitted sorted, so a rerun at the same seed is byte-identical.

Readers are strict: an unknown key anywhere in a document is an error, so
schema drift fails loudly instead of being silently ignored.
"""

from __future__ import annotations

import base64
import json
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from .geometry import Pose
from .scenario import Environment, GraspSite, TaskPoint, TaskSpec
from .wrench import TaskPolytope

TOOL_NAME = "limbplan"

_ENVELOPE_KEYS = ("config", "kind", "seed", "tool", "version")


# ---------------------------------------------------------------------------
# Number and array formatting


def round12(x: float) -> float:
    """Value re-parsed from its 12-significant-digit rendering.

    Rounding before json.dumps keeps emitted digit strings short and stable;
    repr of the re-parsed float is the shortest round-tripping literal.
    """
    return float(f"{x:.12g}")


def jsonable(obj: Any) -> Any:
    """Recursively convert to plain JSON types under the document rules."""
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if not isinstance(k, str):
                k = str(k)
            out[k] = jsonable(v)
        return out
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return round12(x)
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def parse_number(v: Any, where: str) -> float:
    """Inverse of the number rule: floats pass, sentinel strings map back."""
    if isinstance(v, bool):
        raise ValueError(f"{where}: expected a number, got a bool")
    if isinstance(v, (int, float)):
        return float(v)
    if v == "inf":
        return float("inf")
    if v == "-inf":
        return float("-inf")
    if v == "nan":
        return float("nan")
    raise ValueError(f"{where}: expected a number, got {v!r}")


def dumps(doc: Mapping[str, Any]) -> str:
    return json.dumps(jsonable(doc), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# Envelope


def document(kind: str, config: Mapping[str, Any], seed: Optional[int],
             payload: Mapping[str, Any]) -> Dict[str, Any]:
    return {
        "tool": TOOL_NAME,
        "version": __version__,
        "kind": kind,
        "seed": seed,
        "config": dict(config),
        kind: payload,
    }


def write_document(path: str, doc: Mapping[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(doc))


def check_keys(mapping: Mapping[str, Any], allowed: Iterable[str],
               where: str, required: Optional[Iterable[str]] = None) -> None:
    """Reject unknown keys; optionally require a subset to be present."""
    allowed = set(allowed)
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ValueError(f"{where}: unknown keys {unknown}")
    missing = sorted(set(required if required is not None else allowed)
                     - set(mapping))
    if missing:
        raise ValueError(f"{where}: missing keys {missing}")


def load_document(path: str, kind: str) -> Dict[str, Any]:
    """Parse and envelope-check a document; returns the full dict."""
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: document must be a JSON object")
    if doc.get("tool") != TOOL_NAME:
        raise ValueError(f"{path}: not a {TOOL_NAME} document")
    if doc.get("kind") != kind:
        raise ValueError(f"{path}: kind {doc.get('kind')!r}, expected {kind!r}")
    check_keys(doc, set(_ENVELOPE_KEYS) | {kind}, path)
    return doc


# ---------------------------------------------------------------------------
# Vectors and poses


def _vector(v: Any, n: int, where: str) -> np.ndarray:
    if not isinstance(v, list) or len(v) != n:
        raise ValueError(f"{where}: expected a list of {n} numbers")
    return np.array([parse_number(x, where) for x in v])


def pose_payload(pose: Pose) -> Dict[str, Any]:
    return {"position": pose.position, "quaternion_wxyz": pose.quaternion}


def pose_from_payload(d: Mapping[str, Any], where: str) -> Pose:
    check_keys(d, ("position", "quaternion_wxyz"), where)
    return Pose(_vector(d["position"], 3, where + ".position"),
                _vector(d["quaternion_wxyz"], 4, where + ".quaternion_wxyz"))


# ---------------------------------------------------------------------------
# Environment


def environment_payload(env: Environment) -> Dict[str, Any]:
    return {
        "radius": env.radius,
        "length": env.length,
        "seed": env.seed,
        "sites": [
            {"id": s.id, "position": s.position, "quality": s.quality,
             "pull_mean": s.pull_mean, "pull_std": s.pull_std}
            for s in env.sites
        ],
    }


def environment_from_payload(d: Mapping[str, Any], where: str) -> Environment:
    check_keys(d, ("radius", "length", "seed", "sites"), where)
    sites = []
    if not isinstance(d["sites"], list):
        raise ValueError(f"{where}.sites: expected a list")
    for k, s in enumerate(d["sites"]):
        sw = f"{where}.sites[{k}]"
        check_keys(s, ("id", "position", "quality", "pull_mean", "pull_std"), sw)
        sites.append(GraspSite(
            id=int(s["id"]),
            position=_vector(s["position"], 3, sw + ".position"),
            quality=parse_number(s["quality"], sw + ".quality"),
            pull_mean=parse_number(s["pull_mean"], sw + ".pull_mean"),
            pull_std=parse_number(s["pull_std"], sw + ".pull_std"),
        ))
    return Environment(radius=parse_number(d["radius"], where + ".radius"),
                       length=parse_number(d["length"], where + ".length"),
                       sites=tuple(sites),
                       seed=int(d["seed"]))


def load_environment(path: str) -> Environment:
    doc = load_document(path, "environment")
    return environment_from_payload(doc["environment"], path)


# ---------------------------------------------------------------------------
# Task


def polytope_payload(poly: TaskPolytope) -> Dict[str, Any]:
    return {"basis": poly.basis, "weights": poly.weights}


def polytope_from_payload(d: Mapping[str, Any], where: str) -> TaskPolytope:
    check_keys(d, ("basis", "weights"), where)
    if not isinstance(d["basis"], list) or not isinstance(d["weights"], list):
        raise ValueError(f"{where}: basis and weights must be lists")
    basis = np.array([_vector(row, 6, f"{where}.basis[{i}]")
                      for i, row in enumerate(d["basis"])])
    weights = np.array([parse_number(wv, f"{where}.weights[{i}]")
                        for i, wv in enumerate(d["weights"])])
    if basis.shape[0] != weights.shape[0]:
        raise ValueError(f"{where}: basis and weights lengths differ")
    return TaskPolytope(basis=basis, weights=weights)


def task_payload(task: TaskSpec) -> Dict[str, Any]:
    return {
        "kind": task.kind,
        "points": [{"pose": pose_payload(pt.pose), "wrench": pt.wrench}
                   for pt in task.points],
        "polytope": polytope_payload(task.polytope),
    }


def task_from_payload(d: Mapping[str, Any], where: str) -> TaskSpec:
    check_keys(d, ("kind", "points", "polytope"), where)
    if not isinstance(d["points"], list) or not d["points"]:
        raise ValueError(f"{where}.points: expected a non-empty list")
    points = []
    for k, p in enumerate(d["points"]):
        pw = f"{where}.points[{k}]"
        check_keys(p, ("pose", "wrench"), pw)
        points.append(TaskPoint(pose=pose_from_payload(p["pose"], pw + ".pose"),
                                wrench=_vector(p["wrench"], 6, pw + ".wrench")))
    return TaskSpec(points=tuple(points),
                    polytope=polytope_from_payload(d["polytope"],
                                                   where + ".polytope"),
                    kind=str(d["kind"]))


def load_task(path: str) -> TaskSpec:
    doc = load_document(path, "task")
    return task_from_payload(doc["task"], path)


# ---------------------------------------------------------------------------
# Stance

_REPORT_FIELDS = ("status", "objective", "nodes", "best_bound", "gap",
                  "wall_time_s", "iterations")


def solver_payload(report) -> Optional[Dict[str, Any]]:
    if report is None:
        return None
    return {k: getattr(report, k) for k in _REPORT_FIELDS}


def stance_payload(plan, morphology: str, planned_task: TaskSpec,
                   support_samples: List[Dict[str, Any]]) -> Dict[str, Any]:
    """Stance document payload.

    ``planned_task`` is the task as the planner saw it (gravity composed,
    torque weights re-weighted), so the emitted polytope matches the margin.
    ``tensions`` axes are (attached boom ascending, polytope vertex, pose);
    ``torque_slack`` axes are (torque axis, polytope vertex, pose).
    """
    return {
        "morphology": morphology,
        "variant": plan.variant,
        "status": plan.status,
        "margin": plan.margin,
        "assignment": {str(b): int(s) for b, s in sorted(plan.assignment.items())},
        "tensions": plan.tensions,
        "torque_slack": plan.torque_slack,
        "solver": solver_payload(plan.report),
        "task": {
            "wrenches": [pt.wrench for pt in planned_task.points],
            "polytope": polytope_payload(planned_task.polytope),
        },
        "support_samples": support_samples,
    }


def assignment_from_payload(d: Mapping[str, Any], where: str) -> Dict[int, int]:
    out = {}
    for k, v in d.items():
        try:
            boom = int(k)
        except ValueError:
            raise ValueError(f"{where}: boom index {k!r} is not an integer")
        out[boom] = int(v)
    return out


def load_stance(path: str) -> Dict[str, Any]:
    """Stance document: returns the full doc after strict payload checks."""
    doc = load_document(path, "stance")
    d = doc["stance"]
    check_keys(d, ("morphology", "variant", "status", "margin", "assignment",
                   "tensions", "torque_slack", "solver", "task",
                   "support_samples"), path)
    return doc


# ---------------------------------------------------------------------------
# Tension


def tension_payload(tplan, per_boom: List[Dict[str, Any]]) -> Dict[str, Any]:
    return {
        "status": tplan.status,
        "tensions": tplan.tensions,
        "torque_slack": tplan.torque_slack,
        "log_success": tplan.log_success,
        "residual": tplan.residual,
        "converged": tplan.converged,
        "newton_iterations": tplan.newton_iterations,
        "per_boom": per_boom,
    }


# ---------------------------------------------------------------------------
# Study


def study_payload(report) -> Dict[str, Any]:
    conditions = []
    for c in report.conditions:
        conditions.append({
            "variant": c.variant,
            "morphology": c.morphology,
            "kind": c.kind,
            "trials": c.trials,
            "success": c.success,
            "geometric_failure": c.geometric_failure,
            "stochastic_failure": c.stochastic_failure,
            "success_rate": c.success_rate,
            "ci_low": c.ci_low,
            "ci_high": c.ci_high,
            "environments": c.environments,
            "excluded_envs": list(c.excluded_envs),
        })
    plans = []
    for p in report.plans:
        plans.append({
            "env_seed": p.env_seed,
            "variant": p.variant,
            "morphology": p.morphology,
            "kind": p.kind,
            "status": p.status,
            "margin": p.margin,
            "assignment": {str(b): int(s) for b, s in sorted(p.assignment.items())},
            "seconds": p.seconds,
        })
    return {"wall_time_s": report.wall_time_s,
            "conditions": conditions,
            "plans": plans}


# ---------------------------------------------------------------------------
# Workspace voxel grids


def bitmap_payload(flags: np.ndarray) -> Dict[str, Any]:
    """Boolean voxel grid as packed bits, base64, C order."""
    arr = np.asarray(flags, dtype=bool)
    data = base64.b64encode(np.packbits(arr.ravel(order="C"))).decode("ascii")
    return {"encoding": "base64-packbits", "order": "C",
            "shape": list(arr.shape), "data": data}


def bitmap_from_payload(d: Mapping[str, Any], where: str) -> np.ndarray:
    check_keys(d, ("encoding", "order", "shape", "data"), where)
    if d["encoding"] != "base64-packbits" or d["order"] != "C":
        raise ValueError(f"{where}: unsupported bitmap encoding")
    shape = tuple(int(n) for n in d["shape"])
    count = int(np.prod(shape))
    raw = np.frombuffer(base64.b64decode(d["data"]), dtype=np.uint8)
    bits = np.unpackbits(raw, count=count)
    return bits.astype(bool).reshape(shape)


def int_grid_payload(values: np.ndarray) -> Dict[str, Any]:
    """Small-integer voxel grid (e.g. torque ranks 0..3) as base64 int8."""
    arr = np.asarray(values, dtype=np.int8)
    data = base64.b64encode(arr.ravel(order="C").tobytes()).decode("ascii")
    return {"encoding": "base64-int8", "order": "C",
            "shape": list(arr.shape), "data": data}


def workspace_entry_payload(entry) -> Dict[str, Any]:
    ws = entry.workspace
    st = entry.stance
    return {
        "morphology": entry.morphology,
        "variant": entry.variant,
        "status": st.status,
        "margin": st.margin,
        "assignment": {str(b): int(s) for b, s in sorted(st.assignment.items())},
        "volumes": ws.volumes(),
        "counts": {"geometry": int(ws.geometry.sum()),
                   "equilibrium": int(ws.equilibrium.sum()),
                   "closure": int(ws.closure.sum())},
        "flags": {"geometry": bitmap_payload(ws.geometry),
                  "equilibrium": bitmap_payload(ws.equilibrium),
                  "closure": bitmap_payload(ws.closure)},
        "torque_rank": int_grid_payload(ws.torque_rank),
    }


def workspace_payload(grid, orientation: np.ndarray,
                      entries: Sequence) -> Dict[str, Any]:
    return {
        "grid": {"lower": grid.lower, "upper": grid.upper,
                 "resolution": list(grid.resolution),
                 "voxel_volume": grid.voxel_volume},
        "orientation_wxyz": orientation,
        "entries": [workspace_entry_payload(e) for e in entries],
    }


# ---------------------------------------------------------------------------
# Support-point sampling directions


def sphere_directions(n: int) -> np.ndarray:
    """Deterministic near-uniform unit directions (Fibonacci lattice), (n, 3)."""
    if n < 1:
        raise ValueError("need at least one direction")
    k = np.arange(n, dtype=float)
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    phi = 2.0 * np.pi * k / golden
    dirs = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
