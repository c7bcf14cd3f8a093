"""Document layer: number rules, envelopes, payload round-trips, bitmaps."""

import json

import numpy as np
import pytest

from limbplan import serialize
from limbplan.geometry import Pose
from limbplan.scenario import generate_environment, sample_task


def test_jsonable_number_rules():
    out = serialize.jsonable({
        "pi": np.float64(3.14159265358979323846),
        "big": 1.0e300,
        "neg_inf": float("-inf"),
        "inf": float("inf"),
        "nan": float("nan"),
        "int": np.int64(7),
        "bool": np.bool_(True),
        "vec": np.array([1.0, 0.5]),
    })
    assert out["pi"] == float("3.14159265359")
    assert out["neg_inf"] == "-inf" and out["inf"] == "inf" and out["nan"] == "nan"
    assert out["int"] == 7 and isinstance(out["int"], int)
    assert out["bool"] is True
    assert out["vec"] == [1.0, 0.5]


def test_parse_number_inverts_sentinels():
    assert serialize.parse_number("inf", "x") == float("inf")
    assert serialize.parse_number("-inf", "x") == float("-inf")
    assert np.isnan(serialize.parse_number("nan", "x"))
    assert serialize.parse_number(2.5, "x") == 2.5
    with pytest.raises(ValueError):
        serialize.parse_number("seven", "x")
    with pytest.raises(ValueError):
        serialize.parse_number(True, "x")


def test_dumps_is_deterministic_and_sorted():
    doc = {"b": [3.0, float("inf")], "a": {"z": 1, "y": np.array([2.0])}}
    s1 = serialize.dumps(doc)
    s2 = serialize.dumps({"a": {"y": np.array([2.0]), "z": 1}, "b": [3.0, float("inf")]})
    assert s1 == s2
    assert s1.endswith("\n")
    assert json.loads(s1)["a"] == {"y": [2.0], "z": 1}


def test_environment_payload_roundtrip():
    env = generate_environment(seed=11, n_sites=9)
    payload = json.loads(serialize.dumps(serialize.environment_payload(env)))
    back = serialize.environment_from_payload(payload, "t")
    assert back.radius == pytest.approx(env.radius)
    assert back.seed == env.seed
    assert len(back.sites) == 9
    for a, b in zip(env.sites, back.sites):
        assert b.id == a.id
        np.testing.assert_allclose(b.position, a.position, rtol=1e-11)
        assert b.quality == pytest.approx(a.quality, rel=1e-11)
        assert b.pull_mean == pytest.approx(a.pull_mean, rel=1e-11)


def test_task_payload_roundtrip():
    env = generate_environment(seed=11, n_sites=9)
    task = sample_task(5, env, kind="multi_pose")
    payload = json.loads(serialize.dumps(serialize.task_payload(task)))
    back = serialize.task_from_payload(payload, "t")
    assert back.kind == task.kind
    assert len(back.points) == len(task.points)
    for a, b in zip(task.points, back.points):
        np.testing.assert_allclose(b.wrench, a.wrench, rtol=1e-11)
        np.testing.assert_allclose(b.pose.position, a.pose.position, rtol=1e-11)
        np.testing.assert_allclose(b.pose.quaternion, a.pose.quaternion,
                                   rtol=0, atol=1e-11)
    np.testing.assert_allclose(back.polytope.basis, task.polytope.basis,
                               rtol=0, atol=1e-11)
    np.testing.assert_allclose(back.polytope.weights, task.polytope.weights,
                               rtol=1e-11)


def test_unknown_keys_rejected_at_every_level():
    env = generate_environment(seed=11, n_sites=3)
    payload = json.loads(serialize.dumps(serialize.environment_payload(env)))
    bad = dict(payload, extra=1)
    with pytest.raises(ValueError, match="extra"):
        serialize.environment_from_payload(bad, "t")
    bad = json.loads(serialize.dumps(payload))
    bad["sites"][0]["colour"] = "red"
    with pytest.raises(ValueError, match="colour"):
        serialize.environment_from_payload(bad, "t")


def test_document_envelope_checked(tmp_path):
    env = generate_environment(seed=11, n_sites=3)
    doc = serialize.document("environment", {"seed": 11}, 11,
                             serialize.environment_payload(env))
    path = tmp_path / "env.json"
    serialize.write_document(str(path), doc)
    loaded = serialize.load_document(str(path), "environment")
    assert loaded["version"] == doc["version"]
    assert loaded["seed"] == 11

    with pytest.raises(ValueError, match="kind"):
        serialize.load_document(str(path), "task")

    raw = json.loads(path.read_text())
    raw["surprise"] = True
    path.write_text(json.dumps(raw))
    with pytest.raises(ValueError, match="surprise"):
        serialize.load_document(str(path), "environment")


@pytest.mark.parametrize("shape", [(4, 4, 4), (3, 5, 7), (1, 1, 9)])
def test_bitmap_roundtrip(shape):
    rng = np.random.default_rng(hash(shape) % (2**32))
    flags = rng.random(shape) < 0.4
    payload = serialize.bitmap_payload(flags)
    assert payload["shape"] == list(shape)
    back = serialize.bitmap_from_payload(json.loads(json.dumps(payload)), "t")
    np.testing.assert_array_equal(back, flags)


def test_sphere_directions_are_unit_and_spread():
    dirs = serialize.sphere_directions(64)
    assert dirs.shape == (64, 3)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    # Deterministic and well-spread: every octant of the sphere is hit.
    np.testing.assert_array_equal(dirs, serialize.sphere_directions(64))
    octants = {tuple(d >= 0) for d in dirs}
    assert len(octants) == 8
