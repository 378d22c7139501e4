"""Synthetic asset generators: hands, primitive objects, fixture sets."""

import json

import numpy as np
import pytest

from graspfit.fixtures import (make_box, make_cup, make_cylinder, make_hand,
                               make_icosphere, make_mug, matched_cylinder)
from graspfit.geometry import points_inside


@pytest.mark.parametrize("builder", [
    lambda: make_box((1, 2, 3), subdiv=2),
    lambda: make_cylinder(1.5, 7.0),
    lambda: make_icosphere(2.0, subdiv=2),
    lambda: make_mug(),
    lambda: make_cup(),
])
def test_primitives_are_watertight_with_positive_volume(builder):
    mesh = builder()
    assert mesh.is_watertight()
    assert mesh.volume() > 0


@pytest.mark.parametrize("pose", ["curl", "flat", "pinch"])
def test_hands_are_watertight_with_six_regions(pose):
    hand = make_hand(pose)
    assert hand.mesh.is_watertight()
    assert len(hand.contact_regions) == 6
    assert all(len(r) > 0 for r in hand.contact_regions)
    assert hand.joints.shape == (21, 3)


def test_unknown_pose_rejected():
    with pytest.raises(ValueError):
        make_hand("fist")


def test_matched_cylinder_starts_inside_the_grip():
    """The matched cylinder must start collision-free inside the finger cage."""
    hand = make_hand("curl")
    cyl = matched_cylinder()
    assert not points_inside(hand.mesh, cyl.vertices).any()
    assert not points_inside(cyl, hand.mesh.vertices).any()


def test_fixture_set_manifest_points_at_real_files(fixtures_dir):
    fx, manifest = fixtures_dir
    for pose, (obj_path, json_path) in manifest["hands"].items():
        with open(json_path) as fh:
            meta = json.load(fh)
        assert len(meta["contact_regions"]) == 6
    with open(manifest["exemplars"]) as fh:
        exemplars = json.load(fh)
    assert len(exemplars) == 3


def test_fixture_exemplars_vary_with_seed(tmp_path):
    from graspfit.fixtures import write_fixtures
    a = write_fixtures(tmp_path / "a", seed=1)
    b = write_fixtures(tmp_path / "b", seed=2)
    with open(a["exemplars"]) as fh:
        ex_a = json.load(fh)
    with open(b["exemplars"]) as fh:
        ex_b = json.load(fh)
    assert ex_a != ex_b
