"""Object codes: box-ratio construction, validation, rescaling."""

import numpy as np
import pytest

from graspfit.codes import ObjectCode, compute_object_code, rescale_to_code
from graspfit.fixtures import make_box


def test_code_of_box_matches_analytic_ratios():
    box = make_box((3.0, 4.5, 6.0), subdiv=1)
    bone = 4.0
    code = compute_object_code(box, bone)
    assert code.x == pytest.approx([3.0 / bone, 4.5 / 3.0, 6.0 / 4.5],
                                   rel=1e-9)


def test_code_validation():
    with pytest.raises(ValueError):
        ObjectCode(np.array([0.5, -1.0, 1.2]))
    with pytest.raises(ValueError):
        ObjectCode(np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        compute_object_code(make_box((1, 2, 3)), b=0.0)


def test_extents_scale_with_bone_length():
    code = ObjectCode(np.array([0.5, 1.5, 2.0]))
    e = code.extents(4.0)
    assert e == pytest.approx([2.0, 3.0, 6.0])
    assert np.all(np.diff(e) >= 0)
    assert code.extents(8.0) == pytest.approx(2 * e)


def test_rescale_hits_target_extents():
    box = make_box((1.0, 2.0, 5.0), subdiv=2)
    target = ObjectCode(np.array([0.75, 1.2, 1.1]))
    bone = 4.0
    scaled = rescale_to_code(box, target, bone)
    lo, hi = scaled.aabb()
    assert np.sort(hi - lo) == pytest.approx(target.extents(bone), rel=1e-9)
    assert compute_object_code(scaled, bone).x == pytest.approx(target.x,
                                                                abs=1e-9)
