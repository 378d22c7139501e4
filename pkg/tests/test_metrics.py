"""Grasp metrics: penetration measures, settling proxy, coverage, success."""

import numpy as np
import pytest

from graspfit.errors import DegenerateGeometryError
from graspfit.fixtures import make_box, make_hand, make_icosphere
from graspfit.hand import HandModel
from graspfit.mesh import Mesh
from graspfit.metrics import (MetricsReport, SimConfig, evaluate,
                              penetration_depth, penetration_volume,
                              simulation_distance)


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(timestep=0.0).validate()
    with pytest.raises(ValueError):
        SimConfig(friction=-1.0).validate()
    with pytest.raises(ValueError):
        SimConfig(max_force_depth=0.0).validate()
    SimConfig().validate()


def test_penetration_measures_zero_when_separated(curl_hand):
    far = make_box((2, 2, 2), center=(50, 0, 0), subdiv=1)
    assert penetration_depth(curl_hand, far) == 0.0
    assert penetration_volume(curl_hand, far) == 0.0


def test_penetration_measures_positive_when_overlapping(curl_hand):
    # the palm slab is a (7.6, 8, 2.5) box at (0.2, 0, 0)
    inside = make_box((1.5, 1.5, 1.5), center=(0.2, 0.0, 0.0), subdiv=1)
    assert penetration_depth(curl_hand, inside) > 0.0
    vol = penetration_volume(curl_hand, inside)
    assert vol == pytest.approx(1.5 ** 3, rel=0.2)


def test_simulated_object_must_be_watertight():
    from graspfit.errors import NonWatertightError
    box = make_box((1, 1, 1))
    holed = Mesh(box.vertices, box.faces[1:])
    far = make_box((1, 1, 1), center=(50, 0, 0))
    with pytest.raises(NonWatertightError):
        simulation_distance(far, holed)
    with pytest.raises(DegenerateGeometryError):
        inverted = Mesh(box.vertices, box.faces[:, ::-1])
        simulation_distance(far, inverted)


def test_simulation_is_deterministic_and_gravity_scales():
    far = make_box((1, 1, 1), center=(50, 0, 0))
    ball = make_icosphere(1.0, 2, center=(0, 0, 10))
    a = simulation_distance(far, ball)
    b = simulation_distance(far, ball)
    assert a == b
    half_g = SimConfig(gravity=(0.0, 0.0, -490.0))
    assert simulation_distance(far, ball, half_g) == pytest.approx(a / 2,
                                                                   rel=1e-9)


def test_evaluate_success_combines_thresholds(curl_hand):
    far = make_box((2, 2, 2), center=(50, 0, 0), subdiv=1)
    report = evaluate(curl_hand, far)
    assert isinstance(report, MetricsReport)
    assert report.penetration_depth == 0.0
    assert report.contact_region_coverage == 0
    assert not report.success  # falls: settling displacement is large
    d = report.to_dict()
    assert set(d) == {"pene_depth_cm", "pene_vox_cm3", "sd_proxy_cm",
                      "coverage", "success"}


def test_coverage_counts_regions_near_object(curl_hand):
    # a box with a vertex 0.3 cm above a palm-top vertex covers that region
    v = curl_hand.region_vertices(5)[0]
    box = make_box((1.0, 1.0, 1.0), center=tuple(v + [0.0, 0.0, 0.8]),
                   subdiv=2)
    report = evaluate(curl_hand, box)
    assert report.contact_region_coverage >= 1
