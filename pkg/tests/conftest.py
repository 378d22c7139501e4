"""Shared fixtures for the test suite.

The grasp fits are expensive (seconds each), so the three 10-seed fit
batches used by the end-to-end acceptance tests are computed once per
session and shared: the default-config batch feeds the fit-quality,
convergence-speed, and simulation-ablation tests alike.
"""

import numpy as np
import pytest

from graspfit.catalog import build_catalog
from graspfit.fitting import FitConfig, fit
from graspfit.fixtures import make_hand, matched_cylinder, write_fixtures
from graspfit.mesh import Mesh

N_SEEDS = 10


@pytest.fixture(scope="session")
def curl_hand():
    return make_hand("curl")


@pytest.fixture(scope="session")
def flat_hand():
    return make_hand("flat")


@pytest.fixture(scope="session")
def pinch_hand():
    return make_hand("pinch")


@pytest.fixture(scope="session")
def matched_cyl():
    return matched_cylinder()


def _run_fits(hand, obj, **overrides):
    out = []
    for seed in range(N_SEEDS):
        cfg = FitConfig(seed=seed, **overrides)
        report = fit(hand, obj, cfg)
        posed = Mesh(report.pose.apply(obj.vertices, cfg.k), obj.faces)
        out.append((cfg, report, posed))
    return out


@pytest.fixture(scope="session")
def default_fits(curl_hand, matched_cyl):
    """10 seeded fits of the matched cylinder with all-default config."""
    return _run_fits(curl_hand, matched_cyl)


@pytest.fixture(scope="session")
def zero_sim_fits(curl_hand, matched_cyl):
    """The ablation arm: same fits with the force-closure term disabled."""
    return _run_fits(curl_hand, matched_cyl, lambda_sim=0.0)


@pytest.fixture(scope="session")
def mismatched_fits(curl_hand, matched_cyl):
    """Fits of the cylinder scaled x3 about its centroid (implausible size)."""
    big = Mesh(matched_cyl.vertices * 3.0 - matched_cyl.centroid() * 2.0,
               matched_cyl.faces)
    return _run_fits(curl_hand, big)


@pytest.fixture(scope="session")
def fixtures_dir(tmp_path_factory):
    """On-disk fixture set (hands, object catalog, exemplars) plus its index."""
    out = tmp_path_factory.mktemp("fixtures")
    manifest = write_fixtures(out, seed=0)
    index_path = build_catalog(manifest["catalog_dir"])
    manifest["catalog_index"] = index_path
    return out, manifest


def rng_points(seed, n, scale=1.0, offset=0.0):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(n, 3)) * scale + offset
