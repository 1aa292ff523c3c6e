import pytest

from isorev.shooting import VolumeScan, candidates_at_volume, find_closed_all
from isorev.surfaces import make_surface


@pytest.fixture(scope="session")
def euclidean_flat():
    """Unweighted plane: h = r, f = 1."""
    return make_surface({"h": {"kind": "euclidean"}, "f": {"kind": "constant"}})


@pytest.fixture(scope="session")
def hyperbolic_flat():
    """Unweighted hyperbolic plane: h = sinh r, f = 1."""
    return make_surface({"h": {"kind": "hyperbolic"}, "f": {"kind": "constant"}})


@pytest.fixture(scope="session")
def borell_hyperbolic():
    """Hyperbolic plane with density exp(r^2)."""
    return make_surface({
        "h": {"kind": "hyperbolic"},
        "f": {"kind": "exp_power", "params": {"a": 1.0, "p": 2.0}},
    })


@pytest.fixture(scope="session")
def gaussian_euclidean():
    """Plane with density exp(r^2)."""
    return make_surface({
        "h": {"kind": "euclidean"},
        "f": {"kind": "exp_power", "params": {"a": 1.0, "p": 2.0}},
    })


@pytest.fixture(scope="session")
def exp_euclidean():
    """Plane with density exp(r)."""
    return make_surface({
        "h": {"kind": "euclidean"},
        "f": {"kind": "exp_power", "params": {"a": 1.0, "p": 1.0}},
    })


# Expensive sweeps shared across modules (shooting, analysis, acceptance).

@pytest.fixture(scope="session")
def borell_enclosing_sweeps(borell_hyperbolic):
    """64-panel enclosing-closure sweeps at r_start in {3.0, 3.5, 4.0}."""
    return {rs: find_closed_all(borell_hyperbolic, rs, enclose=True)
            for rs in (3.0, 3.5, 4.0)}


@pytest.fixture(scope="session")
def borell_candidates_v40(borell_hyperbolic):
    scan = VolumeScan(r_starts=(1.8, 2.4, 3.0))
    return candidates_at_volume(borell_hyperbolic, 40.0, scan)


@pytest.fixture(scope="session")
def gaussian_candidates_v30(gaussian_euclidean):
    scan = VolumeScan(r_starts=(1.8, 2.4, 3.0))
    return candidates_at_volume(gaussian_euclidean, 30.0, scan)


@pytest.fixture(scope="session")
def euclidean_circle_family(euclidean_flat):
    """Centered plus offset enclosing circles through r_start = 1 on the
    unweighted plane (the closure defect vanishes on a whole kappa band)."""
    return find_closed_all(euclidean_flat, 1.0, enclose=True)
