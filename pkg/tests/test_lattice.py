import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from anisodd.ensemble import LatticeError, cell_vectors, load_lattice, parse_lattice, site_density

YSO = resources.files("anisodd") / "data" / "yso_y_lattice.txt"


def triclinic_volume(a, b, c, al, be, ga):
    ca, cb, cg = (math.cos(math.radians(x)) for x in (al, be, ga))
    return a * b * c * math.sqrt(1 - ca * ca - cb * cb - cg * cg + 2 * ca * cb * cg)


@given(st.floats(3, 20), st.floats(3, 20), st.floats(3, 20), st.floats(60, 120), st.floats(60, 120),
       st.floats(60, 120))
def test_cell_volume(a, b, c, al, be, ga):
    ca, cb, cg = (math.cos(math.radians(x)) for x in (al, be, ga))
    assume(1 - ca * ca - cb * cb - cg * cg + 2 * ca * cb * cg > 1e-4)
    V = triclinic_volume(a, b, c, al, be, ga)
    M = cell_vectors(a, b, c, al, be, ga)
    assert abs(np.linalg.det(M)) == pytest.approx(V, rel=1e-9)
    assert np.linalg.norm(M, axis=1) == pytest.approx([a, b, c], rel=1e-12)
    assert site_density(a, b, c, al, be, ga, sites_per_cell=4) == pytest.approx(4 / V, rel=1e-9)


def test_packaged_yso_lattice():
    lat = load_lattice(YSO)
    assert lat.labels.count("Y1") == 8 and lat.labels.count("Y2") == 8
    V = triclinic_volume(10.41, 6.72, 12.49, 90, 102.65, 90) * 1e-30
    assert lat.volume == pytest.approx(V, rel=1e-4)
    assert lat.density("Y1") == pytest.approx(8 / V, rel=1e-4)
    near = lat.sites_within(8e-10, "Y1")
    assert np.linalg.norm(near, axis=1).min() == pytest.approx(3.76e-10, abs=0.02e-10)


def test_sites_within_count_matches_density():
    lat = parse_lattice("vector 4 0 0\nvector 0 5 0\nvector 1 0 6\nsite A 0 0 0\nsite B 0.5 0.5 0.5\n")
    R = 60e-10
    pos = lat.sites_within(R, "A", "B")
    assert len(pos) == pytest.approx(lat.density("B") * 4 / 3 * math.pi * R**3, rel=0.03)
    assert np.all(np.linalg.norm(pos, axis=1) <= R)
    # every position is a B site relative to an A site
    frac = (pos + lat.basis("A")[0]) @ np.linalg.inv(lat.vectors)
    assert np.allclose((frac - 0.5 + 1e-9) % 1.0, 1e-9, atol=1e-8)


def test_random_sites_lie_on_lattice(rng):
    lat = load_lattice(YSO)
    R = 5e-9
    pos = lat.random_sites(rng, 500, R, "Y1", "Y2")
    assert len(pos) == 500 and np.all(np.linalg.norm(pos, axis=1) <= R)
    frac = (pos + lat.basis("Y1")[0]) @ np.linalg.inv(lat.vectors)
    basis = lat.frac[np.array(lat.labels) == "Y2"] % 1.0
    d = np.abs(((frac % 1.0)[:, None, :] - basis[None]) + 0.5) % 1.0 - 0.5
    assert np.all(np.min(np.abs(d).max(axis=2), axis=1) < 1e-6)


@pytest.mark.parametrize("text,msg", [
    ("vector 1 0 0\nvector 0 1 0\nsite A 0 0 0", "3 'vector'"),
    ("vector 1 0 0\nvector 0 1 0\nvector 0 0 1", "no 'site'"),
    ("vector 1 0 0\nvector 0 1 0\nvector 1 1 0\nsite A 0 0 0", "degenerate"),
    ("vector 1 0 0\nvector 0 1 x\nvector 0 0 1\nsite A 0 0 0", ":2:"),
])
def test_parse_errors(text, msg):
    with pytest.raises(LatticeError, match=msg):
        parse_lattice(text)


def test_missing_file():
    with pytest.raises(LatticeError, match="not found"):
        load_lattice("/nonexistent/lattice.txt")
