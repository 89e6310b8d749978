import json

import numpy as np
import pytest

from stbands.lattice import (
    ConfigurationError,
    GeometryError,
    Lattice,
    LatticeKind,
    ResonatorGeometry,
    brillouin_path,
    chain_path,
    honeycomb_geometry,
    load_geometry,
    make_lattice,
    save_geometry,
    square_trimer_geometry,
    trimer_chain_geometry,
)


@pytest.mark.parametrize("kind", ["chain", "square", "honeycomb"])
@pytest.mark.parametrize("scale", [1.0, 2.5])
def test_dual_pairing(kind, scale):
    lat = make_lattice(kind, scale)
    G = lat.dual()
    np.testing.assert_allclose(G @ lat.generators.T, 2 * np.pi * np.eye(lat.dim), atol=1e-12)


def test_cell_measure():
    assert make_lattice("chain", 2.0).cell_measure == pytest.approx(2.0)
    assert make_lattice("square", 2.0).cell_measure == pytest.approx(4.0)
    # honeycomb generators have length sqrt(3) * scale at 60 degrees
    assert make_lattice("honeycomb").cell_measure == pytest.approx(3 * np.sqrt(3) / 2)


def test_unknown_kind():
    with pytest.raises(ConfigurationError):
        make_lattice("kagome")


def test_dependent_generators():
    with pytest.raises(ConfigurationError):
        Lattice(np.array([[1.0, 0.0], [2.0, 0.0]]))


def test_trimer_layout():
    geo = trimer_chain_geometry(0.1, 0.05, 1.0)
    np.testing.assert_allclose(geo.centers[:, 0], [-0.25, 0.0, 0.25])
    sep = geo.min_separation(make_lattice("chain"))
    assert sep == pytest.approx(0.05)


def test_trimer_does_not_fit():
    with pytest.raises(GeometryError):
        trimer_chain_geometry(0.2, 0.1, 1.0)


def test_overlap_detected_across_cells():
    # disjoint inside the cell but touching its own translate
    geo = ResonatorGeometry(np.array([[0.0, 0.0]]), np.array([0.55]))
    with pytest.raises(GeometryError):
        geo.check(make_lattice("chain"))


def test_honeycomb_and_square_geometries_are_admissible():
    for lat, geo in [
        (make_lattice("honeycomb"), honeycomb_geometry()),
        (make_lattice("square"), square_trimer_geometry()),
    ]:
        assert geo.min_separation(lat) > 0


def test_honeycomb_inversion_symmetry():
    geo = honeycomb_geometry()
    mid = geo.centers.mean(axis=0)
    flipped = 2 * mid - geo.centers
    d = np.linalg.norm(flipped[:, None] - geo.centers[None], axis=-1)
    assert np.all(d.min(axis=1) < 1e-12)


def test_square_path():
    lat = make_lattice("square")
    path = brillouin_path(lat, ["G", "X", "M", "G"], 10)
    assert len(path) == 31
    np.testing.assert_allclose(path.samples[0], 0)
    np.testing.assert_allclose(path.samples[10], [np.pi, 0], atol=1e-14)
    np.testing.assert_allclose(path.samples[20], [np.pi, np.pi], atol=1e-14)
    assert np.all(np.diff(path.arc) > 0)
    assert path.arc[-1] == pytest.approx(2 * np.pi + np.pi * np.sqrt(2))
    assert [t[0] for t in path.ticks] == ["Γ", "X", "M", "Γ"]


def test_honeycomb_K_point():
    lat = make_lattice("honeycomb")
    path = brillouin_path(lat, ["Γ", "K"], 4)
    K = path.samples[-1]
    # K is equidistant from Γ and its two neighbouring reciprocal points
    g = lat.dual()
    d = [np.linalg.norm(K), np.linalg.norm(K - g[0]), np.linalg.norm(K - g[0] - g[1])]
    np.testing.assert_allclose(d, d[0], rtol=1e-12)


def test_unknown_waypoint():
    with pytest.raises(ConfigurationError, match="unknown waypoint"):
        brillouin_path(make_lattice("square"), ["G", "K"], 4)


def test_chain_path_is_alpha():
    path = chain_path(make_lattice("chain", 2.0), 9)
    np.testing.assert_allclose(path.arc, np.linspace(-np.pi / 2, np.pi / 2, 9))
    np.testing.assert_allclose(path.samples[:, 1], 0)


def test_geometry_round_trip(tmp_path):
    lat = make_lattice("honeycomb", 1.5)
    geo = honeycomb_geometry(scale=1.5)
    save_geometry(tmp_path / "g.json", lat, geo)
    lat2, geo2 = load_geometry(tmp_path / "g.json")
    assert lat2.kind is LatticeKind.HONEYCOMB and lat2.scale == 1.5
    np.testing.assert_array_equal(geo2.centers, geo.centers)
    np.testing.assert_array_equal(geo2.radii, geo.radii)


def test_malformed_geometry(tmp_path):
    p = tmp_path / "g.json"
    p.write_text(json.dumps({"lattice": {"kind": "chain"}}))
    with pytest.raises(ConfigurationError):
        load_geometry(p)
