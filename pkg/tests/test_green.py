import numpy as np
import pytest

from stbands.green import (
    GreenSumConfig,
    QuasiperiodicGreen,
    SingularityError,
    UnsupportedLimitError,
    ein,
    quasiperiodic_green,
)
from stbands.lattice import make_lattice
from scipy import special


def spectral_chain(x, alpha, L=1.0, terms=400):
    """Plain Fourier series of G^alpha off the chain axis."""
    n = np.arange(-terms, terms + 1)
    p = alpha + 2 * np.pi * n / L
    return -np.sum(np.exp(1j * p * x[0]) * np.exp(-np.abs(p) * abs(x[1])) / np.abs(p)) / (2 * L)


@pytest.mark.parametrize("x", [(0.3, 0.4), (-0.45, 0.05), (0.1, -1.3)])
@pytest.mark.parametrize("alpha", [0.7, -2.9])
def test_chain_matches_spectral_series(x, alpha):
    lat = make_lattice("chain")
    x = np.array(x)
    assert quasiperiodic_green(x, [alpha, 0], lat) == pytest.approx(spectral_chain(x, alpha), abs=1e-10)


@pytest.mark.parametrize("kind", ["chain", "square", "honeycomb"])
def test_quasiperiodicity(kind):
    lat = make_lattice(kind)
    alpha = np.array([0.9, -0.4]) if lat.dim == 2 else np.array([1.3, 0.0])
    G = QuasiperiodicGreen(lat, alpha)
    x = np.array([0.21, 0.13])
    for l in lat.generators:
        assert G(x + l) == pytest.approx(np.exp(1j * alpha @ l) * G(x), abs=1e-11)


@pytest.mark.parametrize("kind", ["chain", "square"])
def test_independent_of_ewald_split(kind):
    lat = make_lattice(kind)
    alpha = [0.8, 0.3] if kind == "square" else [0.8, 0.0]
    x = np.array([[0.2, 0.1], [0.01, -0.02], [0.45, 0.4]])
    base = GreenSumConfig().splitting_for(lat)
    a = QuasiperiodicGreen(lat, alpha, GreenSumConfig(splitting=0.5 * base))(x)
    b = QuasiperiodicGreen(lat, alpha, GreenSumConfig(splitting=2.0 * base))(x)
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_harmonic_away_from_lattice():
    lat = make_lattice("honeycomb")
    G = QuasiperiodicGreen(lat, [0.5, 0.7])
    x, h = np.array([0.4, 0.3]), 1e-3
    lap = (G(x + [h, 0]) + G(x - [h, 0]) + G(x + [0, h]) + G(x - [0, h]) - 4 * G(x)) / h**2
    assert abs(lap) < 1e-5


def test_regular_part():
    lat = make_lattice("square")
    G = QuasiperiodicGreen(lat, [1.1, 0.2])
    x = np.array([0.03, -0.02])
    assert G.regular(x) + np.log(np.linalg.norm(x)) / (2 * np.pi) == pytest.approx(G(x), abs=1e-12)
    # smooth through the origin
    assert abs(G.regular(np.array([1e-7, 0])) - G.regular(np.zeros(2))) < 1e-7


def test_ein_matches_definition():
    z = np.array([1e-3, 0.5, 0.99, 1.0, 3.0])
    np.testing.assert_allclose(ein(z), special.exp1(z) + np.log(z) + np.euler_gamma, rtol=1e-12)


def test_conjugate_symmetry():
    # G^{-alpha} = conj(G^alpha) for the real kernel
    lat = make_lattice("square")
    x = np.array([0.3, 0.1])
    a = quasiperiodic_green(x, [0.4, 1.0], lat)
    b = quasiperiodic_green(x, [-0.4, -1.0], lat)
    assert b == pytest.approx(np.conj(a), abs=1e-12)


def test_alpha_zero_rejected():
    with pytest.raises(UnsupportedLimitError):
        QuasiperiodicGreen(make_lattice("chain"), [0.0, 0.0])
    with pytest.raises(UnsupportedLimitError):
        QuasiperiodicGreen(make_lattice("square"), [2 * np.pi, 0.0])


def test_singular_at_lattice_points():
    G = QuasiperiodicGreen(make_lattice("chain"), [1.0, 0.0])
    with pytest.raises(SingularityError):
        G(np.array([1.0, 0.0]))


def test_config_validation():
    with pytest.raises(ValueError):
        GreenSumConfig(truncation_radius=1)
    with pytest.raises(ValueError):
        GreenSumConfig(multipole_order=12, quadrature=16)
