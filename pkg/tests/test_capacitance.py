import numpy as np
import pytest

from stbands.capacitance import (
    CapacitanceAssembler,
    ValidationError,
    assemble_capacitance,
    capacitance_from_dict,
    capacitance_to_dict,
    load_capacitance,
    save_capacitance,
    write_capacitance_csv,
)
from stbands.green import GreenSumConfig, QuasiperiodicGreen, UnsupportedLimitError
from stbands.lattice import ResonatorGeometry, honeycomb_geometry, make_lattice


def test_hermitian_positive(trimer_asm):
    for a in [-3.0, -1.2, 0.4, 2.395, np.pi]:
        C = trimer_asm([a, 0])
        assert C.hermiticity_residual < 1e-12
        assert C.min_eigenvalue > 0


def test_reflection_symmetry(trimer_asm):
    C = trimer_asm([1.1, 0]).entries
    Cm = trimer_asm([-1.1, 0]).entries
    np.testing.assert_allclose(Cm, np.conj(C), atol=1e-12)
    # the trimer is mirror symmetric, so C^{-a} is also C^a with indices reversed
    np.testing.assert_allclose(Cm, C[::-1, ::-1], atol=1e-12)


def test_small_disk_monopole_limit():
    # for a tiny disk the density is almost uniform:
    # C ~ -2 pi / (log r + 2 pi R^alpha(0)) with R the regular part of G^alpha
    lat = make_lattice("square")
    alpha = np.array([1.3, 0.4])
    R = QuasiperiodicGreen(lat, alpha).regular(np.zeros(2)).real
    for r in [0.01, 0.003]:
        geo = ResonatorGeometry(np.array([[0.5, 0.5]]), np.array([r]))
        C = assemble_capacitance(geo, lat, alpha).entries[0, 0]
        ref = -2 * np.pi / (np.log(r) + 2 * np.pi * R)
        assert C.real == pytest.approx(ref, rel=5 * r**2)
        assert abs(C.imag) < 1e-12


def test_truncation_and_multipole_convergence(chain, trimer):
    a = [0.9, 0]
    base = CapacitanceAssembler(trimer, chain)(a).entries
    wide = CapacitanceAssembler(trimer, chain, GreenSumConfig(truncation_radius=12))(a).entries
    fine = CapacitanceAssembler(trimer, chain, GreenSumConfig(multipole_order=16, quadrature=96))(a).entries
    assert np.abs(wide - base).max() < 1e-8
    assert np.abs(fine - base).max() < 1e-7


def test_honeycomb_matrix():
    lat = make_lattice("honeycomb")
    asm = CapacitanceAssembler(honeycomb_geometry(), lat)
    C = asm([0.4, 1.1])
    assert C.n == 6
    assert C.hermiticity_residual < 1e-10
    assert C.min_eigenvalue > 0


def test_alpha_zero(chain, trimer):
    with pytest.raises(UnsupportedLimitError):
        assemble_capacitance(trimer, chain, [0.0, 0.0])


def test_file_round_trip(tmp_path, trimer_asm):
    C = trimer_asm([2.0, 0])
    save_capacitance(tmp_path / "c.json", C)
    D = load_capacitance(tmp_path / "c.json")
    np.testing.assert_array_equal(D.entries, C.entries)
    np.testing.assert_array_equal(D.alpha, C.alpha)
    write_capacitance_csv(tmp_path / "c.csv", [C, D])
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert len(lines) == 1 + 2 * 9


def test_loaded_matrix_is_validated(trimer_asm):
    doc = capacitance_to_dict(trimer_asm([2.0, 0]))
    doc["re"][0][1] += 1e-3
    with pytest.raises(ValidationError):
        capacitance_from_dict(doc)
