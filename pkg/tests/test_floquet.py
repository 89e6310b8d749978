import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import PHASES, random_hpd
from stbands.floquet import floquet_exponents, fold, integrate_monodromy, rk4_monodromy
from stbands.hill import FirstOrderSystem, ModulationSpec, build_hill, lift_first_order
from stbands.lattice import trimer_chain_geometry


@given(st.floats(-50, 50), st.floats(0.05, 5))
def test_fold_properties(w, Omega):
    w0, m = fold(w, Omega)
    assert -Omega / 2 <= w0 < Omega / 2
    assert w0 + m * Omega == pytest.approx(w, abs=1e-12 * max(1, abs(w)))


def test_fold_edge_and_complex():
    assert fold(0.2, 0.4) == (-0.2, 1)
    w0, m = fold(np.array([0.5 + 0.1j]), 0.4)
    assert m[0] == 1 and w0[0] == pytest.approx(0.1 + 0.1j)


def diagonal_system(Omega):
    # y' = diag(i w(t), -i w(t)) y with w = 0.3 + 0.2 cos(Omega t)
    w = lambda t: 0.3 + 0.2 * np.cos(Omega * t)
    A = lambda t: np.diag([1j * w(t), -1j * w(t)])
    return FirstOrderSystem(A(0), np.zeros((2, 2)), np.zeros((2, 2)), A, 2 * np.pi / Omega)


def test_monodromy_of_diagonal_system():
    sysm = diagonal_system(0.5)
    mono = integrate_monodromy(sysm)
    T = sysm.T
    exact = np.diag([np.exp(0.3j * T), np.exp(-0.3j * T)])
    np.testing.assert_allclose(mono.XT, exact, atol=1e-9)
    q = floquet_exponents(mono, 0.5, reference=[0.3, -0.3])
    np.testing.assert_allclose(q.omega0, fold(np.array([0.3, -0.3]), 0.5)[0], atol=1e-9)


def hill_system(eps, rng):
    geo = trimer_chain_geometry()
    C = random_hpd(rng)
    mod = ModulationSpec(eps, 0.4, K=0.05 * geo.volumes[0] / 3, rho_phases=PHASES, kappa_phases=(0, 2, 4))
    return lift_first_order(build_hill(C, geo, mod))


def test_liouville(rng):
    mono = integrate_monodromy(hill_system(0.3, rng))
    assert mono.det_residual < 1e-8


def test_rk4_agrees_with_adaptive(rng):
    sysm = hill_system(0.2, rng)
    ref = integrate_monodromy(sysm, tol=1e-12).XT
    coarse = rk4_monodromy(sysm, 1000).XT
    fine = rk4_monodromy(sysm, 2000).XT
    e_c, e_f = np.abs(coarse - ref).max(), np.abs(fine - ref).max()
    assert e_f < 1e-8
    # fourth order: halving the step cuts the error by about 16
    assert 10 < e_c / e_f < 20


def test_static_system_uses_expm(rng):
    sysm = hill_system(0.0, rng)
    assert sysm.constant
    mono = integrate_monodromy(sysm)
    assert mono.stats["method"] == "expm"


def test_symplectic_multiplier_pairs(rng):
    # Hill systems with Hermitian M(t) have multipliers closed under 1/conj
    geo = trimer_chain_geometry()
    C = random_hpd(rng)
    mod = ModulationSpec(0.3, 0.4, K=0.05 * geo.volumes[0] / 3, kappa_phases=(0, 2, 4))
    mono = integrate_monodromy(lift_first_order(build_hill(C, geo, mod)))
    mu = mono.multipliers
    d = np.abs(mu[:, None] - 1 / np.conj(mu)[None, :]).min(axis=1)
    assert d.max() < 1e-8


@settings(max_examples=20, deadline=None)
@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.floats(0.2, 2))
def test_reference_matching_preserves_folding(ws, Omega):
    ws = np.array(ws)
    T = 2 * np.pi / Omega
    mult = np.exp(1j * ws * T)

    class Mono:
        pass

    mono = Mono()
    mono.T, mono.multipliers, mono.vectors = T, mult, np.eye(4)
    q = floquet_exponents(mono, Omega, reference=ws)
    np.testing.assert_allclose(q.unfolded, ws, atol=1e-9)
