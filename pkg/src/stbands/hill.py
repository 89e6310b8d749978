"""Time-modulated Hill system ``phi'' + M(t) phi = 0`` and its first-order lift.

With cosine profiles ``kappa_i, rho_i = 1 / (1 + eps cos(Omega t + phase_i))``

    M(t) = K W1(t) C W2(t) + W3(t),
    W1 = diag(sqrt(kappa) rho / |D|),  W2 = diag(sqrt(kappa) / rho),
    W3 = diag(sqrt(kappa)/2 d/dt(kappa' / kappa^{3/2})).

The single scalar ``K`` carries the contrast and material constants.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .capacitance import CapacitanceMatrix
from .lattice import ConfigurationError, ResonatorGeometry

__all__ = [
    "FirstOrderSystem",
    "HillSystem",
    "ModulationKind",
    "ModulationSpec",
    "assemble_M",
    "build_hill",
    "fourier_M1_both",
    "fourier_M1_kappa_only",
    "lift_first_order",
    "profile",
    "w3_closed_form",
]


class ModulationKind(str, enum.Enum):
    STATIC = "static"
    RHO = "rho"
    KAPPA = "kappa"
    BOTH = "both"


def _phases(value, name):
    if value is None or (isinstance(value, str) and value.lower() == "unmodulated"):
        return None
    arr = np.asarray(value, dtype=float).reshape(-1)
    if arr.size == 0:
        raise ConfigurationError(f"{name} must list one phase per resonator")
    return tuple(float(v) for v in arr)


@dataclass(frozen=True)
class ModulationSpec:
    """Modulation amplitude, frequency and per-resonator phases.

    ``rho_phases`` / ``kappa_phases`` set to ``None`` leave that parameter
    constant in time.
    """

    epsilon: float
    Omega: float
    K: float = 1e-3
    rho_phases: tuple | None = None
    kappa_phases: tuple | None = None

    def __post_init__(self):
        if not 0 <= self.epsilon < 1:
            raise ConfigurationError(f"epsilon must lie in [0, 1), got {self.epsilon}")
        if not self.Omega > 0:
            raise ConfigurationError(f"Omega must be positive, got {self.Omega}")
        if not self.K > 0:
            raise ConfigurationError(f"K must be positive, got {self.K}")
        object.__setattr__(self, "rho_phases", _phases(self.rho_phases, "rho_phases"))
        object.__setattr__(self, "kappa_phases", _phases(self.kappa_phases, "kappa_phases"))

    @property
    def T(self) -> float:
        return 2 * np.pi / self.Omega

    @property
    def kind(self) -> ModulationKind:
        if self.rho_phases is None and self.kappa_phases is None:
            return ModulationKind.STATIC
        if self.kappa_phases is None:
            return ModulationKind.RHO
        if self.rho_phases is None:
            return ModulationKind.KAPPA
        return ModulationKind.BOTH

    def with_epsilon(self, epsilon: float) -> "ModulationSpec":
        return replace(self, epsilon=float(epsilon))

    def check_size(self, n: int) -> None:
        for name, ph in (("rho_phases", self.rho_phases), ("kappa_phases", self.kappa_phases)):
            if ph is not None and len(ph) != n:
                raise ConfigurationError(f"{name} has {len(ph)} entries for {n} resonators")

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "Omega": self.Omega,
            "K": self.K,
            "rho_phases": None if self.rho_phases is None else list(self.rho_phases),
            "kappa_phases": None if self.kappa_phases is None else list(self.kappa_phases),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModulationSpec":
        try:
            return cls(
                epsilon=float(d.get("epsilon", 0.0)),
                Omega=float(d["Omega"]),
                K=float(d.get("K", 1e-3)),
                rho_phases=d.get("rho_phases"),
                kappa_phases=d.get("kappa_phases"),
            )
        except KeyError as exc:
            raise ConfigurationError(f"modulation spec missing {exc}") from exc


def profile(epsilon, Omega, phase, t):
    """``1 / (1 + eps cos(Omega t + phase))``."""
    if not 0 <= epsilon < 1:
        raise ConfigurationError(f"epsilon must lie in [0, 1), got {epsilon}")
    return 1.0 / (1.0 + epsilon * np.cos(Omega * t + phase))


def w3_closed_form(epsilon, Omega, phase, t):
    """``(sqrt(k)/2) d/dt (k'/k^{3/2})`` for ``k = profile(eps, Omega, phase, t)``."""
    c = 1.0 + epsilon * np.cos(Omega * t + phase)
    return Omega**2 / 4 * (1 + (epsilon**2 - 1) / c**2)


def _weights(mod: ModulationSpec, n: int, t: float):
    """Diagonals ``sqrt(kappa) rho``, ``sqrt(kappa) / rho`` and ``W3`` at time ``t``."""
    ones = np.ones(n)
    if mod.kappa_phases is None or mod.epsilon == 0:
        sk, w3 = ones, np.zeros(n)
    else:
        ph = np.asarray(mod.kappa_phases)
        sk = np.sqrt(profile(mod.epsilon, mod.Omega, ph, t))
        w3 = w3_closed_form(mod.epsilon, mod.Omega, ph, t)
    if mod.rho_phases is None or mod.epsilon == 0:
        rho = ones
    else:
        rho = profile(mod.epsilon, mod.Omega, np.asarray(mod.rho_phases), t)
    return sk * rho, sk / rho, w3


def assemble_M(t: float, C, geo: ResonatorGeometry, mod: ModulationSpec) -> np.ndarray:
    """Exact ``M^alpha(t)``."""
    entries = C.entries if isinstance(C, CapacitanceMatrix) else np.asarray(C)
    n = entries.shape[0]
    if geo.n != n:
        raise ConfigurationError(f"capacitance is {n}x{n} but geometry has {geo.n} resonators")
    mod.check_size(n)
    left, right, w3 = _weights(mod, n, t)
    L = mod.K * entries / geo.volumes[:, None]
    return left[:, None] * L * right[None, :] + np.diag(w3)


def fourier_M1_kappa_only(mod: ModulationSpec, L: np.ndarray):
    """Fourier coefficients of ``M_1`` at ``exp(+-i Omega t)``, bulk modulus only.

    ``(M1^{(1)})_ii = (Omega^2/2 - L_ii) e^{i p_i} / 2``,
    ``(M1^{(1)})_ij = -L_ij (e^{i p_i} + e^{i p_j}) / 4``; the ``-1`` block
    flips the sign of the phases.
    """
    if mod.rho_phases is not None:
        raise ConfigurationError("fourier_M1_kappa_only requires constant rho")
    return fourier_M1_both(mod, L)


def fourier_M1_both(mod: ModulationSpec, L: np.ndarray):
    """Fourier coefficients of ``M_1`` for any combination of modulated parameters.

    Off-diagonal: ``L_ij [ (e^{i f_j} - e^{i f_i}) / 2 - (e^{i p_i} + e^{i p_j}) / 4 ]``
    with density phases ``f`` and bulk-modulus phases ``p``; the density part
    never touches the diagonal since ``rho_i / rho_i = 1``.
    """
    L = np.asarray(L, dtype=complex)
    n = L.shape[0]
    mod.check_size(n)
    blocks = []
    for sign in (1, -1):
        M1 = np.zeros((n, n), dtype=complex)
        if mod.rho_phases is not None:
            e = np.exp(sign * 1j * np.asarray(mod.rho_phases))
            M1 += L * (e[None, :] - e[:, None]) / 2
        if mod.kappa_phases is not None:
            e = np.exp(sign * 1j * np.asarray(mod.kappa_phases))
            off = -L * (e[:, None] + e[None, :]) / 4
            np.fill_diagonal(off, (mod.Omega**2 / 2 - np.diag(L)) * e / 2)
            M1 += off
        blocks.append(M1)
    return blocks[0], blocks[1]


@dataclass(frozen=True)
class HillSystem:
    M0: np.ndarray
    M1_plus: np.ndarray
    M1_minus: np.ndarray
    mod: ModulationSpec
    evaluator: Callable[[float], np.ndarray] = field(repr=False)

    @property
    def n(self) -> int:
        return self.M0.shape[0]


def build_hill(C, geo: ResonatorGeometry, mod: ModulationSpec) -> HillSystem:
    entries = C.entries if isinstance(C, CapacitanceMatrix) else np.asarray(C, dtype=complex)
    n = entries.shape[0]
    if geo.n != n:
        raise ConfigurationError(f"capacitance is {n}x{n} but geometry has {geo.n} resonators")
    mod.check_size(n)
    L = mod.K * entries / geo.volumes[:, None]
    M1p, M1m = fourier_M1_both(mod, L)

    def evaluator(t):
        left, right, w3 = _weights(mod, n, t)
        M = left[:, None] * L * right[None, :]
        M[np.diag_indices(n)] += w3
        return M

    return HillSystem(L, M1p, M1m, mod, evaluator)


@dataclass(frozen=True)
class FirstOrderSystem:
    """``y' = A(t) y`` with ``A = [[0, I], [-M(t), 0]]``.

    ``A1_plus`` / ``A1_minus`` are the first-order Fourier blocks in the
    original (position, velocity) basis; the diagonalized versions come from
    :func:`stbands.perturbation.transform_A1`.
    """

    A0: np.ndarray
    A1_plus: np.ndarray
    A1_minus: np.ndarray
    A_of_t: Callable[[float], np.ndarray] = field(repr=False)
    T: float = 1.0
    constant: bool = False

    @property
    def size(self) -> int:
        return self.A0.shape[0]


def _lift(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    A = np.zeros((2 * n, 2 * n), dtype=complex)
    A[:n, n:] = np.eye(n)
    A[n:, :n] = -M
    return A


def lift_first_order(hill: HillSystem) -> FirstOrderSystem:
    n = hill.n
    zero = np.zeros((n, n), dtype=complex)
    A1p = np.block([[zero, zero], [-hill.M1_plus, zero]])
    A1m = np.block([[zero, zero], [-hill.M1_minus, zero]])
    eye = np.eye(n)
    ev = hill.evaluator

    def A_of_t(t):
        A = np.zeros((2 * n, 2 * n), dtype=complex)
        A[:n, n:] = eye
        A[n:, :n] = -ev(t)
        return A

    static = hill.mod.epsilon == 0 or hill.mod.kind is ModulationKind.STATIC
    return FirstOrderSystem(_lift(hill.M0), A1p, A1m, A_of_t, hill.mod.T, static)
