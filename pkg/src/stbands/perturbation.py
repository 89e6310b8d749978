"""Small-amplitude asymptotics of the Floquet exponents.

Write ``A(t) = A0 + eps A1(t) + O(eps^2)`` in the basis that diagonalizes the
static system, ``A0 = diag(D, -D)`` with ``D = i sqrt(mu)``.  Folding the
entries of ``A0`` into the first zone gives ``F0``.  A group of equal folded
entries is a degeneracy; on it the first-order correction is the spectrum of
the restriction of

    (F1)_jl = (A1^{(m_j - m_l)})_jl                          (j, l degenerate)
    (F1)_jl = (f_l - f_j) sum_m (A1^{(m)})_jl / (i Omega m + a_l - a_j)   (otherwise)

where ``m_j`` are folding numbers and ``a_j`` the unfolded entries.
Exponents ``f`` relate to quasifrequencies by ``f = i omega``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .hill import HillSystem, ModulationKind

__all__ = [
    "Character",
    "ClassificationUnsupported",
    "DegeneracyCase",
    "FoldedF0",
    "PerturbationAnalysis",
    "PerturbationResult",
    "SpectralError",
    "StaticDiagonalization",
    "analyze",
    "build_F0",
    "character",
    "classify",
    "degenerate_first_order",
    "diagonalize_static",
    "effective_hamiltonian",
    "expected_character",
    "F1_entries",
    "transform_A1",
]


class SpectralError(ValueError):
    """Static eigenvalues are not all positive."""


class ClassificationUnsupported(ValueError):
    """Sign classification needs a Hermitian static matrix (equal volumes)."""


class Character(str, enum.Enum):
    REAL = "Real"
    PURELY_IMAGINARY = "PurelyImaginary"
    COMPLEX = "Complex"
    ZERO = "Zero"


class DegeneracyCase(str, enum.Enum):
    CASE1 = "Case1"  # both exponents from the same half of diag(D, -D)
    CASE2 = "Case2"  # one from each half
    MIXED = "Mixed"


@dataclass(frozen=True)
class StaticDiagonalization:
    mu: np.ndarray
    S: np.ndarray
    S_inv: np.ndarray
    hermitian: bool

    @property
    def lam(self) -> np.ndarray:
        return 1j * np.sqrt(self.mu)

    @property
    def n(self) -> int:
        return len(self.mu)

    @property
    def a0(self) -> np.ndarray:
        """Diagonal of ``A0`` in the eigenbasis: ``(D, -D)``."""
        return np.concatenate([self.lam, -self.lam])

    @property
    def S_tilde(self) -> np.ndarray:
        SD = self.S * self.lam[None, :]
        return np.block([[self.S, -self.S], [SD, SD]])

    @property
    def S_tilde_inv(self) -> np.ndarray:
        Si = self.S_inv
        DSi = Si / self.lam[:, None]
        return 0.5 * np.block([[Si, DSi], [-Si, DSi]])


def _fix_phase(S):
    k = np.argmax(np.abs(S), axis=0)
    ph = S[k, np.arange(S.shape[1])]
    return S * (np.abs(ph) / ph)[None, :]


def diagonalize_static(M0, tol: float = 1e-10) -> StaticDiagonalization:
    """Eigen-decomposition of the static matrix with ascending ``mu``.

    Each eigenvector is normalized so that its largest component is real and
    positive.  A non-Hermitian ``M0`` (unequal resonator volumes) is handled
    with a general eigensolver.
    """
    M0 = np.asarray(M0, dtype=complex)
    scale = np.abs(M0).max()
    herm = np.abs(M0 - M0.conj().T).max() <= tol * scale
    if herm:
        mu, S = np.linalg.eigh(0.5 * (M0 + M0.conj().T))
        S = _fix_phase(S)
        S_inv = S.conj().T
    else:
        mu, S = np.linalg.eig(M0)
        if np.abs(mu.imag).max() > 1e-8 * np.abs(mu).max():
            raise SpectralError("static matrix has complex eigenvalues")
        order = np.argsort(mu.real)
        mu, S = mu.real[order], _fix_phase(S[:, order])
        S_inv = np.linalg.inv(S)
    if np.any(mu <= 0):
        raise SpectralError(f"static eigenvalues must be positive, got min {mu.min():.3g}")
    return StaticDiagonalization(np.asarray(mu, dtype=float), S, S_inv, bool(herm))


def transform_A1(M1, diag: StaticDiagonalization) -> np.ndarray:
    """``S~^{-1} [[0, 0], [-M1, 0]] S~ = 1/2 [[-D^-1 B, D^-1 B], [-D^-1 B, D^-1 B]]``.

    ``B = S^{-1} M1 S``.
    """
    B = diag.S_inv @ np.asarray(M1, dtype=complex) @ diag.S
    X = 0.5 * B / diag.lam[:, None]
    return np.block([[-X, X], [-X, X]])


@dataclass(frozen=True)
class FoldedF0:
    f0: np.ndarray          # folded exponents, i * omega0
    m: np.ndarray           # folding numbers
    a0: np.ndarray          # unfolded diagonal of A0
    groups: tuple           # index tuples of equal folded entries
    Omega: float
    tol_deg: float

    @property
    def omega0(self) -> np.ndarray:
        return (-1j * self.f0).real

    @property
    def degenerate_groups(self) -> tuple:
        return tuple(g for g in self.groups if len(g) > 1)


def build_F0(a0, Omega: float, tol_deg: float | None = None) -> FoldedF0:
    """Fold the diagonal of ``A0`` and group coinciding entries.

    Distances are measured modulo ``Omega``, so values on opposite edges of the
    zone are grouped together; folding numbers inside a group are then chosen
    so that the group members share the same ``F0`` entry up to ``tol_deg``.
    """
    a0 = np.asarray(a0, dtype=complex)
    tol = 1e-8 * Omega if tol_deg is None else float(tol_deg)
    w = (-1j * a0).real
    m = np.floor((w + Omega / 2) / Omega).astype(int)
    w0 = w - m * Omega
    n = len(a0)
    label = list(range(n))

    def root(i):
        while label[i] != i:
            label[i] = label[label[i]]
            i = label[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            d = w0[i] - w0[j]
            if abs(d - Omega * np.round(d / Omega)) <= tol:
                label[root(j)] = root(i)
    groups = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    for g in groups.values():
        ref = w0[g[0]]
        for j in g[1:]:
            k = int(np.round((w0[j] - ref) / Omega))
            m[j] += k
            w0[j] -= k * Omega
    f0 = a0 - 1j * Omega * m
    ordered = tuple(tuple(g) for g in sorted(groups.values()))
    return FoldedF0(f0, m, a0, ordered, float(Omega), tol)


def F1_entries(A1: dict, F0: FoldedF0) -> np.ndarray:
    """First-order correction ``F1`` to the Floquet exponent matrix.

    ``A1`` maps harmonic index to the transformed Fourier block; missing
    harmonics are zero.
    """
    n = len(F0.f0)
    a, f, m, Om = F0.a0, F0.f0, F0.m, F0.Omega
    same = np.zeros((n, n), dtype=bool)
    for g in F0.groups:
        same[np.ix_(g, g)] = True
    zero = np.zeros((n, n), dtype=complex)
    dfl = f[None, :] - f[:, None]
    acc = np.zeros((n, n), dtype=complex)
    # resonant denominators only occur on degenerate pairs, overwritten below
    with np.errstate(divide="ignore", invalid="ignore"):
        for k, blk in A1.items():
            if k == 0:
                continue
            acc += blk / (1j * Om * k + a[None, :] - a[:, None])
        out = dfl * acc
    J, L = np.nonzero(same)
    for j, l in zip(J, L):
        out[j, l] = A1.get(int(m[j] - m[l]), zero)[j, l]
    return out


@dataclass(frozen=True)
class PerturbationResult:
    group: tuple
    f0: complex
    f1: np.ndarray
    epsilon: float
    case: DegeneracyCase
    omega_unfolded: np.ndarray = field(default=None)

    @property
    def r(self) -> int:
        return len(self.group)

    @property
    def omega0(self) -> float:
        return float((-1j * self.f0).real)

    @property
    def omega1(self) -> np.ndarray:
        return -1j * self.f1

    @property
    def predicted(self) -> np.ndarray:
        """Quasifrequencies ``omega0 + eps omega1``."""
        return self.omega0 + self.epsilon * self.omega1

    def to_dict(self) -> dict:
        return {
            "group": list(map(int, self.group)),
            "case": self.case.value,
            "omega0": self.omega0,
            "f1_re": self.f1.real.tolist(),
            "f1_im": self.f1.imag.tolist(),
            "abs_f1": np.abs(self.f1).tolist(),
            "epsilon": self.epsilon,
        }


def _case(group, n):
    halves = {j >= n for j in group}
    if len(group) == 2:
        return DegeneracyCase.CASE1 if len(halves) == 1 else DegeneracyCase.CASE2
    return DegeneracyCase.MIXED


def degenerate_first_order(F1: np.ndarray, F0: FoldedF0, group, epsilon: float = 0.0) -> PerturbationResult:
    """Eigenvalues of ``F1`` restricted to one degenerate group."""
    g = tuple(group)
    blk = F1[np.ix_(g, g)]
    if len(g) == 2 and abs(blk[0, 0]) + abs(blk[1, 1]) <= 1e-14 * (abs(blk[0, 1]) + abs(blk[1, 0]) + 1e-300):
        r = np.sqrt(complex(blk[0, 1] * blk[1, 0]))
        f1 = np.array([r, -r])
    else:
        f1 = np.linalg.eigvals(blk)
    f1 = f1[np.lexsort((f1.real, f1.imag))]
    n = len(F0.f0) // 2
    w = (-1j * F0.a0[list(g)]).real
    return PerturbationResult(g, complex(F0.f0[g[0]]), f1, float(epsilon), _case(g, n), w)


def character(values, rtol: float = 1e-9) -> Character:
    v = np.asarray(values, dtype=complex)
    scale = np.abs(v).max() if v.size else 0.0
    if scale == 0:
        return Character.ZERO
    if np.all(np.abs(v.imag) <= rtol * scale):
        return Character.REAL
    if np.all(np.abs(v.real) <= rtol * scale):
        return Character.PURELY_IMAGINARY
    return Character.COMPLEX


def expected_character(kind: ModulationKind, case: DegeneracyCase) -> Character | None:
    """Character of ``f1`` implied by the sign structure of ``M1``.

    Density modulation at a Case 2 degeneracy gives imaginary ``f1`` (real
    frequency split); bulk modulus modulation gives real ``f1``.  Case 1 swaps
    the two.  Nothing is implied for combined modulation.
    """
    table = {
        (ModulationKind.RHO, DegeneracyCase.CASE2): Character.PURELY_IMAGINARY,
        (ModulationKind.KAPPA, DegeneracyCase.CASE2): Character.REAL,
        (ModulationKind.RHO, DegeneracyCase.CASE1): Character.REAL,
        (ModulationKind.KAPPA, DegeneracyCase.CASE1): Character.PURELY_IMAGINARY,
    }
    return table.get((kind, case))


def classify(result: PerturbationResult, kind: ModulationKind, hermitian: bool = True,
             rtol: float = 1e-9) -> Character:
    """Character of the computed ``f1`` values.

    Raises :class:`ClassificationUnsupported` when the static matrix is not
    Hermitian, since the sign argument behind the classification fails there.
    """
    if not hermitian:
        raise ClassificationUnsupported("classification requires equal resonator volumes")
    if kind is ModulationKind.STATIC:
        return Character.ZERO
    return character(result.f1, rtol)


def effective_hamiltonian(F0: FoldedF0, F1: np.ndarray, group, epsilon: float, F2=None):
    """``P F0 P + eps P F1 P + eps^2 P (F1 G F1 + F2) P`` on one group.

    ``G`` is the reduced resolvent of ``F0`` off the group.  Returns the block
    and a flag that is ``True`` when ``F2`` was not supplied, i.e. the second
    order term is incomplete.
    """
    g = list(group)
    n = len(F0.f0)
    f = F0.f0[g[0]]
    out = np.ones(n, dtype=bool)
    out[g] = False
    G = np.zeros(n, dtype=complex)
    G[out] = 1.0 / (f - F0.f0[out])
    second = (F1[np.ix_(g, range(n))] * G[None, :]) @ F1[np.ix_(range(n), g)]
    if F2 is not None:
        second = second + np.asarray(F2)[np.ix_(g, g)]
    H = np.diag(F0.f0[g]) + epsilon * F1[np.ix_(g, g)] + epsilon**2 * second
    return H, F2 is None


@dataclass(frozen=True)
class PerturbationAnalysis:
    diag: StaticDiagonalization
    F0: FoldedF0
    A1: dict
    F1: np.ndarray
    kind: ModulationKind
    epsilon: float
    results: tuple

    def first_order_omegas(self, epsilon: float | None = None) -> np.ndarray:
        """First-order quasifrequencies of all ``2N`` exponents (folded order)."""
        eps = self.epsilon if epsilon is None else epsilon
        f = self.F0.f0 + eps * np.diag(self.F1)
        f = f.astype(complex)
        for res in self.results:
            f[list(res.group)] = res.f0 + eps * res.f1
        return -1j * f

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "epsilon": self.epsilon,
            "mu": self.diag.mu.tolist(),
            "omega0": self.F0.omega0.tolist(),
            "folding": self.F0.m.tolist(),
            "degeneracies": [r.to_dict() for r in self.results],
        }


def analyze(hill: HillSystem, tol_deg: float | None = None) -> PerturbationAnalysis:
    """Static diagonalization, folding and first-order corrections for a Hill system."""
    diag = diagonalize_static(hill.M0)
    F0 = build_F0(diag.a0, hill.mod.Omega, tol_deg)
    A1 = {1: transform_A1(hill.M1_plus, diag), -1: transform_A1(hill.M1_minus, diag)}
    F1 = F1_entries(A1, F0)
    eps = hill.mod.epsilon
    results = tuple(degenerate_first_order(F1, F0, g, eps) for g in F0.degenerate_groups)
    return PerturbationAnalysis(diag, F0, A1, F1, hill.mod.kind, eps, results)
