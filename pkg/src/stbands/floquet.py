"""Monodromy matrix and Floquet exponents of ``y' = A(t) y``."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm
from scipy.optimize import linear_sum_assignment

from .hill import FirstOrderSystem

__all__ = [
    "IntegrationError",
    "MonodromyResult",
    "QuasifrequencySet",
    "fold",
    "floquet_exponents",
    "integrate_monodromy",
    "rk4_monodromy",
]


class IntegrationError(RuntimeError):
    """The ODE solver failed or returned non-finite values."""


def fold(omega_F, Omega):
    """Fold ``omega_F`` into ``[-Omega/2, Omega/2)``.

    Returns ``(omega0, m)`` with ``omega_F = omega0 + m * Omega``.  Complex
    input is folded along its real part.

    >>> fold(0.22, 0.4)
    (-0.18000000000000002, 1)
    """
    if not Omega > 0:
        raise ValueError("Omega must be positive")
    w = np.asarray(omega_F)
    m = np.floor((np.real(w) + Omega / 2) / Omega).astype(int)
    w0 = w - m * Omega
    # guard the right edge against rounding
    edge = np.real(w0) >= Omega / 2
    m = np.where(edge, m + 1, m)
    w0 = np.where(edge, w0 - Omega, w0)
    if np.ndim(w0) == 0:
        return w0.item(), int(m)
    return w0, m


@dataclass(frozen=True)
class MonodromyResult:
    XT: np.ndarray
    multipliers: np.ndarray
    vectors: np.ndarray
    T: float
    stats: dict = field(default_factory=dict)

    @property
    def det_residual(self) -> float:
        """``|det X(T) - 1|``; zero for the trace-free ``A(t)`` of a Hill system."""
        return float(abs(np.linalg.det(self.XT) - 1))


def _finish(XT, T, stats):
    if not np.all(np.isfinite(XT)):
        raise IntegrationError("monodromy matrix has non-finite entries")
    mult, vecs = np.linalg.eig(XT)
    return MonodromyResult(XT, mult, vecs, T, stats)


def integrate_monodromy(
    system: FirstOrderSystem,
    T: float | None = None,
    tol: float = 1e-11,
    method: str = "DOP853",
    max_step: float | None = None,
) -> MonodromyResult:
    """Integrate the fundamental matrix from ``X(0) = I`` over one period.

    Time-independent systems use the matrix exponential directly.
    """
    T = system.T if T is None else float(T)
    n = system.size
    if system.constant:
        return _finish(expm(system.A0 * T), T, {"method": "expm", "nfev": 0})

    def rhs(t, y):
        return (system.A_of_t(t) @ y.reshape(n, n)).ravel()

    kw = {} if max_step is None else {"max_step": max_step}
    sol = solve_ivp(
        rhs, (0.0, T), np.eye(n, dtype=complex).ravel(), method=method,
        rtol=tol, atol=tol * 1e-2, **kw,
    )
    if not sol.success:
        raise IntegrationError(f"ODE solver failed: {sol.message}")
    XT = sol.y[:, -1].reshape(n, n)
    return _finish(XT, T, {"method": method, "nfev": int(sol.nfev), "rtol": tol})


def rk4_monodromy(system: FirstOrderSystem, n_steps: int, T: float | None = None) -> MonodromyResult:
    """Fixed-step classical Runge-Kutta monodromy, for step-halving checks."""
    T = system.T if T is None else float(T)
    h = T / n_steps
    X = np.eye(system.size, dtype=complex)
    A = system.A_of_t
    for k in range(n_steps):
        t = k * h
        Am = A(t + h / 2)
        k1 = A(t) @ X
        k2 = Am @ (X + h / 2 * k1)
        k3 = Am @ (X + h / 2 * k2)
        k4 = A(t + h) @ (X + h * k3)
        X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return _finish(X, T, {"method": "rk4", "steps": n_steps})


@dataclass(frozen=True)
class QuasifrequencySet:
    """Floquet quasifrequencies ``omega0`` in ``[-Omega/2, Omega/2)``.

    ``m`` is the folding number relative to a reference set of unfolded
    frequencies when one was supplied, else zero.
    """

    omega0: np.ndarray
    m: np.ndarray
    multipliers: np.ndarray
    vectors: np.ndarray
    Omega: float

    @property
    def unfolded(self) -> np.ndarray:
        return self.omega0 + self.m * self.Omega

    def __len__(self):
        return len(self.omega0)


def _circ(a, b, Omega):
    d = np.real(a) - np.real(b)
    d = d - Omega * np.round(d / Omega)
    return np.hypot(d, np.imag(a) - np.imag(b))


def floquet_exponents(mono: MonodromyResult, Omega: float, reference=None) -> QuasifrequencySet:
    """``omega = -i log(multiplier) / T`` folded into the first Brillouin zone.

    ``reference`` (optional) holds unfolded frequencies, e.g. the static values
    ``+-sqrt(mu)``; exponents are matched to them modulo ``Omega`` and inherit
    their folding numbers; an exponent sitting on the zone edge may then stay
    just outside ``[-Omega/2, Omega/2)`` so that it lines up with its reference.
    Output is ordered like ``reference`` when given and by real part otherwise.
    """
    T = mono.T
    mult = mono.multipliers
    if np.any(mult == 0):
        raise IntegrationError("zero Floquet multiplier")
    w = -1j * np.log(mult) / T
    w0, _ = fold(w, Omega)
    w0 = np.asarray(w0, dtype=complex)
    vecs = mono.vectors
    if reference is None:
        order = np.lexsort((w0.imag, w0.real))
        return QuasifrequencySet(w0[order], np.zeros(len(w0), int), mult[order], vecs[:, order], Omega)
    ref = np.asarray(reference)
    if ref.shape != w0.shape:
        raise ValueError("reference must have one entry per exponent")
    rows, cols = linear_sum_assignment(_circ(ref[:, None], w0[None, :], Omega))
    pick = cols[np.argsort(rows)]
    w0 = w0[pick]
    ref0, m = fold(ref, Omega)
    # keep the folded value next to the reference across the zone edge
    shift = np.round((np.real(ref0) - np.real(w0)) / Omega).astype(int)
    w0 = w0 + shift * Omega
    return QuasifrequencySet(w0, np.asarray(m), mult[pick], vecs[:, pick], Omega)
