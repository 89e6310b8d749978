"""Quasiperiodic Green's function of the 2D Laplacian.

``G^a(x) = sum_m G(x - m) exp(i a.m)`` with ``G(x) = log|x| / (2 pi)``.  The
defining sum is only conditionally convergent, so it is evaluated through an
Ewald split of ``1/|p|^2 = int_0^inf exp(-|p|^2 s) ds`` at ``s = E``:

* short range (both lattice kinds):
  ``-(1/4pi) sum_m exp(i a.m) E1(|x - m|^2 / 4E)``;
* long range, 2D lattice:
  ``-(1/|Y|) sum_q exp(i p.x) exp(-|p|^2 E) / |p|^2``, ``p = a + q``;
* long range, chain of period L along x:
  ``-(1/2L) sum_n exp(i p_n x_1) h(p_n, x_2)`` where ``h`` is the transverse
  profile ``exp(-|p||x_2|)/|p|`` with its ``s < E`` part removed (an erfc
  combination).  Far from the axis this reduces to the plain spectral series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .lattice import Lattice

__all__ = [
    "GreenSumConfig",
    "QuasiperiodicGreen",
    "SingularityError",
    "UnsupportedLimitError",
    "quasiperiodic_green",
]

EULER_GAMMA = 0.5772156649015329
# E1(60) ~ 1e-28: images further out than this contribute nothing
_Z_PRUNE = 60.0


class SingularityError(ValueError):
    """Evaluation point coincides with a lattice point."""


class UnsupportedLimitError(ValueError):
    """Quasimomentum is (equivalent to) zero; C^0 is defined only as a limit."""


@dataclass(frozen=True)
class GreenSumConfig:
    """Truncation and discretization controls.

    truncation_radius
        Number of lattice shells summed in the short-range part and of
        dual-lattice shells in the long-range part.
    multipole_order
        Highest Fourier mode ``|n|`` of the density on each circle.
    quadrature
        Trapezoidal nodes per circle for the smooth kernel parts.
    splitting
        Ewald parameter ``E``; ``None`` picks ``|Y|/4pi`` (2D) or ``L^2/4pi``.
    """

    truncation_radius: int = 6
    multipole_order: int = 12
    target_tol: float = 1e-8
    quadrature: int = 64
    splitting: float | None = None

    def __post_init__(self):
        if int(self.truncation_radius) < 3:
            raise ValueError("truncation_radius must cover at least 3 lattice shells")
        if int(self.multipole_order) < 1:
            raise ValueError("multipole_order must be >= 1")
        if not self.target_tol > 0:
            raise ValueError("target_tol must be positive")
        if int(self.quadrature) < 2 * int(self.multipole_order) + 2:
            raise ValueError("quadrature must exceed 2*multipole_order + 1")

    def splitting_for(self, lat: Lattice) -> float:
        if self.splitting is not None:
            return float(self.splitting)
        return lat.cell_measure**2 / (4 * np.pi) if lat.dim == 1 else lat.cell_measure / (4 * np.pi)


def ein(z):
    """Entire part ``E1(z) + log(z) + gamma`` for ``z >= 0``."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    small = z < 1.0
    zs = z[small]
    term = zs.copy()
    acc = zs.copy()
    for k in range(2, 30):
        term = -term * zs * (k - 1) / (k * k)
        acc += term
    out[small] = acc
    zl = z[~small]
    out[~small] = special.exp1(zl) + np.log(zl) + EULER_GAMMA
    return out


def _chain_profile(p, y, E):
    """``int_E^inf sqrt(pi/s) exp(-p^2 s - y^2/4s) ds`` for ``p > 0, y >= 0``."""
    sE = np.sqrt(E)
    a = p * sE + y / (2 * sE)
    b = p * sE - y / (2 * sE)
    gauss = np.exp(-(p * p) * E - y * y / (4 * E))
    second = np.where(
        b >= 0,
        special.erfcx(np.maximum(b, 0.0)) * gauss,
        np.exp(-p * y) * special.erfc(b),
    )
    return np.pi / (2 * p) * (special.erfcx(a) * gauss + second)


class QuasiperiodicGreen:
    """``G^alpha`` for one lattice and quasimomentum.

    ``alpha`` is a 2-vector; for a chain only the component along the
    generator enters.
    """

    def __init__(self, lat: Lattice, alpha, cfg: GreenSumConfig | None = None):
        self.lat = lat
        self.cfg = cfg or GreenSumConfig()
        alpha = np.asarray(alpha, dtype=float).reshape(-1)
        if alpha.size == 1:
            alpha = np.array([alpha[0], 0.0])
        self.alpha = alpha
        self.E = self.cfg.splitting_for(lat)
        shells = int(self.cfg.truncation_radius)
        self.images = lat.points(shells)
        self.phases = np.exp(1j * self.images @ alpha)
        self.p = self._dual_points(shells)
        scale = np.linalg.norm(lat.dual(), axis=1).min()
        if np.min(np.linalg.norm(self.p, axis=1)) < 1e-12 * scale:
            raise UnsupportedLimitError(
                "alpha is equivalent to 0; C^0 must be defined by the limit alpha -> 0"
            )

    def _dual_points(self, shells: int) -> np.ndarray:
        g = self.lat.dual()
        rng = np.arange(-shells, shells + 1)
        if self.lat.dim == 1:
            ahat = g[0] / np.linalg.norm(g[0])
            a_par = self.alpha @ ahat
            return ((a_par + rng * np.linalg.norm(g[0]))[:, None]) * ahat[None, :]
        n1, n2 = np.meshgrid(rng, rng, indexing="ij")
        q = n1.reshape(-1, 1) * g[0] + n2.reshape(-1, 1) * g[1]
        return self.alpha + q

    # -- pieces -------------------------------------------------------------

    def short_range(self, d: np.ndarray, skip_origin: bool = False) -> np.ndarray:
        """Short-range lattice sum at difference vectors ``d`` (shape ``(..., 2)``)."""
        d = np.asarray(d, dtype=float)
        out = np.zeros(d.shape[:-1], dtype=complex)
        four_e = 4 * self.E
        for m, ph in zip(self.images, self.phases):
            if skip_origin and not np.any(m):
                continue
            z = np.sum((d - m) ** 2, axis=-1) / four_e
            keep = z < _Z_PRUNE
            if not np.any(keep):
                continue
            vals = np.zeros(z.shape)
            vals[keep] = special.exp1(z[keep])
            out += ph * vals
        return -out / (4 * np.pi)

    def long_range(self, d: np.ndarray) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if self.lat.dim == 2:
            p2 = np.sum(self.p**2, axis=1)
            keep = p2 * self.E < _Z_PRUNE
            w = np.exp(-p2[keep] * self.E) / p2[keep]
            waves = np.exp(1j * d @ self.p[keep].T)
            return -(waves @ w) / self.lat.cell_measure
        L = self.lat.cell_measure
        ahat = self.lat.generators[0] / L
        x1 = d @ ahat
        x2 = np.abs(d @ np.array([-ahat[1], ahat[0]]))
        out = np.zeros(d.shape[:-1], dtype=complex)
        for pv in self.p:
            pn = float(pv @ ahat)
            ap = abs(pn)
            out += np.exp(1j * pn * x1) * _chain_profile(ap, x2, self.E)
        return -out / (2 * np.pi * L)

    # -- public -------------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        dist = np.linalg.norm(x[..., None, :] - self.images, axis=-1).min(axis=-1)
        if np.any(dist < 1e-12 * self.lat.cell_measure):
            raise SingularityError("G^alpha is singular at lattice points")
        return self.short_range(x) + self.long_range(x)

    def regular(self, x) -> np.ndarray:
        """``G^alpha(x) - log|x|/2pi``, smooth in a neighbourhood of ``x = 0``."""
        x = np.asarray(x, dtype=float)
        z = np.sum(x**2, axis=-1) / (4 * self.E)
        origin = -(ein(z) - EULER_GAMMA + np.log(4 * self.E)) / (4 * np.pi)
        return origin + self.short_range(x, skip_origin=True) + self.long_range(x)


def quasiperiodic_green(x, alpha, lat: Lattice, cfg: GreenSumConfig | None = None):
    """Evaluate ``G^alpha`` at the point(s) ``x``."""
    return QuasiperiodicGreen(lat, alpha, cfg)(x)
