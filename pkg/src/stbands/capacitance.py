"""Quasiperiodic capacitance matrix of disk resonators.

The density on each circle ``dD_j`` is expanded in Fourier modes
``exp(i n theta)``, ``|n| <= P``.  The single layer operator is discretized by
Galerkin projection: the logarithmic self-interaction of a circle is diagonal
in this basis (``R log R`` for ``n = 0``, ``-R / 2|n|`` otherwise); the smooth
remainder of the kernel is projected with the trapezoidal rule, which converges
geometrically for analytic periodic integrands.  Then

    C_ij = -int_{dD_i} (S^a)^{-1}[chi_{dD_j}] = -(2 pi)^2 R_i R_j (H^{-1})_{(i,0),(j,0)}

where ``H`` is the Galerkin matrix.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import special

from .green import (
    EULER_GAMMA,
    GreenSumConfig,
    QuasiperiodicGreen,
    UnsupportedLimitError,
    _Z_PRUNE,
    ein,
)
from .lattice import Lattice, ResonatorGeometry

__all__ = [
    "CapacitanceAssembler",
    "CapacitanceError",
    "CapacitanceMatrix",
    "ValidationError",
    "assemble_capacitance",
    "load_capacitance",
    "save_capacitance",
    "write_capacitance_csv",
]


class CapacitanceError(RuntimeError):
    """The discretized single layer operator is singular or ill-conditioned."""


class ValidationError(ValueError):
    """A loaded matrix violates the capacitance invariants."""


@dataclass(frozen=True)
class CapacitanceMatrix:
    alpha: np.ndarray
    entries: np.ndarray
    provenance: str = "computed"

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def hermiticity_residual(self) -> float:
        return float(np.abs(self.entries - self.entries.conj().T).max())

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.entries + self.entries.conj().T))

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues[0])


def _as_alpha(alpha) -> np.ndarray:
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if a.size == 1:
        a = np.array([a[0], 0.0])
    return a


class CapacitanceAssembler:
    """Assembles ``C^alpha`` for a fixed geometry at many quasimomenta.

    The short-range lattice sum only depends on ``alpha`` through the phases
    ``exp(i alpha.m)``, so the exponential-integral values are computed once
    per geometry.
    """

    def __init__(self, geo: ResonatorGeometry, lat: Lattice, cfg: GreenSumConfig | None = None):
        geo.check(lat)
        self.geo, self.lat = geo, lat
        self.cfg = cfg = cfg or GreenSumConfig()
        P, Q = int(cfg.multipole_order), int(cfg.quadrature)
        self.modes = np.arange(-P, P + 1)
        theta = 2 * np.pi * np.arange(Q) / Q
        circle = np.column_stack([np.cos(theta), np.sin(theta)])
        N = geo.n
        self.points = (geo.centers[:, None, :] + geo.radii[:, None, None] * circle).reshape(N * Q, 2)
        owner = np.repeat(np.arange(N), Q)
        self._same = owner[:, None] == owner[None, :]
        diff = self.points[:, None, :] - self.points[None, :, :]
        self._diff = diff

        fourier = np.exp(1j * np.outer(theta, self.modes))
        nm = len(self.modes)
        basis = np.zeros((N * Q, N * nm), dtype=complex)
        for j in range(N):
            basis[j * Q:(j + 1) * Q, j * nm:(j + 1) * nm] = (2 * np.pi / Q) * geo.radii[j] * fourier
        self._basis = basis

        self_diag = []
        for r in geo.radii:
            s = np.where(self.modes == 0, r * np.log(r), -r / (2 * np.maximum(np.abs(self.modes), 1)))
            self_diag.append(2 * np.pi * r * s)
        self._self_diag = np.concatenate(self_diag).astype(complex)
        self._zero_mode = np.array([j * nm + P for j in range(N)])

        E = cfg.splitting_for(lat)
        self.E = E
        self._images, self._tables = [], []
        for m in lat.points(int(cfg.truncation_radius)):
            z = np.sum((diff - m) ** 2, axis=-1) / (4 * E)
            origin = not np.any(m)
            if not origin and z.min() >= _Z_PRUNE:
                continue
            table = np.zeros(z.shape)
            if origin:
                other = ~self._same
                table[other] = special.exp1(z[other])
                # smooth remainder of the origin image on each circle
                table[self._same] = ein(z[self._same]) - EULER_GAMMA + np.log(4 * E)
            else:
                keep = z < _Z_PRUNE
                table[keep] = special.exp1(z[keep])
            self._images.append(m)
            self._tables.append(table)
        self._images = np.array(self._images)
        self._tables = np.array(self._tables)

    def kernel(self, alpha) -> np.ndarray:
        """Kernel matrix on the quadrature nodes (log part of self-blocks removed)."""
        alpha = _as_alpha(alpha)
        green = QuasiperiodicGreen(self.lat, alpha, self.cfg)
        phases = np.exp(1j * self._images @ alpha)
        short = -np.tensordot(phases, self._tables, axes=1) / (4 * np.pi)
        if self.lat.dim == 2:
            p = green.p
            p2 = np.sum(p**2, axis=1)
            keep = p2 * self.E < _Z_PRUNE
            w = np.exp(-p2[keep] * self.E) / p2[keep]
            waves = np.exp(1j * self.points @ p[keep].T)
            long = -(waves * w) @ waves.conj().T / self.lat.cell_measure
        else:
            long = green.long_range(self._diff)
        return short + long

    def galerkin(self, alpha) -> np.ndarray:
        K = self.kernel(alpha)
        H = self._basis.conj().T @ K @ self._basis
        H[np.diag_indices_from(H)] += self._self_diag
        return H

    def __call__(self, alpha) -> CapacitanceMatrix:
        alpha = _as_alpha(alpha)
        H = self.galerkin(alpha)
        cond = np.linalg.cond(H)
        if not np.isfinite(cond) or cond > 1e13:
            raise CapacitanceError(
                f"single layer system ill-conditioned at alpha={alpha.tolist()} (cond={cond:.3g})"
            )
        rhs = np.zeros((H.shape[0], self.geo.n), dtype=complex)
        rhs[self._zero_mode, np.arange(self.geo.n)] = 1.0
        sol = np.linalg.solve(H, rhs)[self._zero_mode, :]
        r = self.geo.radii
        C = -(2 * np.pi) ** 2 * r[:, None] * r[None, :] * sol
        return CapacitanceMatrix(alpha, C, "computed")


def assemble_capacitance(
    geo: ResonatorGeometry, lat: Lattice, alpha, cfg: GreenSumConfig | None = None
) -> CapacitanceMatrix:
    """``C^alpha`` for one quasimomentum (``alpha != 0``)."""
    alpha = _as_alpha(alpha)
    # fail fast on alpha = 0 before the per-geometry precomputation
    QuasiperiodicGreen(lat, alpha, cfg or GreenSumConfig())
    return CapacitanceAssembler(geo, lat, cfg)(alpha)


def capacitance_to_dict(C: CapacitanceMatrix) -> dict:
    return {
        "alpha": [float(a) for a in C.alpha],
        "n": C.n,
        "re": C.entries.real.tolist(),
        "im": C.entries.imag.tolist(),
    }


def capacitance_from_dict(doc: dict, tol: float = 1e-8) -> CapacitanceMatrix:
    try:
        n = int(doc["n"])
        entries = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
        alpha = _as_alpha(doc.get("alpha", [np.nan, 0.0]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed capacitance document: {exc}") from exc
    if entries.shape != (n, n):
        raise ValidationError(f"expected a {n}x{n} matrix, got shape {entries.shape}")
    residual = np.abs(entries - entries.conj().T).max()
    if residual > tol:
        raise ValidationError(f"matrix is not Hermitian (residual {residual:.3g} > {tol:g})")
    return CapacitanceMatrix(alpha, entries, "loaded")


def save_capacitance(path, C: CapacitanceMatrix) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    Path(path).write_text(json.dumps(capacitance_to_dict(C)))


def load_capacitance(path) -> CapacitanceMatrix:
    """Read a capacitance JSON file and validate Hermiticity."""
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from exc
    return capacitance_from_dict(doc)


def write_capacitance_csv(path, matrices) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha_x", "alpha_y", "i", "j", "re", "im"])
        for C in matrices:
            for i in range(C.n):
                for j in range(C.n):
                    z = C.entries[i, j]
                    w.writerow([repr(float(C.alpha[0])), repr(float(C.alpha[1])), i, j,
                                repr(float(z.real)), repr(float(z.imag))])


__all__ += ["UnsupportedLimitError", "capacitance_from_dict", "capacitance_to_dict"]
