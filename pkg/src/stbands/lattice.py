"""Periodic lattices, dual lattices, Brillouin-zone paths and disk geometries.

All resonators live in the plane.  A chain is a one-dimensional lattice
embedded in two-dimensional space (generator along ``x``), so quasimomenta are
always handled as 2-vectors; for a chain only the first component matters.
"""

from __future__ import annotations

import enum
import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

__all__ = [
    "BrillouinPath",
    "ConfigurationError",
    "GeometryError",
    "Lattice",
    "LatticeKind",
    "ResonatorGeometry",
    "brillouin_path",
    "chain_path",
    "geometry_from_dict",
    "dual_lattice",
    "honeycomb_geometry",
    "load_geometry",
    "make_lattice",
    "save_geometry",
    "square_trimer_geometry",
    "trimer_chain_geometry",
]


class ConfigurationError(ValueError):
    """Invalid or unknown configuration value."""


class GeometryError(ValueError):
    """Resonators overlap or do not fit in the unit cell."""


class LatticeKind(str, enum.Enum):
    CHAIN = "chain"
    SQUARE = "square"
    HONEYCOMB = "honeycomb"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value) -> "LatticeKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"unknown lattice kind {value!r}") from None


@dataclass(frozen=True)
class Lattice:
    """Bravais lattice with ``dim`` generators, each a vector in the plane.

    Attributes
    ----------
    generators : (dim, 2) ndarray
        Rows are the lattice vectors ``l_i``.
    kind : LatticeKind
    scale : float
        Scale the canonical generators were built with (1 for custom lattices).
    """

    generators: np.ndarray
    kind: LatticeKind = LatticeKind.CUSTOM
    scale: float = 1.0

    def __post_init__(self):
        gen = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if gen.shape[1] != 2 or gen.shape[0] not in (1, 2):
            raise ConfigurationError(
                f"generators must have shape (1, 2) or (2, 2), got {gen.shape}"
            )
        if gen.shape[0] == 2 and abs(np.linalg.det(gen)) < 1e-12 * np.sum(gen**2):
            raise ConfigurationError("lattice generators are linearly dependent")
        if gen.shape[0] == 1 and np.linalg.norm(gen[0]) == 0:
            raise ConfigurationError("lattice generator is zero")
        gen.setflags(write=False)
        object.__setattr__(self, "generators", gen)
        object.__setattr__(self, "kind", LatticeKind.parse(self.kind))

    @property
    def dim(self) -> int:
        return self.generators.shape[0]

    @property
    def cell_measure(self) -> float:
        """Length of the period (chain) or area of the unit cell."""
        if self.dim == 1:
            return float(np.linalg.norm(self.generators[0]))
        return float(abs(np.linalg.det(self.generators)))

    def dual(self) -> np.ndarray:
        """Dual generators ``g_j`` with ``g_j . l_i = 2 pi delta_ij``."""
        gen = self.generators
        if self.dim == 1:
            l = gen[0]
            return (2 * np.pi * l / (l @ l))[None, :]
        # rows g_j such that G @ L.T = 2 pi I
        return 2 * np.pi * np.linalg.inv(gen).T

    def points(self, shells: int) -> np.ndarray:
        """Lattice points ``m`` with integer coordinates in ``[-shells, shells]``."""
        rng = range(-shells, shells + 1)
        coeffs = np.array(list(itertools.product(rng, repeat=self.dim)), dtype=float)
        return coeffs @ self.generators

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "scale": self.scale}
        if self.kind is LatticeKind.CUSTOM:
            d["generators"] = self.generators.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Lattice":
        kind = LatticeKind.parse(d.get("kind", "custom"))
        if kind is LatticeKind.CUSTOM:
            if "generators" not in d:
                raise ConfigurationError("custom lattice needs 'generators'")
            return cls(np.asarray(d["generators"], dtype=float), LatticeKind.CUSTOM)
        return make_lattice(kind, float(d.get("scale", 1.0)))


def make_lattice(kind, scale: float = 1.0) -> Lattice:
    """Canonical lattice of the given kind.

    Square: ``(1,0), (0,1)``; chain: ``(1,0)``; honeycomb:
    ``(3/2, sqrt(3)/2), (3/2, -sqrt(3)/2)`` (nearest-neighbour bond length 1,
    sites at ``(1,0)`` and ``(2,0)``).  Everything is multiplied by ``scale``.
    """
    if not scale > 0:
        raise ConfigurationError(f"scale must be positive, got {scale}")
    kind = LatticeKind.parse(kind)
    if kind is LatticeKind.SQUARE:
        gen = np.array([[1.0, 0.0], [0.0, 1.0]])
    elif kind is LatticeKind.CHAIN:
        gen = np.array([[1.0, 0.0]])
    elif kind is LatticeKind.HONEYCOMB:
        gen = np.array([[1.5, np.sqrt(3) / 2], [1.5, -np.sqrt(3) / 2]])
    else:
        raise ConfigurationError("custom lattices are built with Lattice(generators)")
    return Lattice(scale * gen, kind, scale)


def dual_lattice(lat: Lattice) -> Lattice:
    """The dual lattice generated by ``2 pi l_i^*``."""
    return Lattice(lat.dual(), LatticeKind.CUSTOM)


@dataclass(frozen=True)
class ResonatorGeometry:
    """Disks ``D_i`` of the unit cell."""

    centers: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        r = np.atleast_1d(np.asarray(self.radii, dtype=float))
        if c.shape[1] != 2 or c.shape[0] != r.shape[0]:
            raise GeometryError("need one 2D center per radius")
        if np.any(r <= 0):
            raise GeometryError("radii must be positive")
        c.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "centers", c)
        object.__setattr__(self, "radii", r)

    @property
    def n(self) -> int:
        return self.radii.shape[0]

    @property
    def volumes(self) -> np.ndarray:
        return np.pi * self.radii**2

    @property
    def equal_volumes(self) -> bool:
        return bool(np.allclose(self.radii, self.radii[0], rtol=1e-12, atol=0))

    def min_separation(self, lat: Lattice, shells: int = 2) -> float:
        """Smallest surface-to-surface distance among the disks and all their
        lattice translates."""
        best = np.inf
        for m in lat.points(shells):
            d = np.linalg.norm(self.centers[:, None, :] + m - self.centers[None, :, :], axis=-1)
            gap = d - self.radii[:, None] - self.radii[None, :]
            if not np.any(m):
                gap = gap[~np.eye(self.n, dtype=bool)]
            if gap.size:
                best = min(best, float(gap.min()))
        return best

    def check(self, lat: Lattice) -> None:
        """Raise :class:`GeometryError` unless all translates are disjoint."""
        sep = self.min_separation(lat)
        if not sep > 0:
            raise GeometryError(
                f"resonators overlap (minimum surface separation {sep:.3g})"
            )

    def to_dict(self) -> list[dict]:
        return [
            {"center": c.tolist(), "radius": float(r)}
            for c, r in zip(self.centers, self.radii)
        ]


def trimer_chain_geometry(
    radius: float = 0.1, intra_gap: float = 0.05, period: float = 1.0
) -> ResonatorGeometry:
    """Three collinear disks centred in a cell of length ``period``.

    ``intra_gap`` is the surface-to-surface distance between neighbouring
    disks of the trimer.
    """
    if radius <= 0 or intra_gap <= 0 or period <= 0:
        raise GeometryError("radius, intra_gap and period must be positive")
    pitch = 2 * radius + intra_gap
    inter_gap = period - 2 * pitch - 2 * radius
    if not inter_gap > 0:
        raise GeometryError(
            f"trimer of width {2 * pitch + 2 * radius:.4g} does not fit in period {period}"
        )
    centers = np.array([[-pitch, 0.0], [0.0, 0.0], [pitch, 0.0]])
    return ResonatorGeometry(centers, np.full(3, radius))


def square_trimer_geometry(radius: float = 0.1, intra_gap: float = 0.05, scale: float = 1.0) -> ResonatorGeometry:
    """Horizontal trimer of disks in the unit square cell."""
    geo = trimer_chain_geometry(radius, intra_gap, 1.0)
    geo = ResonatorGeometry(scale * geo.centers, scale * geo.radii)
    geo.check(make_lattice(LatticeKind.SQUARE, scale))
    return geo


def honeycomb_geometry(R: float = 0.1, radius: float = 0.1, scale: float = 1.0) -> ResonatorGeometry:
    """Two trimers per cell of the honeycomb lattice built by :func:`make_lattice`.

    Disk ``i`` sits at distance ``3R`` from its trimer's site, pointing towards
    a nearest-neighbour site.
    """
    if R <= 0 or radius <= 0:
        raise GeometryError("R and radius must be positive")

    def rim(angle):
        return 3 * R * np.array([np.cos(angle), np.sin(angle)])

    a, b = np.array([1.0, 0.0]), np.array([2.0, 0.0])
    centers = np.array([
        a + rim(0.0),
        a + rim(2 * np.pi / 3),
        a + rim(4 * np.pi / 3),
        b + rim(np.pi / 3),
        b - rim(0.0),
        b + rim(5 * np.pi / 3),
    ])
    geo = ResonatorGeometry(scale * centers, np.full(6, radius * scale))
    geo.check(make_lattice(LatticeKind.HONEYCOMB, scale))
    return geo


def _symmetry_points(lat: Lattice) -> dict[str, np.ndarray]:
    g = lat.dual()
    zero = np.zeros(2)
    if lat.kind is LatticeKind.CHAIN:
        return {"G": zero, "X": g[0] / 2, "-X": -g[0] / 2}
    if lat.kind is LatticeKind.SQUARE:
        return {"G": zero, "X": g[0] / 2, "M": (g[0] + g[1]) / 2, "Y": g[1] / 2}
    if lat.kind is LatticeKind.HONEYCOMB:
        return {"G": zero, "M": g[0] / 2, "K": (2 * g[0] + g[1]) / 3}
    return {"G": zero}


_ALIASES = {"Γ": "G", "GAMMA": "G", "-Γ": "G"}


@dataclass(frozen=True)
class BrillouinPath:
    """Piecewise-linear path through quasimomentum space.

    ``arc`` is the cumulative arc length, except for chains where it is the
    quasimomentum itself (so gap intervals read directly as ``alpha``).
    """

    waypoints: list[tuple[str, np.ndarray]]
    samples: np.ndarray
    arc: np.ndarray
    ticks: list[tuple[str, float]] = field(default_factory=list)

    def __len__(self) -> int:
        return self.samples.shape[0]


def _resolve_waypoint(name, points: dict, lat: Lattice) -> tuple[str, np.ndarray]:
    if isinstance(name, (int, float)) and not isinstance(name, bool):
        return f"{float(name):g}", np.array([float(name), 0.0])
    if isinstance(name, (list, tuple, np.ndarray)):
        v = np.asarray(name, dtype=float).reshape(-1)
        if v.size == 1:
            v = np.array([v[0], 0.0])
        return str(v.tolist()), v
    key = _ALIASES.get(str(name).upper(), str(name).upper())
    if key not in points:
        raise ConfigurationError(
            f"unknown waypoint {name!r} for {lat.kind.value} lattice; "
            f"known: {sorted(points)}"
        )
    return ("Γ" if key == "G" else key), points[key]


def brillouin_path(lat: Lattice, waypoint_names: Sequence, samples_per_leg: int) -> BrillouinPath:
    """Uniformly sampled path through the named symmetry points.

    Each leg contributes ``samples_per_leg`` points (start included, end
    excluded); the final waypoint is appended, so a path listed as a cycle
    starts and ends at the same quasimomentum.
    """
    if samples_per_leg < 1:
        raise ConfigurationError("samples_per_leg must be >= 1")
    if len(waypoint_names) < 2:
        raise ConfigurationError("a path needs at least two waypoints")
    points = _symmetry_points(lat)
    wps = [_resolve_waypoint(w, points, lat) for w in waypoint_names]
    samples, arc, ticks = [], [], []
    s = 0.0
    for (name0, a), (_, b) in zip(wps[:-1], wps[1:]):
        ticks.append((name0, s))
        length = float(np.linalg.norm(b - a))
        for k in range(samples_per_leg):
            t = k / samples_per_leg
            samples.append(a + t * (b - a))
            arc.append(s + t * length)
        s += length
    samples.append(wps[-1][1].copy())
    arc.append(s)
    ticks.append((wps[-1][0], s))
    samples = np.array(samples)
    arc = np.array(arc)
    if lat.dim == 1:
        arc = samples[:, 0].copy()
        ticks = [(n, float(v[0])) for n, v in wps]
    return BrillouinPath(wps, samples, arc, ticks)


def chain_path(lat: Lattice, n: int) -> BrillouinPath:
    """``n`` uniformly spaced quasimomenta covering ``[-pi/L, pi/L]``."""
    L = lat.cell_measure
    alphas = np.linspace(-np.pi / L, np.pi / L, n)
    samples = np.column_stack([alphas, np.zeros(n)])
    wps = [("-X", samples[0]), ("X", samples[-1])]
    return BrillouinPath(wps, samples, alphas.copy(), [("-X", alphas[0]), ("X", alphas[-1])])


def save_geometry(path, lat: Lattice, geo: ResonatorGeometry) -> None:
    doc = {"lattice": lat.to_dict(), "resonators": geo.to_dict()}
    Path(path).write_text(json.dumps(doc, indent=2))


def geometry_from_dict(doc: dict) -> tuple[Lattice, ResonatorGeometry]:
    try:
        lat = Lattice.from_dict(doc["lattice"])
        res = doc["resonators"]
        geo = ResonatorGeometry(
            np.array([r["center"] for r in res], dtype=float),
            np.array([r["radius"] for r in res], dtype=float),
        )
    except (KeyError, TypeError) as exc:
        raise ConfigurationError(f"malformed geometry document: {exc}") from exc
    geo.check(lat)
    return lat, geo


def load_geometry(path) -> tuple[Lattice, ResonatorGeometry]:
    return geometry_from_dict(json.loads(Path(path).read_text()))
