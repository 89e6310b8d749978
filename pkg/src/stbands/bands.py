"""Band-structure sweeps, degenerate-point search and gap detection."""

from __future__ import annotations

import csv
import enum
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .capacitance import CapacitanceAssembler, CapacitanceError
from .floquet import IntegrationError, floquet_exponents, fold, integrate_monodromy
from .hill import ModulationSpec, build_hill, lift_first_order
from .lattice import BrillouinPath, ConfigurationError, ResonatorGeometry
from .perturbation import SpectralError, analyze, diagonalize_static

__all__ = [
    "BandStructure",
    "DegeneracyNotFound",
    "DegeneratePoint",
    "GapInterval",
    "GapKind",
    "PolyfitResult",
    "ReciprocityReport",
    "StaticBands",
    "SweepMethod",
    "continue_branches",
    "detect_gaps",
    "find_degenerate_alpha",
    "gap_containing",
    "load_bands_csv",
    "polyfit_f1",
    "reciprocity_check",
    "set_distance",
    "spectrum_at",
    "sweep",
    "write_bands_csv",
    "write_gaps_json",
]

NUDGE = 1e-3


class DegeneracyNotFound(RuntimeError):
    """No crossing of the requested folded branches inside the bracket."""


class SweepMethod(str, enum.Enum):
    FLOQUET = "floquet"
    ASYMPTOTIC = "asymptotic"
    BOTH = "both"

    @classmethod
    def parse(cls, value) -> "SweepMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ConfigurationError(f"unknown sweep method {value!r}") from None


def _nudge(alpha: np.ndarray) -> tuple[np.ndarray, str]:
    """Move ``alpha`` off the origin, where ``C^alpha`` is only a limit."""
    r = np.linalg.norm(alpha)
    if r >= NUDGE:
        return alpha, ""
    direction = alpha / r if r > 0 else np.array([1.0, 0.0])
    return NUDGE * direction, f"alpha nudged to {NUDGE:g}"


def _reference(mu):
    w = np.sqrt(mu)
    return np.concatenate([w, -w])


def spectrum_at(C, geo: ResonatorGeometry, mod: ModulationSpec, tol: float = 1e-11, ode: bool = False):
    """Floquet quasifrequencies for one capacitance matrix.

    Returns the :class:`~stbands.floquet.QuasifrequencySet` matched against
    the static branches ``(+sqrt(mu), -sqrt(mu))`` and the monodromy result.
    ``ode=True`` integrates even a time-independent system.
    """
    hill = build_hill(C, geo, mod)
    system = lift_first_order(hill)
    if ode and system.constant:
        system = type(system)(system.A0, system.A1_plus, system.A1_minus, system.A_of_t, system.T, False)
    mono = integrate_monodromy(system, tol=tol)
    ref = _reference(diagonalize_static(hill.M0).mu)
    return floquet_exponents(mono, mod.Omega, reference=ref), mono


@dataclass
class BandStructure:
    """Swept quasifrequencies along a path.

    ``omegas[k, b]`` is branch ``b`` at sample ``k``; rows of failed samples
    are NaN and carry a message in ``flags``.
    """

    alphas: np.ndarray
    arc: np.ndarray
    omegas: np.ndarray
    Omega: float
    epsilon: float
    method: SweepMethod
    asymptotic: np.ndarray | None = None
    vectors: np.ndarray | None = None
    det_residuals: np.ndarray | None = None
    flags: list = field(default_factory=list)
    ticks: list = field(default_factory=list)

    @property
    def n_branches(self) -> int:
        return self.omegas.shape[1]

    @property
    def ok(self) -> np.ndarray:
        return np.all(np.isfinite(self.omegas), axis=1)


def _sample(asm, geo, mod, alpha, method, tol, tol_deg):
    alpha, flag = _nudge(np.asarray(alpha, dtype=float))
    n = 2 * geo.n
    nan = np.full(n, np.nan + 0j)
    try:
        C = asm(alpha)
        hill = build_hill(C, geo, mod)
        floq = asym = vec = None
        det = np.nan
        if method in (SweepMethod.FLOQUET, SweepMethod.BOTH):
            q, mono = spectrum_at(C, geo, mod, tol)
            floq, vec, det = q.omega0, q.vectors, mono.det_residual
        if method in (SweepMethod.ASYMPTOTIC, SweepMethod.BOTH):
            an = analyze(hill, tol_deg)
            asym = an.first_order_omegas()
        return floq, asym, vec, det, flag
    except (CapacitanceError, IntegrationError, SpectralError) as exc:
        msg = f"{type(exc).__name__}: {exc}"
        return nan, nan, None, np.nan, "; ".join(filter(None, [flag, msg]))


def sweep(
    path: BrillouinPath,
    geo: ResonatorGeometry,
    lattice=None,
    mod: ModulationSpec | None = None,
    method=SweepMethod.FLOQUET,
    *,
    assembler: CapacitanceAssembler | None = None,
    tol: float = 1e-11,
    tol_deg: float | None = None,
    threads: int = 1,
    continuation: bool = True,
) -> BandStructure:
    """Quasifrequencies at every sample of ``path``.

    Samples closer than ``1e-3`` to ``alpha = 0`` are nudged away and flagged;
    capacitance or integration failures flag the sample and the sweep goes on.
    With ``method='asymptotic'`` the first-order prediction ``f0 + eps f1`` at
    degeneracies (``tol_deg``, default ``1e-4 Omega``) replaces integration.
    """
    if mod is None:
        raise ConfigurationError("sweep needs a modulation spec")
    method = SweepMethod.parse(method)
    asm = assembler or CapacitanceAssembler(geo, lattice)
    tol_deg = 1e-4 * mod.Omega if tol_deg is None else tol_deg
    alphas = np.asarray(path.samples, dtype=float)

    def job(a):
        return _sample(asm, geo, mod, a, method, tol, tol_deg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(job, alphas))
    else:
        rows = [job(a) for a in alphas]

    n = 2 * geo.n
    nan = np.full(n, np.nan + 0j)
    floq = np.array([r[0] if r[0] is not None else nan for r in rows])
    asym = np.array([r[1] if r[1] is not None else nan for r in rows])
    flags = [r[4] for r in rows]
    det = np.array([r[3] for r in rows], dtype=float)
    vec = None
    if method is not SweepMethod.ASYMPTOTIC:
        vec = np.array([r[2] if r[2] is not None else np.full((n, n), np.nan + 0j) for r in rows])
    primary = asym if method is SweepMethod.ASYMPTOTIC else floq
    bs = BandStructure(
        alphas, np.asarray(path.arc, dtype=float), primary, mod.Omega, mod.epsilon, method,
        asymptotic=asym if method is SweepMethod.BOTH else None,
        vectors=vec, det_residuals=det if vec is not None else None,
        flags=flags, ticks=list(path.ticks),
    )
    if continuation and vec is not None:
        continue_branches(bs)
    return bs


def _circular(a, b, Omega):
    d = np.real(a) - np.real(b)
    d = d - Omega * np.round(d / Omega)
    return np.hypot(d, np.imag(a) - np.imag(b))


def continue_branches(bs: BandStructure, min_overlap: float = 0.5) -> BandStructure:
    """Reorder branches in place so each follows its eigenvector.

    Adjacent samples are matched by maximal ``|<v_k, v_{k+1}>|``; when the
    best assignment has an overlap below ``min_overlap`` the step is matched
    by nearest value instead and flagged.
    """
    if bs.vectors is None:
        return bs
    prev = None
    for k in range(len(bs.omegas)):
        if not np.all(np.isfinite(bs.omegas[k])):
            continue
        V = bs.vectors[k]
        V = V / np.linalg.norm(V, axis=0, keepdims=True)
        if prev is not None:
            kp, Vp = prev
            ov = np.abs(Vp.conj().T @ V)
            rows, cols = linear_sum_assignment(-ov)
            if ov[rows, cols].min() < min_overlap:
                cost = _circular(bs.omegas[kp][:, None], bs.omegas[k][None, :], bs.Omega)
                rows, cols = linear_sum_assignment(cost)
                note = "continuation by value"
                bs.flags[k] = "; ".join(filter(None, [bs.flags[k], note]))
            perm = cols[np.argsort(rows)]
            bs.omegas[k] = bs.omegas[k][perm]
            V = V[:, perm]
            bs.vectors[k] = bs.vectors[k][:, perm]
            if bs.asymptotic is not None:
                # the asymptotic columns share the static labelling of the Floquet ones
                bs.asymptotic[k] = bs.asymptotic[k][perm]
        prev = (k, V)
    return bs


# -- degenerate points ---------------------------------------------------------


class StaticBands:
    """Unfolded static branches ``(+sqrt(mu), -sqrt(mu))`` as functions of ``alpha``."""

    def __init__(self, assembler: CapacitanceAssembler, K: float):
        self.asm, self.K = assembler, float(K)
        self.geo = assembler.geo

    def __call__(self, alpha) -> np.ndarray:
        a = np.asarray(alpha, dtype=float).reshape(-1)
        if a.size == 1:
            a = np.array([a[0], 0.0])
        M0 = self.K * self.asm(a).entries / self.geo.volumes[:, None]
        return _reference(diagonalize_static(M0).mu)


@dataclass(frozen=True)
class DegeneratePoint:
    alpha: float
    i: int
    j: int
    k: int
    omega0: float

    def case(self, n: int) -> str:
        """``Case2`` when the two branches carry opposite signs, for ``n`` resonators."""
        return "Case2" if (self.i < n) != (self.j < n) else "Case1"

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "i": self.i, "j": self.j, "k": self.k, "omega0": self.omega0}


def find_degenerate_alpha(
    static: StaticBands,
    Omega: float,
    bracket: tuple[float, float],
    tol: float = 1e-12,
    pair: tuple[int, int] | None = None,
    k: int | None = None,
    samples: int = 48,
    direction=(1.0, 0.0),
) -> list[DegeneratePoint]:
    """Roots of ``w_i(alpha) - w_j(alpha) - k Omega`` on the unfolded branches.

    ``w`` lists ``(+sqrt(mu_1..N), -sqrt(mu_1..N))``; ``alpha`` runs along
    ``direction``.  Without ``pair``/``k`` every branch pair and ``|k| <= 3``
    is searched.
    """
    lo, hi = map(float, bracket)
    if not hi > lo:
        raise ConfigurationError("bracket must satisfy lo < hi")
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    grid = np.linspace(lo, hi, samples)
    W = np.array([static(a * d) for a in grid]).real
    n2 = W.shape[1]
    pairs = [pair] if pair is not None else [(i, j) for i in range(n2) for j in range(i + 1, n2)]
    ks = [k] if k is not None else [-3, -2, -1, 1, 2, 3]
    found = []
    for i, j in pairs:
        for kk in ks:
            g = W[:, i] - W[:, j] - kk * Omega
            for s in range(samples - 1):
                if g[s] == 0 or g[s] * g[s + 1] < 0:

                    def f(a, i=i, j=j, kk=kk):
                        w = static(a * d).real
                        return w[i] - w[j] - kk * Omega

                    a0 = brentq(f, grid[s], grid[s + 1], xtol=tol) if g[s] != 0 else grid[s]
                    w = static(a0 * d).real
                    found.append(DegeneratePoint(float(a0), i, j, kk, float(fold(w[i], Omega)[0])))
    if not found:
        raise DegeneracyNotFound(f"no folded crossing in alpha bracket [{lo:g}, {hi:g}]")
    found.sort(key=lambda p: (p.alpha, p.i, p.j))
    return found


# -- gaps ------------------------------------------------------------------------


class GapKind(str, enum.Enum):
    BAND = "BandGap"
    K = "KGap"


@dataclass(frozen=True)
class GapInterval:
    kind: GapKind
    lo: float
    hi: float
    witness: tuple = ()
    max_im: float = 0.0

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value, "lo": self.lo, "hi": self.hi, "witness": list(map(int, self.witness))}
        if self.kind is GapKind.K:
            d["max_im"] = self.max_im
        return d


def _runs(mask):
    """(start, stop) index pairs of True runs."""
    m = np.concatenate([[False], np.asarray(mask, bool), [False]])
    edges = np.flatnonzero(np.diff(m.astype(int)))
    return list(zip(edges[::2], edges[1::2]))


def detect_gaps(
    bs: BandStructure,
    im_threshold: float = 1e-6,
    omega_resolution: float | None = None,
    alpha_window: tuple[float, float] | None = None,
    omega_range: tuple[float, float] | None = None,
) -> list[GapInterval]:
    """k-gaps along the path and band gaps in real frequency.

    KGap bounds are arc-length coordinates (``alpha`` itself for chains).
    BandGaps are the uncovered stretches of a raster of width
    ``omega_resolution`` (default ``Omega/2000``) over ``omega_range``
    (default ``[0, Omega/2]``); consecutive samples of a branch cover the
    frequencies between them.  ``alpha_window`` restricts the samples to an
    arc-length interval, which exposes gaps local to a degenerate point.
    """
    Om = bs.Omega
    res = Om / 2000 if omega_resolution is None else float(omega_resolution)
    lo_w, hi_w = (0.0, Om / 2) if omega_range is None else omega_range
    keep = bs.ok.copy()
    if alpha_window is not None:
        keep &= (bs.arc >= alpha_window[0]) & (bs.arc <= alpha_window[1])
    idx = np.flatnonzero(keep)
    gaps: list[GapInterval] = []
    if idx.size == 0:
        return gaps
    W = bs.omegas[idx]
    arc = bs.arc[idx]

    im = np.abs(W.imag)
    hot = im.max(axis=1) > im_threshold
    for s, e in _runs(hot):
        branches = np.flatnonzero((im[s:e] > im_threshold).any(axis=0))
        gaps.append(GapInterval(GapKind.K, float(arc[s]), float(arc[e - 1]),
                                tuple(branches), float(im[s:e].max())))

    # coverage raster on [-Omega/2, Omega/2)
    nb = int(np.ceil(Om / res))
    covered = np.zeros(nb, dtype=bool)
    real = im <= im_threshold
    x = W.real

    def mark(a, b):
        a, b = min(a, b), max(a, b)
        ia = int(np.floor((a + Om / 2) / res))
        ib = int(np.floor((b + Om / 2) / res))
        if ib - ia >= nb:
            covered[:] = True
            return
        ks = np.arange(ia, ib + 1) % nb
        covered[ks] = True

    for b in range(W.shape[1]):
        for k in range(len(idx)):
            if not real[k, b]:
                continue
            mark(x[k, b], x[k, b])
            if k + 1 < len(idx) and real[k + 1, b] and idx[k + 1] == idx[k] + 1:
                d = x[k + 1, b] - x[k, b]
                d -= Om * np.round(d / Om)
                mark(x[k, b], x[k, b] + d)
    centers = -Om / 2 + (np.arange(nb) + 0.5) * res
    inside = (centers >= lo_w) & (centers <= hi_w)
    for s, e in _runs(~covered & inside):
        lo = max(-Om / 2 + s * res, lo_w)
        hi = min(-Om / 2 + e * res, hi_w)
        if hi - lo <= res * 1.0001 and (s == 0 or e == nb):
            continue
        # witnesses: branches bounding the gap from below and above
        below = np.where(real, np.where(x <= lo + res, x, -np.inf), -np.inf).max(axis=0)
        above = np.where(real, np.where(x >= hi - res, x, np.inf), np.inf).min(axis=0)
        wl = int(np.argmax(below)) if np.isfinite(below).any() else -1
        wh = int(np.argmin(above)) if np.isfinite(above).any() else -1
        gaps.append(GapInterval(GapKind.BAND, float(lo), float(hi), (wl, wh)))
    return gaps


def gap_containing(gaps: Sequence[GapInterval], omega: float) -> GapInterval | None:
    for g in gaps:
        if g.kind is GapKind.BAND and g.lo <= omega <= g.hi:
            return g
    return None


# -- reciprocity -------------------------------------------------------------------


def set_distance(a, b, Omega: float) -> float:
    """Optimal-matching distance between two spectra, real parts modulo ``Omega``."""
    a, b = np.asarray(a), np.asarray(b)
    cost = _circular(a[:, None], b[None, :], Omega)
    r, c = linear_sum_assignment(cost)
    return float(cost[r, c].max())


@dataclass(frozen=True)
class ReciprocityReport:
    alpha: np.ndarray
    conjugate_distance: float
    reciprocity_distance: float
    tol: float

    @property
    def conjugate_symmetric(self) -> bool:
        return self.conjugate_distance <= self.tol

    @property
    def reciprocal(self) -> bool:
        return self.reciprocity_distance <= self.tol

    def to_dict(self) -> dict:
        return {
            "alpha": [float(v) for v in self.alpha],
            "conjugate_distance": self.conjugate_distance,
            "reciprocity_distance": self.reciprocity_distance,
            "conjugate_symmetric": self.conjugate_symmetric,
            "reciprocal": self.reciprocal,
        }


def reciprocity_check(assembler: CapacitanceAssembler, mod: ModulationSpec, alpha,
                      tol: float = 1e-8, ode_tol: float = 1e-11) -> ReciprocityReport:
    """Compare spectra at ``alpha`` and ``-alpha``.

    ``conjugate_distance`` measures ``{w(-a)}`` against ``{-conj w(a)}``, which
    always coincide; ``reciprocity_distance`` measures ``{w(-a)}`` against
    ``{w(a)}``.
    """
    a = np.asarray(alpha, dtype=float).reshape(-1)
    if a.size == 1:
        a = np.array([a[0], 0.0])
    geo = assembler.geo
    wp = spectrum_at(assembler(a), geo, mod, ode_tol)[0].omega0
    wm = spectrum_at(assembler(-a), geo, mod, ode_tol)[0].omega0
    Om = mod.Omega
    return ReciprocityReport(a, set_distance(wm, -np.conj(wp), Om), set_distance(wm, wp, Om), tol)


# -- polyfit ---------------------------------------------------------------------


@dataclass(frozen=True)
class PolyfitResult:
    eps: np.ndarray
    omega0: float
    branches: np.ndarray       # (len(eps), r) paired quasifrequencies
    slopes: np.ndarray         # linear coefficient per branch
    residual: float
    degree: int


def fit_linear_coefficient(eps, values, omega0, degree: int = 3):
    """Least-squares ``values - omega0 = sum_{k=1..degree} c_k eps^k``; returns ``(c_1, residual)``."""
    eps = np.asarray(eps, dtype=float)
    y = np.asarray(values) - omega0
    V = np.column_stack([eps**k for k in range(1, degree + 1)])
    coef, *_ = np.linalg.lstsq(V.astype(complex), y.astype(complex), rcond=None)
    resid = float(np.abs(V @ coef - y).max())
    return complex(coef[0]), resid


def polyfit_f1(
    C,
    geo: ResonatorGeometry,
    mod_template: ModulationSpec,
    omega0: float,
    eps_grid: Sequence[float],
    degree: int = 3,
    r: int = 2,
    tol: float = 1e-12,
) -> PolyfitResult:
    """Numerical first-order coefficients at a degenerate point.

    For each ``eps`` the ``r`` quasifrequencies nearest ``omega0`` are taken
    from the monodromy spectrum and paired with the previous amplitude by
    linear extrapolation; each branch is then fitted by a polynomial without
    constant term.
    """
    eps = np.asarray(sorted(eps_grid), dtype=float)
    if eps.size < 5:
        raise ConfigurationError("polyfit needs at least 5 amplitudes")
    if degree < 2:
        raise ConfigurationError("polyfit degree must be >= 2")
    if eps[0] <= 0 or eps[-1] > 0.15:
        raise ConfigurationError("amplitudes must lie in (0, 0.15]")
    Om = mod_template.Omega
    rows = []
    prev = None
    for k, e in enumerate(eps):
        q, _ = spectrum_at(C, geo, mod_template.with_epsilon(e), tol)
        w = q.omega0
        dist = _circular(w, omega0, Om)
        pick = np.argsort(dist)[:r]
        d = w[pick] - omega0
        d = d.real - Om * np.round(d.real / Om) + 1j * d.imag
        local = omega0 + d
        if prev is None:
            local = local[np.lexsort((local.real, local.imag))]
        else:
            guess = omega0 + (prev - omega0) * (e / eps[k - 1])
            cost = np.abs(guess[:, None] - local[None, :])
            ri, ci = linear_sum_assignment(cost)
            if cost[ri, ci].max() > 0.5 * np.abs(guess - omega0).max() + 1e-12:
                raise ConfigurationError(f"branch pairing failed at eps={e:g}")
            local = local[ci[np.argsort(ri)]]
        rows.append(local)
        prev = local
    B = np.array(rows)
    slopes, res = [], 0.0
    for b in range(r):
        c, rr = fit_linear_coefficient(eps, B[:, b], omega0, degree)
        slopes.append(c)
        res = max(res, rr)
    return PolyfitResult(eps, float(omega0), B, np.array(slopes), res, degree)


# -- files -----------------------------------------------------------------------


def write_bands_csv(path, bs: BandStructure) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha_x", "alpha_y", "arc_length", "branch", "re_omega", "im_omega"])
        for k in range(len(bs.arc)):
            ax, ay = bs.alphas[k]
            for b in range(bs.n_branches):
                z = bs.omegas[k, b]
                w.writerow([f"{ax:.17g}", f"{ay:.17g}", f"{bs.arc[k]:.17g}", b,
                            f"{z.real:.17g}", f"{z.imag:.17g}"])


def load_bands_csv(path, Omega: float, epsilon: float = float("nan")) -> BandStructure:
    """Read a band CSV back (the eigenvectors are not stored)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ConfigurationError(f"{path}: no band data")
    try:
        nb = max(int(r["branch"]) for r in rows) + 1
        ns = len(rows) // nb
        data = np.array([[float(r[c]) for c in ("alpha_x", "alpha_y", "arc_length", "re_omega", "im_omega")]
                         for r in rows]).reshape(ns, nb, 5)
    except (KeyError, ValueError) as exc:
        raise ConfigurationError(f"{path}: malformed band CSV ({exc})") from exc
    om = data[:, :, 3] + 1j * data[:, :, 4]
    return BandStructure(data[:, 0, :2], data[:, 0, 2], om, float(Omega), epsilon,
                         SweepMethod.FLOQUET, flags=[""] * ns)


def write_gaps_json(path, gaps: Sequence[GapInterval]) -> None:
    Path(path).write_text(json.dumps([g.to_dict() for g in gaps], indent=2))
