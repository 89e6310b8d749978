"""Reference runs: trimer calibration, first-order checks and gap phenomenology.

The trimer-chain runs use disks of radius 0.1 in a cell of length 1.  The
spacing inside the trimer and the contrast ``K`` are calibrated so that the
static branches 2 and 3 fold onto each other at ``alpha = 2.395`` with
``omega0 = 0.12`` for ``Omega = 0.3``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, linear_sum_assignment

from .bands import (
    DegeneracyNotFound,
    StaticBands,
    _circular,
    GapKind,
    detect_gaps,
    find_degenerate_alpha,
    gap_containing,
    polyfit_f1,
    reciprocity_check,
    set_distance,
    spectrum_at,
    sweep,
)
from .capacitance import CapacitanceAssembler
from .floquet import fold
from .green import GreenSumConfig
from .hill import ModulationKind, ModulationSpec, build_hill
from .lattice import (
    BrillouinPath,
    ResonatorGeometry,
    chain_path,
    make_lattice,
    trimer_chain_geometry,
)
from .perturbation import analyze, character

__all__ = [
    "TABLE_REFERENCE",
    "TRIMER_PHASES",
    "Calibration",
    "EPS_GRID",
    "bandsym_check",
    "calibrate_trimer",
    "gap_run",
    "modulation",
    "static_consistency",
    "synthetic_order_check",
    "reference_point_run",
]

# neighbouring resonators lag by 2 pi / 3, decreasing from left to right
TRIMER_PHASES = (0.0, -2 * np.pi / 3, -4 * np.pi / 3)
EPS_GRID = (0.005, 0.01, 0.02, 0.04, 0.08)
MODES = ("rho", "kappa", "both")
# published first-order magnitudes |f1| at the calibrated point
TABLE_REFERENCE = {"rho": 0.0096, "kappa": 0.0116, "both": 0.0064}


def modulation(mode: str, epsilon: float, Omega: float, K: float, phases=TRIMER_PHASES) -> ModulationSpec:
    mode = ModulationKind(mode)
    rho = phases if mode in (ModulationKind.RHO, ModulationKind.BOTH) else None
    kap = phases if mode in (ModulationKind.KAPPA, ModulationKind.BOTH) else None
    return ModulationSpec(epsilon, Omega, K=K, rho_phases=rho, kappa_phases=kap)


@dataclass
class Calibration:
    intra_gap: float
    K: float
    Omega: float
    alpha_deg: float
    omega0: float
    geo: ResonatorGeometry
    assembler: CapacitanceAssembler = field(repr=False)

    @property
    def lattice(self):
        return self.assembler.lat

    def to_dict(self) -> dict:
        return {"intra_gap": self.intra_gap, "K": self.K, "Omega": self.Omega,
                "alpha_deg": self.alpha_deg, "omega0": self.omega0}


def calibrate_trimer(
    Omega: float = 0.3,
    alpha_deg: float = 2.395,
    omega0: float = 0.12,
    radius: float = 0.1,
    period: float = 1.0,
    gap_bracket=(0.03, 0.09),
    cfg: GreenSumConfig | None = None,
) -> Calibration:
    """Pick ``intra_gap`` and ``K`` so that branches 2 and 3 fold together.

    The ratio ``omega_3 / omega_2 = (Omega - omega0) / omega0`` at
    ``alpha_deg`` fixes the spacing (it does not depend on ``K``); ``K`` then
    scales ``omega_2`` to ``omega0``.
    """
    lat = make_lattice("chain", period)
    target = (Omega - omega0) / omega0
    a = np.array([alpha_deg, 0.0])

    def eigs(gap):
        geo = trimer_chain_geometry(radius, gap, period)
        asm = CapacitanceAssembler(geo, lat, cfg)
        return geo, asm, np.linalg.eigvalsh(asm(a).entries) / geo.volumes[0]

    def resid(gap):
        e = eigs(gap)[2]
        return np.sqrt(e[2] / e[1]) - target

    lo, hi = gap_bracket
    if resid(lo) * resid(hi) > 0:
        raise DegeneracyNotFound(f"no trimer spacing in {gap_bracket} gives ratio {target:g}")
    gap = brentq(resid, lo, hi, xtol=1e-13)
    geo, asm, e = eigs(gap)
    K = omega0**2 / e[1]
    return Calibration(float(gap), float(K), Omega, alpha_deg, omega0, geo, asm)


def _degenerate_result(an, omega0, Omega):
    best = None
    for res in an.results:
        d = abs(res.omega0 - omega0)
        d = min(d, Omega - d)
        if best is None or d < best[0]:
            best = (d, res)
    if best is None:
        raise DegeneracyNotFound("no degenerate group at this alpha")
    return best[1]


def reference_point_run(cal: Calibration, eps_grid=EPS_GRID, phases=TRIMER_PHASES, polyfit=True,
               bracket=(2.2, 2.6)) -> dict:
    """Analytic and fitted ``|f1|`` for the three modulation modes at the calibrated point."""
    static = StaticBands(cal.assembler, cal.K)
    n = cal.geo.n
    points = [p for p in find_degenerate_alpha(static, cal.Omega, bracket)
              if p.case(n) == "Case2" and abs(p.omega0 - cal.omega0) < 0.05 * cal.omega0]
    if not points:
        raise DegeneracyNotFound("calibrated degenerate point not found")
    p = points[0]
    C = cal.assembler(np.array([p.alpha, 0.0]))
    rows = []
    for mode in MODES:
        mod = modulation(mode, 0.0, cal.Omega, cal.K, phases)
        an = analyze(build_hill(C, cal.geo, mod), tol_deg=1e-6 * cal.Omega)
        res = _degenerate_result(an, p.omega0, cal.Omega)
        row = {"mode": mode, "group": list(res.group), "case": res.case.value,
               "f1": [[z.real, z.imag] for z in res.f1],
               "abs_f1": float(np.abs(res.f1).max()),
               "character_f1": character(res.f1).value}
        if polyfit:
            fit = polyfit_f1(C, cal.geo, mod, res.omega0, eps_grid)
            row["abs_f1_numeric"] = float(np.abs(fit.slopes).max())
            row["fit_residual"] = fit.residual
        rows.append(row)
    return {"alpha_deg": p.alpha, "omega0": p.omega0, "Omega": cal.Omega,
            "calibration": cal.to_dict(), "rows": rows}


def _random_hpd(rng, n=3):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    C = A @ A.conj().T + 0.5 * np.eye(n)
    return C / np.linalg.eigvalsh(C).max()


def synthetic_order_check(seed: int = 0, eps_grid=EPS_GRID, modes=MODES, pair=(0, 1),
                          omega_scale: float = 0.3, phases=TRIMER_PHASES,
                          isolation: float = 0.125) -> dict:
    """Residual order of the first-order prediction on a random Hermitian matrix.

    For a seeded positive-definite ``C`` scaled so that the static frequencies
    are of order ``omega_scale``, ``Omega = omega_a + omega_b`` folds branch
    ``+a`` onto ``-b``.  Draws whose other branches fold closer than
    ``isolation * Omega`` to the degenerate value are rejected.  Returns per mode the residuals, their log-log slope,
    the fitted linear coefficients and the analytic ``omega1``.
    """
    rng = np.random.default_rng(seed)
    geo = trimer_chain_geometry()
    K = omega_scale**2 * geo.volumes[0]
    a, b = pair
    for _ in range(1000):
        C = _random_hpd(rng)
        w = np.sqrt(np.linalg.eigvalsh(K * C / geo.volumes[0]))
        Omega = float(w[a] + w[b])
        om0 = fold(w[a], Omega)[0]
        others = np.delete(np.concatenate([w, -w]), [a, len(w) + b])
        # redraw until the pair is well separated from every other folded branch
        if _circular(others, om0, Omega).min() > isolation * Omega:
            break
    else:
        raise RuntimeError("could not draw an isolated degeneracy")
    out = {"seed": seed, "Omega": Omega, "omega0": om0, "modes": {}}
    det_max = 0.0
    for mode in modes:
        mod0 = modulation(mode, 0.0, Omega, K, phases)
        an = analyze(build_hill(C, geo, mod0))
        res = _degenerate_result(an, om0, Omega)
        w1 = res.omega1
        errs = []
        for e in eps_grid:
            q, mono = spectrum_at(C, geo, mod0.with_epsilon(e), tol=1e-13)
            det_max = max(det_max, mono.det_residual)
            near = q.omega0[np.argsort(_circular(q.omega0, om0, Omega))[:2]]
            near = near - Omega * np.round((near.real - om0) / Omega)
            pred = om0 + e * w1
            cost = np.abs(near[:, None] - pred[None, :])
            r, c = linear_sum_assignment(cost)
            errs.append(float(cost[r, c].max()))
        slope = float(np.polyfit(np.log(eps_grid), np.log(errs), 1)[0])
        fit = polyfit_f1(C, geo, mod0, om0, eps_grid, degree=3, tol=1e-13)
        cost = np.abs(fit.slopes[:, None] - w1[None, :])
        r, c = linear_sum_assignment(cost)
        rel = float((cost[r, c] / np.abs(w1[c])).max())
        out["modes"][mode] = {
            "case": res.case.value,
            "omega1": [[z.real, z.imag] for z in w1],
            "residuals": errs,
            "slope": slope,
            "fitted": [[z.real, z.imag] for z in fit.slopes],
            "fit_rel_error": rel,
            "im_ratio": float(np.max(np.abs(w1.imag) / np.abs(w1))),
            "re_ratio": float(np.max(np.abs(w1.real) / np.abs(w1))),
        }
    out["det_residual_max"] = det_max
    return out


def static_consistency(assembler: CapacitanceAssembler, K: float, Omega: float, alphas,
                       ode: bool = False) -> tuple[float, float]:
    """Largest distance between an ``eps = 0`` spectrum and folded ``+-sqrt(mu)``,
    and largest ``|det X(T) - 1|`` over ``alphas``."""
    geo = assembler.geo
    mod = ModulationSpec(0.0, Omega, K=K)
    worst = det = 0.0
    for a in alphas:
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.size == 1:
            a = np.array([a[0], 0.0])
        C = assembler(a)
        q, mono = spectrum_at(C, geo, mod, tol=1e-12, ode=ode)
        mu = np.linalg.eigvalsh(K * C.entries / geo.volumes[0])
        ref = np.concatenate([np.sqrt(mu), -np.sqrt(mu)])
        worst = max(worst, set_distance(q.omega0, fold(ref, Omega)[0], Omega))
        det = max(det, mono.det_residual)
    return worst, det


def bandsym_check(cal: Calibration, n: int = 50, epsilon: float = 0.1, seed: int = 0,
                  mode: str = "rho", Omega: float | None = None) -> dict:
    """Conjugation symmetry ``{w(-a)} = {-conj w(a)}`` at ``n`` random quasimomenta."""
    rng = np.random.default_rng(seed)
    L = cal.lattice.cell_measure
    alphas = rng.uniform(0.01, np.pi / L, n)
    mod = modulation(mode, epsilon, Omega or cal.Omega, cal.K)
    reports = [reciprocity_check(cal.assembler, mod, a) for a in alphas]
    return {
        "alphas": alphas.tolist(),
        "conjugate_distance_max": max(r.conjugate_distance for r in reports),
        "reciprocity_distance_max": max(r.reciprocity_distance for r in reports),
    }


def gap_run(cal: Calibration, Omega: float = 0.35, epsilon: float = 0.1, samples: int = 121,
             window: float = 0.03, window_samples: int = 13, threads: int = 1) -> dict:
    """k-gaps under bulk-modulus modulation and non-reciprocal band gaps under density modulation.

    The contrast is rescaled by ``(Omega / cal.Omega)^2`` so the calibrated
    folding degeneracy persists at the new modulation frequency.
    """
    K = cal.K * (Omega / cal.Omega) ** 2
    lat, geo, asm = cal.lattice, cal.geo, cal.assembler
    path = chain_path(lat, samples)
    kap = sweep(path, geo, lat, modulation("kappa", epsilon, Omega, K), assembler=asm, threads=threads)
    kgaps = [g for g in detect_gaps(kap) if g.kind is GapKind.K]
    static = StaticBands(asm, K)
    n = geo.n
    pts = [p for p in find_degenerate_alpha(static, Omega, (0.5 * np.pi, np.pi / lat.cell_measure))
           if p.case(n) == "Case2" and p.omega0 > 0]
    if not pts:
        raise DegeneracyNotFound("no positive Case 2 degeneracy for the gap run")
    p = pts[0]
    res = Omega / 2000
    extents = {}
    for sign in (1, -1):
        a = np.linspace(sign * p.alpha - window, sign * p.alpha + window, window_samples)
        local = BrillouinPath([], np.column_stack([a, np.zeros_like(a)]), a, [])
        rho = sweep(local, geo, lat, modulation("rho", epsilon, Omega, K), assembler=asm, threads=threads)
        gaps = detect_gaps(rho, omega_resolution=res)
        g = gap_containing(gaps, p.omega0)
        kg = [x for x in gaps if x.kind is GapKind.K]
        extents["+" if sign > 0 else "-"] = {
            "band_gap": None if g is None else [g.lo, g.hi],
            "k_gaps": len(kg),
        }
    bp, bm = extents["+"]["band_gap"], extents["-"]["band_gap"]
    diff = None if bp is None or bm is None else max(abs(bp[0] - bm[0]), abs(bp[1] - bm[1]))
    return {
        "Omega": Omega, "epsilon": epsilon, "K": K, "alpha_deg": p.alpha, "omega0": p.omega0,
        "kgaps": [g.to_dict() for g in kgaps],
        "kgap_max_im": max((g.max_im for g in kgaps), default=0.0),
        "rho_extents": extents, "extent_difference": diff, "resolution": res,
        "det_residual_max": float(np.nanmax(kap.det_residuals)),
    }
