"""Wavenumber scans, large-wavenumber asymptotics, the rescaled unstable
curve, convergence metrics and the existence/stability region map."""

from __future__ import annotations

import cmath
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import dispersion, turing
from .dispersion import ClassifiedRoot, PointClass
from .models import (
    AnomalousExponent,
    CreationAnnihilationParams,
    ReactionMatrix,
    SourceSinkParams,
)


class EmptyIntersection(ValueError):
    """No subdiffusion points fell inside the comparison window; the
    distance is undefined (not zero)."""


@dataclass(frozen=True)
class SpectrumPoint:
    q: float
    s: complex
    classification: PointClass
    multiplicity: int = 1
    source: str = "polyroot"

    @property
    def counted(self) -> bool:
        """Whether the point belongs to the (pseudo-)spectrum proper."""
        return self.classification != PointClass.OUTSIDE


@dataclass(frozen=True)
class SpectrumScan:
    """Aggregated scan over a wavenumber grid."""

    model: str
    params: dict
    grid: tuple[float, ...]
    points: tuple[SpectrumPoint, ...]
    errors: tuple[str, ...] = ()

    @property
    def lambda_sup(self) -> float:
        """sup Re over spectrum and pseudo-spectrum; -inf when empty."""
        vals = [p.s.real for p in self.points if p.counted]
        return max(vals) if vals else -math.inf

    def in_window(self, window, counted_only: bool = True) -> list[SpectrumPoint]:
        re_lo, re_hi, im_lo, im_hi = window
        return [
            p
            for p in self.points
            if (not counted_only or p.counted)
            and re_lo <= p.s.real <= re_hi
            and im_lo <= p.s.imag <= im_hi
        ]


def _points_from_roots(q: float, roots, source_default: str) -> list[SpectrumPoint]:
    return [
        SpectrumPoint(
            q=q,
            s=r.s,
            classification=r.classification,
            multiplicity=r.multiplicity,
            source=r.source if r.source != "polyroot" else source_default,
        )
        for r in roots
    ]


def _ss_chunk(args) -> tuple[list, list]:
    params, qs = args
    pts: list[SpectrumPoint] = []
    errs: list[str] = []
    for q in qs:
        try:
            pts.extend(_points_from_roots(q, dispersion.roots_ss(params, q), "polyroot"))
        except Exception as exc:  # keep partial results, log per-q failure
            errs.append(f"q={q}: {exc}")
    return pts, errs


def scan_ss(params: SourceSinkParams, q_grid, jobs: int = 1) -> SpectrumScan:
    """Scan the source-sink model: complete per-q root enumeration."""
    q_grid = [float(q) for q in q_grid]
    snapshot = _snapshot_ss(params)
    if jobs > 1 and len(q_grid) > 2 * jobs:
        chunks = [q_grid[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_ss_chunk, [(params, ch) for ch in chunks]))
        pts = [p for res in results for p in res[0]]
        errs = [e for res in results for e in res[1]]
        pts.sort(key=lambda p: p.q)
    else:
        pts, errs = _ss_chunk((params, q_grid))
    model = "ss-scalar" if params.is_scalar else "ss-system"
    return SpectrumScan(model, snapshot, tuple(q_grid), tuple(pts), tuple(errs))


def scan_ca(params: CreationAnnihilationParams, q_grid) -> SpectrumScan:
    """Scan the creation-annihilation model by Newton continuation."""
    result = dispersion.roots_ca(params, q_grid)
    pts: list[SpectrumPoint] = []
    for q, roots in zip(result.q_grid, result.roots):
        pts.extend(_points_from_roots(q, roots, "continuation"))
    errs = tuple(f"continuation break at q={q}: root near {s}" for q, s in result.breaks)
    return SpectrumScan("ca-system", _snapshot_ca(params), tuple(result.q_grid), tuple(pts), errs)


def scan_regular(reaction: ReactionMatrix | float, d: float, q_grid) -> SpectrumScan:
    """Scan of the normal-diffusion spectrum (class always Spectrum)."""
    q_grid = [float(q) for q in q_grid]
    pts = [
        SpectrumPoint(q=q, s=s, classification=PointClass.SPECTRUM)
        for q in q_grid
        for s in dispersion._regular_roots(reaction, d, q)
    ]
    snap = {"model": "regular", "d": d}
    if isinstance(reaction, ReactionMatrix):
        snap["A"] = [reaction.a1, reaction.a2, reaction.a3, reaction.a4]
    else:
        snap["a"] = reaction
    return SpectrumScan("regular", snap, tuple(q_grid), tuple(pts))


def scan_ca_scalar(a: float, d: float, exponent: AnomalousExponent, q_grid,
                   theta1: float = math.pi / 2) -> SpectrumScan:
    """Scan of the scalar creation-annihilation model (closed-form root)."""
    q_grid = [float(q) for q in q_grid]
    pts = []
    for q in q_grid:
        if exponent.is_regular:
            pts.append(SpectrumPoint(q=q, s=complex(a - d * q * q),
                                     classification=PointClass.SPECTRUM))
        else:
            r = dispersion.scalar_ca_root(a, d, exponent.gamma, q, theta1)
            pts.append(SpectrumPoint(q=q, s=r.s, classification=r.classification,
                                     source=r.source))
    snap = {"model": "ca-scalar", "a": a, "d": d, "gamma": str(exponent), "theta1": theta1}
    return SpectrumScan("ca-scalar", snap, tuple(q_grid), tuple(pts))


def _snapshot_ss(params: SourceSinkParams) -> dict:
    snap = {"d": params.d, "gamma": str(params.exponent), "theta1": params.theta1}
    if params.is_scalar:
        snap["a"] = params.reaction
    else:
        r = params.reaction
        snap["A"] = [r.a1, r.a2, r.a3, r.a4]
    return snap


def _snapshot_ca(params: CreationAnnihilationParams) -> dict:
    r = params.reaction
    return {
        "A": [r.a1, r.a2, r.a3, r.a4],
        "d": params.d,
        "gamma": str(params.exponent),
        "theta1": params.theta1,
        "theta2": params.theta2,
        "case": r.case_tag,
    }


# ---------------------------------------------------------------------------
# large-wavenumber asymptotics (source-sink)


@dataclass(frozen=True)
class ApproxRoot:
    label: str
    s: complex
    classification: PointClass
    source: str = "asymptotic"


def asymptotic_ss(params: SourceSinkParams, q: float) -> dict[str, ApproxRoot]:
    """Large-wavenumber approximants of the source-sink roots.

    Systems yield the two divergent branches ``s_inf1/2`` (arguments
    ``pi/(1-delta)``, on-sheet only for small delta) and the two
    origin-bound branches ``s_0+/-`` from the quadratic in the rescaled
    variable; the scalar equation yields one of each.  Sensible for
    ``|q| >> max(1, |a_ij|, d)``.
    """
    exp = params.exponent
    if exp.is_regular:
        raise ValueError("asymptotic approximants require gamma < 1")
    delta = exp.delta
    theta1 = params.theta1
    q_sq = q * q
    one_m = 1.0 - delta

    def classify_unwrapped(mag: float, ang: float) -> PointClass:
        if not (-math.pi + theta1) < ang < (math.pi + theta1):
            return PointClass.OUTSIDE
        return PointClass.SPECTRUM if abs(ang) < math.pi / 2 else PointClass.PSEUDO

    out: dict[str, ApproxRoot] = {}
    if params.is_scalar:
        a = float(params.reaction)
        ang_inf = math.pi / one_m
        s_inf = (params.d * q_sq) ** (1.0 / one_m) * cmath.exp(1j * ang_inf) + a / one_m
        out["s_inf"] = ApproxRoot("s_inf", s_inf, classify_unwrapped(abs(s_inf), ang_inf))
        if a > 0:
            s0 = complex((a / (params.d * q_sq)) ** (1.0 / delta))
            out["s_0"] = ApproxRoot("s_0", s0, PointClass.SPECTRUM)
        elif a < 0:
            ang0 = math.pi / delta
            s0 = (abs(a) / (params.d * q_sq)) ** (1.0 / delta) * cmath.exp(1j * ang0)
            out["s_0"] = ApproxRoot("s_0", s0, classify_unwrapped(abs(s0), ang0))
        return out

    r = params.reaction
    ang_inf = math.pi / one_m
    s_inf1 = (q_sq) ** (1.0 / one_m) * cmath.exp(1j * ang_inf) + r.a1 / one_m
    s_inf2 = (params.d * q_sq) ** (1.0 / one_m) * cmath.exp(1j * ang_inf) + r.a4 / one_m
    out["s_inf1"] = ApproxRoot("s_inf1", s_inf1, classify_unwrapped(abs(s_inf1), ang_inf))
    out["s_inf2"] = ApproxRoot("s_inf2", s_inf2, classify_unwrapped(abs(s_inf2), ang_inf))

    if params.d == 0:
        raise dispersion.RootFindingFailure("d = 0 degenerates the rescaled quadratic")
    bq = -(r.a1 * params.d + r.a4)
    disc = complex(bq * bq - 4.0 * params.d * r.det) ** 0.5
    for label, y in (("s_0+", (-bq + disc) / (2.0 * params.d)),
                     ("s_0-", (-bq - disc) / (2.0 * params.d))):
        ang_y = cmath.phase(y)
        ang0 = ang_y / delta
        s0 = q_sq ** (-1.0 / delta) * abs(y) ** (1.0 / delta) * cmath.exp(1j * ang0)
        out[label] = ApproxRoot(label, s0, classify_unwrapped(abs(s0), ang0))
    return out


# ---------------------------------------------------------------------------
# rescaled unstable curve


@dataclass(frozen=True)
class ScaledCurve:
    """Real positive subdiffusion spectrum obtained by rescaling the
    unstable band of the regular spectrum; empty below the Turing
    threshold."""

    points: tuple[SpectrumPoint, ...]
    kappas: tuple[float, ...]
    band: tuple[float, float] | None   # (kappa_minus^2, kappa_plus^2)
    q_min: float | None


def scaled_unstable_curve(
    params: SourceSinkParams, kappa_grid=None, n: int = 256
) -> ScaledCurve:
    """Map the positive regular spectrum ``s_r(kappa)`` onto subdiffusion
    wavenumbers ``q = kappa * s_r**(-delta/2)``; the temporal values are
    untouched, so both curves share their maximum."""
    if params.is_scalar:
        raise ValueError("the rescaled curve needs the two-species system")
    r = params.reaction
    d = params.d
    try:
        d_c, _ = turing.critical_diffusion(r)
    except turing.NotTuringCapable:
        return ScaledCurve((), (), None, None)
    if d <= d_c:
        return ScaledCurve((), (), None, None)
    k_lo, k_hi = turing.stable_quadratic_roots(d, -(r.a1 * d + r.a4), r.det)
    if kappa_grid is None:
        interior = np.linspace(k_lo, k_hi, n + 2)[1:-1]
        kappa_grid = np.sqrt(interior)
    kappa_grid = np.asarray(kappa_grid, dtype=float)
    delta = params.exponent.delta
    pts = []
    for kappa in kappa_grid:
        s_r = _regular_top_root(r, d, kappa)
        if s_r <= 0:
            continue
        q = kappa * s_r ** (-delta / 2.0)
        pts.append(
            SpectrumPoint(q=q, s=complex(s_r), classification=PointClass.SPECTRUM,
                          source="scaled-curve")
        )
    q_min = min((p.q for p in pts), default=None)
    return ScaledCurve(tuple(pts), tuple(kappa_grid.tolist()), (k_lo, k_hi), q_min)


def _regular_top_root(r: ReactionMatrix, d: float, kappa: float) -> float:
    k_sq = kappa * kappa
    b = k_sq + d * k_sq - r.trace
    c = (k_sq - r.a1) * (d * k_sq - r.a4) - r.a2 * r.a3
    disc = b * b - 4.0 * c
    if disc < 0:
        return -math.inf
    return (-b + math.sqrt(disc)) / 2.0


# ---------------------------------------------------------------------------
# convergence metric


def one_sided_hausdorff(sub_points, reg_points) -> float:
    """sup over subdiffusion points of the distance to the nearest regular
    point (both sets already windowed)."""
    if not sub_points:
        raise EmptyIntersection("no subdiffusion points in the window")
    if not reg_points:
        raise EmptyIntersection("no regular points in the window")
    reg = np.array([p.s for p in reg_points], dtype=complex)
    return float(max(np.min(np.abs(reg - p.s)) for p in sub_points))


def convergence_distance(
    reaction: ReactionMatrix | float,
    d: float,
    exponents,
    window,
    q_grid,
    model: str = "ss",
    theta1: float = math.pi / 2,
    theta2: float | None = None,
) -> dict[str, float]:
    """One-sided Hausdorff distance (subdiffusion -> regular) inside a
    complex-plane window, per anomalous exponent."""
    reg_pts = scan_regular(reaction, d, q_grid).in_window(window)
    out: dict[str, float] = {}
    for exp in exponents:
        if model == "ss":
            params = SourceSinkParams(reaction, d, exp, theta1)
            scan = scan_ss(params, q_grid)
        elif model == "ca":
            params = CreationAnnihilationParams(
                reaction, d, exp, theta1, theta2 if theta2 is not None else theta1
            )
            scan = scan_ca(params, q_grid)
        else:
            raise ValueError(f"unknown model {model!r}")
        out[str(exp)] = one_sided_hausdorff(scan.in_window(window), reg_pts)
    return out


# ---------------------------------------------------------------------------
# existence / stability region map


@dataclass(frozen=True)
class RegionLabel:
    """Large-wavenumber existence and stability classification at one
    ``(delta, d)`` pair; exactly one of the four ``s0_*`` flags is true."""

    label: str
    s0_real_positive: bool
    s0_complex_unstable: bool
    s0_pseudo: bool
    s0_outside: bool
    sinf_in_branch: bool
    thresholds: turing.SourceSinkThresholds = field(repr=False)


def region_classify(
    reaction: ReactionMatrix, delta: float, d: float, theta1: float = math.pi / 2
) -> RegionLabel:
    """Label the ``(delta, d)`` plane by which large-wavenumber branches
    exist on the principal sheet and whether they destabilise."""
    th = turing.thresholds_ss(reaction, delta, theta1)
    sinf_in = delta < th.delta_threshold_sinf
    if d > th.d_c:
        band = 0
    elif d > th.d_delta_inf:
        band = 1
    elif d > th.d_tilde_delta_inf:
        band = 2
    else:
        band = 3
    letters = "EFGH" if sinf_in else "ABCD"
    return RegionLabel(
        label=letters[band],
        s0_real_positive=band == 0,
        s0_complex_unstable=band == 1,
        s0_pseudo=band == 2,
        s0_outside=band == 3,
        sinf_in_branch=sinf_in,
        thresholds=th,
    )
