"""Evaluation and root finding for the four dispersion relations.

The source-sink relation rationalises exactly: with ``z = s**(1/m)`` it
becomes a polynomial of degree ``2m`` (``m`` for the scalar equation), so
every root is found by a companion-matrix eigensolve plus Newton polish,
then classified by which sheet of the cut plane its ``z`` lives on.

No single substitution rationalises the creation-annihilation relation
(two branch points), so its roots are tracked by Newton continuation along
the wavenumber grid, with the arguments relative to both branch points
carried continuously to prevent silent branch hopping.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .complexcore import CUT_PROXIMITY_TOL, principal_power
from .models import (
    CreationAnnihilationParams,
    DegenerateInput,
    ReactionMatrix,
    SourceSinkParams,
)
from .turing import BelowGammaMin, NotTuringCapable, taylor_roots_ca, thresholds_ca


class RootFindingFailure(ArithmeticError):
    """The companion eigensolve did not converge."""


class ContinuationStall(Warning):
    """Newton continuation failed on several consecutive grid points."""


class PointClass(str, enum.Enum):
    SPECTRUM = "Spectrum"
    PSEUDO = "PseudoSpectrum"
    OUTSIDE = "OutsideBranch"


@dataclass(frozen=True)
class ClassifiedRoot:
    """One dispersion-relation root with its sheet classification."""

    s: complex
    classification: PointClass
    multiplicity: int = 1
    z: complex | None = None        # m-th root coordinate (source-sink only)
    cut_proximate: bool = False
    source: str = "polyroot"


#: Roots closer than this are merged into one cluster with summed
#: multiplicity.
CLUSTER_TOL = 1e-7
_NEAR_DEFECTIVE_TOL = 1e-9


# ---------------------------------------------------------------------------
# evaluation


def eval_regular(reaction: ReactionMatrix | float, d: float, s: complex, q: float) -> complex:
    """Regular (normal-diffusion) dispersion relation."""
    q_sq = q * q
    if isinstance(reaction, ReactionMatrix):
        r = reaction
        return (s + q_sq - r.a1) * (s + d * q_sq - r.a4) - r.a2 * r.a3
    return s + d * q_sq - reaction


def eval_ss(params: SourceSinkParams, s: complex, q: float) -> complex:
    """Source-sink dispersion relation on the principal branch at the
    origin; reduces exactly to the regular relation at ``gamma = 1``."""
    if params.exponent.is_regular:
        return eval_regular(params.reaction, params.d, s, q)
    s_delta = principal_power(s, params.exponent.delta, params.branch)
    q_sq = q * q
    if params.is_scalar:
        return s + params.d * q_sq * s_delta - params.reaction
    r = params.reaction
    return (s + s_delta * q_sq - r.a1) * (s + s_delta * params.d * q_sq - r.a4) - r.a2 * r.a3


def eval_ca2(params: CreationAnnihilationParams, s: complex, q: float) -> complex:
    """Non-trivial factor of the creation-annihilation dispersion relation,
    evaluated with branch-adjusted powers at both eigenvalue branch points."""
    dbar = params.dbar
    q_sq = q * q
    mu1, mu2 = params.reaction.eigenvalues
    if params.exponent.is_regular:
        return (s - mu1 + dbar[0, 0] * q_sq) * (s - mu2 + dbar[1, 1] * q_sq) - dbar[
            0, 1
        ] * dbar[1, 0] * q_sq * q_sq
    cut1, cut2 = params.branches
    g = params.exponent.gamma
    w1 = principal_power(s, g, cut1)
    w2 = principal_power(s, g, cut2)
    return (w1 + dbar[0, 0] * q_sq) * (w2 + dbar[1, 1] * q_sq) - dbar[0, 1] * dbar[
        1, 0
    ] * q_sq * q_sq


# ---------------------------------------------------------------------------
# source-sink roots: exact polynomialisation in z = s**(1/m)


def ss_polynomial(params: SourceSinkParams, q: float) -> np.ndarray:
    """Coefficients (highest degree first) of the source-sink dispersion
    relation as a polynomial in ``z = s**(1/m)``; degree ``2m`` for
    systems, ``m`` for the scalar equation."""
    exp = params.exponent
    if exp.is_regular:
        raise ValueError("gamma = 1 has no z-polynomial; use the regular solver")
    m, ell = exp.m, exp.ell
    q_sq = q * q
    if params.is_scalar:
        coeffs = np.zeros(m + 1, dtype=complex)
        coeffs[0] = 1.0
        coeffs[m - ell] += params.d * q_sq
        coeffs[m] -= params.reaction
        return coeffs
    r = params.reaction
    f1 = np.zeros(m + 1, dtype=complex)
    f1[0] = 1.0
    f1[m - ell] += q_sq
    f1[m] -= r.a1
    f2 = np.zeros(m + 1, dtype=complex)
    f2[0] = 1.0
    f2[m - ell] += params.d * q_sq
    f2[m] -= r.a4
    poly = np.polymul(f1, f2)
    poly[-1] -= r.a2 * r.a3
    return poly


def ss_factor_polynomials(params: SourceSinkParams, q: float) -> tuple[np.ndarray, np.ndarray]:
    """The two diagonal factors of the system relation as z-polynomials
    (used as the numerator building blocks of the Fourier-Laplace solution)."""
    exp = params.exponent
    m, ell = exp.m, exp.ell
    q_sq = q * q
    r = params.reaction
    f1 = np.zeros(m + 1, dtype=complex)
    f1[0] = 1.0
    f1[m - ell] += q_sq
    f1[m] -= r.a1
    f2 = np.zeros(m + 1, dtype=complex)
    f2[0] = 1.0
    f2[m - ell] += params.d * q_sq
    f2[m] -= r.a4
    return f1, f2


def _polish(poly: np.ndarray, dpoly: np.ndarray, roots: np.ndarray, rounds: int = 8) -> np.ndarray:
    z = roots.astype(complex)
    for _ in range(rounds):
        pv = np.polyval(poly, z)
        dv = np.polyval(dpoly, z)
        step = np.where(dv != 0, pv / np.where(dv == 0, 1.0, dv), 0.0)
        # damp steps that would jump across the root spacing
        step = np.where(np.abs(step) > 0.5 * (1.0 + np.abs(z)), 0.0, step)
        z = z - step
    return z


def _cluster_roots(roots: np.ndarray, tol: float = CLUSTER_TOL):
    """Greedy merge of roots closer than ``tol``; returns (centers,
    multiplicities, spreads)."""
    remaining = list(roots)
    centers: list[complex] = []
    mults: list[int] = []
    spreads: list[float] = []
    while remaining:
        seed = remaining.pop(0)
        group = [seed]
        changed = True
        while changed:
            changed = False
            for r in remaining[:]:
                if any(abs(r - g) < tol for g in group):
                    group.append(r)
                    remaining.remove(r)
                    changed = True
        center = sum(group) / len(group)
        spread = max((abs(g - center) for g in group), default=0.0)
        centers.append(center)
        mults.append(len(group))
        spreads.append(spread)
    return centers, mults, spreads


def _classify_ss_z(z: complex, m: int, theta1: float) -> tuple[PointClass, bool]:
    """Classification of one z-plane root of the source-sink polynomial."""
    lo = (-math.pi + theta1) / m
    hi = (math.pi + theta1) / m
    ang = cmath.phase(z)
    member = lo < ang < hi
    arg_s = m * ang  # unwrapped argument of s = z**m on the chosen sheet
    cut_prox = min(abs(arg_s - (math.pi + theta1)), abs(arg_s - (-math.pi + theta1))) < CUT_PROXIMITY_TOL
    if not member:
        return PointClass.OUTSIDE, cut_prox
    if abs(arg_s) < math.pi / 2:
        return PointClass.SPECTRUM, cut_prox
    return PointClass.PSEUDO, cut_prox


def _regular_roots(reaction: ReactionMatrix | float, d: float, q: float) -> list[complex]:
    q_sq = q * q
    if isinstance(reaction, ReactionMatrix):
        b = q_sq + d * q_sq - reaction.trace
        c = (q_sq - reaction.a1) * (d * q_sq - reaction.a4) - reaction.a2 * reaction.a3
        disc = complex(b * b - 4.0 * c) ** 0.5
        return [(-b + disc) / 2.0, (-b - disc) / 2.0]
    return [complex(reaction - d * q_sq)]


def roots_ss(params: SourceSinkParams, q: float) -> list[ClassifiedRoot]:
    """All roots of the source-sink dispersion relation at wavenumber ``q``,
    classified sheet by sheet.

    Counting multiplicity the list covers all ``2m`` (systems) or ``m``
    (scalar) z-plane roots; ``OutsideBranch`` entries are roots on other
    sheets, kept so callers can see the complete picture.
    """
    if params.exponent.is_regular:
        return [
            ClassifiedRoot(s=s, classification=PointClass.SPECTRUM)
            for s in _regular_roots(params.reaction, params.d, q)
        ]
    poly = ss_polynomial(params, q)
    if np.all(poly[1:] == 0.0):
        raise DegenerateInput("all roots sit at the branch point")
    try:
        raw = np.roots(poly)
    except np.linalg.LinAlgError as exc:
        raise RootFindingFailure(f"companion eigensolve failed: {exc}") from exc
    raw = _polish(poly, np.polyder(poly), raw)
    # drop exact branch-point roots (scalar with zero reaction term)
    raw = raw[np.abs(raw) > 1e-14 * (1.0 + np.max(np.abs(raw)))]
    centers, mults, spreads = _cluster_roots(raw)
    m = params.exponent.m
    out: list[ClassifiedRoot] = []
    for z, k, spread in zip(centers, mults, spreads):
        if _NEAR_DEFECTIVE_TOL < spread < CLUSTER_TOL:
            warnings.warn(
                f"root cluster at z={z:.6g} has spread {spread:.2e}; "
                "multiplicity assignment is ill-conditioned",
                RuntimeWarning,
                stacklevel=2,
            )
        cls, prox = _classify_ss_z(z, m, params.theta1)
        out.append(
            ClassifiedRoot(
                s=z**m,
                classification=cls,
                multiplicity=k,
                z=z,
                cut_proximate=prox,
            )
        )
    return out


# ---------------------------------------------------------------------------
# creation-annihilation roots: Newton continuation in q


@dataclass
class _Track:
    s: complex
    arg1: float
    arg2: float
    fails: int = 0
    alive: bool = True


@dataclass(frozen=True)
class CaScanResult:
    """Roots per wavenumber plus continuation diagnostics."""

    q_grid: tuple[float, ...]
    roots: tuple[tuple[ClassifiedRoot, ...], ...]
    breaks: tuple[tuple[float, complex], ...]   # (q, last root) of stalled tracks


def _unwrap_near(phi: float, ref: float) -> float:
    while phi - ref > math.pi:
        phi -= 2.0 * math.pi
    while phi - ref < -math.pi:
        phi += 2.0 * math.pi
    return phi


class _CaNewton:
    """Newton iteration on the analytically continued non-trivial factor,
    carrying both branch-point arguments along the iteration path."""

    def __init__(self, params: CreationAnnihilationParams):
        self.mu1, self.mu2 = params.reaction.eigenvalues
        dbar = params.dbar
        self.d1 = complex(dbar[0, 0])
        self.d2 = complex(dbar[0, 1])
        self.d3 = complex(dbar[1, 0])
        self.d4 = complex(dbar[1, 1])
        self.gamma = params.exponent.gamma
        self.cut1, self.cut2 = params.branches

    def args_of(self, s: complex, ref1: float | None = None, ref2: float | None = None):
        a1 = cmath.phase(s - self.mu1)
        a2 = cmath.phase(s - self.mu2)
        if ref1 is not None:
            a1 = _unwrap_near(a1, ref1)
        if ref2 is not None:
            a2 = _unwrap_near(a2, ref2)
        return a1, a2

    def value_and_derivative(self, s: complex, arg1: float, arg2: float, q: float):
        g = self.gamma
        q_sq = q * q
        r1 = abs(s - self.mu1)
        r2 = abs(s - self.mu2)
        w1 = r1**g * cmath.exp(1j * g * arg1)
        w2 = r2**g * cmath.exp(1j * g * arg2)
        f1 = w1 + self.d1 * q_sq
        f2 = w2 + self.d4 * q_sq
        val = f1 * f2 - self.d2 * self.d3 * q_sq * q_sq
        deriv = g * w1 / (s - self.mu1) * f2 + g * w2 / (s - self.mu2) * f1
        return val, deriv

    def solve(self, s0: complex, q: float, arg1: float | None = None, arg2: float | None = None):
        """Returns (s, arg1, arg2) or None.  Arguments continue from the
        supplied references; fresh seeds use principal arguments."""
        s = complex(s0)
        a1, a2 = self.args_of(s, arg1, arg2)
        scale = 1.0 + abs(self.d1 * self.d4) * q**4 + abs(self.mu1 * self.mu2)
        for _ in range(40):
            if s == self.mu1 or s == self.mu2:
                return None
            val, deriv = self.value_and_derivative(s, a1, a2, q)
            if deriv == 0:
                return None
            step = val / deriv
            if not cmath.isfinite(step):
                return None
            # keep the argument tracking valid: limit the step
            max_step = 0.5 * min(abs(s - self.mu1), abs(s - self.mu2)) + 1e-12
            if abs(step) > max_step:
                step *= max_step / abs(step)
            s_new = s - step
            a1, a2 = self.args_of(s_new, a1, a2)
            s = s_new
            if abs(step) < 1e-13 * (1.0 + abs(s)):
                break
        val, _ = self.value_and_derivative(s, a1, a2, q)
        if abs(val) > 1e-8 * scale:
            return None
        return s, a1, a2

    def classify(self, s: complex, arg1: float, arg2: float) -> tuple[PointClass, bool]:
        lo1, hi1 = self.cut1.window
        lo2, hi2 = self.cut2.window
        member = lo1 < arg1 < hi1 and lo2 < arg2 < hi2
        prox = (
            min(abs(arg1 - lo1), abs(arg1 - hi1)) < CUT_PROXIMITY_TOL
            or min(abs(arg2 - lo2), abs(arg2 - hi2)) < CUT_PROXIMITY_TOL
        )
        if not member:
            return PointClass.OUTSIDE, prox
        if s.real > self.mu1.real:
            return PointClass.SPECTRUM, prox
        return PointClass.PSEUDO, prox


def _ca_seeds(params: CreationAnnihilationParams, q: float, thresholds):
    """Seed points ``(s0, ref1, ref2)`` for the Newton continuation; the
    refs pin the intended argument lift against each branch point (None
    means take the principal value)."""
    mu1, mu2 = params.reaction.eigenvalues
    dbar = params.dbar
    g = params.exponent.gamma
    q_sq = q * q
    seeds: list[tuple[complex, float | None, float | None]] = []
    # regular-diffusion roots in eigen coordinates
    b = (dbar[0, 0] + dbar[1, 1]) * q_sq - mu1 - mu2
    c = (dbar[0, 0] * q_sq - mu1) * (dbar[1, 1] * q_sq - mu2) - dbar[0, 1] * dbar[1, 0] * q_sq * q_sq
    disc = (b * b - 4.0 * c) ** 0.5
    seeds += [((-b + disc) / 2.0, None, None), ((-b - disc) / 2.0, None, None)]
    # near-origin quadratic roots
    if thresholds is not None:
        for s0 in taylor_roots_ca(thresholds, params.d, q):
            seeds.append((s0, None, None))
    # near-branch-point guesses from the scalar closed form, on both
    # argument lifts (only one can live on the principal sheet)
    if q != 0.0:
        for idx, (mu, dj) in enumerate(((mu1, dbar[0, 0]), (mu2, dbar[1, 1]))):
            if dj == 0:
                continue
            radius = abs(dj * q_sq) ** (1.0 / g)
            base = cmath.phase(dj) / g
            for sign in (1.0, -1.0):
                phi = base + sign * math.pi / g
                s0 = mu + radius * cmath.exp(1j * phi)
                refs = (phi, None) if idx == 0 else (None, phi)
                seeds.append((s0, refs[0], refs[1]))
    return [(s, r1, r2) for s, r1, r2 in seeds if cmath.isfinite(s)]


def roots_ca(params: CreationAnnihilationParams, q_grid) -> CaScanResult:
    """Roots of the creation-annihilation dispersion relation along an
    ascending wavenumber grid, by seeded Newton continuation.

    Fresh seeds are injected at every grid point, so branches that appear
    at larger ``q`` (or re-enter the principal sheet after a gap) are
    picked up; deduplication keeps the per-q root lists minimal.
    """
    q_grid = [float(q) for q in q_grid]
    if not q_grid:
        raise ValueError("q_grid must be nonempty")
    if any(b <= a for a, b in zip(q_grid, q_grid[1:])):
        raise ValueError("q_grid must be strictly ascending")
    exp = params.exponent
    if exp.is_regular:
        per_q = []
        for q in q_grid:
            rr = _ca_regular_roots(params, q)
            per_q.append(tuple(rr))
        return CaScanResult(tuple(q_grid), tuple(per_q), ())
    if exp.gamma <= 0.5:
        warnings.warn(
            f"gamma={exp.gamma} <= 1/2: infinity is a branch point and the "
            "two-cut principal sheet is not faithful",
            RuntimeWarning,
            stacklevel=2,
        )
    newton = _CaNewton(params)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BelowGammaMin)
        try:
            th = thresholds_ca(params.reaction, exp.gamma)
        except NotTuringCapable:
            th = None

    tracks: list[_Track] = []
    breaks: list[tuple[float, complex]] = []
    per_q: list[tuple[ClassifiedRoot, ...]] = []
    prev_q: float | None = None
    for q in q_grid:
        found: list[tuple[complex, float, float]] = []
        if q == 0.0:
            # only the branch points solve the relation at q = 0
            per_q.append(())
            prev_q = q
            continue
        # continue existing tracks
        for tr in tracks:
            if not tr.alive:
                continue
            res = None
            if prev_q is not None:
                res = newton.solve(tr.s, q, tr.arg1, tr.arg2)
                if res is None:
                    # local step refinement before declaring failure
                    res = _refine_track(newton, tr, prev_q, q)
            if res is None:
                tr.fails += 1
                if tr.fails >= 3:
                    tr.alive = False
                    breaks.append((q, tr.s))
                    warnings.warn(
                        f"continuation stalled at q={q:.6g} (root near {tr.s:.6g})",
                        ContinuationStall,
                        stacklevel=2,
                    )
                continue
            tr.s, tr.arg1, tr.arg2 = res
            tr.fails = 0
            found.append(res)
        # fresh seeds every grid point
        for s0, ref1, ref2 in _ca_seeds(params, q, th):
            res = newton.solve(s0, q, ref1, ref2)
            if res is not None:
                found.append(res)
        # dedupe and rebuild live track list
        dedup: list[tuple[complex, float, float]] = []
        for cand in found:
            if all(abs(cand[0] - kept[0]) >= 1e-8 * (1.0 + abs(cand[0])) for kept in dedup):
                dedup.append(cand)
        tracks = [tr for tr in tracks if tr.alive and tr.fails > 0]
        roots_here: list[ClassifiedRoot] = []
        new_tracks: list[_Track] = []
        for s, a1, a2 in dedup:
            cls, prox = newton.classify(s, a1, a2)
            roots_here.append(
                ClassifiedRoot(
                    s=s,
                    classification=cls,
                    z=None,
                    cut_proximate=prox,
                    source="continuation",
                )
            )
            new_tracks.append(_Track(s, a1, a2))
        tracks.extend(new_tracks)
        per_q.append(tuple(roots_here))
        prev_q = q
    return CaScanResult(tuple(q_grid), tuple(per_q), tuple(breaks))


def _refine_track(newton: _CaNewton, tr: _Track, q_prev: float, q: float):
    """Halve the grid step locally (up to 4 refinements) before declaring
    a continuation failure."""
    for levels in range(1, 5):
        n = 2**levels
        s, a1, a2 = tr.s, tr.arg1, tr.arg2
        ok = True
        for i in range(1, n + 1):
            qi = q_prev + (q - q_prev) * i / n
            res = newton.solve(s, qi, a1, a2)
            if res is None:
                ok = False
                break
            s, a1, a2 = res
        if ok:
            return s, a1, a2
    return None


def _ca_regular_roots(params: CreationAnnihilationParams, q: float) -> list[ClassifiedRoot]:
    mu1, mu2 = params.reaction.eigenvalues
    dbar = params.dbar
    q_sq = q * q
    b = (dbar[0, 0] + dbar[1, 1]) * q_sq - mu1 - mu2
    c = (dbar[0, 0] * q_sq - mu1) * (dbar[1, 1] * q_sq - mu2) - dbar[0, 1] * dbar[1, 0] * q_sq * q_sq
    disc = (b * b - 4.0 * c) ** 0.5
    return [
        ClassifiedRoot(s=(-b + disc) / 2.0, classification=PointClass.SPECTRUM, source="polyroot"),
        ClassifiedRoot(s=(-b - disc) / 2.0, classification=PointClass.SPECTRUM, source="polyroot"),
    ]


# ---------------------------------------------------------------------------
# scalar creation-annihilation closed form


def scalar_ca_root(
    a: float, d: float, gamma: float, q: float, theta1: float = math.pi / 2
) -> ClassifiedRoot:
    """Closed-form root of the scalar creation-annihilation relation.

    For ``q != 0`` the root is ``(d q^2)**(1/gamma) e^(i pi/gamma) + a``;
    it lies on the principal sheet exactly when ``gamma > pi/(pi+theta1)``
    (then always pseudo-spectrum, with real part falling to -inf as
    ``|q|`` grows).  At ``q = 0`` the formal root is the branch point
    itself and is excluded.
    """
    if d <= 0:
        raise ValueError("d must be positive")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0,1), got {gamma}")
    if q == 0.0:
        return ClassifiedRoot(
            s=complex(a),
            classification=PointClass.OUTSIDE,
            cut_proximate=True,
            source="polyroot",
        )
    s = (d * q * q) ** (1.0 / gamma) * cmath.exp(1j * math.pi / gamma) + a
    # membership uses the constructed (unwrapped) argument pi/gamma, which
    # exceeds pi: naive principal-argument membership would be wrong here.
    member = gamma > math.pi / (math.pi + theta1)
    cls = PointClass.PSEUDO if member else PointClass.OUTSIDE
    prox = abs(math.pi / gamma - (math.pi + theta1)) < CUT_PROXIMITY_TOL
    return ClassifiedRoot(s=s, classification=cls, cut_proximate=prox, source="polyroot")
