"""Inverse-Laplace machinery and the time-stepping oracle.

The Fourier-Laplace solution of either model is a ratio whose denominator
is the dispersion relation.  After rationalising (source-sink) or
splitting off the branch-point parts (creation-annihilation), partial
fractions give the exponential contributions of on-sheet roots plus the
branch-cut integrals responsible for algebraic decay; this module
computes all those coefficients numerically (contour quadrature for the
derivative-laden ones) and classifies the resulting decay law.

Independently of any of that, :func:`gl_evolve` integrates the Fourier-mode
fractional ODEs directly with a Grünwald-Letnikov convolution scheme, so
the predicted laws can be checked against an oracle that shares no code
with the coefficient formulas.
"""

from __future__ import annotations

import cmath
import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .complexcore import gamma_fn, principal_power
from .dispersion import (
    ClassifiedRoot,
    PointClass,
    roots_ca,
    roots_ss,
    ss_factor_polynomials,
    ss_polynomial,
)
from .models import (
    CreationAnnihilationParams,
    ScalarCreationAnnihilationParams,
    SourceSinkParams,
)


class StepSizeRejected(ArithmeticError):
    """The step-halving check disagreed beyond tolerance."""


class WindowTooNarrow(ValueError):
    """Fewer than 8 samples fall inside the fitting window."""


class ContourExtractionFailure(ArithmeticError):
    """No circle radius separates the expansion point from the other
    singularities."""


#: Nodes of the trapezoidal contour rule; spectrally accurate for the
#: analytic integrands extracted here.
CONTOUR_NODES = 64

#: Sign of the branch-cut contribution relative to the residue sum, fixed
#: by the orientation of the keyhole contour (the cut integrals enter the
#: inverse transform subtracted, and carry one more minus from the local
#: expansion); cross-checked against the Grünwald-Letnikov oracle and the
#: Mittag-Leffler asymptote.
_BRANCH_CUT_SIGN = +1.0


@dataclass(frozen=True)
class FourierInitialData:
    """Initial data of one Fourier mode."""

    u0: tuple[complex, ...]
    q: float

    def __post_init__(self) -> None:
        if len(self.u0) not in (1, 2):
            raise ValueError("u0 must have one or two components")
        if not all(cmath.isfinite(c) for c in self.u0):
            raise ValueError("u0 must be finite")


class DecayKind(str, enum.Enum):
    EXP_GROWTH = "ExponentialGrowth"
    EXP_DECAY = "ExponentialDecay"
    ALGEBRAIC = "AlgebraicDecay"
    BRANCH_POINT = "BranchPointDecay"


@dataclass(frozen=True)
class DecayEstimate:
    """Leading-order time behaviour of one Fourier mode:
    ``coefficient * t**poly_power * exp(s_star t)`` (``s_star`` absent for
    the purely algebraic source-sink law)."""

    kind: DecayKind
    s_star: complex | None
    poly_power: float
    coefficient: tuple[complex, ...]
    hypothesis_ok: bool | None = None
    m: int | None = None


# ---------------------------------------------------------------------------
# partial fractions, source-sink model


@dataclass(frozen=True)
class RootCoefficients:
    """Laurent data of one root cluster of the rationalised relation."""

    z: complex
    s: complex
    multiplicity: int
    classification: PointClass
    alphas: tuple[tuple[complex, ...], ...]   # [component][k-1], k = 1..multiplicity


@dataclass(frozen=True)
class SourceSinkDecomposition:
    q: float
    m: int
    roots: tuple[RootCoefficients, ...]
    c_exp: tuple[complex, ...] | None
    s_star: complex | None
    k_star: int
    c_alg: tuple[complex, ...]
    hypothesis_ok: bool
    zero_numerator_roots: tuple[complex, ...]
    poly: np.ndarray
    numerators: tuple[np.ndarray, ...]

    def reconstruct(self, z: complex) -> tuple[complex, ...]:
        """Partial-fraction reconstruction at ``z`` (one value per
        component); matches ``numerator(z)/poly(z)`` when the
        decomposition is complete."""
        vals = []
        for comp in range(len(self.numerators)):
            total = 0.0 + 0.0j
            for rc in self.roots:
                for k in range(1, rc.multiplicity + 1):
                    total += rc.alphas[comp][k - 1] / (z - rc.z) ** k
            vals.append(total)
        return tuple(vals)


def _contour_alphas(numer: np.ndarray, poly: np.ndarray, z_j: complex,
                    k_j: int, radius: float) -> tuple[complex, ...]:
    """Laurent coefficients ``alpha_{jk}``, k = 1..k_j, of
    ``numer/poly`` around ``z_j`` by trapezoidal circle quadrature."""
    if not radius > 0:
        raise ContourExtractionFailure(f"no admissible contour radius at z={z_j}")
    theta = 2.0 * math.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES
    ring = radius * np.exp(1j * theta)
    zs = z_j + ring
    vals = np.polyval(numer, zs) / np.polyval(poly, zs)
    return tuple(
        complex(radius**k * np.mean(np.exp(1j * k * theta) * vals))
        for k in range(1, k_j + 1)
    )


def pf_coefficients_ss(params: SourceSinkParams, init: FourierInitialData) -> SourceSinkDecomposition:
    """Full partial-fraction data of the source-sink Fourier-Laplace
    solution at wavenumber ``init.q``.

    Simple roots get the closed-form residue; clustered roots go through
    contour extraction.  ``c_alg`` is the coefficient of the universal
    ``t**(-1-1/m)`` tail (independent of the cut angle), ``c_exp`` the
    coefficient at the dominant on-sheet root.
    """
    q = init.q
    if q == 0:
        raise ValueError("q = 0 is pure reaction; use the matrix exponential")
    if params.exponent.is_regular:
        raise ValueError("gamma = 1 decays exponentially; no fractional decomposition")
    m = params.exponent.m
    poly = ss_polynomial(params, q)

    if params.is_scalar:
        if len(init.u0) != 1:
            raise ValueError("scalar equation takes one-component initial data")
        numerators = (np.array([init.u0[0]], dtype=complex),)
    else:
        if len(init.u0) != 2:
            raise ValueError("system takes two-component initial data")
        u1, u2 = init.u0
        f1, f2 = ss_factor_polynomials(params, q)
        n1 = f2 * u1
        n1[-1] += params.reaction.a2 * u2
        n2 = f1 * u2
        n2[-1] += params.reaction.a3 * u1
        numerators = (n1, n2)

    clusters = roots_ss(params, q)
    ncomp = len(numerators)
    dpoly = np.polyder(poly)

    root_data: list[RootCoefficients] = []
    for rc in clusters:
        if rc.multiplicity == 1:
            alphas = tuple(
                (complex(np.polyval(nu, rc.z) / np.polyval(dpoly, rc.z)),)
                for nu in numerators
            )
        else:
            others = [o.z for o in clusters if o is not rc]
            gap = min((abs(rc.z - oz) for oz in others), default=1.0 + abs(rc.z))
            radius = 0.1 * gap
            alphas = tuple(
                _contour_alphas(nu, poly, rc.z, rc.multiplicity, radius)
                for nu in numerators
            )
        root_data.append(
            RootCoefficients(rc.z, rc.s, rc.multiplicity, rc.classification, alphas)
        )

    # universal algebraic tail
    factor = _BRANCH_CUT_SIGN * math.sin(math.pi / m) / math.pi * gamma_fn(1.0 + 1.0 / m).real
    c_alg = []
    for comp in range(ncomp):
        total = 0.0 + 0.0j
        for rd in root_data:
            for k in range(1, rd.multiplicity + 1):
                total += rd.alphas[comp][k - 1] * k * (-rd.z) ** (-k - 1)
        c_alg.append(factor * total)

    # dominant on-sheet exponential
    coeff_scale = max(max(np.sum(np.abs(nu)) for nu in numerators), 1e-30)
    s_star = None
    k_star = 0
    c_exp = None
    zero_numerator: list[complex] = []
    best: RootCoefficients | None = None
    for rd in root_data:
        if rd.classification == PointClass.OUTSIDE:
            continue
        # test the numerators themselves against their conditioning scale
        num_small = all(
            abs(np.polyval(nu, rd.z))
            <= 1e-12 * max(float(np.polyval(np.abs(nu), abs(rd.z))), 1e-30)
            for nu in numerators
        )
        if num_small:
            zero_numerator.append(rd.s)
            continue
        if best is None or rd.s.real > best.s.real:
            best = rd
    if best is not None:
        s_star = best.s
        k_star = best.multiplicity
        lead = (m * best.z ** (m - 1)) ** k_star / math.factorial(k_star - 1)
        c_exp = tuple(best.alphas[comp][k_star - 1] * lead for comp in range(ncomp))

    hyp_ok = max(abs(c) for c in c_alg) > 1e-12 * coeff_scale
    return SourceSinkDecomposition(
        q=q,
        m=m,
        roots=tuple(root_data),
        c_exp=c_exp,
        s_star=s_star,
        k_star=k_star,
        c_alg=tuple(c_alg),
        hypothesis_ok=hyp_ok,
        zero_numerator_roots=tuple(zero_numerator),
        poly=poly,
        numerators=numerators,
    )


def classify_decay_ss(params: SourceSinkParams, init: FourierInitialData,
                      scan=None) -> DecayEstimate:
    """Predicted decay law of one source-sink Fourier mode.

    Unstable on-sheet roots give exponential growth; otherwise the mode
    decays algebraically as ``t**(-1-1/m)`` for almost all initial data.
    The degenerate scalar case with zero reaction (bare subdiffusion) has
    its root at the branch point and decays as ``t**(-gamma)`` instead.
    ``scan`` is accepted for cross-checking the global picture but the
    estimate is mode-local.
    """
    exp = params.exponent
    if init.q == 0:
        return _reaction_only_estimate(params, init)
    if params.is_scalar and params.reaction == 0:
        g = exp.gamma
        coeff = init.u0[0] / (params.d * init.q**2 * gamma_fn(1.0 - g).real)
        return DecayEstimate(DecayKind.BRANCH_POINT, 0j, -g, (coeff,), None, exp.m)
    pf = pf_coefficients_ss(params, init)
    if pf.s_star is not None and pf.s_star.real > 0:
        return DecayEstimate(
            DecayKind.EXP_GROWTH, pf.s_star, pf.k_star - 1, pf.c_exp, pf.hypothesis_ok, pf.m
        )
    return DecayEstimate(
        DecayKind.ALGEBRAIC, None, -1.0 - 1.0 / pf.m, pf.c_alg, pf.hypothesis_ok, pf.m
    )


def _reaction_only_estimate(params: SourceSinkParams, init: FourierInitialData) -> DecayEstimate:
    if params.is_scalar:
        a = float(params.reaction)
        kind = DecayKind.EXP_GROWTH if a > 0 else DecayKind.EXP_DECAY
        return DecayEstimate(kind, complex(a), 0.0, (init.u0[0],), None, None)
    r = params.reaction
    mu1 = r.mu1
    try:
        p, pinv = r.eigenbasis
        w0 = pinv @ np.array(init.u0)
        coeff = tuple(w0[0] * p[:, 0])
    except Exception:
        coeff = tuple(init.u0)
    kind = DecayKind.EXP_GROWTH if mu1.real > 0 else DecayKind.EXP_DECAY
    return DecayEstimate(kind, mu1, 0.0, coeff, None, None)


# ---------------------------------------------------------------------------
# partial fractions, creation-annihilation model


@dataclass(frozen=True)
class CaDecomposition:
    """Exponential and branch-point data of one creation-annihilation
    Fourier mode (components in eigen coordinates for the system)."""

    q: float
    m: int
    n: int
    roots: tuple[ClassifiedRoot, ...]
    c_exp: tuple[complex, ...] | None
    s_star: complex | None
    phi: tuple[tuple[complex, ...], ...]   # [component][k-1] at mu1, k=1..n
    psi: tuple[tuple[complex, ...], ...] | None   # same at mu2 (None for scalar)
    c_bp: tuple[complex, ...]              # coefficient of t**(n/m-1) e^(mu1 t)
    c_bp_mu2: tuple[complex, ...] | None


def _bp_factor(k: int, m: int) -> float:
    return (
        _BRANCH_CUT_SIGN
        * gamma_fn(1.0 - k / m).real
        * math.sin(math.pi * k / m)
        / math.pi
    )


def pf_coefficients_ca_scalar(
    params: ScalarCreationAnnihilationParams, init: FourierInitialData
) -> CaDecomposition:
    """Decomposition of the scalar creation-annihilation mode.

    The rationalised denominator is ``z**n (z**(m-n) + d q^2)`` in
    ``z = (s-a)**(1/m)``: an order-``n`` pole at the branch point (giving
    the ``t**(-gamma) e^(at)`` law) plus ``m - n`` sheet roots.
    """
    q = init.q
    if q == 0:
        raise ValueError("q = 0 is pure reaction")
    exp = params.exponent
    if exp.is_regular:
        raise ValueError("gamma = 1 has no branch point; mode is a pure exponential")
    n, m = exp.ell, exp.m
    u0 = init.u0[0]
    dq2 = params.d * q * q

    # sheet roots: z**(m-n) = -d q^2
    radius = dq2 ** (1.0 / (m - n))
    lo = (-math.pi + params.theta1) / m
    hi = (math.pi + params.theta1) / m
    roots = []
    for j in range(m - n):
        ang = (math.pi + 2.0 * math.pi * j) / (m - n)
        ang = (ang + math.pi) % (2.0 * math.pi) - math.pi
        z = radius * cmath.exp(1j * ang)
        member = lo < ang < hi
        s = params.a + z**m
        if member:
            # plus-region convention of this model: Re(s - a) > 0
            cls = PointClass.SPECTRUM if s.real > params.a else PointClass.PSEUDO
        else:
            cls = PointClass.OUTSIDE
        roots.append(ClassifiedRoot(s=s, classification=cls, z=z, source="polyroot"))

    s_star = None
    c_exp = None
    best = None
    for rc in roots:
        if rc.classification == PointClass.OUTSIDE:
            continue
        if best is None or rc.s.real > best.s.real:
            best = rc
    if best is not None:
        s_star = best.s
        qprime = 1.0 + (n / m) * dq2 * best.z ** (n - m)
        c_exp = (u0 / qprime,)

    # branch-point coefficients: Taylor data of u0/(z**(m-n) + d q^2)
    theta = 2.0 * math.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES
    rad = 0.2 * radius
    ring = rad * np.exp(1j * theta)
    vals = u0 / (ring ** (m - n) + dq2)
    phi = tuple(
        complex(np.mean(vals * np.exp(-1j * (n - k) * theta)) / rad ** (n - k))
        for k in range(1, n + 1)
    )
    c_bp = (_bp_factor(n, m) * phi[n - 1],)
    return CaDecomposition(
        q=q, m=m, n=n, roots=tuple(roots),
        c_exp=c_exp, s_star=s_star,
        phi=(phi,), psi=None, c_bp=c_bp, c_bp_mu2=None,
    )


def _ca_numerator(params: CreationAnnihilationParams, init: FourierInitialData,
                  comp: int, s: complex, w1: complex, w2: complex) -> complex:
    """Numerator of component ``comp`` of the Fourier-Laplace solution;
    ``w1, w2`` are the already-evaluated powers ``(s-mu_j)**(n/m)``."""
    dbar = params.dbar
    mu1, mu2 = params.reaction.eigenvalues
    q_sq = init.q**2
    w01, w02 = init.u0
    if comp == 0:
        return (s - mu2 + dbar[1, 1] * q_sq * w2) * w01 - dbar[0, 1] * q_sq * w2 * w02
    return -dbar[1, 0] * q_sq * w1 * w01 + (s - mu1 + dbar[0, 0] * q_sq * w1) * w02


def _ca_qprime(params: CreationAnnihilationParams, q: float, s: complex,
               w1: complex, w2: complex) -> complex:
    dbar = params.dbar
    mu1, mu2 = params.reaction.eigenvalues
    nm = params.exponent.delta
    q_sq = q * q
    f1 = s - mu1 + dbar[0, 0] * q_sq * w1
    f2 = s - mu2 + dbar[1, 1] * q_sq * w2
    g1 = 1.0 + nm * dbar[0, 0] * q_sq * w1 / (s - mu1)
    g2 = 1.0 + nm * dbar[1, 1] * q_sq * w2 / (s - mu2)
    cross = dbar[0, 1] * dbar[1, 0] * q_sq * q_sq
    return g1 * f2 + f1 * g2 - nm * cross * (w1 * w2 / (s - mu1) + w1 * w2 / (s - mu2))


def pf_coefficients_ca(
    params: CreationAnnihilationParams, init: FourierInitialData
) -> CaDecomposition:
    """Decomposition of one creation-annihilation system mode (eigen
    coordinates).

    The branch-point Laurent data comes from circle quadrature of
    ``z**n Psi(mu_j + z**m)``; structurally the first component has its
    entire pole at the first branch point (the coefficients at the
    second vanish through a common factor) and vice versa.
    """
    q = init.q
    if q == 0:
        raise ValueError("q = 0 is pure reaction")
    exp = params.exponent
    if exp.is_regular:
        raise ValueError("gamma = 1 has no branch points; modes are exponentials")
    n, m = exp.ell, exp.m
    mu1, mu2 = params.reaction.eigenvalues
    cut1, cut2 = params.branches

    res = roots_ca(params, [q])
    roots = list(res.roots[0])

    # dominant on-sheet exponential
    s_star = None
    c_exp = None
    best = None
    for rc in roots:
        if rc.classification == PointClass.OUTSIDE:
            continue
        if best is None or rc.s.real > best.s.real:
            best = rc
    if best is not None:
        s = best.s
        w1 = principal_power(s, n / m, cut1)
        w2 = principal_power(s, n / m, cut2)
        qp = _ca_qprime(params, q, s, w1, w2)
        c_exp = tuple(
            _ca_numerator(params, init, comp, s, w1, w2) / qp for comp in range(2)
        )
        s_star = s

    # contour radius: stay clear of the other branch point and the roots
    gap_z = abs(mu1 - mu2) ** (1.0 / m)
    for rc in roots:
        for mu in (mu1, mu2):
            dist = abs(rc.s - mu) ** (1.0 / m)
            if dist > 0:
                gap_z = min(gap_z, dist)
    radius = 0.1 * gap_z
    if not radius > 0:
        raise ContourExtractionFailure("branch points coincide or a root sits on one")

    theta = 2.0 * math.pi * np.arange(CONTOUR_NODES) / CONTOUR_NODES
    ring = radius * np.exp(1j * theta)

    def taylor_data(mu_here: complex, cut_other, mu_other: complex):
        zs = ring
        ss = mu_here + zs**m
        wn_here = zs**n
        w_other = np.array([principal_power(s, n / m, cut_other) for s in ss])
        coeffs = []
        for comp in range(2):
            if mu_here == mu1:
                w1v, w2v = wn_here, w_other
            else:
                w1v, w2v = w_other, wn_here
            numer = np.array(
                [
                    _ca_numerator(params, init, comp, s, w1, w2)
                    for s, w1, w2 in zip(ss, w1v, w2v)
                ]
            )
            denom = _ca_denominator(params, q, ss, w1v, w2v)
            f = wn_here * numer / denom
            coeffs.append(
                tuple(
                    complex(np.mean(f * np.exp(-1j * (n - k) * theta)) / radius ** (n - k))
                    for k in range(1, n + 1)
                )
            )
        return tuple(coeffs)

    phi = taylor_data(mu1, cut2, mu2)
    psi = taylor_data(mu2, cut1, mu1)
    factor = _bp_factor(n, m)
    c_bp = tuple(factor * phi[comp][n - 1] for comp in range(2))
    c_bp_mu2 = tuple(factor * psi[comp][n - 1] for comp in range(2))
    return CaDecomposition(
        q=q, m=m, n=n, roots=tuple(roots),
        c_exp=c_exp, s_star=s_star,
        phi=phi, psi=psi, c_bp=c_bp, c_bp_mu2=c_bp_mu2,
    )


def _ca_denominator(params: CreationAnnihilationParams, q: float, ss, w1v, w2v):
    dbar = params.dbar
    mu1, mu2 = params.reaction.eigenvalues
    q_sq = q * q
    return (ss - mu1 + dbar[0, 0] * q_sq * w1v) * (ss - mu2 + dbar[1, 1] * q_sq * w2v) - (
        dbar[0, 1] * dbar[1, 0] * q_sq * q_sq
    ) * w1v * w2v


def classify_decay_ca_scalar(
    params: ScalarCreationAnnihilationParams, init: FourierInitialData
) -> DecayEstimate:
    """Decay law of the scalar creation-annihilation mode: exponential at
    an on-sheet root when one dominates the branch point, otherwise the
    branch-point law ``t**(-gamma) e^(at)``."""
    exp = params.exponent
    if init.q == 0:
        kind = DecayKind.EXP_GROWTH if params.a > 0 else DecayKind.EXP_DECAY
        return DecayEstimate(kind, complex(params.a), 0.0, (init.u0[0],), None, None)
    pf = pf_coefficients_ca_scalar(params, init)
    if pf.s_star is not None and pf.s_star.real > params.a:
        kind = DecayKind.EXP_GROWTH if pf.s_star.real > 0 else DecayKind.EXP_DECAY
        return DecayEstimate(kind, pf.s_star, 0.0, pf.c_exp, None, pf.m)
    g = exp.gamma
    return DecayEstimate(
        DecayKind.BRANCH_POINT, complex(params.a), pf.n / pf.m - 1.0, pf.c_bp, None, pf.m
    )


def classify_decay_ca(
    params: CreationAnnihilationParams, init: FourierInitialData
) -> DecayEstimate:
    """Decay law of one creation-annihilation system mode (eigen
    coordinates): exponential at the dominant on-sheet root when its real
    part exceeds ``Re mu1``, else the branch-point law
    ``t**(-gamma) e^(mu1 t)``."""
    mu1 = params.reaction.mu1
    if init.q == 0:
        kind = DecayKind.EXP_GROWTH if mu1.real > 0 else DecayKind.EXP_DECAY
        coeff = (init.u0[0], 0j)
        return DecayEstimate(kind, mu1, 0.0, coeff, None, None)
    pf = pf_coefficients_ca(params, init)
    if pf.s_star is not None and pf.s_star.real > mu1.real:
        kind = DecayKind.EXP_GROWTH if pf.s_star.real > 0 else DecayKind.EXP_DECAY
        return DecayEstimate(kind, pf.s_star, 0.0, pf.c_exp, None, pf.m)
    return DecayEstimate(
        DecayKind.BRANCH_POINT, mu1, pf.n / pf.m - 1.0, pf.c_bp, None, pf.m
    )


# ---------------------------------------------------------------------------
# Grünwald-Letnikov time stepping (the independent oracle)


@dataclass(frozen=True)
class GlResult:
    times: np.ndarray
    values: np.ndarray          # (T, ncomp) complex
    h: float
    n_steps: int
    error_estimate: float       # max relative step-halving deviation

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(self.values)


def gl_weights(gamma: float, count: int) -> np.ndarray:
    """Convolution weights of the Grünwald-Letnikov approximation of the
    order-``1-gamma`` Riemann-Liouville derivative,
    ``w_k = (-1)^k binom(1-gamma, k)`` via the stable recurrence."""
    w = np.empty(count)
    w[0] = 1.0
    for k in range(1, count):
        w[k] = w[k - 1] * (k - 2.0 + gamma) / k
    return w


def _gl_setup(params) -> tuple[np.ndarray, np.ndarray, np.ndarray | None, float]:
    """Returns (Amat, Dmat, conjugation rates or None, gamma)."""
    if isinstance(params, SourceSinkParams):
        if params.is_scalar:
            amat = np.array([[float(params.reaction)]], dtype=complex)
            dmat = np.array([[params.d]], dtype=complex)
        else:
            amat = params.reaction.matrix.astype(complex)
            dmat = np.diag([1.0, params.d]).astype(complex)
        return amat, dmat, None, params.exponent.gamma
    if isinstance(params, ScalarCreationAnnihilationParams):
        amat = np.array([[params.a]], dtype=complex)
        dmat = np.array([[params.d]], dtype=complex)
        return amat, dmat, np.array([params.a], dtype=complex), params.exponent.gamma
    if isinstance(params, CreationAnnihilationParams):
        mu = np.array(params.reaction.eigenvalues, dtype=complex)
        return np.diag(mu), params.dbar.astype(complex), mu, params.exponent.gamma
    raise TypeError(f"unsupported parameter record {type(params)!r}")


def _gl_run(amat, dmat, rates, gamma, q, u0, h, n_steps, block: int):
    nc = len(u0)
    alpha = 1.0 - gamma
    w = gl_weights(gamma, n_steps + 1)
    if rates is None:
        wmod = np.repeat(w[:, None], nc, axis=1).astype(complex)
    else:
        lags = h * np.arange(n_steps + 1)
        wmod = w[:, None] * np.exp(np.outer(lags, rates))
    pref = q * q * h ** (-alpha)
    mmat = np.eye(nc) / h + pref * dmat - amat
    minv = np.linalg.inv(mmat)
    u = np.zeros((n_steps + 1, nc), dtype=complex)
    u[0] = u0
    b = 0
    while b < n_steps:
        hi = min(b + block, n_steps)
        if b > 0:
            far = np.empty((hi - b, nc), dtype=complex)
            for c in range(nc):
                conv = fftconvolve(u[:b, c], wmod[: hi + 1, c])
                far[:, c] = conv[b + 1 : hi + 1]
        else:
            far = np.zeros((hi - b, nc), dtype=complex)
        for i in range(b + 1, hi + 1):
            near = (
                (u[b:i] * wmod[1 : i - b + 1][::-1]).sum(axis=0)
                if i > b
                else 0.0
            )
            v = far[i - b - 1] + near
            rhs = u[i - 1] / h - pref * (dmat @ v)
            u[i] = minv @ rhs
        b = hi
    return u


def _exact_exponential(amat, dmat, q, u0, times) -> np.ndarray:
    """Classical-limit integrator: the mode obeys a constant-coefficient
    linear ODE, solved exactly."""
    gen = amat - q * q * dmat
    vals, vecs = np.linalg.eig(gen)
    coef = np.linalg.solve(vecs, np.array(u0, dtype=complex))
    out = np.empty((len(times), len(u0)), dtype=complex)
    for i, t in enumerate(times):
        out[i] = vecs @ (np.exp(vals * t) * coef)
    return out


def gl_evolve(
    params,
    init: FourierInitialData,
    t_grid,
    h: float | None = None,
    richardson: bool = True,
    reject_tol: float = 0.05,
    block: int = 2048,
) -> GlResult:
    """Integrate one Fourier mode of the given model and sample ``|u|``
    on ``t_grid``.

    The internal step defaults to ``min(t_grid[0]/50, 0.1)``; a full
    step-halved rerun provides the discretization-error estimate (checked
    at three sample times; disagreement beyond ``reject_tol`` raises
    :class:`StepSizeRejected`) and its finer values are the ones
    returned.  The classical limit dispatches to the exact exponential
    integrator.
    """
    times = np.asarray(t_grid, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValueError("t_grid must be a nonempty 1-d array")
    if np.any(times <= 0) or np.any(np.diff(times) <= 0):
        raise ValueError("t_grid must be positive and ascending")
    amat, dmat, rates, gamma = _gl_setup(params)
    if len(init.u0) != amat.shape[0]:
        raise ValueError("initial data size does not match the model")
    if gamma == 1.0:
        vals = _exact_exponential(amat, dmat, init.q, init.u0, times)
        return GlResult(times, vals, 0.0, 0, 0.0)

    if h is None:
        h = min(times[0] / 50.0, 0.1)
    n_steps = int(math.ceil(times[-1] / h))
    if n_steps > 4_000_000:
        raise ValueError(
            f"{n_steps} steps exceed the memory cap; raise h or shorten the horizon"
        )
    idx = np.clip(np.round(times / h).astype(int), 1, n_steps)
    actual_times = idx * h

    u_h = _gl_run(amat, dmat, rates, gamma, init.q, init.u0, h, n_steps, block)
    if not richardson:
        return GlResult(actual_times, u_h[idx], h, n_steps, math.nan)
    u_h2 = _gl_run(amat, dmat, rates, gamma, init.q, init.u0, h / 2.0, 2 * n_steps, block)
    check_idx = sorted({idx[0], idx[len(idx) // 2], idx[-1]})
    rel = 0.0
    for i in check_idx:
        a = np.linalg.norm(u_h[i])
        bnorm = np.linalg.norm(u_h2[2 * i])
        rel = max(rel, abs(a - bnorm) / max(bnorm, 1e-300))
    if rel > reject_tol:
        raise StepSizeRejected(
            f"step-halving check disagrees by {rel:.2%} (tolerance {reject_tol:.0%})"
        )
    return GlResult(actual_times, u_h2[2 * idx], h, n_steps, rel)


# ---------------------------------------------------------------------------
# decay-exponent fitting


@dataclass(frozen=True)
class FitResult:
    power: float
    confidence: float
    n_samples: int
    log_amplitude: float


def fit_decay_exponent(
    times,
    values,
    window: tuple[float, float],
    known_exponential: complex | None = None,
) -> FitResult:
    """Least-squares slope of ``log|value|`` against ``log t`` inside the
    window, after dividing out a known exponential factor."""
    times = np.asarray(times, dtype=float)
    vals = np.asarray(values)
    mags = np.linalg.norm(vals, axis=1) if vals.ndim == 2 else np.abs(vals)
    if known_exponential is not None:
        mags = mags / np.exp(complex(known_exponential).real * times)
    mask = (times >= window[0]) & (times <= window[1])
    if int(mask.sum()) < 8:
        raise WindowTooNarrow(f"only {int(mask.sum())} samples in {window}")
    t_w = times[mask]
    y_w = mags[mask]
    if np.any(y_w <= 0):
        raise ValueError("magnitudes must be strictly positive in the window")
    lx = np.log(t_w)
    ly = np.log(y_w)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    confidence = max(0.0, 1.0 - math.sqrt(ss_res / max(ss_tot, 1e-300)))
    return FitResult(float(slope), confidence, int(mask.sum()), float(intercept))
