"""Closed-form instability thresholds for both reaction-subdiffusion models.

Source-sink model: the classical Turing threshold ``d_c`` together with the
two large-wavenumber thresholds that govern the oscillatory (Turing-Hopf)
instability and the existence of stable pseudo-spectrum.  All three are
larger/smaller roots of explicit quadratics in the diffusion ratio.

Creation-annihilation model: the near-origin expansion of the dispersion
relation yields a quadratic whose coefficients involve the conjugated
power matrix ``C = P (-diag(mu))^(1-gamma) P^-1``; from it follow the
minimal anomalous exponent below which no Turing instability exists, the
critical diffusion ratio ``d_gamma`` and the selected wavenumber.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .models import AnomalousExponent, ReactionMatrix


class NotTuringCapable(ValueError):
    """The reaction matrix admits no diffusion-driven instability."""


class BelowGammaMin(Warning):
    """Anomalous exponent below the minimal one: thresholds absent,
    stability near the origin guaranteed."""


def stable_quadratic_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Real roots of ``a x^2 + b x + c``, smaller first, computed without
    subtractive cancellation (needed as the quadratics degenerate for
    delta -> 0)."""
    disc = b * b - 4.0 * a * c
    if disc < 0:
        raise ValueError(f"complex roots: discriminant {disc}")
    sign_b = 1.0 if b >= 0 else -1.0
    qq = -(b + sign_b * math.sqrt(disc)) / 2.0
    if qq == 0.0:
        r = -b / (2.0 * a)
        return (r, r)
    r1, r2 = qq / a, c / qq
    return (min(r1, r2), max(r1, r2))


# ---------------------------------------------------------------------------
# source-sink model


@dataclass(frozen=True)
class SourceSinkThresholds:
    """Diffusion-ratio thresholds of the source-sink model at anomaly
    ``delta`` and cut angle ``theta1``.

    Ordering ``d_tilde_delta_inf < d_delta_inf < d_c`` always holds:
    below ``d_tilde`` the large-wavenumber branch points leave the
    principal sheet entirely, between the two lower thresholds they form
    stable pseudo-spectrum, above ``d_delta_inf`` they cross into the
    right half plane (oscillatory instability through infinite
    wavenumber), and above ``d_c`` a band of real positive spectrum
    exists.
    """

    d_c: float
    d_c_lower: float            # companion smaller root, below -a4/a1
    d_delta_inf: float
    d_tilde_delta_inf: float
    delta: float
    theta1: float
    delta_threshold_sinf: float    # theta1/(pi+theta1)
    delta_threshold_half: float    # pi/(2(pi+theta1))
    delta_threshold_exist: float   # pi/(pi+theta1)


def _turing_quadratic(reaction: ReactionMatrix, cos_sq: float) -> tuple[float, float]:
    a1, a2, a3, a4 = reaction.a1, reaction.a2, reaction.a3, reaction.a4
    return stable_quadratic_roots(
        a1 * a1,
        4.0 * (a2 * a3 - a1 * a4) * cos_sq + 2.0 * a1 * a4,
        a4 * a4,
    )


def critical_diffusion(reaction: ReactionMatrix) -> tuple[float, float]:
    """Classical Turing threshold ``d_c`` (and the companion smaller root)
    for normal diffusion."""
    if not reaction.is_turing_capable():
        raise NotTuringCapable(
            f"need tr < 0 and det > 0, got tr={reaction.trace}, det={reaction.det}"
        )
    try:
        lower, upper = _turing_quadratic(reaction, 1.0)
    except ValueError as exc:
        raise NotTuringCapable(str(exc)) from exc
    if upper <= 0:
        raise NotTuringCapable("no positive diffusion ratio destabilises the state")
    return upper, lower


def thresholds_ss(
    reaction: ReactionMatrix, delta: float, theta1: float = math.pi / 2
) -> SourceSinkThresholds:
    """All source-sink thresholds at anomaly ``delta`` in ``(0, 1)``."""
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0,1), got {delta}")
    d_c, d_lower = critical_diffusion(reaction)

    _, d_delta_inf = _turing_quadratic(reaction, math.cos(math.pi * delta / 2.0) ** 2)

    half = math.pi / (2.0 * (math.pi + theta1))
    exist = math.pi / (math.pi + theta1)
    if delta >= exist:
        # the near-origin branch points stay on the principal sheet for
        # every positive diffusion ratio
        d_tilde = 0.0
    elif delta == half:
        d_tilde = -reaction.a4 / reaction.a1
    else:
        small, large = _turing_quadratic(
            reaction, math.cos((math.pi + theta1) * delta) ** 2
        )
        d_tilde = large if delta < half else small

    return SourceSinkThresholds(
        d_c=d_c,
        d_c_lower=d_lower,
        d_delta_inf=d_delta_inf,
        d_tilde_delta_inf=d_tilde,
        delta=delta,
        theta1=theta1,
        delta_threshold_sinf=theta1 / (math.pi + theta1),
        delta_threshold_half=half,
        delta_threshold_exist=exist,
    )


# ---------------------------------------------------------------------------
# creation-annihilation model


def conjugated_power_matrix(reaction: ReactionMatrix, gamma: float) -> np.ndarray:
    """``C = P (-diag(mu1, mu2))**(1-gamma) P^-1``; real for a Turing-capable
    reaction matrix (conjugate-pair symmetry in case cc, real positive
    powers in case nr)."""
    mu1, mu2 = reaction.eigenvalues
    if mu1.real >= 0 or mu2.real >= 0:
        raise NotTuringCapable("eigenvalues must have negative real parts")
    p, pinv = reaction.eigenbasis
    powers = np.diag([(-mu1) ** (1.0 - gamma), (-mu2) ** (1.0 - gamma)])
    c = p @ powers @ pinv
    if np.max(np.abs(c.imag)) > 1e-10 * max(1.0, np.max(np.abs(c.real))):
        raise ValueError("conjugated power matrix unexpectedly non-real")
    return c.real.copy()


def minimal_anomalous_exponent(reaction: ReactionMatrix) -> float:
    """Smallest anomalous exponent at which the creation-annihilation model
    can undergo the near-origin Turing instability for any diffusion ratio."""
    if not reaction.is_turing_capable():
        raise NotTuringCapable(
            f"need tr < 0 and det > 0, got tr={reaction.trace}, det={reaction.det}"
        )
    mu1, mu2 = reaction.eigenvalues
    a1 = reaction.a1
    if reaction.case_tag == "cc":
        # -mu1 = |mu| exp(-i theta) with theta in (0, pi/2)
        theta = math.atan2(abs(mu1.imag), -mu1.real)
        mod = abs(mu1)
        x = a1 / (mod * math.sin(theta)) + math.cos(theta) / math.sin(theta)
        gamma_min = math.atan2(1.0, x) / theta  # arccot with range (0, pi)
    else:
        gamma_min = math.log((a1 - mu1.real) / (a1 - mu2.real)) / math.log(
            mu1.real / mu2.real
        )
    if not 0.0 < gamma_min < 1.0:
        raise NotTuringCapable(
            f"minimal anomalous exponent {gamma_min} outside (0, 1)"
        )
    return gamma_min


@dataclass(frozen=True)
class CreationAnnihilationThresholds:
    """Near-origin Turing data of the creation-annihilation model.

    ``d_gamma`` and ``q_gamma_sq`` are ``None`` below the minimal
    anomalous exponent (``below_reason`` says why); ``d_gamma_excluded``
    is the companion smaller quadratic root, kept for transparency but
    not a threshold.
    """

    gamma: float
    case_tag: str
    c_matrix: np.ndarray
    det_c: float
    beta2: float
    beta3: float
    gamma_min: float
    d_gamma: float | None
    d_gamma_excluded: float | None
    q_gamma_sq: float | None
    below_reason: str | None
    reaction: ReactionMatrix

    def beta1(self, d: float) -> float:
        return float(self.c_matrix[0, 0] + self.c_matrix[1, 1] * d)

    def h(self, d: float, q_sq) -> np.ndarray | float:
        """Constant term polynomial ``h(q^2)`` of the near-origin quadratic."""
        q_sq = np.asarray(q_sq, dtype=float)
        return (
            self.det_c * d * q_sq**2
            - (self.beta2 * d + self.beta3) * q_sq
            + self.reaction.det
        )


def thresholds_ca(
    reaction: ReactionMatrix, gamma: float | AnomalousExponent
) -> CreationAnnihilationThresholds:
    """Turing data of the creation-annihilation model at anomalous
    exponent ``gamma``."""
    if isinstance(gamma, AnomalousExponent):
        gamma = gamma.gamma
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    gamma_min = minimal_anomalous_exponent(reaction)
    c = conjugated_power_matrix(reaction, gamma)
    a1, a2, a3, a4 = reaction.a1, reaction.a2, reaction.a3, reaction.a4
    c1, c2, c3, c4 = c[0, 0], c[0, 1], c[1, 0], c[1, 1]
    beta2 = a1 * c4 - a2 * c3
    beta3 = a4 * c1 - a3 * c2
    det_c = float(np.linalg.det(c))

    common = dict(
        gamma=gamma,
        case_tag=reaction.case_tag,
        c_matrix=c,
        det_c=det_c,
        beta2=beta2,
        beta3=beta3,
        gamma_min=gamma_min,
        reaction=reaction,
    )
    if gamma <= gamma_min:
        warnings.warn(
            f"gamma={gamma} <= minimal anomalous exponent {gamma_min:.4f}: "
            "no Turing instability for any diffusion ratio",
            BelowGammaMin,
            stacklevel=2,
        )
        return CreationAnnihilationThresholds(
            d_gamma=None,
            d_gamma_excluded=None,
            q_gamma_sq=None,
            below_reason="below minimal anomalous exponent",
            **common,
        )

    det_ac = reaction.det * det_c
    root = math.sqrt(det_ac * det_ac - beta2 * beta3 * det_ac)
    d_gamma = -beta3 / beta2 + 2.0 / (beta2 * beta2) * (det_ac + root)
    d_minus = -beta3 / beta2 + 2.0 / (beta2 * beta2) * (det_ac - root)
    q_gamma_sq = (beta2 * d_gamma + beta3) / (2.0 * d_gamma * det_c)
    return CreationAnnihilationThresholds(
        d_gamma=d_gamma,
        d_gamma_excluded=d_minus,
        q_gamma_sq=q_gamma_sq,
        below_reason=None,
        **common,
    )


def taylor_dispersion_ca(
    thresholds: CreationAnnihilationThresholds, d: float, s: complex, q: float
) -> complex:
    """Near-origin quadratic approximation of the creation-annihilation
    dispersion relation, valid for ``|s|`` small against ``|mu2|``."""
    mu2 = thresholds.reaction.mu2
    if abs(s) > 0.5 * abs(mu2):
        warnings.warn(
            f"|s|={abs(s):.3g} beyond half the nearest branch point distance; "
            "quadratic approximation degrades",
            RuntimeWarning,
            stacklevel=2,
        )
    g = thresholds.gamma
    tr = thresholds.reaction.trace
    return (
        s * s
        + (thresholds.beta1(d) * q * q - tr) / g * s
        + float(thresholds.h(d, q * q)) / (g * g)
    )


def taylor_roots_ca(
    thresholds: CreationAnnihilationThresholds, d: float, q: float
) -> tuple[complex, complex]:
    """Roots of the near-origin quadratic, larger real part first."""
    g = thresholds.gamma
    b = (thresholds.beta1(d) * q * q - thresholds.reaction.trace) / g
    c = complex(thresholds.h(d, q * q)) / (g * g)
    disc = b * b - 4.0 * c
    root = disc ** 0.5 if isinstance(disc, complex) else complex(disc) ** 0.5
    s_plus = (-b + root) / 2.0
    s_minus = (-b - root) / 2.0
    if s_plus.real >= s_minus.real:
        return s_plus, s_minus
    return s_minus, s_plus
