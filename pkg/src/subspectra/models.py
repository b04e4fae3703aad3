"""Parameter records for the linear reaction-subdiffusion models.

Two couplings of reaction and subdiffusive transport are covered:

* source-sink (``ss``): the fractional operator acts on the diffusion
  term only, the reaction adds or removes particles independently of the
  waiting-time process;
* creation-annihilation (``ca``): particles are created or annihilated at
  a constant per-capita rate *during* the waiting time, which conjugates
  the fractional operator with the reaction semigroup.

All records are immutable and safe to share across workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property

import numpy as np

from .complexcore import BranchCut

#: Default cut angle; the steepest admissible cut, which reveals the whole
#: pseudo-spectrum.
DEFAULT_CUT_ANGLE = math.pi / 2


class DegenerateInput(ValueError):
    """Inputs degenerate enough that the requested operation is meaningless."""


def _as_theta(theta: float | None) -> float:
    return DEFAULT_CUT_ANGLE if theta is None else float(theta)


@dataclass(frozen=True)
class ReactionMatrix:
    """2x2 linearised reaction matrix with Turing-oriented diagnostics.

    Eigenvalues are ordered so that ``Re mu1 >= Re mu2``; for a complex
    conjugate pair ``mu1`` is the one in the upper half plane.
    """

    a1: float
    a2: float
    a3: float
    a4: float

    @property
    def trace(self) -> float:
        return self.a1 + self.a4

    @property
    def det(self) -> float:
        return self.a1 * self.a4 - self.a2 * self.a3

    @cached_property
    def eigenvalues(self) -> tuple[complex, complex]:
        disc = self.trace * self.trace - 4.0 * self.det
        if disc >= 0:
            root = math.sqrt(disc)
            mu_hi = (self.trace + root) / 2.0
            mu_lo = (self.trace - root) / 2.0
            return complex(mu_hi), complex(mu_lo)
        root = math.sqrt(-disc)
        # conjugate pair: upper half plane first
        return (
            complex(self.trace / 2.0, root / 2.0),
            complex(self.trace / 2.0, -root / 2.0),
        )

    @property
    def mu1(self) -> complex:
        return self.eigenvalues[0]

    @property
    def mu2(self) -> complex:
        return self.eigenvalues[1]

    @property
    def case_tag(self) -> str:
        """``"cc"`` for a complex-conjugate pair, ``"nr"`` for real eigenvalues."""
        return "cc" if self.mu1.imag != 0.0 else "nr"

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a1, self.a2], [self.a3, self.a4]], dtype=float)

    def is_turing_capable(self) -> bool:
        """Strict linear stability without diffusion: tr < 0 and det > 0."""
        return self.trace < 0.0 and self.det > 0.0

    def is_activator_inhibitor(self) -> bool:
        return self.a1 > 0.0 and self.a4 < 0.0

    @cached_property
    def eigenbasis(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenbasis ``P`` with ``P^-1 A P = diag(mu1, mu2)`` and its inverse."""
        mu1, mu2 = self.eigenvalues
        if self.a2 == 0.0:
            raise DegenerateInput("eigenbasis form requires a2 != 0")
        if mu1 == mu2:
            raise DegenerateInput("defective or repeated eigenvalues are unsupported")
        p = np.array([[self.a2, self.a2], [mu1 - self.a1, mu2 - self.a1]], dtype=complex)
        denom = self.a2 * (mu1 - mu2)
        pinv = np.array(
            [
                [(self.a1 - mu2) / denom, 1.0 / (mu1 - mu2)],
                [-(self.a1 - mu1) / denom, -1.0 / (mu1 - mu2)],
            ],
            dtype=complex,
        )
        return p, pinv

    def eigen_reconstruction_error(self) -> float:
        p, pinv = self.eigenbasis
        rebuilt = p @ np.diag(self.eigenvalues) @ pinv
        return float(np.max(np.abs(rebuilt - self.matrix)))


@dataclass(frozen=True)
class AnomalousExponent:
    """Reduced rational anomalous exponent ``gamma = 1 - ell/m``.

    ``delta = ell/m`` is the complementary order appearing in the
    dispersion relations; ``m`` is the common reduced denominator of both
    ``gamma`` and ``delta``.  ``ell = 0, m = 1`` encodes the classical
    limit ``gamma = 1``.
    """

    ell: int
    m: int

    def __post_init__(self) -> None:
        if not self.is_regular and not 1 <= self.ell < self.m:
            raise ValueError(f"need 1 <= ell < m, got ell={self.ell}, m={self.m}")
        if math.gcd(self.ell, self.m) != 1:
            raise ValueError(f"ell/m must be reduced, got {self.ell}/{self.m}")

    @property
    def is_regular(self) -> bool:
        return self.ell == 0 and self.m == 1

    @property
    def gamma(self) -> float:
        return 1.0 - self.ell / self.m

    @property
    def delta(self) -> float:
        return self.ell / self.m

    @property
    def gamma_fraction(self) -> Fraction:
        return Fraction(self.m - self.ell, self.m)

    @classmethod
    def from_gamma(cls, gamma: Fraction | str) -> "AnomalousExponent":
        """Build from the anomalous exponent given as a reduced fraction
        (string form ``"5/6"`` accepted)."""
        frac = Fraction(gamma)
        if not 0 < frac <= 1:
            raise ValueError(f"gamma must lie in (0, 1], got {frac}")
        if frac == 1:
            return cls(0, 1)
        return cls(frac.denominator - frac.numerator, frac.denominator)

    @classmethod
    def regular(cls) -> "AnomalousExponent":
        return cls(0, 1)

    def __str__(self) -> str:
        return f"{self.gamma_fraction.numerator}/{self.gamma_fraction.denominator}"


@dataclass(frozen=True)
class SourceSinkParams:
    """Parameters of the source-sink model (fractional operator on
    diffusion only); branch point at the origin.

    ``reaction`` is either a :class:`ReactionMatrix` (two species, species
    one has unit diffusivity, species two diffusivity ``d``) or a plain
    float for the scalar equation.
    """

    reaction: ReactionMatrix | float
    d: float
    exponent: AnomalousExponent
    theta1: float = field(default=DEFAULT_CUT_ANGLE)

    def __post_init__(self) -> None:
        if self.d < 0:
            raise ValueError("d must be nonnegative")

    @property
    def is_scalar(self) -> bool:
        return not isinstance(self.reaction, ReactionMatrix)

    @property
    def branch(self) -> BranchCut:
        return BranchCut(0.0 + 0.0j, self.theta1, 1)


@dataclass(frozen=True)
class ScalarCreationAnnihilationParams:
    """Scalar creation-annihilation equation with reaction rate ``a``;
    branch point at ``a``.  ``a = 0`` recovers the bare subdiffusion
    equation."""

    a: float
    d: float
    exponent: AnomalousExponent
    theta1: float = field(default=DEFAULT_CUT_ANGLE)

    def __post_init__(self) -> None:
        if self.d <= 0:
            raise ValueError("d must be positive")

    @property
    def branch(self) -> BranchCut:
        return BranchCut(complex(self.a), self.theta1, 1)


@dataclass(frozen=True)
class CreationAnnihilationParams:
    """Parameters of the creation-annihilation model (reaction interleaved
    with the waiting-time process); branch points at the eigenvalues of
    the reaction matrix.

    Case ``cc`` cuts: the upper branch point carries an orientation -1 cut
    (mirrored into the upper-left), the lower one the standard +1 cut, so
    that positive reals to the right of both points stay on the principal
    sheets.
    """

    reaction: ReactionMatrix
    d: float
    exponent: AnomalousExponent
    theta1: float = field(default=DEFAULT_CUT_ANGLE)
    theta2: float = field(default=DEFAULT_CUT_ANGLE)

    def __post_init__(self) -> None:
        if self.d <= 0:
            raise ValueError("d must be positive")
        # fail early on inputs the eigenbasis form cannot represent
        self.reaction.eigenbasis

    @property
    def dbar(self) -> np.ndarray:
        """Diffusion matrix conjugated into the eigenbasis,
        ``P^-1 diag(1, d) P``; complex for case cc."""
        p, pinv = self.reaction.eigenbasis
        return pinv @ np.diag([1.0, self.d]) @ p

    @property
    def branches(self) -> tuple[BranchCut, BranchCut]:
        mu1, mu2 = self.reaction.eigenvalues
        orient1 = -1 if self.reaction.case_tag == "cc" else 1
        return (
            BranchCut(mu1, self.theta1, orient1),
            BranchCut(mu2, self.theta2, 1),
        )

    def dbar_reconstruction_error(self) -> float:
        p, pinv = self.reaction.eigenbasis
        rebuilt = p @ self.dbar @ pinv
        return float(np.max(np.abs(rebuilt - np.diag([1.0, self.d]))))
