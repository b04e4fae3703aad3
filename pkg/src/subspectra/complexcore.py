"""Branch-cut-aware complex arithmetic and the special functions of
fractional diffusion.

The temporal symbol ``s`` of a subdiffusive mode lives on a cut complex
plane: fractional powers ``s**p`` only make sense once a branch cut has
been chosen.  :class:`BranchCut` fixes that choice (cut direction and
orientation relative to a branch point) and :func:`principal_power`
evaluates powers consistently on the resulting sheet, preserving positive
reals.  On top of that live the two special functions that govern
subdiffusive relaxation: the Mittag-Leffler function (Fourier-mode decay)
and the Wright-type series for the Green's function in physical space.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass

import mpmath


class BranchViolation(ValueError):
    """A point was used outside the principal branch (on the cut or at the
    branch point)."""


class ConvergenceFailure(ArithmeticError):
    """Neither evaluation regime of a special function reached the
    requested tolerance."""


#: Roots whose argument is closer than this (radians) to a cut are flagged
#: rather than trusted; classification so close to the cut is meaningless.
CUT_PROXIMITY_TOL = 1e-9


# ---------------------------------------------------------------------------
# branch cuts


@dataclass(frozen=True)
class BranchCut:
    """A branch cut attached to ``branch_point``.

    The principal sheet is ``arg(s - branch_point) in (-pi + o*theta,
    pi + o*theta)`` with ``theta = cut_angle`` and ``o = orientation``;
    the cut itself is the ray at angle ``pi + o*theta``.  Orientation -1
    mirrors the cut into the lower half plane (used for the upper
    branch point of a complex-conjugate pair).
    """

    branch_point: complex
    cut_angle: float
    orientation: int = 1

    def __post_init__(self) -> None:
        # pi/2 itself is admissible: every threshold formula is continuous
        # there and it is the angle that exposes the full pseudo-spectrum.
        if not 0.0 < self.cut_angle <= math.pi / 2:
            raise ValueError(f"cut_angle must lie in (0, pi/2], got {self.cut_angle}")
        if self.orientation not in (1, -1):
            raise ValueError(f"orientation must be +1 or -1, got {self.orientation}")

    @property
    def window(self) -> tuple[float, float]:
        """Open interval of admissible arguments relative to the branch point."""
        shift = self.orientation * self.cut_angle
        return (-math.pi + shift, math.pi + shift)

    def branch_arg(self, s: complex) -> float:
        """Argument of ``s - branch_point`` normalised into ``(lo, lo + 2*pi]``.

        The value equals the cut angle itself exactly when ``s`` sits on
        the cut.
        """
        lo, hi = self.window
        phi = cmath.phase(complex(s) - complex(self.branch_point))
        if phi <= lo:
            phi += 2.0 * math.pi
        elif phi > hi:
            phi -= 2.0 * math.pi
        return phi


@dataclass(frozen=True)
class BranchMembership:
    """Classification of one point against one cut."""

    member: bool
    arg: float
    cut_proximate: bool
    positive_real_part: bool


def membership(s: complex, cut: BranchCut, cut_tol: float = CUT_PROXIMITY_TOL) -> BranchMembership:
    """Classify ``s`` against ``cut``.

    Total function: never raises.  The branch point itself is not a
    member.  ``positive_real_part`` reports ``Re s > Re branch_point``;
    callers apply their model's own plus-region convention.
    """
    s = complex(s)
    bp = complex(cut.branch_point)
    if s == bp:
        return BranchMembership(False, math.nan, True, False)
    lo, hi = cut.window
    phi = cut.branch_arg(s)
    dist_to_cut = min(abs(hi - phi), abs(phi - lo))
    return BranchMembership(
        member=lo < phi < hi,
        arg=phi,
        cut_proximate=dist_to_cut < cut_tol,
        positive_real_part=s.real > bp.real,
    )


def in_branch(s: complex, cut: BranchCut) -> bool:
    """True iff ``s`` lies strictly inside the principal branch of ``cut``."""
    return membership(s, cut).member


def principal_power(s: complex, p: float, cut: BranchCut) -> complex:
    """``(s - branch_point)**p`` on the principal sheet of ``cut``.

    Positive reals map to positive reals when the branch point is real
    and ``s`` lies to its right (the imaginary part is then exactly 0).
    """
    m = membership(s, cut)
    if not m.member:
        raise BranchViolation(
            f"{s} is on the cut or at the branch point of {cut}"
        )
    r = abs(complex(s) - complex(cut.branch_point))
    ang = p * m.arg
    return (r ** p) * complex(math.cos(ang), math.sin(ang))


# ---------------------------------------------------------------------------
# gamma function (Lanczos) -- needed with alternating signs and at poles in
# the Wright series, hence the explicit reciprocal with zeros at the poles.

_LANCZOS_G = 7.0
_LANCZOS_COEFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(z: complex) -> complex:
    """Gamma function for real or complex argument (Lanczos approximation,
    reflection formula for the left half plane)."""
    z = complex(z)
    if z.real < 0.5:
        # reflection: Gamma(z) Gamma(1-z) = pi / sin(pi z)
        sin_piz = cmath.sin(cmath.pi * z)
        if sin_piz == 0:
            return complex(math.inf, 0.0)
        return cmath.pi / (sin_piz * gamma_fn(1.0 - z))
    z -= 1.0
    x = _LANCZOS_COEFS[0]
    for i, c in enumerate(_LANCZOS_COEFS[1:], start=1):
        x += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * cmath.exp(-t) * x


def rgamma(z: complex) -> complex:
    """Reciprocal gamma ``1/Gamma(z)``; exactly 0 at the poles of Gamma,
    which is the analytic value of the reciprocal there."""
    z = complex(z)
    if z.imag == 0.0:
        zr = z.real
        if zr <= 0.0 and zr == math.floor(zr):
            return 0.0 + 0.0j
    g = gamma_fn(z)
    if g == 0 or cmath.isinf(g):
        return 0.0 + 0.0j
    return 1.0 / g


# ---------------------------------------------------------------------------
# Mittag-Leffler function


@dataclass(frozen=True)
class MittagLefflerResult:
    value: complex
    regime: str          # "series" or "asymptotic"
    error_estimate: float  # relative
    terms: int


#: Regime switch radius and the overlap band on which both regimes are
#: cross-validated against each other.
ML_SERIES_RADIUS = 5.0
ML_CROSS_BAND = (4.0, 8.0)
_ML_MAX_TERMS = 200_000
_ML_MAX_DPS = 400


def _ml_series_float(gamma: float, z: complex, tol: float):
    """One float64 pass of the defining series; returns (sum, rel_error,
    terms, cancellation)."""
    total = complex(rgamma(1.0))
    zp = 1.0 + 0.0j
    max_mag = abs(total)
    small_streak = 0
    n = 0
    for n in range(1, _ML_MAX_TERMS):
        zp *= z
        term = zp * math.exp(-math.lgamma(1.0 + n * gamma))
        total += term
        mag = abs(term)
        max_mag = max(max_mag, mag)
        if mag <= tol * max(abs(total), 1e-300) and n > abs(z):
            small_streak += 1
            if small_streak >= 3:
                break
        else:
            small_streak = 0
    denom = max(abs(total), 1e-300)
    cancellation = max_mag / denom
    rel_err = cancellation * 2.2e-16 + tol
    return total, rel_err, n, cancellation


def _ml_series_mp(gamma: float, z: complex, tol: float, dps: int):
    """High-precision pass of the series for cancellation-dominated cases."""
    with mpmath.workdps(dps):
        zm = mpmath.mpc(z)
        total = mpmath.rgamma(1)
        zp = mpmath.mpc(1)
        small_streak = 0
        n = 0
        for n in range(1, _ML_MAX_TERMS):
            zp *= zm
            term = zp * mpmath.rgamma(1 + n * gamma)
            total += term
            if abs(term) <= tol * max(abs(total), mpmath.mpf("1e-300")) and n > abs(z):
                small_streak += 1
                if small_streak >= 3:
                    break
            else:
                small_streak = 0
        return complex(total), n


def _ml_series(gamma: float, z: complex, tol: float):
    total, rel_err, n, cancellation = _ml_series_float(gamma, z, tol)
    if rel_err <= tol or cancellation <= 10.0:
        return total, rel_err, n
    dps = 25 + int(math.log10(cancellation))
    if dps > _ML_MAX_DPS:
        raise ConvergenceFailure(
            f"Mittag-Leffler series needs {dps} digits at z={z}, gamma={gamma}"
        )
    total, n = _ml_series_mp(gamma, z, tol, dps)
    return total, tol, n


def _ml_asymptotic(gamma: float, z: complex, tol: float):
    """Large-|z| expansion: algebraic tail plus, inside the Stokes sector,
    the exponential term ``exp(z**(1/gamma))/gamma``."""
    total = 0.0 + 0.0j
    zinv = 1.0 / z
    zp = 1.0 + 0.0j
    last_mag = math.inf
    stopped = tol
    n = 0
    for k in range(1, 200):
        zp *= zinv
        term = -zp * rgamma(1.0 - k * gamma)
        mag = abs(term)
        if mag > last_mag:
            # optimal truncation: stop once terms grow again
            stopped = mag
            break
        total += term
        if mag != 0.0:
            last_mag = mag
        n = k
        if mag <= tol * max(abs(total), 1e-300) and k >= 3:
            stopped = mag
            break
    if abs(cmath.phase(z)) <= gamma * math.pi:
        total += cmath.exp(z ** (1.0 / gamma)) / gamma
    rel_err = stopped / max(abs(total), 1e-300)
    return total, rel_err, n


def mittag_leffler(gamma: float, z: complex, tol: float = 1e-10) -> MittagLefflerResult:
    """One-parameter Mittag-Leffler function ``E_gamma(z)``.

    Uses the defining power series for small ``|z|`` and the asymptotic
    expansion beyond ``|z| = 5``; on the overlap band both regimes are
    evaluated and a disagreement above 1% triggers a warning.  Raises
    :class:`ConvergenceFailure` when neither regime reaches ``tol``.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    z = complex(z)
    if z == 0:
        return MittagLefflerResult(1.0 + 0.0j, "series", 0.0, 1)

    r = abs(z)
    use_series = r <= ML_SERIES_RADIUS
    series_val = series_err = asym_val = asym_err = None
    series_terms = asym_terms = 0

    want_series = use_series or ML_CROSS_BAND[0] <= r <= ML_CROSS_BAND[1]
    if want_series:
        try:
            series_val, series_err, series_terms = _ml_series(gamma, z, tol)
        except ConvergenceFailure:
            if use_series:
                use_series = False  # fall through to the asymptote
    if not use_series or ML_CROSS_BAND[0] <= r <= ML_CROSS_BAND[1]:
        asym_val, asym_err, asym_terms = _ml_asymptotic(gamma, z, tol)

    if series_val is not None and asym_val is not None:
        scale = max(abs(series_val), abs(asym_val), 1e-300)
        if abs(series_val - asym_val) / scale > 0.01:
            warnings.warn(
                f"Mittag-Leffler regimes disagree by >1% at z={z}, gamma={gamma}",
                RuntimeWarning,
                stacklevel=2,
            )

    if use_series and series_val is not None:
        value, err, n_terms, regime = series_val, series_err, series_terms, "series"
        alt = (asym_val, asym_err, asym_terms, "asymptotic")
    else:
        value, err, n_terms, regime = asym_val, asym_err, asym_terms, "asymptotic"
        alt = (series_val, series_err, series_terms, "series")

    if err > tol:
        if alt[0] is not None and alt[1] is not None and alt[1] < err:
            value, err, n_terms, regime = alt
        elif alt[0] is None and regime == "asymptotic" and r <= 40.0:
            try:
                value, err, n_terms = _ml_series(gamma, z, tol)
                regime = "series"
            except ConvergenceFailure:
                pass
    if err > max(tol, 1e-6):
        raise ConvergenceFailure(
            f"Mittag-Leffler at z={z}, gamma={gamma}: best relative error {err:.2e}"
        )
    return MittagLefflerResult(value, regime, err, n_terms)


# ---------------------------------------------------------------------------
# Green's function of the subdiffusion equation


@dataclass(frozen=True)
class GreenResult:
    value: float
    error_bound: float   # absolute
    regime: str
    terms: int


_GREEN_MAX_TERMS = 100_000
_GREEN_MAX_DPS = 300


def _green_series_float(mu: float, xi: float, tol: float):
    total = complex(rgamma(1.0 - mu))
    p = 1.0
    max_mag = abs(total)
    small_streak = 0
    n = 0
    for n in range(1, _GREEN_MAX_TERMS):
        p *= xi / n
        term = ((-1) ** n) * p * rgamma(1.0 - mu - mu * n).real
        total += term
        mag = abs(term)
        max_mag = max(max_mag, mag)
        if mag <= tol * max(abs(total), 1e-300) and n > xi:
            small_streak += 1
            if small_streak >= 3:
                break
        else:
            small_streak = 0
    cancellation = max_mag / max(abs(total), 1e-300)
    rel_err = cancellation * 2.2e-16 + tol
    return total.real, rel_err, n, cancellation


def _green_series_mp(mu: float, xi: float, tol: float, dps: int):
    with mpmath.workdps(dps):
        total = mpmath.rgamma(1 - mu)
        p = mpmath.mpf(1)
        small_streak = 0
        n = 0
        for n in range(1, _GREEN_MAX_TERMS):
            p *= mpmath.mpf(xi) / n
            term = (-1) ** n * p * mpmath.rgamma(1 - mu - mu * n)
            total += term
            if abs(term) <= tol * max(abs(total), mpmath.mpf("1e-300")) and n > xi:
                small_streak += 1
                if small_streak >= 3:
                    break
            else:
                small_streak = 0
        return float(total), n


def green_subdiffusion(
    x: float,
    t: float,
    d: float,
    gamma: float,
    tol: float = 1e-12,
    use_asymptote: bool = False,
) -> GreenResult:
    """Green's function of the scalar subdiffusion equation at ``(x, t)``.

    Evaluates the Wright-type series in the similarity variable
    ``xi = |x| / sqrt(d t**gamma)``; positive for all inputs.  For ``xi``
    beyond the series-safe range pass ``use_asymptote=True`` to switch to
    the stretched-exponential far-field form.
    """
    if t <= 0:
        raise ValueError("t must be positive")
    if d <= 0:
        raise ValueError("d must be positive")
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    mu = gamma / 2.0
    xi = abs(x) / math.sqrt(d * t ** gamma)
    prefactor = 1.0 / math.sqrt(4.0 * d * t ** gamma)

    if use_asymptote:
        if xi < 1.0:
            raise ValueError("far-field asymptote needs xi = |x|/sqrt(d t^gamma) >= 1")
        a0 = 1.0 / (math.sqrt(2.0 * math.pi) * (1.0 - mu) ** mu * mu ** (2.0 * mu - 1.0))
        y = (1.0 - mu) * (mu ** mu * xi) ** (1.0 / (1.0 - mu))
        value = prefactor * a0 * y ** (mu - 0.5) * math.exp(-y)
        return GreenResult(value, abs(value) / y, "asymptotic", 0)

    if xi > 40.0:
        raise ConvergenceFailure(
            f"xi={xi:.3g} beyond series-safe range; use use_asymptote=True"
        )
    total, rel_err, n, cancellation = _green_series_float(mu, xi, tol)
    if rel_err > tol and cancellation > 10.0:
        dps = 25 + int(math.log10(cancellation))
        if dps > _GREEN_MAX_DPS:
            raise ConvergenceFailure(
                f"Wright series needs {dps} digits at xi={xi:.3g}"
            )
        total, n = _green_series_mp(mu, xi, tol, dps)
        rel_err = tol
    value = prefactor * total
    return GreenResult(value, abs(value) * rel_err, "series", n)
