"""Closed-form constants attached to the isotropic alpha-stable process.

Every constant reduces to Gamma-function evaluations, done with
``scipy.special.gamma`` (double precision, ~1e-15 relative on the
arguments used here).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from .errors import ParameterError

#: First Dirichlet-Laplacian eigenvalue of the unit disk, as a rounded literal.
#: The precise value is j_{0,1}^2 = 5.78318596...; the literal is what the
#: bound ``ball_eigenvalue_bound`` is stated with.
MU1_UNIT_DISK = 5.784
MU1_UNIT_DISK_PRECISE = float(special.jn_zeros(0, 1)[0] ** 2)


def check_alpha(alpha, allow_two=False):
    alpha = float(alpha)
    upper_ok = alpha <= 2.0 if allow_two else alpha < 2.0
    if not (alpha > 0.0 and upper_ok and math.isfinite(alpha)):
        rng = "(0, 2]" if allow_two else "(0, 2)"
        raise ParameterError(f"alpha must lie in {rng}, got {alpha!r}")
    return alpha


def check_dim(d):
    if int(d) != d or d < 1:
        raise ParameterError(f"dimension must be a positive integer, got {d!r}")
    return int(d)


@dataclass(frozen=True)
class AlphaParams:
    """Stability index and dimension of the process."""

    alpha: float
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))
        object.__setattr__(self, "d", check_dim(self.d))


def _is_nonpositive_integer(x, tol=1e-14):
    return x <= tol and abs(x - round(x)) <= tol


def stable_constant_A(d, gamma):
    """Return Gamma((d - gamma)/2) / (2^gamma pi^(d/2) |Gamma(gamma/2)|).

    With ``gamma = -alpha`` this is the jump-kernel normalisation of the
    generator, ``A_{d,-alpha} |x - y|^(-d-alpha)``.
    """
    d = check_dim(d)
    gamma = float(gamma)
    if gamma == 0.0:
        raise ParameterError("gamma = 0 is a pole of Gamma(gamma/2)")
    if _is_nonpositive_integer((d - gamma) / 2):
        raise ParameterError(f"(d - gamma)/2 = {(d - gamma) / 2} is a pole of Gamma")
    if _is_nonpositive_integer(gamma / 2):
        raise ParameterError(f"gamma/2 = {gamma / 2} is a pole of Gamma")
    return float(
        special.gamma((d - gamma) / 2)
        / (2.0**gamma * math.pi ** (d / 2) * abs(special.gamma(gamma / 2)))
    )


def jump_constant(alpha, d=2):
    """``A_{d,-alpha}``, the constant in front of the Levy density."""
    return stable_constant_A(d, -check_alpha(alpha))


def jump_constant_alternate(alpha):
    """Planar ``A_{2,-alpha}`` from the product form ``2/A = alpha^-2 2^(3-alpha) pi Gamma(1-alpha/2)/Gamma(alpha/2)``."""
    alpha = check_alpha(alpha)
    two_over_a = (
        alpha**-2 * 2.0 ** (3 - alpha) * math.pi
        * special.gamma(1 - alpha / 2) / special.gamma(alpha / 2)
    )
    return 2.0 / two_over_a


def m_const(d, alpha):
    """(2 pi)^-d times the integral of exp(-|x|^alpha) over R^d, by radial quadrature.

    Equals the on-diagonal value p_1(0) of the transition density.
    """
    d = check_dim(d)
    if d not in (1, 2):
        raise ParameterError("m_const is implemented for d in {1, 2}")
    alpha = check_alpha(alpha, allow_two=True)

    # r = exp(s): integrand exp(d s - e^{alpha s}) is a smooth bump peaking at
    # s* = log(d/alpha)/alpha; factor the peak out to avoid overflow.
    s_peak = math.log(d / alpha) / alpha
    log_peak = d * s_peak - d / alpha

    def bump(s):
        return math.exp(d * s - math.exp(alpha * s) - log_peak)

    def log_bump(s):
        return d * s - math.exp(alpha * s) - log_peak

    # cut both tails where the integrand has dropped by e^-60 from its peak;
    # small alpha widens the bump to O(alpha^-1/2)
    def cut(direction):
        step = 1.0
        while log_bump(s_peak + direction * step) > -60.0:
            step *= 2.0
        ends = sorted((s_peak, s_peak + direction * step))
        return optimize.brentq(lambda s: log_bump(s) + 60.0, *ends)

    left, right = cut(-1.0), cut(1.0)
    edges = np.linspace(left, right, 17)
    total = sum(
        integrate.quad(bump, lo, hi, epsabs=0.0, epsrel=1e-13, limit=200)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    )
    sphere = 2.0 if d == 1 else 2.0 * math.pi
    return sphere * math.exp(log_peak) * total / (2.0 * math.pi) ** d


def m_const_closed_form(alpha):
    """Planar closed form Gamma(2/alpha) / (2 pi alpha)."""
    alpha = check_alpha(alpha, allow_two=True)
    return float(special.gamma(2.0 / alpha) / (2.0 * math.pi * alpha))


def poisson_const(d, alpha):
    d = check_dim(d)
    alpha = check_alpha(alpha, allow_two=True)
    return float(
        special.gamma(d / 2) * math.pi ** (-d / 2 - 1) * math.sin(math.pi * alpha / 2)
    )


def green_const(d, alpha):
    d = check_dim(d)
    alpha = check_alpha(alpha, allow_two=True)
    return float(
        special.gamma(d / 2)
        / (2.0**alpha * math.pi ** (d / 2) * special.gamma(alpha / 2) ** 2)
    )


def _harnack_bracket(alpha):
    return 4.0 + 12.0 * special.gamma(2.0 / alpha) / (
        alpha * (2.0 - alpha) * (1.0 - 2.0**-alpha) ** (2.0 / alpha)
    )


def harnack_c_h(alpha):
    """Harnack constant for phi_1^2 on half-size concentric balls (planar)."""
    alpha = check_alpha(alpha)
    return float(3.0 ** (4 - alpha) * 2.0 ** (2 * alpha) * _harnack_bracket(alpha) ** 2)


def convex_gap_constant(alpha):
    """Constant C(alpha) of the lower gap bound on doubly symmetric convex domains."""
    alpha = check_alpha(alpha)
    return float(
        1e-9 * 3.0 ** (alpha - 4) * 2.0 ** (-2 * alpha - 1) * _harnack_bracket(alpha) ** -2
    )


def ball_eigenvalue_bound(alpha):
    """Upper bound mu_1(B_1)^(alpha/2) on the first eigenvalue of the unit disk."""
    alpha = check_alpha(alpha, allow_two=True)
    return MU1_UNIT_DISK ** (alpha / 2)


def all_constants(alpha, d=2):
    """Every named constant at ``alpha`` as a flat dict (used by the CLI)."""
    alpha = check_alpha(alpha)
    d = check_dim(d)
    out = {
        "alpha": alpha,
        "d": d,
        "A_d_minus_alpha": jump_constant(alpha, d),
        "poisson_const": poisson_const(d, alpha),
        "green_const": green_const(d, alpha),
    }
    if d in (1, 2):
        out["M_d_alpha"] = m_const(d, alpha)
    if d == 2:
        out.update(
            A_alternate_form=jump_constant_alternate(alpha),
            M_closed_form=m_const_closed_form(alpha),
            harnack_c_h=harnack_c_h(alpha),
            convex_gap_constant=convex_gap_constant(alpha),
            ball_eigenvalue_bound=ball_eigenvalue_bound(alpha),
        )
    return out
