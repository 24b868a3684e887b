"""Planar stable-process kernels: the free transition density and closed forms for balls."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ParameterError, QuadratureError
from .special import (
    AlphaParams,
    check_alpha,
    green_const,
    jump_constant,
    m_const_closed_form,
    poisson_const,
)

DENSITY_TOL = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(24)
_GL_NODES_LO, _GL_WEIGHTS_LO = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class BallSpec:
    center: tuple = (0.0, 0.0)
    radius: float = 1.0

    def __post_init__(self):
        c = tuple(float(v) for v in np.ravel(self.center))
        if len(c) != 2:
            raise ParameterError("ball centre must be a planar point")
        object.__setattr__(self, "center", c)
        if not float(self.radius) > 0:
            raise ParameterError("ball radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def offset(self, point):
        return np.asarray(point, dtype=float) - np.asarray(self.center)


def _params(params):
    if isinstance(params, AlphaParams):
        if params.d != 2:
            raise ParameterError("kernels are planar")
        return params.alpha
    return check_alpha(params, allow_two=True)


# ---------------------------------------------------------------------------
# free density
# ---------------------------------------------------------------------------

def _series_density(r, alpha, kmax=400):
    """Large-|x| expansion of p_1; convergent for alpha < 1, asymptotic otherwise.

    Returns (value, error estimate).  The estimate covers truncation and the
    rounding lost to cancellation among the largest terms.
    """
    total, peak, prev = 0.0, 0.0, math.inf
    log_r, log2 = math.log(r), math.log(2.0)
    for k in range(1, kmax + 1):
        ka = k * alpha
        log_mag = 2 * special.gammaln(ka / 2 + 1) - special.gammaln(k + 1) + ka * log2 - (ka + 2) * log_r
        if log_mag > 700:
            return math.nan, math.inf
        mag = math.exp(log_mag) / math.pi**2
        if alpha >= 1 and mag > prev:
            # asymptotic: stop at the smallest term
            return total, prev + 1e-16 * k * peak
        total += (-1) ** (k + 1) * math.sin(k * math.pi * alpha / 2) * mag
        peak = max(peak, mag)
        if mag < 1e-17 * abs(total) and k * alpha > 2:
            return total, mag + 1e-16 * k * peak
        prev = mag
    return total, math.inf


def _origin_series(r, alpha, mmax=200):
    """Small-|x| expansion from the power series of J0; asymptotic for alpha < 1."""
    total, peak, prev = 0.0, 0.0, math.inf
    log_half_r = math.log(r / 2)
    for m in range(mmax):
        log_mag = 2 * m * log_half_r - 2 * special.gammaln(m + 1) + special.gammaln((2 * m + 2) / alpha)
        mag = math.exp(log_mag) / (2 * math.pi * alpha)
        if mag > prev:
            return total, prev + 1e-16 * m * peak
        total += (-1) ** m * mag
        peak = max(peak, mag)
        if mag < 1e-17 * abs(total):
            return total, mag + 1e-16 * m * peak
        prev = mag
    return total, math.inf


_MAX_PANELS = 200_000


def _panel_density(r, alpha):
    """(2 pi alpha)^-1 int_0^inf exp(-u) J0(r u^(1/alpha)) u^(2/alpha - 1) du by panel Gauss.

    The substitution u = rho^alpha keeps the range short for small alpha; the
    cut u_max leaves a relative tail below 1e-18.  Panel edges sit at unit
    steps and at the points where r rho crosses a multiple of pi.  The first
    panel (power cusp at 0) goes to adaptive quadrature, the rest to 24-point
    Gauss; a 16-point rerun gives the error estimate.
    """
    shape = 2.0 / alpha
    u_max = float(special.gammainccinv(shape, 1e-18))
    n_osc = r * u_max ** (1 / alpha) / math.pi
    if n_osc + u_max > _MAX_PANELS:
        return math.nan, math.inf
    edges = np.arange(0.0, u_max, 0.5)
    if n_osc >= 1:
        edges = np.union1d(edges, (np.arange(1, int(n_osc) + 1) * math.pi / r) ** alpha)
    edges = np.append(edges[edges < u_max], u_max)
    log_norm = -special.gammaln(shape)

    def f(u):
        # scaled by 1/Gamma(2/alpha) so the integrand peaks near 1
        with np.errstate(divide="ignore"):
            w = np.exp((shape - 1) * np.log(u) - u + log_norm)
        return w * special.j0(r * u ** (1 / alpha))

    head, head_err = integrate.quad(f, 0.0, edges[1], epsabs=1e-17, epsrel=1e-13, limit=200)
    lo, hi = edges[1:-1], edges[2:]
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)

    def panels(nodes, weights):
        x = mid[:, None] + half[:, None] * nodes[None, :]
        return float(np.sum(half[:, None] * weights[None, :] * f(x)))

    body = panels(_GL_NODES, _GL_WEIGHTS)
    err = abs(body - panels(_GL_NODES_LO, _GL_WEIGHTS_LO)) + head_err
    scale = m_const_closed_form(alpha)
    return scale * (head + body), scale * err


def unit_time_density(r, alpha, tol=DENSITY_TOL):
    """p_1 at distance r >= 0 from the origin.

    Tries the two series first and falls back to panel quadrature; the
    accepted value has estimated error below tol * max(1, p_1(r)).
    """
    if alpha == 2.0:
        return math.exp(-r * r / 4) / (4 * math.pi)
    if r < 1e-100:
        # p_1(r) = M (1 - O(r^2)); the correction is far below double precision here
        return m_const_closed_form(alpha)
    best = math.nan, math.inf
    for method in (_series_density, _origin_series, _panel_density):
        if method is _series_density and alpha >= 1 and r**alpha <= 4.0:
            continue
        value, err = method(r, alpha)
        if err < best[1]:
            best = value, err
        if err < 1e-3 * tol * max(1.0, abs(value)):
            return value
    value, err = best
    if not err < tol * max(1.0, abs(value)):
        raise QuadratureError(f"density quadrature error {err:.2e} at r = {r}", estimate=err)
    return value


def free_density(params, t, x):
    """Transition density p_t(x) of the isotropic stable process started at 0.

    Uses p_t(x) = t^{-2/alpha} p_1(t^{-1/alpha} x); alpha = 2 gives the
    Gaussian (4 pi t)^-1 exp(-|x|^2/(4t)).
    """
    alpha = _params(params)
    t = float(t)
    if not t > 0:
        raise ParameterError("t must be positive")
    r = float(np.hypot(*np.asarray(x, dtype=float)))
    if alpha == 2.0:
        return math.exp(-r * r / (4 * t)) / (4 * math.pi * t)
    scale = t ** (-1.0 / alpha)
    return scale**2 * unit_time_density(r * scale, alpha)


def small_time_ratio(params, t, x, y):
    """p(t, x, y) / t; tends to A_{2,-alpha} |x - y|^{-2-alpha} as t -> 0."""
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    if not np.any(diff):
        raise ParameterError("x and y must differ")
    return free_density(params, t, diff) / float(t)


def levy_density(alpha, r):
    return jump_constant(alpha) * r ** (-2.0 - alpha)


# ---------------------------------------------------------------------------
# ball kernels
# ---------------------------------------------------------------------------

def poisson_kernel(ball, alpha, z, y):
    """Exit-position density from the ball, started at z, evaluated at y outside."""
    alpha = check_alpha(alpha)
    r = ball.radius
    zc, yc = ball.offset(z), ball.offset(y)
    s2, q2 = float(zc @ zc), float(yc @ yc)
    if not s2 < r * r:
        raise ParameterError("z must lie inside the ball")
    if not q2 > r * r:
        raise ParameterError("y must lie strictly outside the ball")
    dist2 = float(np.sum((yc - zc) ** 2))
    return poisson_const(2, alpha) * ((r * r - s2) / (q2 - r * r)) ** (alpha / 2) / dist2


def poisson_mass(ball, alpha, z, rho=(1.0, math.inf), theta=(0.0, 2 * math.pi), epsrel=1e-10):
    """Integral of the Poisson kernel over {rho0 < |y - c| < rho1, theta0 < arg < theta1}.

    Radii are in units of the ball radius.  The angular integral is done in
    closed form; the radial one by quadrature with the (rho - r)^{-alpha/2}
    endpoint singularity handled by an algebraic weight.
    """
    alpha = check_alpha(alpha)
    r = ball.radius
    zc = ball.offset(z)
    s = float(np.hypot(*zc))
    if not s < r:
        raise ParameterError("z must lie inside the ball")
    psi = math.atan2(zc[1], zc[0]) if s > 0 else 0.0
    r0, r1 = rho[0] * r, rho[1] * r
    if r0 < r:
        raise ParameterError("shells must lie outside the ball")
    c = poisson_const(2, alpha) * (r * r - s * s) ** (alpha / 2)

    def angular(q):
        # int dtheta / (q^2 + s^2 - 2 q s cos(theta - psi)) over the sector
        A, B = q * q + s * s, 2 * q * s
        root = math.sqrt((A - B) * (A + B))
        k = math.sqrt((A + B) / (A - B))

        def prim(th):
            u = th - psi
            turns = math.floor((u + math.pi) / (2 * math.pi))
            v = u - 2 * math.pi * turns
            return (2 / root) * math.atan(k * math.tan(v / 2)) + turns * 2 * math.pi / root

        return prim(theta[1]) - prim(theta[0])

    def radial(q):
        return c * q * angular(q) * (q + r) ** (-alpha / 2)

    total = 0.0
    if r0 == r:
        top = min(r1, 2 * r)
        val, err = integrate.quad(radial, r, top, weight="alg", wvar=(-alpha / 2, 0.0),
                                  epsabs=0.0, epsrel=epsrel, limit=200)
        total += val
        r0 = top
    if r1 > r0:
        val, err = integrate.quad(lambda q: radial(q) * (q - r) ** (-alpha / 2), r0, r1,
                                  epsabs=0.0, epsrel=epsrel, limit=200)
        total += val
    return total


def green_unit_ball(alpha, z, y):
    """Green function of the unit disk."""
    alpha = check_alpha(alpha)
    z, y = np.asarray(z, dtype=float), np.asarray(y, dtype=float)
    z2, y2 = float(z @ z), float(y @ y)
    if not (z2 < 1 and y2 < 1):
        raise ParameterError("points must lie in the open unit disk")
    dist2 = float(np.sum((z - y) ** 2))
    if dist2 == 0:
        raise ParameterError("Green function is singular at z = y")
    w = (1 - z2) * (1 - y2) / dist2
    inner, err = integrate.quad(
        lambda r: (r + 1.0) ** -1, 0.0, w, weight="alg", wvar=(alpha / 2 - 1, 0.0),
        epsabs=0.0, epsrel=1e-12, limit=200,
    )
    return green_const(2, alpha) * dist2 ** (-(2 - alpha) / 2) * inner


def green_unit_ball_array(alpha, Z, Y):
    """Vectorised Green function of the unit disk for broadcastable point arrays (..., 2).

    The inner integral is pi / sin(pi s) * I_{w/(1+w)}(s, 1 - s) with s = alpha/2.
    """
    alpha = check_alpha(alpha)
    Z, Y = np.asarray(Z, dtype=float), np.asarray(Y, dtype=float)
    z2, y2 = np.sum(Z * Z, axis=-1), np.sum(Y * Y, axis=-1)
    if np.any(z2 >= 1) or np.any(y2 >= 1):
        raise ParameterError("points must lie in the open unit disk")
    dist2 = np.sum((Z - Y) ** 2, axis=-1)
    if np.any(dist2 == 0):
        raise ParameterError("Green function is singular at z = y")
    w = (1 - z2) * (1 - y2) / dist2
    s = alpha / 2
    inner = math.pi / math.sin(math.pi * s) * special.betainc(s, 1 - s, w / (1 + w))
    return green_const(2, alpha) * dist2 ** (-(2 - alpha) / 2) * inner


def expected_exit_time(alpha, ball, y):
    """Mean exit time from the ball started at y (zero on the boundary)."""
    alpha = check_alpha(alpha)
    yc = ball.offset(y)
    gap = ball.radius**2 - float(yc @ yc)
    if gap < -1e-12 * ball.radius**2:
        raise ParameterError("start point outside the ball")
    return poisson_const(2, alpha) / jump_constant(alpha) * max(gap, 0.0) ** (alpha / 2)
