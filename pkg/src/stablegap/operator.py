"""Discrete Dirichlet form of the killed stable process on a cell grid.

The form is

    E_h(f, f) = 1/2 sum_{i != j} w_ij (f_i - f_j)^2 + sum_i kappa_i f_i^2 m,

with jump weights w_ij = A_{2,-alpha} h^(2-alpha) T(|i - j|) built from the
cell-pair interaction of |x - y|^(-2-alpha) (midpoint value beyond 3h,
moment-matched or tensor-Gauss weights inside),
killing rates kappa_i = A_{2,-alpha} int_{R^2 \\ D} |c_i - y|^(-2-alpha) dy
(D the domain, or optionally the union of grid cells) and cell mass m = h^2.
The generator acts as (-L f)_i = (K f)_i / m where K is the stiffness
matrix of E_h, so that E_h(f, f) = <-L f, f>_mass.

On a uniform grid the weight depends only on the index offset, so weights
are stored as an offset table and dense matrices are materialised on
demand; large grids apply K matrix-free through an FFT convolution.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy import integrate, signal, special

from .errors import MeshTooCoarseError, ParameterError
from .geometry import CellGrid, mesh
from .special import check_alpha, jump_constant

log = logging.getLogger(__name__)

NEAR_FIELD_RADIUS = 3.0  # in units of h, centre-to-centre
GAUSS_ORDER = 4
DENSE_LIMIT = 6000
CACHE_ENV = "STABLEGAP_CACHE_DIR"


# ---------------------------------------------------------------------------
# pair interactions
# ---------------------------------------------------------------------------

def cell_pair_integral(p, q, alpha, order=GAUSS_ORDER):
    """Tensor Gauss approximation of int_{[0,1]^2} int_{[0,1]^2} |x - y + (p, q)|^(-2-alpha).

    Unit cells; the physical interaction is h^(2-alpha) times this.
    For edge-adjacent cells and alpha >= 1 the exact integral diverges, so
    the fixed-order rule is the definition of the near-field weight rather
    than an approximation of a finite number.
    """
    g, w = np.polynomial.legendre.leggauss(order)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    d1 = (g[:, None] - g[None, :] + p).ravel()
    d2 = (g[:, None] - g[None, :] + q).ravel()
    w2 = np.outer(w, w).ravel()
    r2 = d1[:, None] ** 2 + d2[None, :] ** 2
    return float(np.einsum("i,j,ij->", w2, w2, r2 ** (-(2.0 + alpha) / 2.0)))


@lru_cache(maxsize=64)
def _gauss_near(alpha, order, radius):
    span = int(math.floor(radius))
    out = {}
    for p in range(span + 1):
        for q in range(p, span + 1):
            if 0 < p * p + q * q <= radius * radius:
                out[(p, q)] = cell_pair_integral(p, q, alpha, order)
    return out


def own_cell_moment(alpha):
    """int_{[-1/2,1/2]^2} |z|^(-alpha) dz (integrable singularity at the centre)."""
    val = integrate.quad(lambda t: (2.0 * math.cos(t)) ** (alpha - 2.0), 0.0, math.pi / 4,
                         epsabs=0.0, epsrel=1e-13)[0]
    return 8.0 / (2.0 - alpha) * val


@lru_cache(maxsize=64)
def _moment_near(alpha, radius):
    """Near weights whose second moments reproduce the kernel's.

    Offset (p, q) gets int_{C_pq} |z|^(-alpha) dz / (p^2 + q^2), i.e. the
    cell's share of the second moment of |z|^(-2-alpha); the own cell's share
    goes to the four edge neighbours.  Quadratics are then integrated exactly
    over the near zone, which removes the h^(2-alpha) consistency error.
    """
    g, w = np.polynomial.legendre.leggauss(24)
    g, w = 0.5 * g, 0.5 * w
    own = own_cell_moment(alpha)
    span = int(math.floor(radius))
    out = {}
    for p in range(span + 1):
        for q in range(p, span + 1):
            r2 = p * p + q * q
            if 0 < r2 <= radius * radius:
                z1 = p + g[:, None]
                z2 = q + g[None, :]
                cell = float(np.einsum("i,j,ij->", w, w, (z1**2 + z2**2) ** (-alpha / 2.0)))
                out[(p, q)] = cell / r2 + (own / 4.0 if r2 == 1 else 0.0)
    return out


NEAR_FIELD_RULES = ("moment", "gauss")


def interaction_table(alpha, shape, near_field="moment", order=GAUSS_ORDER,
                      radius=NEAR_FIELD_RADIUS):
    """Unit-cell interaction T[|di|, |dj|] for index offsets up to ``shape``.

    Beyond ``radius`` the midpoint value |(p, q)|^(-2-alpha) is used.  Within
    it, ``near_field`` selects moment-matched weights (default) or the
    order-``order`` tensor Gauss cell-pair rule.  T[0, 0] = 0.
    """
    ni, nj = shape
    p = np.arange(ni, dtype=float)[:, None]
    q = np.arange(nj, dtype=float)[None, :]
    d2 = p * p + q * q
    with np.errstate(divide="ignore"):
        table = np.where(d2 > 0, d2 ** (-(2.0 + alpha) / 2.0), 0.0)
    if near_field == "moment":
        near = _moment_near(alpha, radius)
    elif near_field == "gauss":
        near = _gauss_near(alpha, order, radius)
    else:
        raise ParameterError(f"near_field must be one of {NEAR_FIELD_RULES}")
    for (pp, qq), val in near.items():
        if pp < ni and qq < nj:
            table[pp, qq] = val
        if qq < ni and pp < nj:
            table[qq, pp] = val
    return table


# ---------------------------------------------------------------------------
# killing rates
# ---------------------------------------------------------------------------

def _cos_power_antiderivative(phi, alpha):
    """int_0^phi cos^alpha(t) dt for |phi| < pi/2, via the incomplete beta function."""
    s = np.sin(phi) ** 2
    full = special.beta(0.5, 0.5 * (alpha + 1.0))
    return np.sign(phi) * 0.5 * full * special.betainc(0.5, 0.5 * (alpha + 1.0), s)


def _polygon_angular_integral(vertices, points, alpha):
    """int_0^{2 pi} rho(theta)^(-alpha) d theta exactly, for a convex polygon."""
    total = np.zeros(len(points))
    nxt = np.roll(vertices, -1, axis=0)
    for v0, v1 in zip(vertices, nxt):
        e = v1 - v0
        n = np.array([e[1], -e[0]]) / math.hypot(*e)
        t = np.array([-n[1], n[0]])
        dist = n @ v0 - points @ n
        phi0 = np.arctan2((v0 - points) @ t, dist)
        phi1 = np.arctan2((v1 - points) @ t, dist)
        span = np.abs(_cos_power_antiderivative(phi1, alpha) - _cos_power_antiderivative(phi0, alpha))
        total += dist ** (-alpha) * span
    return total


def _curved_angular_integral(domain, points, alpha, epsrel=1e-11):
    def integrand(theta):
        return domain.ray_distance(points, np.array([theta]))[:, 0] ** (-alpha)

    val, err = integrate.quad_vec(integrand, 0.0, 2.0 * np.pi, epsabs=0.0, epsrel=epsrel,
                                  norm="max", limit=2000)
    return np.asarray(val)


def killing_rate(points, domain, alpha):
    """Jump-out intensity A_{2,-alpha} int_{D^c} |x - y|^(-2-alpha) dy at interior points.

    Uses the ray form (A/alpha) int rho(x, theta)^(-alpha) d theta, valid for
    domains star-shaped about x (every convex domain).  Polygons are
    integrated exactly, curved boundaries adaptively.
    """
    alpha = check_alpha(alpha)
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    scalar = np.ndim(points) == 1
    if not np.all(domain.contains(pts)):
        raise ParameterError("killing rate requested at a point outside the domain")
    reach = domain.boundary_distance(pts)
    if np.any(reach < 1e-12 * domain.diameter()):
        raise ParameterError("point too close to the boundary: killing rate diverges")
    poly = domain.polygon()
    if poly is not None:
        angular = _polygon_angular_integral(poly, pts, alpha)
    else:
        angular = _curved_angular_integral(domain, pts, alpha)
    out = jump_constant(alpha) / alpha * angular
    return float(out[0]) if scalar else out


def _symmetric_killing(grid, alpha):
    """Killing rates on a symmetric grid, evaluated once per first-quadrant cell."""
    idx = grid.index
    rep = np.where(idx < 0, -idx - 1, idx)
    uniq, inverse = np.unique(rep, axis=0, return_inverse=True)
    vals = killing_rate((uniq + 0.5) * grid.h, grid.domain, alpha)
    return np.asarray(vals)[np.asarray(inverse).ravel()]


def _cell_power_integral(p, q, alpha, order, sub=1):
    """int over the unit cell centred at (p, q) of |z|^(-2-alpha), tensor Gauss on sub x sub pieces."""
    g, w = np.polynomial.legendre.leggauss(order)
    offs = (np.arange(sub) + 0.5) / sub - 0.5
    nodes = (offs[:, None] + g[None, :] / (2 * sub)).ravel()
    wts = np.tile(w / (2 * sub), sub)
    z1 = np.asarray(p, dtype=float)[..., None, None] + nodes[:, None]
    z2 = np.asarray(q, dtype=float)[..., None, None] + nodes[None, :]
    return np.einsum("i,j,...ij->...", wts, wts, (z1**2 + z2**2) ** (-(2.0 + alpha) / 2.0))


@lru_cache(maxsize=64)
def _point_cell_near(alpha, span=32):
    p, q = np.meshgrid(np.arange(span + 1), np.arange(span + 1), indexing="ij")
    out = _cell_power_integral(p, q, alpha, 8)
    close = np.maximum(p, q) <= 3
    out[close] = _cell_power_integral(p[close], q[close], alpha, 16, sub=4)
    out[0, 0] = 0.0
    return out


def point_cell_table(alpha, shape):
    """P[|p|, |q|] = int_{cell (p, q)} |z|^(-2-alpha) dz for unit cells seen from the origin.

    Gauss quadrature up to offset 32; beyond, the midpoint value with its
    Laplacian correction.  P[0, 0] = 0.
    """
    ni, nj = shape
    s = 2.0 + alpha
    p = np.arange(ni, dtype=float)[:, None]
    q = np.arange(nj, dtype=float)[None, :]
    d2 = p * p + q * q
    with np.errstate(divide="ignore", invalid="ignore"):
        table = np.where(d2 > 0, d2 ** (-s / 2.0) * (1.0 + s * s / (24.0 * d2)), 0.0)
    near = _point_cell_near(alpha)
    m, n = min(ni, near.shape[0]), min(nj, near.shape[1])
    table[:m, :n] = near[:m, :n]
    return table


def cell_union_killing(grid, alpha, pad=4):
    """Killing rates against the complement of the union of grid cells.

    The complement splits into the outside of a padded index box (exact
    polygon ray form) and the empty cells inside the box (FFT convolution
    with the point-cell table).
    """
    alpha = check_alpha(alpha)
    h = grid.h
    idx = grid.index
    i0, j0 = idx.min(axis=0) - pad
    i1, j1 = idx.max(axis=0) + pad
    ni, nj = i1 - i0 + 1, j1 - j0 + 1
    box = h * np.array([[i1 + 1, j0], [i1 + 1, j1 + 1], [i0, j1 + 1], [i0, j0]], dtype=float)
    outside = _polygon_angular_integral(box, grid.centers, alpha) / alpha
    empty = np.ones((ni, nj))
    empty[idx[:, 0] - i0, idx[:, 1] - j0] = 0.0
    table = point_cell_table(alpha, (ni, nj))
    ki = np.abs(np.arange(-(ni - 1), ni))
    kj = np.abs(np.arange(-(nj - 1), nj))
    conv = signal.fftconvolve(empty, table[ki[:, None], kj[None, :]], mode="same")
    inside = conv[idx[:, 0] - i0, idx[:, 1] - j0] * h ** (-alpha)
    kappa = jump_constant(alpha) * (outside + inside)
    if grid.is_symmetric():
        # average the four mirror images to remove FFT round-off asymmetry
        P1, P2 = grid.reflection(0), grid.reflection(1)
        kappa = 0.25 * (kappa + kappa[P1] + kappa[P2] + kappa[P1][P2])
    return kappa


def _grid_tiles_domain(grid):
    dom = grid.domain
    if type(dom).__name__ != "Rectangle":
        return False
    return abs(grid.area() - 4.0 * dom.a * dom.b) <= 1e-12 * dom.a * dom.b


KILLING_RULES = ("cells", "domain")


# ---------------------------------------------------------------------------
# the form
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class DiscreteForm:
    grid: CellGrid
    alpha: float
    table: np.ndarray  # unit-cell interaction by |offset|
    kappa: np.ndarray  # killing rates (1/time)
    dense_limit: int = DENSE_LIMIT

    def __post_init__(self):
        self._stiffness = None
        self._degree = None

    @property
    def h(self):
        return self.grid.h

    @property
    def n(self):
        return self.grid.n

    @property
    def mass(self):
        return self.grid.mass

    @property
    def weight_scale(self):
        return jump_constant(self.alpha) * self.h ** (2.0 - self.alpha)

    @property
    def is_dense(self):
        return self.n <= self.dense_limit

    def weights(self, rows=None):
        """Dense jump weights w[rows, :] (all rows by default)."""
        idx = self.grid.index
        sel = idx if rows is None else idx[rows]
        di = np.abs(sel[:, None, 0] - idx[None, :, 0])
        dj = np.abs(sel[:, None, 1] - idx[None, :, 1])
        return self.weight_scale * self.table[di, dj]

    def _row_blocks(self, size=512):
        for start in range(0, self.n, size):
            yield np.arange(start, min(start + size, self.n))

    def degree(self):
        """Row sums sum_j w_ij."""
        if self._degree is None:
            if self.is_dense:
                deg = np.empty(self.n)
                for rows in self._row_blocks():
                    deg[rows] = self.weights(rows).sum(axis=1)
            else:
                deg = self._convolve(np.ones(self.n))
            self._degree = deg
        return self._degree

    def diagonal(self):
        """Diagonal of the stiffness matrix."""
        return self.degree() + self.kappa * self.mass

    def stiffness(self):
        """Dense stiffness matrix K with E_h(f, f) = f^T K f (cached)."""
        if self._stiffness is None:
            K = np.empty((self.n, self.n))
            for rows in self._row_blocks():
                K[rows] = -self.weights(rows)
            K[np.diag_indices(self.n)] = self.diagonal()
            self._stiffness = K
        return self._stiffness

    def release(self):
        self._stiffness = None

    def _kernel_image(self):
        i0, j0 = self.grid.index.min(axis=0)
        i1, j1 = self.grid.index.max(axis=0)
        ni, nj = i1 - i0 + 1, j1 - j0 + 1
        ki = np.abs(np.arange(-(ni - 1), ni))
        kj = np.abs(np.arange(-(nj - 1), nj))
        return self.weight_scale * self.table[ki[:, None], kj[None, :]], (i0, j0, ni, nj)

    def _convolve(self, f):
        """W f through an FFT convolution on the bounding index box (f: (n,) or (n, k))."""
        if not hasattr(self, "_kimg"):
            self._kimg = self._kernel_image()
        kern, (i0, j0, ni, nj) = self._kimg
        f = np.asarray(f, dtype=float)
        cols = f.reshape(self.n, -1)
        img = np.zeros((cols.shape[1], ni, nj))
        ii = self.grid.index[:, 0] - i0
        jj = self.grid.index[:, 1] - j0
        img[:, ii, jj] = cols.T
        out = signal.fftconvolve(img, kern[None], mode="same", axes=(1, 2))
        return out[:, ii, jj].T.reshape(f.shape)

    def apply_stiffness(self, f):
        f = np.asarray(f, dtype=float)
        if self._stiffness is not None or (self.is_dense and f.ndim == 2):
            return self.stiffness() @ f
        if self.is_dense and f.ndim == 1:
            out = np.empty(self.n)
            for rows in self._row_blocks():
                out[rows] = self.weights(rows) @ f
            return self.diagonal() * f - out
        diag = self.diagonal() if f.ndim == 1 else self.diagonal()[:, None]
        return diag * f - self._convolve(f)

    def apply_generator(self, f):
        """(-L f)_i = (sum_j w_ij (f_i - f_j) + kappa_i m f_i) / m."""
        return self.apply_stiffness(f) / self.mass

    def energy(self, f):
        """E_h(f, f) computed pairwise (independent of the stiffness assembly)."""
        f = np.asarray(f, dtype=float)
        total = 0.0
        for rows in self._row_blocks():
            diff = f[rows, None] - f[None, :]
            total += 0.5 * np.sum(self.weights(rows) * diff * diff)
        return total + float(np.sum(self.kappa * f * f)) * self.mass

    def inner(self, f, g):
        return float(np.dot(f, g)) * self.mass


def assemble(domain, alpha, h, *, near_field="moment", order=GAUSS_ORDER, killing="domain",
             dense_limit=DENSE_LIMIT, cache_dir=None, check_coarse=True):
    """Assemble the discrete form of the killed alpha-stable process on ``domain``.

    ``killing="domain"`` (default) kills at the true boundary; ``"cells"``
    kills at the boundary of the cell union, so the form is exactly that of
    the staircase domain the grid resolves.  The two coincide when the cells
    tile the domain.
    """
    alpha = check_alpha(alpha)
    h = float(h)
    if killing not in KILLING_RULES:
        raise ParameterError(f"killing must be one of {KILLING_RULES}")
    if check_coarse and h > domain.inradius() / 4.0 * (1 + 1e-12):
        raise MeshTooCoarseError(
            f"h = {h} exceeds inradius/4 = {domain.inradius() / 4.0}"
        )
    cache_dir = cache_dir or os.environ.get(CACHE_ENV)
    path = None
    if cache_dir:
        path = Path(cache_dir) / f"form-{domain.key()}-{alpha!r}-{h!r}-{near_field}{order}-{killing}.npz"
        if path.exists():
            data = np.load(path)
            grid = CellGrid(h, data["index"], domain)
            log.debug("loaded cached form %s", path)
            return DiscreteForm(grid, alpha, data["table"], data["kappa"], dense_limit)
    grid = mesh(domain, h)
    if grid.n == 0:
        raise MeshTooCoarseError("mesh has no cells")
    span = grid.index.max(axis=0) - grid.index.min(axis=0) + 1
    table = interaction_table(alpha, tuple(int(s) for s in span), near_field, order)
    if killing == "domain" or _grid_tiles_domain(grid):
        kappa = _symmetric_killing(grid, alpha)
    else:
        kappa = cell_union_killing(grid, alpha)
    form = DiscreteForm(grid, alpha, table, kappa, dense_limit)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(path, index=grid.index, table=table, kappa=kappa)
    return form
