"""Grid-line checks of ground-state properties: symmetry, unimodality, pointwise bounds, strip ratios, Harnack, midconcavity."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ParameterError
from .geometry import Rectangle
from .special import check_alpha, harnack_c_h

STRIP_CONSTANT = 1e4
LINE_TOL = 1e-9  # relative to max phi_1


@dataclass
class CheckReport:
    name: str
    passed: bool
    worst: float  # the statistic compared against the limit
    limit: float
    details: dict

    def to_dict(self):
        return asdict(self)


def _lines(grid, axis):
    """Cell-index runs along grid lines parallel to ``axis`` (0: rows along x1), sorted."""
    idx = grid.index
    other = 1 - axis
    order = np.lexsort((idx[:, axis], idx[:, other]))
    keys = idx[order, other]
    cuts = np.flatnonzero(np.diff(keys)) + 1
    return np.split(order, cuts)


def check_symmetry_unimodality(spectrum, tol=LINE_TOL):
    """Reflection defects of phi_1 and counts of monotonicity violations along grid lines."""
    grid = spectrum.grid
    phi = spectrum.phi1
    eps = tol * phi.max()
    sym = {}
    for axis, name in ((0, "x1"), (1, "x2")):
        sym[name] = float(np.abs(phi - phi[grid.reflection(axis)]).max())
    violations = {"rows": 0, "columns": 0}
    for axis, name in ((0, "rows"), (1, "columns")):
        for line in _lines(grid, axis):
            coord = grid.index[line, axis]
            if np.any(np.diff(coord) != 1):
                raise ParameterError("grid line is not contiguous")
            v = phi[line]
            d = np.diff(v)
            left = coord[1:] <= 0  # step from cell k-1 to k lies left of the axis
            violations[name] += int(np.sum(d[left] < -eps) + np.sum(d[~left] > eps))
    total = violations["rows"] + violations["columns"]
    defect = max(sym.values())
    return CheckReport("symmetry_unimodality", total == 0 and defect < 1e-9, float(total), 0.0,
                       {"violations": violations, "symmetry_defect": sym})


def unit_height_view(spectrum):
    """(L, centres, phi) rescaled to (-L, L) x (-1, 1) with unit L^2 norm."""
    dom = spectrum.grid.domain
    if not isinstance(dom, Rectangle):
        raise ParameterError("pointwise bounds are stated for rectangles")
    b = dom.b
    # phi_b(b x) = phi_1(x) / b  in the plane
    return dom.a / b, spectrum.grid.centers / b, spectrum.phi1 * b


def check_phi1_bounds(spectrum):
    """phi_1 <= 3/sqrt(L) everywhere and the product lower bound on the middle half-box."""
    L, x, phi = unit_height_view(spectrum)
    if L < 1:
        raise ParameterError("need a >= b")
    upper = 3.0 / math.sqrt(L)
    mid = (np.abs(x[:, 0]) <= L / 2) & (np.abs(x[:, 1]) <= 0.5)
    lower = (1 - 2 / L * np.abs(x[mid, 0])) * (1 - 2 * np.abs(x[mid, 1])) / (2 * math.sqrt(L))
    up_margin = float(upper - phi.max())
    low_margin = float(np.min(phi[mid] - lower))
    centre = float(phi[spectrum.grid.nearest((0.0, 0.0))])
    return CheckReport(
        "phi1_bounds", up_margin > 0 and low_margin > 0, float(phi.max()), upper,
        {"L": L, "upper_margin": up_margin, "lower_margin": low_margin,
         "centre_value": centre, "centre_range": [1 / (2 * math.sqrt(L)), upper]},
    )


def strip_ratios(spectrum, width=0.125):
    """max_A phi^2 / int_A phi^2 over strips A = [s, s + width] x [-width, width], unit-height scale."""
    L, x, phi = unit_height_view(spectrum)
    h = spectrum.grid.h / spectrum.grid.domain.b
    starts = np.arange(-L + 0.25, L - 0.375 + 1e-12, h)
    out = []
    band = np.abs(x[:, 1]) <= width + 1e-12
    for s in starts:
        sel = band & (x[:, 0] >= s - 1e-12) & (x[:, 0] <= s + width + 1e-12)
        if not sel.any():
            raise ParameterError("strip contains no cells; refine the grid")
        p2 = phi[sel] ** 2
        out.append(p2.max() / (p2.sum() * h * h))
    return starts, np.array(out)


def check_strip_ratio(spectrum, enforce_alpha=True):
    alpha = spectrum.form.alpha
    if enforce_alpha and not 1.0 <= alpha < 2.0:
        raise ParameterError("the strip estimate is stated for alpha in [1, 2)")
    starts, ratios = strip_ratios(spectrum)
    k = int(np.argmax(ratios))
    return CheckReport("strip_ratio", bool(ratios.max() <= STRIP_CONSTANT), float(ratios.max()),
                       STRIP_CONSTANT, {"worst_start": float(starts[k]), "strips": len(ratios),
                                        "min_ratio": float(ratios.min())})


def check_harnack(spectrum, center=(0.0, 0.0), b=0.5):
    """max phi^2(z1)/phi^2(z2) over cells in B(center, b R / 2), R the inradius."""
    if not 0 < b <= 0.5:
        raise ParameterError("b must lie in (0, 1/2]")
    dom = spectrum.grid.domain
    R = dom.inradius()
    centre = np.asarray(center, dtype=float)
    if dom.boundary_distance(centre[None, :])[0] < b * R * (1 - 1e-12):
        raise ParameterError("B(x, bR) is not contained in the domain")
    x = spectrum.grid.centers
    sel = np.hypot(*(x - centre).T) < b * R / 2
    if not sel.any():
        raise ParameterError("ball contains no cells")
    p2 = spectrum.phi1[sel] ** 2
    ratio = float(p2.max() / p2.min())
    c_h = harnack_c_h(check_alpha(spectrum.form.alpha))
    return CheckReport("harnack", ratio <= c_h, ratio, c_h, {"cells": int(sel.sum())})


def check_midconcavity(spectrum, tol=LINE_TOL):
    """Second differences of phi_1 along rows (|x1| < a/2) and columns (|x2| < b/2) are <= tol."""
    grid = spectrum.grid
    dom = grid.domain
    phi = spectrum.phi1
    eps = tol * phi.max()
    worst, count = -math.inf, 0
    for axis, half in ((0, dom.a / 2), (1, dom.b / 2)):
        for line in _lines(grid, axis):
            xs = grid.centers[line, axis]
            v = phi[line]
            d2 = v[2:] - 2 * v[1:-1] + v[:-2]
            inside = (np.abs(xs[:-2]) < half) & (np.abs(xs[2:]) < half)
            if inside.any():
                worst = max(worst, float(d2[inside].max()))
                count += int(np.sum(d2[inside] > eps))
    return CheckReport("midconcavity", count == 0, worst, eps, {"violations": count})
