"""Explicit spectral-gap bounds for rectangles and symmetric convex domains, and the report that checks them.

All bounds are returned for lambda_2 - lambda_1 itself, i.e. the printed
right-hand sides multiplied by A_{2,-alpha} / 2.  Constants are kept exactly
as printed.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field

from .errors import ParameterError
from .geometry import Rectangle
from .operator import assemble
from .spectral import eigenpairs
from .special import check_alpha, convex_gap_constant, jump_constant


def _half_widths(a, b):
    a, b = float(a), float(b)
    if not (a > 0 and b > 0):
        raise ParameterError("half-widths must be positive")
    return max(a, b), min(a, b)


def _to_gap(alpha, value):
    return jump_constant(alpha) / 2.0 * value


def rectangle_upper(a, b, alpha):
    alpha = check_alpha(alpha)
    a, b = _half_widths(a, b)
    if alpha == 1.0:
        case = 2.0 * math.log(1.0 + a / b) * b / a**2
    elif alpha < 1.0:
        case = 2.0 / (1.0 - alpha) * b / a ** (1.0 + alpha)
    else:
        case = (1.0 / (2.0 - alpha) + 1.0 / (alpha - 1.0)) * b ** (2.0 - alpha) / a**2
    return _to_gap(alpha, 1e6 * case)


def rectangle_lower(a, b, alpha):
    alpha = check_alpha(alpha)
    a, b = _half_widths(a, b)
    if alpha == 1.0:
        case = 1e-9 * math.log(1.0 + a / b) * b / a**2
    elif alpha < 1.0:
        case = b / (36.0 * 2.0 ** (1.0 + 2.0 * alpha) * a ** (1.0 + alpha))
    else:
        case = b ** (2.0 - alpha) / (a**2 * 33.0 * 13.0 ** (1.0 + alpha / 2.0) * 1e4)
    return _to_gap(alpha, case)


def universal_lower(a, b, alpha):
    """Lower bound valid for every alpha in (0, 2) on rectangles."""
    alpha = check_alpha(alpha)
    a, b = _half_widths(a, b)
    return _to_gap(alpha, b / (36.0 * 2.0**alpha * (a + b) ** (1.0 + alpha)))


#: Rounded closed forms quoted for three stability indices; each is weaker
#: than (at most) ``universal_lower`` at the same alpha.
PRINTED_UNIVERSAL = {
    0.5: lambda a, b: 8.0 * b / (1e4 * (a + b) ** 1.5),
    1.0: lambda a, b: b / (1e3 * (a + b) ** 2),
    1.5: lambda a, b: 8.0 * b / (1e4 * (a + b) ** 2.5),
}


def convex_symmetric_lower(a, b, alpha):
    """Lower bound for convex domains symmetric in both axes with bounding box [-a,a]x[-b,b]."""
    alpha = check_alpha(alpha)
    a, b = _half_widths(a, b)
    return _to_gap(alpha, convex_gap_constant(alpha) * b ** (2.0 - alpha) / a**2)


# ---------------------------------------------------------------------------
# extrapolation and reports
# ---------------------------------------------------------------------------

def richardson(coarse, fine, ratio=2.0, order=1.0, safety=3.0):
    """Extrapolate two refinements assuming error ~ h^order; returns (value, budget).

    The budget is ``safety`` times the refinement difference.
    """
    diff = fine - coarse
    value = fine + diff / (ratio**order - 1.0)
    return value, safety * abs(diff)


@dataclass
class BoundCheck:
    name: str
    side: str  # "lower" | "upper"
    value: float
    satisfied: bool
    margin: float  # signed distance from the bound to the worst end of the error interval
    provenance: str = "published-bound"


@dataclass
class GapReport:
    domain: dict
    alpha: float
    hs: list
    gaps: list
    lambda1: list
    gap: float
    budget: float
    order: float
    bounds: list = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self):
        return all(b.satisfied for b in self.bounds)

    def bound(self, name):
        return next(b for b in self.bounds if b.name == name)

    def consistent(self):
        """Every applicable lower bound sits below every applicable upper bound."""
        lows = [b.value for b in self.bounds if b.side == "lower"]
        ups = [b.value for b in self.bounds if b.side == "upper"]
        return not lows or not ups or max(lows) <= min(ups)

    def to_dict(self):
        out = asdict(self)
        out["passed"] = self.passed
        out["provenance"] = {"gaps": "computed", "gap": "computed-extrapolated"}
        return out


def _check(name, side, value, gap, budget):
    if side == "lower":
        margin = (gap - budget) - value
    else:
        margin = value - (gap + budget)
    return BoundCheck(name, side, float(value), bool(margin > 0), float(margin))


def applicable_bounds(domain, alpha):
    """(name, side, value) triples that apply to ``domain``."""
    a, b = _half_widths(domain.a, domain.b)
    out = []
    if isinstance(domain, Rectangle):
        out += [
            ("rectangle_lower", "lower", rectangle_lower(a, b, alpha)),
            ("rectangle_upper", "upper", rectangle_upper(a, b, alpha)),
            ("universal_lower", "lower", universal_lower(a, b, alpha)),
        ]
    out.append(("convex_symmetric_lower", "lower", convex_symmetric_lower(a, b, alpha)))
    return out


def refined_gaps(domain, alpha, hs, k=4, **assemble_kw):
    gaps, lam1 = [], []
    for h in hs:
        spec = eigenpairs(assemble(domain, alpha, h, **assemble_kw), k)
        gaps.append(spec.gap)
        lam1.append(float(spec.values[0]))
    return gaps, lam1


def verify_bounds(domain, alpha, h=None, order=1.0, safety=3.0, **assemble_kw):
    """Gap at h and h/2, Richardson-extrapolated, checked against every applicable bound.

    Default h is inradius/8.  A bound passes when the whole interval
    gap +- budget lies on its side.
    """
    alpha = check_alpha(alpha)
    t0 = time.perf_counter()
    h = domain.inradius() / 8.0 if h is None else float(h)
    hs = [h, h / 2.0]
    gaps, lam1 = refined_gaps(domain, alpha, hs, **assemble_kw)
    gap, budget = richardson(gaps[0], gaps[1], order=order, safety=safety)
    report = GapReport(
        domain=domain.to_dict(), alpha=alpha, hs=hs, gaps=gaps, lambda1=lam1,
        gap=gap, budget=budget, order=order,
    )
    report.bounds = [_check(n, s, v, gap, budget) for n, s, v in applicable_bounds(domain, alpha)]
    report.seconds = time.perf_counter() - t0
    return report
