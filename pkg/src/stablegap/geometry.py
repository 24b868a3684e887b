"""Planar domains symmetric about both axes, and their uniform cell meshes.

Domains know how to answer three questions: membership (open set),
distance to the boundary along a ray (used for killing rates) and their
gross geometry (inradius, diameter, bounding rectangle).  Rectangles,
diamonds and tabulated profiles are convex polygons; ellipses (disks) and
stadiums have curved boundaries.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .errors import ParameterError

PROFILE_TOL = 1e-9


class Domain:
    """Interface shared by every domain type."""

    kind = "domain"
    a: float
    b: float

    # -- to be provided by subclasses -------------------------------------
    def profile(self, x1):
        """Upper boundary height r(|x1|) on [0, a]."""
        raise NotImplementedError

    def ray_distance(self, points, angles):
        """Distance from interior ``points`` (n, 2) to the boundary along ``angles``.

        Broadcasts ``points[:, None]`` against ``angles[None, :]`` when both
        are arrays; returns shape (n, m).
        """
        raise NotImplementedError

    def polygon(self):
        """Counter-clockwise vertex array for polygonal domains, else None."""
        return None

    def to_dict(self):
        raise NotImplementedError

    # -- shared behaviour --------------------------------------------------
    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        x1 = np.abs(pts[..., 0])
        x2 = np.abs(pts[..., 1])
        inside = x1 < self.a
        r = np.zeros_like(x1)
        r[inside] = self.profile(x1[inside])
        out = inside & (x2 < r)
        return bool(out) if out.ndim == 0 else out

    def bounding_rectangle(self):
        return Rectangle(self.a, self.b)

    def diameter(self):
        # doubly symmetric: farthest pair is (p, -p) with p on the boundary
        xs = np.linspace(0.0, self.a, 4001)
        rs = self.profile(xs)
        i = int(np.argmax(xs**2 + rs**2))
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
        res = optimize.minimize_scalar(
            lambda t: -(t**2 + float(self.profile(np.array([t]))[0]) ** 2),
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-13},
        )
        return 2.0 * math.sqrt(max(-res.fun, xs[i] ** 2 + rs[i] ** 2))

    def inradius(self):
        """Radius of the largest inscribed disk; centred at the origin by symmetry and convexity."""
        xs = np.linspace(0.0, self.a, 4001)
        rs = self.profile(xs)
        i = int(np.argmin(xs**2 + rs**2))
        lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
        res = optimize.minimize_scalar(
            lambda t: t**2 + float(self.profile(np.array([t]))[0]) ** 2,
            bounds=(lo, hi), method="bounded", options={"xatol": 1e-13},
        )
        return math.sqrt(min(res.fun, xs[i] ** 2 + rs[i] ** 2))

    def scaled(self, beta):
        raise NotImplementedError

    def key(self):
        """Stable hash of the domain description (cache key component)."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def boundary_distance(self, points):
        """Euclidean distance to the boundary (min over ray directions, fine sampling)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        angles = np.linspace(0.0, 2 * np.pi, 721)[:-1]
        return self.ray_distance(pts, angles).min(axis=1)


def _polygon_ray_distance(vertices, points, angles):
    """Exit distance from a convex CCW polygon along each ray."""
    pts = np.atleast_2d(points)
    th = np.atleast_1d(angles)
    ux, uy = np.cos(th)[None, :], np.sin(th)[None, :]
    best = np.full((pts.shape[0], th.shape[0]), np.inf)
    nxt = np.roll(vertices, -1, axis=0)
    for v0, v1 in zip(vertices, nxt):
        e = v1 - v0
        n = np.array([e[1], -e[0]]) / math.hypot(*e)  # outward for CCW
        c = n @ v0
        gap = (c - pts @ n)[:, None]
        nu = n[0] * ux + n[1] * uy
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(nu > 1e-300, gap / nu, np.inf)
        best = np.minimum(best, t)
    return best


@dataclass(frozen=True)
class Rectangle(Domain):
    """(-a, a) x (-b, b) with a >= b; axes are swapped on construction if needed."""

    a: float
    b: float
    kind = "rectangle"

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (a > 0 and b > 0):
            raise ParameterError("rectangle half-widths must be positive")
        if a < b:
            a, b = b, a
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def profile(self, x1):
        return np.full_like(np.asarray(x1, dtype=float), self.b)

    def contains(self, points):
        pts = np.asarray(points, dtype=float)
        out = (np.abs(pts[..., 0]) < self.a) & (np.abs(pts[..., 1]) < self.b)
        return bool(out) if out.ndim == 0 else out

    def polygon(self):
        a, b = self.a, self.b
        return np.array([[a, -b], [a, b], [-a, b], [-a, -b]])

    def ray_distance(self, points, angles):
        return _polygon_ray_distance(self.polygon(), points, angles)

    def inradius(self):
        return self.b

    def diameter(self):
        return 2.0 * math.hypot(self.a, self.b)

    def scaled(self, beta):
        return Rectangle(beta * self.a, beta * self.b)

    def to_dict(self):
        return {"type": "rectangle", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class ProfileDomain(Domain):
    """Convex domain {|x2| < r(|x1|), |x1| < a} with r nonincreasing and concave."""

    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ParameterError("half-widths must be positive")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))

    def validate_profile(self, n=2001):
        xs = np.linspace(0.0, self.a, n)
        rs = self.profile(xs)
        if abs(rs[0] - self.b) > PROFILE_TOL * max(1.0, self.b):
            raise ParameterError("profile must start at r(0) = b")
        if np.any(np.diff(rs) > PROFILE_TOL):
            raise ParameterError("profile must be nonincreasing")
        second = rs[:-2] - 2 * rs[1:-1] + rs[2:]
        if np.any(second > PROFILE_TOL):
            raise ParameterError("profile must be concave")
        return True


@dataclass(frozen=True)
class Ellipse(ProfileDomain):
    kind = "ellipse"

    def __post_init__(self):
        super().__post_init__()

    def profile(self, x1):
        x1 = np.asarray(x1, dtype=float)
        return self.b * np.sqrt(np.clip(1.0 - (x1 / self.a) ** 2, 0.0, None))

    def ray_distance(self, points, angles):
        pts = np.atleast_2d(points)
        th = np.atleast_1d(angles)
        u1 = np.cos(th)[None, :] / self.a
        u2 = np.sin(th)[None, :] / self.b
        p1 = pts[:, 0:1] / self.a
        p2 = pts[:, 1:2] / self.b
        qa = u1**2 + u2**2
        qb = 2 * (p1 * u1 + p2 * u2)
        qc = p1**2 + p2**2 - 1.0  # negative inside
        disc = np.sqrt(qb**2 - 4 * qa * qc)
        # stable positive root of qa t^2 + qb t + qc = 0 with qc < 0
        return np.where(qb >= 0, -2 * qc / (qb + disc), (disc - qb) / (2 * qa))

    def inradius(self):
        return min(self.a, self.b)

    def diameter(self):
        return 2.0 * max(self.a, self.b)

    def scaled(self, beta):
        return Ellipse(beta * self.a, beta * self.b)

    def to_dict(self):
        return {"type": "ellipse", "a": self.a, "b": self.b}


def Disk(radius=1.0):
    return Ellipse(radius, radius)


@dataclass(frozen=True)
class Diamond(ProfileDomain):
    kind = "diamond"

    def profile(self, x1):
        x1 = np.asarray(x1, dtype=float)
        return self.b * np.clip(1.0 - x1 / self.a, 0.0, None)

    def polygon(self):
        a, b = self.a, self.b
        return np.array([[a, 0.0], [0.0, b], [-a, 0.0], [0.0, -b]])

    def ray_distance(self, points, angles):
        return _polygon_ray_distance(self.polygon(), points, angles)

    def inradius(self):
        return self.a * self.b / math.hypot(self.a, self.b)

    def diameter(self):
        return 2.0 * max(self.a, self.b)

    def scaled(self, beta):
        return Diamond(beta * self.a, beta * self.b)

    def to_dict(self):
        return {"type": "diamond", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Stadium(ProfileDomain):
    """Rectangle (-(a-b), a-b) x (-b, b) capped by half-disks of radius b."""

    kind = "stadium"

    def __post_init__(self):
        super().__post_init__()
        if self.a < self.b:
            raise ParameterError("stadium needs a >= b")

    def profile(self, x1):
        x1 = np.asarray(x1, dtype=float)
        c = self.a - self.b
        cap = np.sqrt(np.clip(self.b**2 - (x1 - c) ** 2, 0.0, None))
        return np.where(x1 <= c, self.b, cap)

    def ray_distance(self, points, angles):
        pts = np.atleast_2d(points)
        th = np.atleast_1d(angles)
        u1, u2 = np.cos(th)[None, :], np.sin(th)[None, :]
        p1, p2 = pts[:, 0:1], pts[:, 1:2]
        c, b = self.a - self.b, self.b
        best = np.full(np.broadcast(p1, u1).shape, np.inf)
        with np.errstate(divide="ignore", invalid="ignore"):
            for sgn in (1.0, -1.0):
                # flat sides x2 = +-b with |x1| <= c
                t = np.where(sgn * u2 > 0, (sgn * b - p2) / u2, np.inf)
                ok = np.abs(p1 + t * u1) <= c + 1e-12
                best = np.minimum(best, np.where(ok & (t >= 0), t, np.inf))
                # caps centred at (sgn c, 0), only the outer half counts
                q1 = p1 - sgn * c
                qb = q1 * u1 + p2 * u2
                qc = q1**2 + p2**2 - b * b
                disc = np.sqrt(np.clip(qb**2 - qc, 0.0, None))
                for t in (-qb + disc, -qb - disc):
                    ok = (sgn * (p1 + t * u1 - sgn * c) >= -1e-12) & (t >= 0) & (qb**2 - qc >= 0)
                    best = np.minimum(best, np.where(ok, t, np.inf))
        return best

    def inradius(self):
        return self.b

    def diameter(self):
        return 2.0 * self.a

    def scaled(self, beta):
        return Stadium(beta * self.a, beta * self.b)

    def to_dict(self):
        return {"type": "stadium", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class TableDomain(ProfileDomain):
    """Profile given by tabulated (x1, r) pairs, linearly interpolated.

    Pairs must start at (0, b) and end at (a, r_end); the domain is the
    polygon obtained by reflecting the graph in both axes.
    """

    points: tuple = field(default=())
    kind = "table"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ParameterError("table profile needs at least two (x1, r) pairs")
        if abs(pts[0, 0]) > PROFILE_TOL:
            raise ParameterError("table profile must start at x1 = 0")
        if np.any(np.diff(pts[:, 0]) <= 0):
            raise ParameterError("table abscissae must increase")
        object.__setattr__(self, "points", tuple(map(tuple, pts.tolist())))
        object.__setattr__(self, "a", float(pts[-1, 0]))
        object.__setattr__(self, "b", float(pts[0, 1]))
        super().__post_init__()
        slopes = np.diff(pts[:, 1]) / np.diff(pts[:, 0])
        if np.any(slopes > PROFILE_TOL) or np.any(np.diff(slopes) > PROFILE_TOL):
            raise ParameterError("table profile must be nonincreasing and concave")

    def profile(self, x1):
        pts = np.asarray(self.points)
        return np.interp(np.asarray(x1, dtype=float), pts[:, 0], pts[:, 1])

    def polygon(self):
        pts = np.asarray(self.points)
        q1 = pts[::-1]  # from (a, r_end) back to (0, b)
        upper = np.vstack([q1, pts[1:] * [-1, 1]])  # ... to (-a, r_end)
        lower = upper[::-1] * [1, -1]
        poly = np.vstack([upper, lower])
        # drop zero-length edges (r_end = 0 gives a vertex on the axis twice)
        keep = np.ones(len(poly), bool)
        nxt = np.roll(poly, -1, axis=0)
        keep &= np.hypot(*(nxt - poly).T) > 1e-14
        return poly[keep]

    def ray_distance(self, points, angles):
        return _polygon_ray_distance(self.polygon(), points, angles)

    def scaled(self, beta):
        return TableDomain(beta * self.a, beta * self.b, tuple((beta * x, beta * r) for x, r in self.points))

    def to_dict(self):
        return {"type": "table", "points": [list(p) for p in self.points]}


def domain_from_dict(spec):
    kind = spec.get("type")
    if kind == "rectangle":
        return Rectangle(spec["a"], spec["b"])
    if kind == "ellipse":
        return Ellipse(spec["a"], spec["b"])
    if kind == "disk":
        return Disk(spec.get("r", spec.get("a", 1.0)))
    if kind == "diamond":
        return Diamond(spec["a"], spec["b"])
    if kind == "stadium":
        return Stadium(spec["a"], spec["b"])
    if kind == "table":
        pts = spec["points"]
        return TableDomain(pts[-1][0], pts[0][1], tuple(map(tuple, pts)))
    raise ParameterError(f"unknown domain type {kind!r}")


_SHORT = {"rect": "rectangle", "rectangle": "rectangle", "ellipse": "ellipse",
          "diamond": "diamond", "stadium": "stadium", "disk": "disk"}


def parse_domain(text):
    """Parse ``rect:2,1``, ``ellipse:2,1``, ``disk:1``, a JSON object, or a JSON file path."""
    text = text.strip()
    if text.startswith("{"):
        return domain_from_dict(json.loads(text))
    if ":" in text:
        head, _, args = text.partition(":")
        kind = _SHORT.get(head.lower())
        if kind is None:
            raise ParameterError(f"unknown domain type {head!r}")
        vals = [float(v) for v in args.split(",") if v.strip()]
        if kind == "disk":
            return Disk(vals[0] if vals else 1.0)
        if len(vals) != 2:
            raise ParameterError(f"{kind} needs two half-widths a,b")
        return domain_from_dict({"type": kind, "a": vals[0], "b": vals[1]})
    with open(text) as fh:
        return domain_from_dict(json.load(fh))


@dataclass(frozen=True, eq=False)
class CellGrid:
    """Axis-aligned square cells of side h whose centres lie inside the domain.

    Cell (i, j) has centre ((i + 1/2) h, (j + 1/2) h), so the centre set is
    closed under both axis reflections whenever the domain is.
    """

    h: float
    index: np.ndarray  # (n, 2) integer cell indices
    domain: Domain

    @property
    def centers(self):
        return (self.index + 0.5) * self.h

    @property
    def n(self):
        return len(self.index)

    @property
    def mass(self):
        return self.h * self.h

    def area(self):
        return self.n * self.mass

    def lookup(self):
        return {(int(i), int(j)): k for k, (i, j) in enumerate(self.index)}

    def reflection(self, axis):
        """Permutation p with cell p[k] = mirror image of cell k across ``axis``.

        axis=0 flips x1 (i -> -i-1), axis=1 flips x2.
        """
        table = self.lookup()
        mirrored = self.index.copy()
        mirrored[:, axis] = -mirrored[:, axis] - 1
        try:
            return np.array([table[(int(i), int(j))] for i, j in mirrored])
        except KeyError as exc:
            raise ParameterError("grid is not reflection symmetric") from exc

    def is_symmetric(self):
        try:
            self.reflection(0)
            self.reflection(1)
        except ParameterError:
            return False
        return True

    def nearest(self, point):
        return int(np.argmin(np.sum((self.centers - np.asarray(point)) ** 2, axis=1)))

    def as_image(self, values, fill=np.nan):
        """Scatter a cell vector onto the bounding index box (rows: j, columns: i)."""
        i0, j0 = self.index.min(axis=0)
        i1, j1 = self.index.max(axis=0)
        img = np.full((j1 - j0 + 1, i1 - i0 + 1), fill, dtype=float)
        img[self.index[:, 1] - j0, self.index[:, 0] - i0] = values
        return img


def mesh(domain, h):
    h = float(h)
    if not h > 0:
        raise ParameterError("cell size must be positive")
    ni = int(math.ceil(domain.a / h)) + 1
    nj = int(math.ceil(domain.b / h)) + 1
    ii, jj = np.meshgrid(np.arange(-ni, ni), np.arange(-nj, nj), indexing="ij")
    idx = np.column_stack([ii.ravel(), jj.ravel()])
    keep = domain.contains((idx + 0.5) * h)
    return CellGrid(h, idx[keep], domain)
