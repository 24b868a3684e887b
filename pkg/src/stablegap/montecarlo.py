"""Monte Carlo exit problems for the planar isotropic stable process.

Increments are drawn by subordination: X = sqrt(2 S) Z with Z a standard
planar Gaussian and S a positive (alpha/2)-stable variable with Laplace
transform exp(-lambda^(alpha/2)), so that E exp(i xi X) = exp(-|xi|^alpha).
S comes from Kanter's representation.  Paths are advanced on a fixed time
grid and stopped at the first grid time outside the ball.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, StepCapError
from .special import check_alpha

#: Variance factor of the Gaussian given the subordinator: Cov(X | S) = 2 S I.
#: Checked against the characteristic function in the test suite.
SUBORDINATION_SCALE = 2.0

DEFAULT_SHELLS = (1.0, 1.25, 1.5, 2.0, math.inf)


@dataclass(frozen=True)
class PathConfig:
    alpha: float
    dt: float = 1e-3
    step_cap: int = 200_000
    seed: int = 0
    workers: int = 1
    processes: int = 1
    chunk: int = 1 << 16

    def __post_init__(self):
        check_alpha(self.alpha)
        if not self.dt > 0:
            raise ParameterError("dt must be positive")
        if self.workers < 1 or self.step_cap < 1:
            raise ParameterError("workers and step_cap must be positive")


def rng_for(seed, *keys):
    """Counter-based stream for (seed, keys...)."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


def positive_stable(a, size, rng):
    """Kanter's sampler: Laplace transform exp(-lambda^a), 0 < a < 1."""
    U = rng.uniform(0.0, math.pi, size)
    E = rng.standard_exponential(size)
    return (np.sin(a * U) / np.sin(U) ** (1.0 / a)) * (np.sin((1.0 - a) * U) / E) ** ((1.0 - a) / a)


def sample_increment(alpha, dt, rng, size=None):
    """Isotropic alpha-stable increments over time dt: shape (2,) or (size, 2)."""
    alpha = check_alpha(alpha)
    if not dt > 0:
        raise ParameterError("dt must be positive")
    n = 1 if size is None else int(size)
    S = positive_stable(alpha / 2.0, n, rng) * dt ** (2.0 / alpha)
    Z = rng.standard_normal((n, 2))
    X = np.sqrt(SUBORDINATION_SCALE * S)[:, None] * Z
    return X[0] if size is None else X


@dataclass
class CharacteristicCheck:
    xi: tuple
    dt: float
    n: int
    value: float  # real part; the imaginary part vanishes by symmetry
    stderr: float
    target: float

    def passed(self, sigmas=3.0):
        return abs(self.value - self.target) < sigmas * self.stderr

    def to_dict(self):
        return {"xi": list(self.xi), "dt": self.dt, "n": self.n, "value": self.value,
                "stderr": self.stderr, "target": self.target, "passed": self.passed(),
                "provenance": "mc-estimate"}


def empirical_cf(alpha, dt=1.0, xi=(1.0, 0.0), n=1_000_000, seed=0, chunk=1 << 18):
    """Mean of cos(xi . X_dt) against exp(-dt |xi|^alpha)."""
    rng = rng_for(seed, 0, 99)
    xi_arr = np.asarray(xi, dtype=float)
    s1 = s2 = 0.0
    for lo in range(0, n, chunk):
        c = np.cos(sample_increment(alpha, dt, rng, min(chunk, n - lo)) @ xi_arr)
        s1 += float(c.sum())
        s2 += float((c * c).sum())
    mean = s1 / n
    var = max(s2 / n - mean * mean, 0.0)
    target = math.exp(-dt * float(np.hypot(*xi_arr)) ** alpha)
    return CharacteristicCheck(tuple(float(v) for v in xi_arr), dt, n, mean, math.sqrt(var / n), target)


@dataclass
class ExitStats:
    n: int
    dt: float
    mean: float
    stderr: float
    shells: tuple = DEFAULT_SHELLS
    sectors: int = 8
    counts: np.ndarray = None  # (len(shells) - 1, sectors)
    max_steps: int = 0

    @property
    def probabilities(self):
        return self.counts / self.n

    @property
    def prob_stderr(self):
        p = self.probabilities
        return np.sqrt(p * (1 - p) / self.n)

    def to_dict(self):
        return {
            "n": self.n, "dt": self.dt, "mean": self.mean, "stderr": self.stderr,
            "shells": [s if math.isfinite(s) else "inf" for s in self.shells],
            "sectors": self.sectors, "counts": self.counts.tolist(),
            "max_steps": self.max_steps, "provenance": "mc-estimate",
        }


@dataclass
class _Partial:
    n: int = 0
    s1: float = 0.0
    s2: float = 0.0
    counts: np.ndarray = None
    max_steps: int = 0

    def merge(self, other):
        self.n += other.n
        self.s1 += other.s1
        self.s2 += other.s2
        self.counts = other.counts if self.counts is None else self.counts + other.counts
        self.max_steps = max(self.max_steps, other.max_steps)
        return self


def _bin(offsets, radius, shells, sectors):
    rho = np.hypot(offsets[:, 0], offsets[:, 1]) / radius
    ang = np.mod(np.arctan2(offsets[:, 1], offsets[:, 0]), 2 * math.pi)
    si = np.clip(np.searchsorted(shells, rho, side="right") - 1, 0, len(shells) - 2)
    ai = np.minimum((ang / (2 * math.pi / sectors)).astype(int), sectors - 1)
    counts = np.zeros((len(shells) - 1, sectors), dtype=np.int64)
    np.add.at(counts, (si, ai), 1)
    return counts


def _run_chunk(n, start, ball, cfg, rng, shells, sectors):
    center = np.asarray(ball.center)
    r2 = ball.radius**2
    pos = np.tile(np.asarray(start, dtype=float) - center, (n, 1))
    alive = np.arange(n)
    steps = np.zeros(n, dtype=np.int64)
    exit_off = np.empty((n, 2))
    # a start on or outside the boundary exits at time 0
    out = np.sum(pos * pos, axis=1) >= r2
    exit_off[out] = pos[out]
    alive = alive[~out]
    k = 0
    while alive.size:
        if k >= cfg.step_cap:
            raise StepCapError(f"{alive.size} paths still inside after {cfg.step_cap} steps")
        k += 1
        pos[alive] += sample_increment(cfg.alpha, cfg.dt, rng, alive.size)
        p = pos[alive]
        gone = np.sum(p * p, axis=1) >= r2
        if gone.any():
            idx = alive[gone]
            steps[idx] = k
            exit_off[idx] = pos[idx]
            alive = alive[~gone]
    times = steps * cfg.dt
    return _Partial(n, float(times.sum()), float((times * times).sum()),
                    _bin(exit_off, ball.radius, shells, sectors), int(steps.max(initial=0)))


def _run_worker(args):
    worker, n, start, ball, cfg, shells, sectors, level = args
    rng = rng_for(cfg.seed, worker, level)
    acc = _Partial()
    for lo in range(0, n, cfg.chunk):
        acc.merge(_run_chunk(min(cfg.chunk, n - lo), start, ball, cfg, rng, shells, sectors))
    return acc


def simulate_exits(ball, start, n, config, shells=DEFAULT_SHELLS, sectors=8, level=0):
    """Run n paths split over ``config.workers`` streams; deterministic in (seed, workers)."""
    if n < 2:
        raise ParameterError("need at least two paths")
    shells = tuple(float(s) for s in shells)
    if shells[0] != 1.0 or any(b <= a for a, b in zip(shells, shells[1:])):
        raise ParameterError("shell radii must start at 1 and increase")
    W = config.workers
    sizes = [n // W + (w < n % W) for w in range(W)]
    jobs = [(w, sizes[w], tuple(start), ball, config, shells, sectors, level) for w in range(W)]
    if config.processes > 1 and W > 1:
        with ProcessPoolExecutor(config.processes) as pool:
            parts = list(pool.map(_run_worker, jobs))
    else:
        parts = [_run_worker(j) for j in jobs]
    acc = _Partial()
    for p in parts:  # fixed order keeps the reduction bitwise reproducible
        acc.merge(p)
    mean = acc.s1 / acc.n
    var = max(acc.s2 / acc.n - mean * mean, 0.0) * acc.n / (acc.n - 1)
    return ExitStats(acc.n, config.dt, mean, math.sqrt(var / acc.n), shells, sectors,
                     acc.counts, acc.max_steps)


@dataclass
class ExitTimeEstimate:
    coarse: ExitStats
    fine: ExitStats
    value: float
    stderr: float
    bias_estimate: float  # coarse - fine

    def to_dict(self):
        return {"coarse": self.coarse.to_dict(), "fine": self.fine.to_dict(),
                "value": self.value, "stderr": self.stderr,
                "bias_estimate": self.bias_estimate, "provenance": "mc-estimate"}


def exit_time_mc(ball, alpha, start, config, n, refine=4):
    """Mean exit time at dt and dt/refine, linearly extrapolated to dt -> 0.

    ``config.dt`` is the fine step; the coarse run uses refine * dt.
    """
    cfg = replace(config, alpha=alpha)
    coarse = simulate_exits(ball, start, n, replace(cfg, dt=cfg.dt * refine), level=1)
    fine = simulate_exits(ball, start, n, cfg, level=0)
    value = fine.mean - (coarse.mean - fine.mean) / (refine - 1)
    c = 1.0 / (refine - 1)
    stderr = math.sqrt(((1 + c) * fine.stderr) ** 2 + (c * coarse.stderr) ** 2)
    return ExitTimeEstimate(coarse, fine, value, stderr, coarse.mean - fine.mean)


def exit_position_mc(ball, alpha, start, config, n, shells=DEFAULT_SHELLS, sectors=8):
    return simulate_exits(ball, start, n, replace(config, alpha=alpha), shells, sectors)


def binned_poisson_mass(ball, alpha, start, shells=DEFAULT_SHELLS, sectors=8):
    """Poisson-kernel quadrature over the same (shell, sector) bins as ExitStats."""
    from .kernels import poisson_mass

    out = np.zeros((len(shells) - 1, sectors))
    width = 2 * math.pi / sectors
    for i, (r0, r1) in enumerate(zip(shells, shells[1:])):
        for j in range(sectors):
            out[i, j] = poisson_mass(ball, alpha, start, (r0, r1), (j * width, (j + 1) * width))
    return out


#: Lower bound for the exit probability into the near half-annulus sector.
SECTOR_THRESHOLD = 0.25 - 1.0 / (2.0 * math.pi * math.sqrt(3.0))


@dataclass
class SectorEstimate:
    probability: float
    stderr: float
    quadrature: float
    upper_half: float
    lower_half: float
    sector_total: float  # both radial pieces of the quarter-turn sector

    @property
    def threshold(self):
        return SECTOR_THRESHOLD

    def passed(self):
        return self.probability >= SECTOR_THRESHOLD - 3 * self.stderr


def sector_exit_probability(ball, alpha, n, config=None):
    """P(exit into {r < rho < 2r, 3pi/4 < angle < 5pi/4}) started at the centre."""
    from .kernels import poisson_mass

    config = config or PathConfig(alpha)
    stats = exit_position_mc(ball, alpha, ball.center, config, n,
                             shells=(1.0, 2.0, math.inf), sectors=8)
    c = stats.counts
    upper, lower = c[0, 3] / stats.n, c[0, 4] / stats.n
    p = upper + lower
    quad = poisson_mass(ball, alpha, ball.center, (1.0, 2.0), (0.75 * math.pi, 1.25 * math.pi))
    return SectorEstimate(p, math.sqrt(p * (1 - p) / stats.n), quad, upper, lower,
                          (c[0, 3] + c[0, 4] + c[1, 3] + c[1, 4]) / stats.n)
