"""Checkers for the two discrete Poincare-type inequalities over unimodal partitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CenteringError, ParameterError

REL_TOL = 1e-12


@dataclass(frozen=True)
class UnimodalWeights:
    mu: tuple
    mode: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or len(mu) == 0 or np.any(mu <= 0):
            raise ParameterError("weights must be a nonempty sequence of positive numbers")
        k0 = int(self.mode)
        if not 0 <= k0 < len(mu):
            raise ParameterError("mode index out of range")
        if np.any(np.diff(mu[: k0 + 1]) < 0) or np.any(np.diff(mu[k0:]) > 0):
            raise ParameterError("weights are not unimodal about the given mode")
        object.__setattr__(self, "mu", tuple(float(v) for v in mu))
        object.__setattr__(self, "mode", k0)

    @classmethod
    def from_sequence(cls, mu):
        """Infer the mode (first maximum); raises if the sequence is not unimodal."""
        mu = np.asarray(mu, dtype=float)
        return cls(tuple(mu), int(np.argmax(mu)))

    @property
    def array(self):
        return np.asarray(self.mu)

    def __len__(self):
        return len(self.mu)


def center_against(mu, f):
    mu = np.asarray(getattr(mu, "array", mu), dtype=float)
    f = np.asarray(f, dtype=float)
    return f - (mu @ f) / mu.sum()


def check_partition0(mu, f):
    """sum mu f^2 <= L^2 sum (mu_k ^ mu_{k+1}) (f_k - f_{k+1})^2 for centred f."""
    if not isinstance(mu, UnimodalWeights):
        mu = UnimodalWeights.from_sequence(mu)
    m = mu.array
    f = np.asarray(f, dtype=float)
    L = len(m)
    if L < 2 or len(f) != L:
        raise ParameterError("need L >= 2 weights and matching values")
    scale = float(np.abs(f).max() * m.sum())
    if abs(f @ m) > REL_TOL * scale:
        raise CenteringError(f"sum f_k mu_k = {f @ m:.3e} is not zero")
    lhs = float(m @ (f * f))
    rhs = float(L**2 * np.sum(np.minimum(m[:-1], m[1:]) * np.diff(f) ** 2))
    return {"lhs": lhs, "rhs": rhs, "holds": lhs <= rhs * (1 + REL_TOL)}


@dataclass(frozen=True)
class PartitionedSpace:
    """Disjoint blocks of weighted points; block masses must be unimodal."""

    masses: tuple  # tuple of 1-d arrays of point masses, one per block

    def __post_init__(self):
        blocks = tuple(np.asarray(b, dtype=float) for b in self.masses)
        if not blocks or any(b.ndim != 1 or len(b) == 0 or np.any(b <= 0) for b in blocks):
            raise ParameterError("every block needs positive point masses")
        object.__setattr__(self, "masses", blocks)
        UnimodalWeights.from_sequence(self.block_masses)

    @property
    def block_masses(self):
        return np.array([b.sum() for b in self.masses])

    @property
    def L(self):
        return len(self.masses)


def _pair_sum(m1, f1, m2, f2):
    """sum_{x in 1, y in 2} m_x m_y (f_x - f_y)^2 without forming the product grid."""
    c = (m1 @ f1 + m2 @ f2) / (m1.sum() + m2.sum())
    g1, g2 = f1 - c, f2 - c
    return float(m2.sum() * (m1 @ (g1 * g1)) + m1.sum() * (m2 @ (g2 * g2)) - 2 * (m1 @ g1) * (m2 @ g2))


def _self_sum(m, f):
    g = f - (m @ f) / m.sum()
    return float(2 * m.sum() * (m @ (g * g)))


def check_partition(space, f):
    """Both sides of the block decomposition inequality for per-point values ``f``."""
    if len(f) != space.L:
        raise ParameterError("need one value array per block")
    f = [np.asarray(v, dtype=float) for v in f]
    ms = space.masses
    mu = space.block_masses
    m_all, f_all = np.concatenate(ms), np.concatenate(f)
    lhs = _self_sum(m_all, f_all) / m_all.sum()
    rhs1 = 2.0 * sum(_self_sum(m, v) / mk for m, v, mk in zip(ms, f, mu))
    rhs2 = 4.0 * space.L**2 * sum(
        _pair_sum(ms[k], f[k], ms[k + 1], f[k + 1]) / max(mu[k], mu[k + 1])
        for k in range(space.L - 1)
    )
    rhs = rhs1 + rhs2
    return {"lhs": lhs, "rhs1": rhs1, "rhs2": rhs2, "holds": lhs <= rhs * (1 + REL_TOL) + 1e-300}


# ---------------------------------------------------------------------------
# random instances
# ---------------------------------------------------------------------------

def random_unimodal(rng, L, low=1e-3, high=1e3):
    """Unimodal weights: log-uniform values, the largest at a uniform mode, sides sorted."""
    vals = np.sort(np.exp(rng.uniform(np.log(low), np.log(high), size=L)))
    k0 = int(rng.integers(L))
    rest = rng.permutation(vals[:-1])
    left, right = np.sort(rest[:k0]), np.sort(rest[k0:])[::-1]
    return UnimodalWeights(tuple(np.concatenate([left, [vals[-1]], right])), k0)


def random_values(rng, L):
    """Gaussian values, sometimes replaced by a near-step or scaled by heavy-tailed factors."""
    f = rng.standard_normal(L)
    kind = rng.integers(3)
    if kind == 1:
        f = np.where(np.arange(L) < rng.integers(1, L), 1.0, -1.0) + 1e-3 * f
    elif kind == 2:
        f = f * rng.pareto(1.5, size=L)
    return f


def random_space(rng, L, max_points=20):
    mu = random_unimodal(rng, L).array
    blocks = []
    for mk in mu:
        n = int(rng.integers(1, max_points + 1))
        blocks.append(mk * rng.dirichlet(np.ones(n)))
    return PartitionedSpace(tuple(blocks))


@dataclass
class SuiteResult:
    lemma: str
    instances: int
    violations: int
    worst_ratio: float
    witness: dict

    @property
    def passed(self):
        return self.violations == 0


def run_partition0_suite(n=10_000, seed=0, L_range=(2, 64)):
    rng = np.random.default_rng(seed)
    worst, witness, bad = 0.0, {}, 0
    for _ in range(n):
        L = int(rng.integers(L_range[0], L_range[1] + 1))
        mu = random_unimodal(rng, L)
        f = center_against(mu, random_values(rng, L))
        res = check_partition0(mu, f)
        bad += not res["holds"]
        ratio = res["lhs"] / res["rhs"] if res["rhs"] > 0 else 0.0
        if ratio > worst:
            worst, witness = ratio, {"mu": list(mu.mu), "f": f.tolist()}
    return SuiteResult("partition0", n, bad, worst, witness)


def run_partition_suite(n=10_000, seed=0, max_blocks=8, max_points=20):
    rng = np.random.default_rng(seed)
    worst, witness, bad = 0.0, {}, 0
    for _ in range(n):
        L = int(rng.integers(1, max_blocks + 1))
        space = random_space(rng, L, max_points)
        f = [random_values(rng, len(m)) if len(m) > 1 else rng.standard_normal(1)
             for m in space.masses]
        shift = rng.standard_normal(L) * rng.uniform(0, 3)
        f = [v + s for v, s in zip(f, shift)]
        res = check_partition(space, f)
        bad += not res["holds"]
        rhs = res["rhs1"] + res["rhs2"]
        ratio = res["lhs"] / rhs if rhs > 0 else 0.0
        if ratio > worst:
            worst = ratio
            witness = {"masses": [m.tolist() for m in space.masses], "f": [v.tolist() for v in f]}
    return SuiteResult("partition", n, bad, worst, witness)
