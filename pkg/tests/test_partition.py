import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from stablegap import partition
from stablegap.errors import CenteringError, ParameterError


@st.composite
def unimodal(draw, max_len=40):
    L = draw(st.integers(2, max_len))
    vals = draw(st.lists(st.floats(1e-3, 1e3), min_size=L, max_size=L))
    k0 = draw(st.integers(0, L - 1))
    vals = sorted(vals)
    top, rest = vals[-1], vals[:-1]
    left, right = sorted(rest[:k0]), sorted(rest[k0:], reverse=True)
    return partition.UnimodalWeights(tuple(left + [top] + right), k0)


@given(unimodal(), st.data())
def test_partition0_holds(mu, data):
    raw = np.array(data.draw(st.lists(st.floats(-1e3, 1e3), min_size=len(mu), max_size=len(mu))))
    f = partition.center_against(mu, raw)
    # a constant draw centres to roundoff, which is not a meaningful instance
    assume(np.abs(f).max() > 1e-9 * np.abs(raw).max())
    assert partition.check_partition0(mu, f)["holds"]


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_partition_holds(L, seed):
    rng = np.random.default_rng(seed)
    space = partition.random_space(rng, L, max_points=6)
    f = [rng.standard_normal(len(m)) * rng.uniform(0.1, 10) for m in space.masses]
    assert partition.check_partition(space, f)["holds"]


def test_pair_sum_matches_brute_force():
    rng = np.random.default_rng(0)
    m1, m2 = rng.uniform(0.1, 1, 4), rng.uniform(0.1, 1, 3)
    f1, f2 = rng.standard_normal(4), rng.standard_normal(3)
    brute = sum(m1[i] * m2[j] * (f1[i] - f2[j]) ** 2 for i in range(4) for j in range(3))
    assert partition._pair_sum(m1, f1, m2, f2) == pytest.approx(brute, rel=1e-12)
    brute_self = sum(m1[i] * m1[j] * (f1[i] - f1[j]) ** 2 for i in range(4) for j in range(4))
    assert partition._self_sum(m1, f1) == pytest.approx(brute_self, rel=1e-12)


def test_uncentred_values_rejected():
    with pytest.raises(CenteringError):
        partition.check_partition0([1.0, 2.0, 1.0], [1.0, 0.0, 0.0])


def test_non_unimodal_rejected():
    with pytest.raises(ParameterError):
        partition.UnimodalWeights.from_sequence([1.0, 3.0, 1.0, 2.0])
    with pytest.raises(ParameterError):
        partition.PartitionedSpace((np.array([1.0]), np.array([0.2]), np.array([3.0])))


def test_suites_small():
    for run in (partition.run_partition0_suite, partition.run_partition_suite):
        res = run(n=300, seed=5)
        assert res.passed and 0 < res.worst_ratio <= 1 and res.witness
