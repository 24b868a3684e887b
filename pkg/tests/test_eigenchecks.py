import numpy as np
import pytest

from stablegap import eigenchecks as ec
from stablegap.errors import ParameterError
from stablegap.geometry import Ellipse, Rectangle
from stablegap.operator import assemble
from stablegap.spectral import eigenpairs
from stablegap.special import harnack_c_h


@pytest.fixture(scope="module")
def rect():
    return eigenpairs(assemble(Rectangle(2, 1), 1.0, 1 / 8), 3)


def test_rectangle_symmetry_unimodality(rect):
    rep = ec.check_symmetry_unimodality(rect)
    assert rep.passed and rep.details["symmetry_defect"]["x1"] < 1e-12


def test_ellipse_with_cell_killing():
    spec = eigenpairs(assemble(Ellipse(2, 1), 0.7, 1 / 8, killing="cells"), 3)
    assert ec.check_symmetry_unimodality(spec).passed


def test_detects_planted_violation(rect):
    import copy

    bad = copy.copy(rect)
    v = rect.vectors.copy()
    i = rect.grid.nearest((0.5, 0.0))
    v[i, 0] *= 1.01
    bad.vectors = v
    assert not ec.check_symmetry_unimodality(bad).passed


def test_phi1_bounds(rect):
    rep = ec.check_phi1_bounds(rect)
    assert rep.passed
    lo, hi = rep.details["centre_range"]
    assert lo < rep.details["centre_value"] < hi


def test_unit_height_view_normalised(rect):
    L, x, phi = ec.unit_height_view(rect)
    h = rect.grid.h / rect.grid.domain.b
    assert L == 2 and np.sum(phi**2) * h * h == pytest.approx(1.0, rel=1e-12)


def test_strip_ratio_alpha_guard():
    spec = eigenpairs(assemble(Rectangle(2, 1), 0.7, 1 / 8), 3)
    with pytest.raises(ParameterError):
        ec.check_strip_ratio(spec)
    assert ec.check_strip_ratio(spec, enforce_alpha=False).worst > 0


def test_strip_ratio(rect):
    rep = ec.check_strip_ratio(rect)
    assert rep.passed and rep.details["strips"] > 10


def test_harnack(rect):
    rep = ec.check_harnack(rect)
    assert rep.passed and 1 <= rep.worst < harnack_c_h(1.0)
    with pytest.raises(ParameterError):
        ec.check_harnack(rect, center=(1.8, 0.0))
    with pytest.raises(ParameterError):
        ec.check_harnack(rect, b=0.7)


def test_midconcavity_runs(rect):
    rep = ec.check_midconcavity(rect)
    assert rep.details["violations"] >= 0 and np.isfinite(rep.worst)


def test_pointwise_bounds_need_rectangle():
    spec = eigenpairs(assemble(Ellipse(2, 1), 1.0, 1 / 8), 3)
    with pytest.raises(ParameterError):
        ec.check_phi1_bounds(spec)
