import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from stablegap.errors import MeshTooCoarseError, ParameterError
from stablegap.geometry import Diamond, Ellipse, Rectangle, mesh
from stablegap.operator import (_symmetric_killing, assemble, cell_pair_integral,
                                cell_union_killing, interaction_table, killing_rate)
from stablegap.special import jump_constant

alphas = st.sampled_from([0.3, 0.5, 1.0, 1.5, 1.9])


@pytest.fixture(scope="module")
def rect_form():
    return assemble(Rectangle(1.0, 0.5), 1.2, 1 / 8)


def test_weights_symmetric_zero_diagonal(rect_form):
    W = rect_form.weights()
    assert np.array_equal(W, W.T)
    assert np.all(np.diag(W) == 0) and np.all(W >= 0)


def test_killing_positive(rect_form):
    assert np.all(rect_form.kappa > 0)


def test_energy_matches_generator(rect_form):
    rng = np.random.default_rng(0)
    for _ in range(10):
        f = rng.standard_normal(rect_form.n)
        e = rect_form.energy(f)
        assert e > 0
        assert abs(rect_form.inner(rect_form.apply_generator(f), f) / e - 1) < 1e-12


def test_generator_linear_and_local_positive(rect_form):
    rng = np.random.default_rng(1)
    f, g = rng.standard_normal((2, rect_form.n))
    L = rect_form.apply_generator
    assert np.allclose(L(2 * f - 3 * g), 2 * L(f) - 3 * L(g), rtol=1e-12, atol=1e-9)
    e = np.zeros(rect_form.n)
    e[7] = 1.0
    out = L(e)
    assert out[7] > 0 and np.all(np.delete(out, 7) <= 0)


def test_trace_positive_unit_square():
    form = assemble(Rectangle(1, 1), 1.0, 1 / 4)
    assert 0 < np.trace(form.stiffness()) < np.inf


@given(alphas, st.sampled_from([0.5, 2.0]))
def test_exact_scaling_of_assembly(alpha, beta):
    dom = Rectangle(1.0, 0.5)
    f1, f2 = assemble(dom, alpha, 1 / 8), assemble(dom.scaled(beta), alpha, beta / 8)
    assert np.allclose(f2.weights(), beta ** (2 - alpha) * f1.weights(), rtol=1e-13, atol=0)
    assert np.allclose(f2.kappa, beta ** (-alpha) * f1.kappa, rtol=1e-12, atol=0)


def test_fft_matvec_matches_dense():
    dense = assemble(Ellipse(2, 1), 0.8, 1 / 8)
    lazy = assemble(Ellipse(2, 1), 0.8, 1 / 8, dense_limit=10)
    assert not lazy.is_dense
    rng = np.random.default_rng(2)
    F = rng.standard_normal((dense.n, 3))
    ref = dense.stiffness() @ F
    assert np.allclose(lazy.apply_stiffness(F), ref, rtol=0, atol=1e-11 * np.abs(ref).max())
    assert np.allclose(lazy.apply_stiffness(F[:, 0]), ref[:, 0], rtol=0,
                       atol=1e-11 * np.abs(ref).max())


def test_interaction_table_monotone():
    for alpha in (0.5, 1.0, 1.9):
        for rule in ("moment", "gauss"):
            T = interaction_table(alpha, (10, 10), rule)
            T[0, 0] = np.inf
            assert np.all(np.diff(T, axis=0) <= 0) and np.all(np.diff(T, axis=1) <= 0)


@pytest.mark.parametrize("offset", [(2, 0), (2, 1), (3, 0), (2, 2)])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.9])
def test_gauss_order_consistency_separated(offset, alpha):
    g4, g8 = (cell_pair_integral(*offset, alpha, n) for n in (4, 8))
    assert abs(g4 / g8 - 1) < (1e-4 if alpha <= 1.5 else 1e-3)


@pytest.mark.xfail(strict=True, reason="touching cells: the pair integral is singular, "
                                        "fixed-order Gauss rules do not agree")
@pytest.mark.parametrize("offset", [(1, 0), (1, 1)])
def test_gauss_order_consistency_touching(offset):
    g4, g8 = (cell_pair_integral(*offset, 1.0, n) for n in (4, 8))
    assert abs(g4 / g8 - 1) < 1e-4


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_half_plane_killing_oracle(alpha):
    # brute-force 2-d quadrature of int_{y1 > 1} |y|^(-2-alpha) dy
    c, _ = integrate.dblquad(lambda y2, y1: (y1 * y1 + y2 * y2) ** (-(2 + alpha) / 2),
                             1.0, np.inf, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-11)
    big = 1e7
    delta = 0.25
    dom = Rectangle(big, big)
    val = killing_rate((big - delta, 0.0), dom, alpha)
    target = jump_constant(alpha) * c * delta ** (-alpha)
    # the three far edges add O(big^-alpha)
    assert val == pytest.approx(target, rel=1e-6)


def test_killing_grows_toward_boundary():
    dom = Ellipse(2, 1)
    xs = np.stack([np.linspace(0, 1.9, 20), np.zeros(20)], axis=1)
    k = killing_rate(xs, dom, 0.7)
    assert np.all(np.diff(k) > 0)


def test_killing_symmetric():
    for dom in (Ellipse(2, 1), Diamond(2, 1)):
        p = np.array([[0.3, 0.2]])
        vals = [killing_rate(p * s, dom, 1.3)[0] for s in ([1, 1], [-1, 1], [1, -1], [-1, -1])]
        assert np.ptp(vals) < 1e-10 * vals[0]


def test_killing_outside_rejected():
    with pytest.raises(ParameterError):
        killing_rate((3.0, 0.0), Ellipse(2, 1), 1.0)


@pytest.mark.parametrize("alpha", [0.3, 1.0, 1.9])
def test_cell_union_killing_exact_on_tiled_rectangle(alpha):
    g = mesh(Rectangle(1, 0.5), 1 / 16)
    assert np.allclose(cell_union_killing(g, alpha), _symmetric_killing(g, alpha), rtol=1e-9, atol=0)


def test_cell_union_killing_approaches_true_killing_inside():
    errs = []
    for h in (1 / 8, 1 / 16, 1 / 32):
        g = mesh(Ellipse(1, 1), h)
        k = cell_union_killing(g, 1.0)
        i = g.nearest((0.25, 0.25))
        errs.append(abs(k[i] / killing_rate(g.centers[i], g.domain, 1.0) - 1))
        P = g.reflection(0)
        assert np.allclose(k, k[P], rtol=1e-13, atol=0)
    assert errs[0] > errs[1] > errs[2] and errs[2] < 2e-3


def test_mesh_too_coarse():
    with pytest.raises(MeshTooCoarseError):
        assemble(Rectangle(1, 1), 1.0, 0.5)


def test_bad_killing_rule():
    with pytest.raises(ParameterError):
        assemble(Rectangle(1, 1), 1.0, 0.25, killing="walls")


def test_cache_round_trip(tmp_path):
    a = assemble(Ellipse(2, 1), 1.1, 1 / 8, cache_dir=tmp_path)
    assert len(list(tmp_path.iterdir())) == 1
    b = assemble(Ellipse(2, 1), 1.1, 1 / 8, cache_dir=tmp_path)
    assert np.array_equal(a.kappa, b.kappa) and np.array_equal(a.table, b.table)
    assert np.array_equal(a.grid.index, b.grid.index)
