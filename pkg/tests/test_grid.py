import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from lsreg.grid import (Grid2D, VectorField, boundary_norm, boundary_trace, curvature_div, divergence,
                        embed_trace, gradient, inner, laplacian, norm, normal_derivative)
from lsreg.levelset import heaviside_smooth


def interior(f):
    return f[1:-1, 1:-1]


# --- Grid2D -------------------------------------------------------------------

def test_spacing_and_shape():
    g = Grid2D(5, 3, 0.0, 2.0, -1.0, 1.0)
    assert g.hx == 0.5 and g.hy == 1.0
    assert g.shape == (3, 5) and g.size == 15
    assert g.n_boundary == 2 * 4 + 2 * 2


@pytest.mark.parametrize("nx,ny", [(2, 5), (5, 2), (1, 1)])
def test_too_small_grid_rejected(nx, ny):
    with pytest.raises(ValueError, match="at least 3"):
        Grid2D(nx, ny)


def test_degenerate_extent_rejected():
    with pytest.raises(ValueError):
        Grid2D(4, 4, 1.0, 1.0)


def test_boundary_ring_is_outermost_nodes():
    g = Grid2D(6, 4)
    mask = np.zeros(g.shape, dtype=bool)
    mask[g.boundary_rows, g.boundary_cols] = True
    expected = np.ones(g.shape, dtype=bool)
    expected[1:-1, 1:-1] = False
    assert np.array_equal(mask, expected)
    assert len(set(g.boundary_flat)) == g.n_boundary
    assert set(g.boundary_flat).isdisjoint(g.interior_flat)
    assert len(g.boundary_flat) + len(g.interior_flat) == g.size


def test_boundary_order_counter_clockwise_from_origin():
    g = Grid2D.unit(4)
    X, Y = g.coords
    px, py = X[g.boundary_rows, g.boundary_cols], Y[g.boundary_rows, g.boundary_cols]
    assert (px[0], py[0]) == (0.0, 0.0)
    # second node lies along the bottom edge, the last one up the left edge
    assert py[1] == 0.0 and px[1] > 0
    assert px[-1] == 0.0 and py[-1] > 0
    # signed area of the polygon is positive for counter-clockwise order
    area = 0.5 * np.sum(px * np.roll(py, -1) - np.roll(px, -1) * py)
    assert area == pytest.approx(1.0)


def test_quadrature_weights_exact_for_area_and_perimeter():
    g = Grid2D(7, 5, 0.0, 2.0, 0.0, 3.0)
    assert g.weights.sum() == pytest.approx(6.0)
    assert g.boundary_weights.sum() == pytest.approx(10.0)
    assert g.arclength[-1] == pytest.approx(10.0 - g.hy)


def test_check_rejects_wrong_shapes(unit16):
    with pytest.raises(ValueError):
        unit16.check(np.zeros((3, 3)))
    with pytest.raises(ValueError):
        unit16.check_trace(np.zeros(5))


# --- gradient, divergence, laplacian ------------------------------------------

def test_gradient_of_constant_is_zero(unit16):
    g = gradient(unit16.full(3.7), unit16)
    assert np.all(g.x == 0) and np.all(g.y == 0)


def test_gradient_exact_on_affine(unit16):
    X, Y = unit16.coords
    g = gradient(X, unit16)
    assert np.allclose(g.x, 1.0, atol=1e-12) and np.allclose(g.y, 0.0, atol=1e-12)
    g = gradient(2 * X - 3 * Y + 1, unit16)
    assert np.allclose(g.x, 2.0) and np.allclose(g.y, -3.0)


def test_gradient_exact_on_quadratic(unit16):
    X, _ = unit16.coords
    g = gradient(X**2, unit16)
    # central and second-order one-sided differences are both exact on quadratics
    assert np.allclose(g.x, 2 * X, atol=1e-12)


def test_divergence_examples(unit16):
    X, Y = unit16.coords
    assert np.all(divergence(VectorField(0 * X, 0 * Y), unit16) == 0)
    assert np.allclose(interior(divergence(VectorField(X, Y), unit16)), 2.0)
    d = divergence(gradient(X**2 + Y**2, unit16), unit16)
    assert np.max(np.abs(interior(d) - 4.0)) < 1e-10


def test_divergence_rejects_mismatched_components(unit16):
    with pytest.raises(ValueError):
        divergence(VectorField(unit16.full(0), np.zeros((3, 3))), unit16)


def test_laplacian_examples(unit16):
    X, Y = unit16.coords
    assert np.all(laplacian(unit16.full(2.0), unit16) == 0)
    assert np.max(np.abs(interior(laplacian(X**2 + Y**2, unit16)) - 4.0)) < 1e-10


def test_laplacian_eigenfunction():
    g = Grid2D.unit(64)
    X, Y = g.coords
    f = np.sin(np.pi * X) * np.sin(np.pi * Y)
    L = laplacian(f, g)
    err = np.linalg.norm(interior(L + 2 * np.pi**2 * f)) / np.linalg.norm(interior(2 * np.pi**2 * f))
    assert err < 1e-2


def test_div_grad_matches_laplacian_at_second_order():
    errs = []
    for n in (17, 33, 65):
        g = Grid2D.unit(n)
        X, Y = g.coords
        f = np.exp(X) * np.cos(2 * Y)
        dg = divergence(gradient(f, g), g)
        # the ring next to the boundary sees the one-sided boundary gradient
        errs.append(np.max(np.abs((dg - laplacian(f, g))[2:-2, 2:-2])))
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(2.5 <= r <= 6 for r in ratios), ratios


@given(a=st.floats(-5, 5), b=st.floats(-5, 5), seed=st.integers(0, 2**16))
def test_differential_operators_are_linear(a, b, seed):
    g = Grid2D(7, 6)
    rng = np.random.default_rng(seed)
    f, h = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    for op in (lambda u: gradient(u, g).x, lambda u: gradient(u, g).y, lambda u: laplacian(u, g),
               lambda u: divergence(VectorField(u, 2 * u), g)):
        lhs = op(a * f + b * h)
        rhs = a * op(f) + b * op(h)
        assert np.allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


# --- curvature ----------------------------------------------------------------

def test_curvature_of_constant_and_plane(unit16):
    X, _ = unit16.coords
    assert np.all(curvature_div(unit16.full(1.0), unit16, 1e-3) == 0)
    assert np.max(np.abs(interior(curvature_div(X, unit16, 1e-8)))) < 1e-6


def test_curvature_rejects_nonpositive_beta(unit16):
    with pytest.raises(ValueError):
        curvature_div(unit16.full(1.0), unit16, 0.0)


def test_curvature_of_circle_distance():
    g = Grid2D.unit(128)
    X, Y = g.coords
    R = 0.3
    phi = np.hypot(X - 0.5, Y - 0.5) - R
    kappa = curvature_div(phi, g, 1e-8)
    near = np.abs(phi) < 2 * g.h
    assert np.max(np.abs(kappa[near] * R - 1.0)) < 0.1


# --- norms --------------------------------------------------------------------

@pytest.mark.parametrize("kind", ["L1", "L2", "H1", "TV"])
def test_norm_of_zero(unit16, kind):
    assert norm(unit16.full(0), unit16, kind, beta_tv=1e-3) == 0


def test_norm_of_one(unit16):
    one = unit16.full(1.0)
    assert norm(one, unit16, "L1") == pytest.approx(1.0, abs=1e-14)
    assert norm(one, unit16, "L2") == pytest.approx(1.0, abs=1e-14)
    assert norm(one, unit16, "H1") == pytest.approx(1.0, abs=1e-14)
    assert norm(one, unit16, "TV", beta_tv=0.1) == 0.0


def test_norm_errors(unit16):
    with pytest.raises(ValueError):
        norm(unit16.full(1), unit16, "Linf")
    with pytest.raises(ValueError):
        norm(unit16.full(1), unit16, "TV")


def test_tv_of_smoothed_disk_indicator_approximates_perimeter():
    g = Grid2D.unit(128)
    X, Y = g.coords
    phi = 0.3 - np.hypot(X - 0.5, Y - 0.5)
    tv = norm(heaviside_smooth(phi, 2 * g.h), g, "TV", beta_tv=1e-6)
    assert abs(tv - 2 * np.pi * 0.3) / (2 * np.pi * 0.3) < 0.1


def test_h1_norm_of_linear_function():
    g = Grid2D.unit(33)
    X, _ = g.coords
    # int x^2 = 1/3 and |grad x|^2 = 1; trapezoid error on x^2 is h^2/6
    assert norm(X, g, "H1") ** 2 == pytest.approx(1 / 3 + 1 + g.h**2 / 6, rel=1e-12)


field_pairs = st.tuples(arrays(np.float64, (5, 6), elements=st.floats(-1e3, 1e3)),
                        arrays(np.float64, (5, 6), elements=st.floats(-1e3, 1e3)),
                        st.floats(-1e3, 1e3))


@given(field_pairs)
def test_l2_norm_triangle_and_homogeneity(pair):
    f, h, c = pair
    g = Grid2D(6, 5)
    nf, nh = norm(f, g), norm(h, g)
    assert norm(f + h, g) <= nf + nh + 1e-9 * (1 + nf + nh)
    assert norm(c * f, g) == pytest.approx(abs(c) * nf, rel=1e-12, abs=1e-12)


@given(arrays(np.float64, (6, 5), elements=st.floats(-1e3, 1e3)))
def test_inner_is_consistent_with_l2(f):
    g = Grid2D(5, 6)
    assert inner(f, f, g) == pytest.approx(norm(f, g) ** 2, rel=1e-12, abs=1e-12)


# --- boundary traces ----------------------------------------------------------

def test_trace_of_constant_and_coordinate(unit16):
    assert np.all(boundary_trace(unit16.full(4.0), unit16) == 4.0)
    X, _ = unit16.coords
    assert np.array_equal(boundary_trace(X, unit16), X[unit16.boundary_rows, unit16.boundary_cols])
    assert boundary_trace(X, unit16).shape == (2 * 15 + 2 * 15,)


@given(seed=st.integers(0, 2**16))
def test_embed_then_trace_round_trips_bit_exactly(seed):
    g = Grid2D(6, 4)
    t = np.random.default_rng(seed).standard_normal(g.n_boundary)
    assert np.array_equal(boundary_trace(embed_trace(t, g, 7.0), g), t)


def test_normal_derivative_of_constant_is_zero(unit16):
    assert np.allclose(normal_derivative(unit16.full(5.0), unit16), 0.0, atol=1e-12)


def test_normal_derivative_of_x():
    g = Grid2D.unit(9)
    X, _ = g.coords
    dn = normal_derivative(X, g)
    bx, by = X[g.boundary_rows, g.boundary_cols], g.coords[1][g.boundary_rows, g.boundary_cols]
    corner = ((bx == 0) | (bx == 1)) & ((by == 0) | (by == 1))
    left, right = (bx == 0) & ~corner, (bx == 1) & ~corner
    flat = ~(left | right | corner)
    assert np.allclose(dn[left], -1.0) and np.allclose(dn[right], 1.0)
    assert np.allclose(dn[flat], 0.0, atol=1e-12)
    # corners average the normal of the two sides: (+-1 + 0) / 2
    assert np.allclose(np.abs(dn[corner]), 0.5)


def test_normal_derivative_of_harmonic_function():
    g = Grid2D.unit(128)
    X, Y = g.coords
    f = np.sin(np.pi * X) * np.sinh(np.pi * Y) / np.sinh(np.pi)
    dn = normal_derivative(f, g)
    bx, by = X[g.boundary_rows, g.boundary_cols], Y[g.boundary_rows, g.boundary_cols]
    bottom = (by == 0) & (bx > 0) & (bx < 1)
    exact = -np.pi * np.sin(np.pi * bx[bottom]) / np.sinh(np.pi)
    assert np.linalg.norm(dn[bottom] - exact) / np.linalg.norm(exact) < 0.02


@given(seed=st.integers(0, 2**16))
def test_traces_commute_with_negation(seed):
    g = Grid2D(5, 7)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    assert np.array_equal(boundary_trace(-f, g), -boundary_trace(f, g))
    assert np.array_equal(normal_derivative(-f, g), -normal_derivative(f, g))


def test_boundary_norm_of_one_is_root_perimeter(unit16):
    assert boundary_norm(np.ones(unit16.n_boundary), unit16) == pytest.approx(2.0)


@given(seed=st.integers(0, 2**16))
def test_public_operations_return_finite_values(seed):
    g = Grid2D(6, 6)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    for out in (gradient(f, g).x, divergence(gradient(f, g), g), laplacian(f, g),
                curvature_div(f, g, 1e-3), normal_derivative(f, g)):
        assert np.all(np.isfinite(out))
