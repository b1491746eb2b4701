"""Reference-interval basis tests.

Derived expectations are computed by independent oracles kept in this
file: bisection root finding for GLL nodes, a Vandermonde moment system
for the weights, and Richardson-extrapolated finite differences for
derivatives.
"""

import numpy as np
import pytest

from mimflow.basis import (
    EdgeBasis,
    LagrangeBasis,
    gauss_rule,
    gll_rule,
    integrate,
    spectral_basis,
)

DEGREES = list(range(1, 13))


# ---------------------------------------------------------------- oracles


def legendre_deriv_coeffs(n):
    """Coefficient vector of P_n' in the Legendre basis (numpy's, not ours)."""
    c = np.zeros(n + 1)
    c[n] = 1.0
    return np.polynomial.legendre.legder(c)


def gll_nodes_by_bisection(n):
    """Interior GLL nodes as sign changes of P_n', located by bisection."""
    dc = legendre_deriv_coeffs(n)
    f = lambda x: np.polynomial.legendre.legval(x, dc)
    grid = np.linspace(-1.0, 1.0, 20001)
    vals = f(grid)
    roots = []
    for a, b, fa, fb in zip(grid[:-1], grid[1:], vals[:-1], vals[1:]):
        if fa == 0.0:
            roots.append(a)
            continue
        if fa * fb < 0.0:
            lo, hi, flo = a, b, fa
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                fm = f(mid)
                if flo * fm <= 0.0:
                    hi = mid
                else:
                    lo, flo = mid, fm
            roots.append(0.5 * (lo + hi))
    return np.concatenate(([-1.0], np.array(roots), [1.0]))


def weights_by_moment_system(nodes):
    """Quadrature weights from the Vandermonde moment equations."""
    n1 = nodes.size
    v = np.vander(nodes, n1, increasing=True).T
    moments = np.array([2.0 / (k + 1) if k % 2 == 0 else 0.0 for k in range(n1)])
    return np.linalg.solve(v, moments)


def fd_derivative(f, x, h=1e-4):
    """Richardson-extrapolated central difference."""
    d1 = (f(x + h) - f(x - h)) / (2 * h)
    d2 = (f(x + h / 2) - f(x - h / 2)) / h
    return (4 * d2 - d1) / 3


# --------------------------------------------------------------- gll rule


def test_gll_degree_one_is_endpoints():
    rule = gll_rule(1)
    assert rule.nodes.tolist() == [-1.0, 1.0]
    assert rule.weights.tolist() == [1.0, 1.0]


def test_gll_degree_two_matches_bisection_oracle():
    rule = gll_rule(2)
    np.testing.assert_allclose(rule.nodes, [-1.0, 0.0, 1.0], atol=1e-15)
    np.testing.assert_allclose(rule.weights, [1 / 3, 4 / 3, 1 / 3], atol=1e-15)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_gll_nodes_and_weights_against_oracles(n):
    rule = gll_rule(n)
    np.testing.assert_allclose(rule.nodes, gll_nodes_by_bisection(n), atol=1e-10)
    np.testing.assert_allclose(
        rule.weights, weights_by_moment_system(rule.nodes), atol=1e-12
    )


@pytest.mark.parametrize("n", DEGREES)
def test_gll_structure(n):
    rule = gll_rule(n)
    assert rule.nodes[0] == -1.0 and rule.nodes[-1] == 1.0
    assert np.all(np.diff(rule.nodes) > 0)
    np.testing.assert_allclose(rule.nodes, -rule.nodes[::-1], atol=0)
    assert np.all(rule.weights > 0)
    assert abs(rule.weights.sum() - 2.0) < 1e-14


@pytest.mark.parametrize("n", [1, 2, 3, 4, 6, 8, 12])
def test_gll_exactness_on_monomials(n):
    rule = gll_rule(n)
    for k in range(2 * n):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert abs(rule.weights @ rule.nodes**k - exact) < 1e-13 * max(1, abs(exact))


def test_gll_rejects_degree_zero():
    with pytest.raises(ValueError):
        gll_rule(0)


# -------------------------------------------------------------- gauss rule


@pytest.mark.parametrize("m", [1, 2, 4, 9])
def test_gauss_exactness(m):
    rule = gauss_rule(m)
    for k in range(2 * m):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        assert abs(rule.weights @ rule.points**k - exact) < 1e-13


def test_integrate_constant_and_parabola():
    assert integrate(lambda x: np.ones_like(x), gauss_rule(3)) == pytest.approx(2.0)
    assert integrate(lambda x: x**2, gauss_rule(2)) == pytest.approx(2 / 3, abs=1e-14)


@pytest.mark.parametrize("n", [2, 4, 7])
def test_integrate_lagrange_products_match_high_order_rule(n):
    basis = LagrangeBasis(gll_rule(n))
    lo = gauss_rule(n + 1)
    hi = gauss_rule(4 * n)
    for i in range(n + 1):
        for j in range(n + 1):
            f = lambda x: basis.eval(i, x) * basis.eval(j, x)
            assert integrate(f, lo) == pytest.approx(integrate(f, hi), abs=1e-14)


# ---------------------------------------------------------------- lagrange


def test_linear_hat_values():
    basis = LagrangeBasis(gll_rule(1))
    assert basis.eval(0, 0.0) == pytest.approx(0.5)
    assert basis.deriv(0, 0.37) == pytest.approx(-0.5)
    assert basis.deriv(0, -0.9) == pytest.approx(-0.5)


@pytest.mark.parametrize("n", DEGREES)
def test_kronecker_delta_property(n):
    basis = LagrangeBasis(gll_rule(n))
    vals = basis.eval_all(basis.rule.nodes)
    assert np.max(np.abs(vals - np.eye(n + 1))) < 1e-13


@pytest.mark.parametrize("n", [1, 3, 6, 12])
def test_partition_of_unity(n):
    basis = LagrangeBasis(gll_rule(n))
    x = np.linspace(-1, 1, 17)
    np.testing.assert_allclose(basis.eval_all(x).sum(axis=-1), 1.0, atol=1e-12)
    assert abs(basis.eval_all(0.3).sum()) - 1.0 < 1e-12


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_derivative_sum_vanishes(n):
    basis = LagrangeBasis(gll_rule(n))
    x = np.array([0.7, -0.123, 0.0, 1.0])
    assert np.max(np.abs(basis.deriv_all(x).sum(axis=-1))) < 1e-11


def test_quadratic_center_derivative_against_fd_oracle():
    basis = LagrangeBasis(gll_rule(2))
    assert basis.deriv(1, 0.0) == pytest.approx(0.0, abs=1e-13)
    for i in range(3):
        fd = fd_derivative(lambda x: basis.eval(i, x), 0.41)
        assert basis.deriv(i, 0.41) == pytest.approx(fd, abs=1e-7)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_polynomial_reproduction(n):
    rng = np.random.default_rng(7)
    basis = LagrangeBasis(gll_rule(n))
    coeffs = rng.standard_normal(n + 1)
    q = np.polynomial.Polynomial(coeffs)
    x = rng.uniform(-1, 1, 50)
    interp = basis.eval_all(x) @ q(basis.rule.nodes)
    np.testing.assert_allclose(interp, q(x), atol=1e-12)


def test_index_bounds():
    basis = LagrangeBasis(gll_rule(3))
    with pytest.raises(IndexError):
        basis.eval(4, 0.0)
    with pytest.raises(IndexError):
        basis.deriv(-1, 0.0)


# -------------------------------------------------------------------- edge


def test_degree_one_edge_is_constant_half():
    edge = EdgeBasis(gll_rule(1))
    x = np.linspace(-1, 1, 9)
    np.testing.assert_allclose(edge.eval(1, x), 0.5, atol=1e-14)


@pytest.mark.parametrize("n", DEGREES)
def test_edge_cell_integrals_are_kronecker(n):
    edge = EdgeBasis(gll_rule(n))
    nodes = edge.rule.nodes
    quad = gauss_rule(n + 1)
    ints = np.empty((n, n))
    for j in range(1, n + 1):
        a, b = nodes[j - 1], nodes[j]
        pts = 0.5 * (a + b) + 0.5 * (b - a) * quad.points
        wts = 0.5 * (b - a) * quad.weights
        ints[:, j - 1] = edge.eval_all(pts).T @ wts
    assert np.max(np.abs(ints - np.eye(n))) < 1e-12


@pytest.mark.parametrize("n", [2, 3, 7])
def test_edge_equivalent_tail_sum_form(n):
    basis = spectral_basis(n)
    x = np.linspace(-0.97, 0.95, 11)
    dl = basis.lagrange.deriv_all(x)
    tail = np.cumsum(dl[..., ::-1], axis=-1)[..., ::-1][..., 1:]  # sum_{k>=i} l_k'
    np.testing.assert_allclose(basis.edge.eval_all(x), tail, atol=1e-11)


@pytest.mark.parametrize("n", [1, 3, 6, 10])
def test_histopolation_reproduces_derivatives(n):
    rng = np.random.default_rng(11)
    basis = spectral_basis(n)
    q = np.polynomial.Polynomial(rng.standard_normal(n + 1))
    dq = q.deriv()
    nodes = basis.rule.nodes
    coeffs = q(nodes[1:]) - q(nodes[:-1])
    x = rng.uniform(-1, 1, 40)
    expanded = basis.edge.eval_all(x) @ coeffs
    np.testing.assert_allclose(expanded, dq(x), atol=1e-11)


def test_edge_index_bounds():
    edge = EdgeBasis(gll_rule(2))
    with pytest.raises(IndexError):
        edge.eval(0, 0.0)
    with pytest.raises(IndexError):
        edge.eval(3, 0.0)
