"""Reference-interval polynomial machinery.

Gauss-Lobatto-Legendre (GLL) quadrature rules, Gauss-Legendre rules for
exact integration, barycentric Lagrange interpolation on GLL nodes, and
the edge (histopolation) basis whose members integrate to one over a
single GLL subinterval and to zero over every other.

Everything lives on the reference interval [-1, 1]; physical cells map
affinely. All objects are immutable after construction.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Snap distance below which an evaluation point is treated as a node hit.
_NODE_SNAP = 1e-14


def _legendre_and_derivs(n: int, x):
    """Evaluate P_n, P_n' and P_n'' by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0 = np.ones_like(x)
    p0_d = np.zeros_like(x)
    p0_dd = np.zeros_like(x)
    p1 = np.zeros_like(x)
    p1_d = np.zeros_like(x)
    p1_dd = np.zeros_like(x)
    for k in range(1, n + 1):
        p2, p2_d, p2_dd = p1, p1_d, p1_dd
        p1, p1_d, p1_dd = p0, p0_d, p0_dd
        a = (2 * k - 1) / k
        b = (k - 1) / k
        p0 = a * x * p1 - b * p2
        p0_d = a * (p1 + x * p1_d) - b * p2_d
        p0_dd = a * (2 * p1_d + x * p1_dd) - b * p2_dd
    return p0, p0_d, p0_dd


@dataclass(frozen=True)
class GLLRule:
    """Gauss-Lobatto-Legendre rule of degree N: N+1 nodes including +-1.

    Exact for polynomials of degree <= 2N-1.
    """

    degree: int
    nodes: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class GaussRule:
    """Gauss-Legendre rule with M interior points, exact to degree 2M-1."""

    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def gll_rule(degree: int) -> GLLRule:
    """GLL nodes (roots of (1-x^2) P_N'(x)) and weights for a given degree.

    Interior nodes come from Newton iteration on P_N' seeded with
    Chebyshev-Lobatto points; node pairs (x, -x) are symmetrized to remove
    roundoff asymmetry. Weights are 2 / (N (N+1) P_N(x)^2).
    """
    n = int(degree)
    if n < 1:
        raise ValueError("GLL rule needs degree >= 1 (degree 0 has no edge basis)")
    nodes = np.empty(n + 1)
    nodes[0], nodes[-1] = -1.0, 1.0
    if n >= 2:
        x = np.cos(np.pi * np.arange(1, n) / n)[::-1]  # Chebyshev-Lobatto guesses
        for _ in range(100):
            _, pd, pdd = _legendre_and_derivs(n, x)
            dx = pd / pdd
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        x = 0.5 * (x - x[::-1])  # symmetrize about the origin
        nodes[1:-1] = x
    p, _, _ = _legendre_and_derivs(n, nodes)
    weights = 2.0 / (n * (n + 1) * p**2)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GLLRule(n, nodes, weights)


@lru_cache(maxsize=None)
def gauss_rule(npoints: int) -> GaussRule:
    """Gauss-Legendre rule with the given number of points."""
    if npoints < 1:
        raise ValueError("Gauss rule needs at least one point")
    pts, wts = np.polynomial.legendre.leggauss(int(npoints))
    pts.setflags(write=False)
    wts.setflags(write=False)
    return GaussRule(pts, wts)


def integrate(f, rule: GaussRule) -> float:
    """Quadrature of a callable over [-1, 1]."""
    return float(rule.weights @ np.asarray(f(rule.points), dtype=float))


class LagrangeBasis:
    """Nodal Lagrange basis l_i on the GLL nodes, i = 0..N.

    Evaluation uses the barycentric formula; points within 1e-14 of a
    node hit the Kronecker-delta branch. The differentiation matrix
    ``diff_matrix[j, i] = l_i'(x_j)`` is precomputed.
    """

    def __init__(self, rule: GLLRule):
        self.rule = rule
        x = rule.nodes
        delta = x[:, None] - x[None, :]
        np.fill_diagonal(delta, 1.0)
        w = 1.0 / np.prod(delta, axis=1)
        d = (w[None, :] / w[:, None]) / delta  # d[j, i] = l_i'(x_j), i != j
        np.fill_diagonal(d, 0.0)
        np.fill_diagonal(d, -d.sum(axis=1))
        self.bary_weights = w
        self.diff_matrix = d

    @property
    def degree(self) -> int:
        return self.rule.degree

    def eval_all(self, x) -> np.ndarray:
        """Values of all l_i at x; shape (*x.shape, N+1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[..., None] - self.rule.nodes
        hit = np.abs(diff) < _NODE_SNAP
        safe = np.where(hit, 1.0, diff)
        terms = self.bary_weights / safe
        vals = terms / terms.sum(axis=-1, keepdims=True)
        onnode = hit.any(axis=-1)
        if onnode.any():
            vals[onnode] = hit[onnode].astype(float)
        return vals

    def deriv_all(self, x) -> np.ndarray:
        """Values of all l_i' at x; shape (*x.shape, N+1)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[..., None] - self.rule.nodes
        hit = np.abs(diff) < _NODE_SNAP
        onnode = hit.any(axis=-1)
        safe = np.where(hit, 1.0, diff)
        inv = 1.0 / safe
        vals = self.eval_all(x)
        # l_i'(x) = l_i(x) * sum_{j != i} 1/(x - x_j) away from nodes
        total = inv.sum(axis=-1, keepdims=True)
        out = vals * (total - inv)
        if onnode.any():
            rows = np.nonzero(hit[onnode])[-1]
            out[onnode] = self.diff_matrix[rows]
        return out

    def eval(self, i: int, x):
        """Value of l_i at x (scalar or array)."""
        self._check_index(i)
        out = self.eval_all(x)[..., i]
        return float(out[0]) if np.isscalar(x) else out

    def deriv(self, i: int, x):
        """Value of l_i' at x (scalar or array)."""
        self._check_index(i)
        out = self.deriv_all(x)[..., i]
        return float(out[0]) if np.isscalar(x) else out

    def _check_index(self, i: int) -> None:
        if not 0 <= i <= self.degree:
            raise IndexError(f"Lagrange index {i} outside 0..{self.degree}")


class EdgeBasis:
    """Edge basis e_i, i = 1..N, built from Lagrange derivative sums.

    e_i(x) = -sum_{k < i} l_k'(x); its integral over the GLL subinterval
    [x_{j-1}, x_j] equals the Kronecker delta delta_ij.
    """

    def __init__(self, rule: GLLRule):
        self.rule = rule
        self.lagrange = LagrangeBasis(rule)

    @property
    def degree(self) -> int:
        return self.rule.degree

    def eval_all(self, x) -> np.ndarray:
        """Values of all e_i at x; shape (*x.shape, N)."""
        dl = self.lagrange.deriv_all(x)
        return -np.cumsum(dl[..., :-1], axis=-1)

    def eval(self, i: int, x):
        """Value of e_i at x (i is 1-based)."""
        if not 1 <= i <= self.degree:
            raise IndexError(f"edge index {i} outside 1..{self.degree}")
        out = self.eval_all(x)[..., i - 1]
        return float(out[0]) if np.isscalar(x) else out


@dataclass(frozen=True)
class SpectralBasis:
    """Lagrange/edge basis pair sharing one GLL rule."""

    rule: GLLRule
    lagrange: LagrangeBasis
    edge: EdgeBasis

    @property
    def degree(self) -> int:
        return self.rule.degree


@lru_cache(maxsize=None)
def spectral_basis(degree: int) -> SpectralBasis:
    """Basis pair for the given polynomial degree."""
    rule = gll_rule(degree)
    return SpectralBasis(rule, LagrangeBasis(rule), EdgeBasis(rule))
