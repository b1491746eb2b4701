"""Structural self-checks: topology, basis duality, commutation, stability.

Each check returns a pass/fail record with a measured residual; the CLI
``check`` command prints one line per record and fails on any FAIL.
"""

from dataclasses import dataclass

import numpy as np

from .analysis import inf_sup_constant
from .assembly import mass_matrix
from .basis import gauss_rule, gll_rule, spectral_basis
from .mimetic import check_commutation
from .topology import MeshSpec, build_complex


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _result(name, value, bound, fmt="{:.3e}") -> CheckResult:
    return CheckResult(name, value <= bound, f"{fmt.format(value)} (bound {bound:g})")


def topological_identities(max_elements=4, max_degree=4,
                           flip_div_entry=None) -> list:
    """Integer-exact CG = 0 and DC = 0 over a (dim, K, N) test matrix.

    ``flip_div_entry`` flips the sign of one stored nonzero of the
    divergence matrix first; it exists so tests can confirm the check
    actually bites.
    """
    out = []
    worst_rot = worst_cg = worst_dc = 0
    for dim in (2, 3):
        for k in range(1, max_elements + 1):
            for n in range(1, max_degree + 1):
                elems = tuple(
                    max(1, k - i) for i in range(dim)
                )  # mildly anisotropic
                c = build_complex(MeshSpec(dim, elems, n, (0,) * dim, (1,) * dim))
                div = c.div_matrix.copy()
                if flip_div_entry is not None:
                    data_idx = flip_div_entry % div.nnz
                    div.data[data_idx] *= -1
                if dim == 2:
                    worst_rot = max(worst_rot, int(np.abs((div @ c.rot_matrix).toarray()).max()) if div.shape[1] else 0)
                else:
                    worst_cg = max(worst_cg, int(np.abs((c.curl_matrix @ c.grad_matrix).toarray()).max()))
                    worst_dc = max(worst_dc, int(np.abs((div @ c.curl_matrix).toarray()).max()))
    out.append(CheckResult("2D div∘rot = 0 (integer exact)", worst_rot == 0, f"max |entry| = {worst_rot}"))
    out.append(CheckResult("3D curl∘grad = 0 (integer exact)", worst_cg == 0, f"max |entry| = {worst_cg}"))
    out.append(CheckResult("3D div∘curl = 0 (integer exact)", worst_dc == 0, f"max |entry| = {worst_dc}"))
    return out


def basis_duality(max_degree=12) -> list:
    """Kronecker properties of the nodal and edge bases."""
    worst_l = worst_e = 0.0
    for n in range(1, max_degree + 1):
        basis = spectral_basis(n)
        vals = basis.lagrange.eval_all(basis.rule.nodes)
        worst_l = max(worst_l, float(np.abs(vals - np.eye(n + 1)).max()))
        quad = gauss_rule(n + 1)
        nodes = basis.rule.nodes
        ints = np.empty((n, n))
        for j in range(1, n + 1):
            a, b = nodes[j - 1], nodes[j]
            pts = 0.5 * (a + b) + 0.5 * (b - a) * quad.points
            ints[:, j - 1] = basis.edge.eval_all(pts).T @ (0.5 * (b - a) * quad.weights)
        worst_e = max(worst_e, float(np.abs(ints - np.eye(n)).max()))
    return [
        _result(f"nodal duality l_i(x_j) = delta (N <= {max_degree})", worst_l, 1e-12),
        _result(f"edge duality cell integrals = delta (N <= {max_degree})", worst_e, 1e-12),
    ]


def _random_tensor_poly(rng, dim, degs):
    coeffs = rng.uniform(-1, 1, tuple(d + 1 for d in degs))

    def f(*coords):
        out = 0.0
        for idx in np.ndindex(coeffs.shape):
            term = coeffs[idx]
            for d in range(dim):
                term = term * coords[d] ** idx[d]
            out = out + term
        return out

    return coeffs, f


def _poly_partial(coeffs, axis):
    c = coeffs
    n = c.shape[axis]
    if n == 1:
        return np.zeros_like(np.take(c, [0], axis=axis))
    idx = np.arange(1, n)
    d = np.take(c, idx, axis=axis)
    shape = [1] * c.ndim
    shape[axis] = -1
    return d * idx.reshape(shape)


def _poly_func(coeffs, dim):
    def f(*coords):
        out = 0.0
        for idx in np.ndindex(coeffs.shape):
            term = coeffs[idx]
            for d in range(dim):
                term = term * coords[d] ** idx[d]
            out = out + term
        return out

    return f


def commuting_diagrams(fields_per_derivative=100, degree=3, elements=2,
                       seed=2024) -> list:
    """Reduce-then-differentiate residuals for random in-space polynomials."""
    rng = np.random.default_rng(seed)
    out = []
    n = degree
    c2 = build_complex(MeshSpec(2, (elements,) * 2, n, (0, 0), (1, 1)))
    c3 = build_complex(MeshSpec(3, (max(1, elements - 1),) * 3, n, (0, 0, 0), (1, 1, 1)))

    worst = {"rot": 0.0, "div2": 0.0, "grad": 0.0, "curl": 0.0, "div3": 0.0}
    for _ in range(fields_per_derivative):
        # 2D rotor of a nodal-space scalar
        coef, phi = _random_tensor_poly(rng, 2, (n, n))
        cx, cy = _poly_partial(coef, 0), _poly_partial(coef, 1)
        curl_phi = lambda x, y: np.stack(
            [_poly_func(cy, 2)(x, y), -_poly_func(cx, 2)(x, y)]
        )
        worst["rot"] = max(
            worst["rot"], check_commutation(c2, phi, curl_phi, "rot").relative
        )
        # 2D divergence of a flux-space vector
        cu, _ = _random_tensor_poly(rng, 2, (n, n - 1))
        cv, _ = _random_tensor_poly(rng, 2, (n - 1, n))
        u2 = lambda x, y: np.stack([_poly_func(cu, 2)(x, y), _poly_func(cv, 2)(x, y)])
        div2 = _poly_partial(cu, 0)
        dv2 = _poly_partial(cv, 1)
        du2 = lambda x, y: _poly_func(div2, 2)(x, y) + _poly_func(dv2, 2)(x, y)
        worst["div2"] = max(
            worst["div2"], check_commutation(c2, u2, du2, "div").relative
        )
        # 3D gradient of a nodal-space scalar
        coef3, phi3 = _random_tensor_poly(rng, 3, (n, n, n))
        grads = [_poly_partial(coef3, d) for d in range(3)]
        gphi3 = lambda x, y, z: np.stack([_poly_func(g, 3)(x, y, z) for g in grads])
        worst["grad"] = max(
            worst["grad"], check_commutation(c3, phi3, gphi3, "grad").relative
        )
        # 3D curl of a line-space vector
        cw = [None] * 3
        cw[0], _ = _random_tensor_poly(rng, 3, (n - 1, n, n))
        cw[1], _ = _random_tensor_poly(rng, 3, (n, n - 1, n))
        cw[2], _ = _random_tensor_poly(rng, 3, (n, n, n - 1))
        w3 = lambda x, y, z: np.stack([_poly_func(cc, 3)(x, y, z) for cc in cw])
        curl_comps = [
            lambda x, y, z: _poly_func(_poly_partial(cw[2], 1), 3)(x, y, z)
            - _poly_func(_poly_partial(cw[1], 2), 3)(x, y, z),
            lambda x, y, z: _poly_func(_poly_partial(cw[0], 2), 3)(x, y, z)
            - _poly_func(_poly_partial(cw[2], 0), 3)(x, y, z),
            lambda x, y, z: _poly_func(_poly_partial(cw[1], 0), 3)(x, y, z)
            - _poly_func(_poly_partial(cw[0], 1), 3)(x, y, z),
        ]
        cw3 = lambda x, y, z: np.stack([f(x, y, z) for f in curl_comps])
        worst["curl"] = max(
            worst["curl"], check_commutation(c3, w3, cw3, "curl").relative
        )
        # 3D divergence of a face-space vector
        cf = [None] * 3
        cf[0], _ = _random_tensor_poly(rng, 3, (n, n - 1, n - 1))
        cf[1], _ = _random_tensor_poly(rng, 3, (n - 1, n, n - 1))
        cf[2], _ = _random_tensor_poly(rng, 3, (n - 1, n - 1, n))
        u3 = lambda x, y, z: np.stack([_poly_func(cc, 3)(x, y, z) for cc in cf])
        dsum = [_poly_partial(cf[d], d) for d in range(3)]
        du3 = lambda x, y, z: sum(_poly_func(dd, 3)(x, y, z) for dd in dsum)
        worst["div3"] = max(
            worst["div3"], check_commutation(c3, u3, du3, "div").relative
        )
    label = {
        "rot": "2D reduce∘rot = rot∘reduce",
        "div2": "2D reduce∘div = div∘reduce",
        "grad": "3D reduce∘grad = grad∘reduce",
        "curl": "3D reduce∘curl = curl∘reduce",
        "div3": "3D reduce∘div = div∘reduce",
    }
    return [_result(label[key], val, 1e-10) for key, val in worst.items()]


def mass_spd(max_elements=2, max_degree=3) -> list:
    """Symmetry and positive-definiteness of every mass matrix."""
    worst_sym = 0.0
    min_eig = np.inf
    for dim in (2, 3):
        for k in range(1, max_elements + 1):
            for n in range(1, max_degree + 1):
                c = build_complex(MeshSpec(dim, (k,) * dim, n, (0,) * dim, (1,) * dim))
                for kk in range(dim + 1):
                    m = mass_matrix(c, spectral_basis(n), kk)
                    dense = m.toarray()
                    scale = np.abs(dense).max()
                    worst_sym = max(worst_sym, np.abs(dense - dense.T).max() / scale)
                    min_eig = min(min_eig, float(np.linalg.eigvalsh(dense).min()))
    out = [_result("mass symmetry (relative)", worst_sym, 1e-13)]
    out.append(
        CheckResult("mass positive definite", min_eig > 0, f"min eigenvalue {min_eig:.3e}")
    )
    return out


def inf_sup_positivity(max_elements=3, max_degree=3) -> list:
    """beta_h > 0 on small 2D meshes, bounded variation under refinement."""
    betas = {}
    for k in range(1, max_elements + 1):
        for n in range(1, max_degree + 1):
            if k * n < 2:
                continue  # single pressure dof: only the constant mode exists
            c = build_complex(MeshSpec(2, (k, k), n, (0, 0), (1, 1)))
            betas[(k, n)] = inf_sup_constant(c)
    pos = min(betas.values()) > 0
    series = [betas[(k, 2)] for k in range(1, max_elements + 1)]
    spread = (max(series) - min(series)) / max(series)
    return [
        CheckResult("inf-sup constant positive", pos, f"min beta_h = {min(betas.values()):.4f}"),
        _result("inf-sup variation under h-refinement", spread, 0.25, "{:.3f}"),
    ]


def run_structure_checks(flip_div_entry=None, fields_per_derivative=25) -> list:
    """Full structural suite; smaller field counts keep the CLI quick."""
    out = []
    out += topological_identities(flip_div_entry=flip_div_entry)
    out += basis_duality()
    out += commuting_diagrams(fields_per_derivative=fields_per_derivative)
    out += mass_spd()
    out += inf_sup_positivity()
    return out
