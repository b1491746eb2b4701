"""Mass matrices and assembly of the mixed Stokes saddle-point system.

On affine boxes the inner product of two reconstructed cochains
factorizes per element into Kronecker products of two 1D reference mass
matrices (nodal-nodal and edge-edge), scaled by the metric of the
species. The saddle system couples the vorticity, velocity-flux and
pressure cochains through the incidence matrices only:

    [ M_w        -C^T M_u      0      ]   [w]   [t]
    [ -M_u C      0            D^T M_p]   [u] = [-g]
    [ 0           M_p D        0      ]   [p]   [0]

with the second weak equation negated so the matrix is symmetric
indefinite. Prescribed normal velocity is eliminated; the tangential
velocity data lands in t; one bordered row/column enforces the
mass-weighted zero pressure mean.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import SpectralBasis, gauss_rule, spectral_basis
from .mimetic import Cochain, _cell_quadrature, _eval_component
from .topology import CellComplex

_AXES = {"x": 0, "y": 1, "z": 2}

# face tag -> (pinned direction, side); side 0 is the low plane
_FACE_INFO = {
    "x-": (0, 0), "x+": (0, 1), "y-": (1, 0), "y+": (1, 1), "z-": (2, 0), "z+": (2, 1),
}


def _reference_mass(basis: SpectralBasis, quad_order: int):
    """1D nodal and edge mass matrices on [-1, 1] by Gauss quadrature."""
    rule = gauss_rule(quad_order)
    lag = basis.lagrange.eval_all(rule.points)
    edg = basis.edge.eval_all(rule.points)
    m_ll = lag.T @ (rule.weights[:, None] * lag)
    m_ee = edg.T @ (rule.weights[:, None] * edg)
    return m_ll, m_ee


def _species_metric(c: CellComplex, k: int, name: str):
    """Per-direction factor kinds and the metric scale of one species.

    Returns (kinds, scale) where kinds[d] is "l" or "e"; the species
    basis carries 1/prod(h2[d] for edge directions... ) folded into
    scale together with the volume Jacobian.
    """
    h2 = [0.5 * h for h in c.element_size]
    jac = float(np.prod(h2))
    if k == 0:
        kinds = ["l"] * c.dim
        denom = 1.0
    elif k == c.dim:
        kinds = ["e"] * c.dim
        denom = jac
    elif k == 1:
        d = _AXES[name]
        kinds = ["e" if i == d else "l" for i in range(c.dim)]
        denom = h2[d]
    else:  # k == 2, dim == 3: face with normal `name`
        d = _AXES[name]
        kinds = ["l" if i == d else "e" for i in range(c.dim)]
        denom = jac / h2[d]
    return kinds, jac / denom**2


def _local_ids(c: CellComplex, k: int, name: str, elem) -> np.ndarray:
    """Global dof ids of one species inside one element, x fastest."""
    n = c.degree
    shape = c.species_shape(k, name)
    ranges = []
    for d in range(c.dim):
        width = n + 1 if shape[d] == c.n[d] else n
        ranges.append(elem[d] * n + np.arange(width))
    mesh = np.meshgrid(*ranges, indexing="ij")
    flat = np.ravel_multi_index([g.ravel(order="F") for g in mesh], shape, order="F")
    return c.species_offset(k, name) + flat


def mass_matrix(c: CellComplex, basis: SpectralBasis | None = None, k: int = 0,
                quad_order: int | None = None) -> sp.csr_matrix:
    """Inner-product matrix of the reconstructed k-cochain basis.

    Assembled element by element from Kronecker products of the 1D
    reference mass matrices with the affine metric of each species;
    quadrature uses N+1 Gauss points per direction (exact here).
    """
    if basis is None:
        basis = spectral_basis(c.degree)
    order = quad_order if quad_order is not None else c.degree + 1
    m_ll, m_ee = _reference_mass(basis, order)
    rows, cols, vals = [], [], []
    for name in c.species(k):
        kinds, scale = _species_metric(c, k, name)
        local = np.array([[scale]])
        for kind in kinds:  # successive krons keep x the fastest axis
            local = np.kron(m_ll if kind == "l" else m_ee, local)
        flat = local.ravel()
        for elem in c.element_multi_indices():
            ids = _local_ids(c, k, name, elem)
            rows.append(np.repeat(ids, ids.size))
            cols.append(np.tile(ids, ids.size))
            vals.append(flat)
    n = c.n_cells(k)
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    ).tocsr()
    return m


def load_vector(c: CellComplex, basis: SpectralBasis, body_force,
                quad_order: int | None = None) -> np.ndarray:
    """Moments (basis_i, f) of a vector body force against the flux basis."""
    order = quad_order if quad_order is not None else c.degree + 2
    rule = gauss_rule(order)
    h2 = [0.5 * h for h in c.element_size]
    lag = basis.lagrange.eval_all(rule.points)  # (Q, N+1)
    edg = basis.edge.eval_all(rule.points)      # (Q, N)
    out = np.zeros(c.n_cells(c.dim - 1))
    comp_of = {"x": 1, "y": 0} if c.dim == 2 else _AXES
    for elem in c.element_multi_indices():
        origin = c.element_origin(elem)
        coords = [
            origin[d] + h2[d] * (rule.points + 1.0) for d in range(c.dim)
        ]
        mesh = np.meshgrid(*coords, indexing="ij")
        for name in c.species(c.dim - 1):
            d_norm = _AXES[name] if c.dim == 3 else comp_of[name]
            fvals = _eval_component(body_force, mesh, comp_of[name])
            kinds, _ = _species_metric(c, c.dim - 1, name)
            facs = [lag if kind == "l" else edg for kind in kinds]
            w = rule.weights
            if c.dim == 2:
                loc = np.einsum("q,r,qa,rb,qr->ab", w, w, facs[0], facs[1], fvals)
            else:
                loc = np.einsum(
                    "q,r,s,qa,rb,sc,qrs->abc", w, w, w, facs[0], facs[1], facs[2], fvals
                )
            ids = _local_ids(c, c.dim - 1, name, elem)
            out[ids] += h2[d_norm] * loc.ravel(order="F")
    return out


def _boundary_elements(c: CellComplex, face: str):
    """Element multi-indices touching a box face."""
    d, side = _FACE_INFO[face]
    plane = 0 if side == 0 else c.spec.elements[d] - 1
    return [e for e in c.element_multi_indices() if e[d] == plane]


def tangential_rhs(c: CellComplex, basis: SpectralBasis, boundary_velocity,
                   quad_order: int | None = None) -> np.ndarray:
    """Boundary moments of the prescribed tangential velocity.

    Accumulates the trace integral of each vorticity test function
    against u.t (2D, counterclockwise tangent) or n x u (3D, outward
    normal) over every box face.
    """
    order = quad_order if quad_order is not None else c.degree + 2
    rule = gauss_rule(order)
    h2 = [0.5 * h for h in c.element_size]
    n = c.degree
    k_w = 0 if c.dim == 2 else 1
    out = np.zeros(c.n_cells(k_w))
    lag = basis.lagrange.eval_all(rule.points)
    edg = basis.edge.eval_all(rule.points)
    for face in ("x-", "x+", "y-", "y+") + (("z-", "z+") if c.dim == 3 else ()):
        d, side = _FACE_INFO[face]
        x_pin = c.spec.lo[d] if side == 0 else c.spec.hi[d]
        pin_node = 0 if side == 0 else n
        tang = [i for i in range(c.dim) if i != d]
        sign = -1.0 if side == 0 else 1.0  # outward normal component
        for elem in _boundary_elements(c, face):
            origin = c.element_origin(elem)
            coords = []
            for i in range(c.dim):
                if i == d:
                    coords.append(np.array([x_pin]))
                else:
                    coords.append(origin[i] + h2[i] * (rule.points + 1.0))
            mesh = np.meshgrid(*coords, indexing="ij")
            uvec = np.asarray(boundary_velocity(face, *mesh), dtype=float)
            if c.dim == 2:
                # counterclockwise tangent: outward normal rotated by +90deg
                a = tang[0]
                t_a = sign if d == 0 else -sign
                integrand = t_a * uvec[a].squeeze()
                loc = h2[a] * np.einsum("q,qa,q->a", rule.weights, lag, integrand)
                gidx = [None, None]
                gidx[a] = elem[a] * n + np.arange(n + 1)
                gidx[d] = np.array([elem[d] * n + pin_node])
                mesh_ids = np.meshgrid(*gidx, indexing="ij")
                ids = np.ravel_multi_index(
                    [g.ravel(order="F") for g in mesh_ids],
                    c.species_shape(0, "node"), order="F",
                )
                out[ids] += loc
            else:
                normal = np.zeros(3)
                normal[d] = sign
                cross = np.stack(
                    [
                        normal[1] * uvec[2] - normal[2] * uvec[1],
                        normal[2] * uvec[0] - normal[0] * uvec[2],
                        normal[0] * uvec[1] - normal[1] * uvec[0],
                    ]
                )
                # only the two in-plane line species have tangential traces;
                # each trace is e along its own direction, l along the other
                for s in tang:
                    other = tang[1] if s == tang[0] else tang[0]
                    integrand = np.moveaxis(cross[s], d, -1)[..., 0]
                    if s < other:  # quadrature axis q runs along s
                        loc = h2[other] * np.einsum(
                            "q,r,qa,rb,qr->ab", rule.weights, rule.weights,
                            edg, lag, integrand,
                        )
                        widths, dirs = (n, n + 1), (s, other)
                    else:
                        loc = h2[other] * np.einsum(
                            "q,r,qa,rb,qr->ab", rule.weights, rule.weights,
                            lag, edg, integrand,
                        )
                        widths, dirs = (n + 1, n), (other, s)
                    gidx = [None, None, None]
                    gidx[dirs[0]] = elem[dirs[0]] * n + np.arange(widths[0])
                    gidx[dirs[1]] = elem[dirs[1]] * n + np.arange(widths[1])
                    gidx[d] = np.array([elem[d] * n + pin_node])
                    mesh_ids = np.meshgrid(*gidx, indexing="ij")
                    ids = c.species_offset(1, "xyz"[s]) + np.ravel_multi_index(
                        [g.ravel(order="F") for g in mesh_ids],
                        c.species_shape(1, "xyz"[s]), order="F",
                    )
                    out[ids] += loc.ravel(order="F")
    return out


def reduce_normal_bc(c: CellComplex, boundary_velocity,
                     quad_order: int | None = None):
    """Prescribed flux dofs on the boundary: ids and integrated values."""
    order = quad_order if quad_order is not None else c.degree + 2
    all_ids, all_vals = [], []
    for face in FACE_ORDER[c.dim]:
        d, side = _FACE_INFO[face]
        name = ("y" if d == 0 else "x") if c.dim == 2 else "xyz"[d]
        ids = c.boundary_cells(c.dim - 1, species=name)[face]
        x_pin = c.spec.lo[d] if side == 0 else c.spec.hi[d]
        coords_1d, weights = [], []
        for i in range(c.dim):
            if i == d:
                coords_1d.append(np.array([x_pin]))
                weights.append(None)
            else:
                pts, wts = _cell_quadrature(c.grids[i], order)
                coords_1d.append(pts.ravel())
                weights.append(wts)
        mesh = np.meshgrid(*coords_1d, indexing="ij")
        uvec = np.asarray(boundary_velocity(face, *mesh), dtype=float)
        vals = np.broadcast_to(uvec[d], mesh[0].shape).astype(float)
        for i in range(c.dim):
            if weights[i] is None:
                continue
            cells, npts = weights[i].shape
            new_shape = vals.shape[:i] + (cells, npts) + vals.shape[i + 1 :]
            vals = vals.reshape(new_shape)
            vals = np.einsum(
                vals, [*range(i), i, c.dim + 1, *range(i + 1, c.dim)],
                weights[i], [i, c.dim + 1], [*range(c.dim)],
            )
        all_ids.append(ids)
        all_vals.append(vals.ravel(order="F"))
    ids = np.concatenate(all_ids)
    vals = np.concatenate(all_vals)
    uniq, first = np.unique(ids, return_index=True)
    return uniq, vals[first]


FACE_ORDER = {2: ("x-", "x+", "y-", "y+"), 3: ("x-", "x+", "y-", "y+", "z-", "z+")}


@dataclass
class StokesSystem:
    """Assembled saddle-point system with boundary conditions applied."""

    complex: CellComplex
    basis: SpectralBasis
    mass_w: sp.csr_matrix
    mass_u: sp.csr_matrix
    mass_p: sp.csr_matrix
    curl: sp.csr_matrix
    div: sp.csr_matrix
    tangential: np.ndarray
    load: np.ndarray
    fixed_ids: np.ndarray = None
    fixed_values: np.ndarray = None
    free_ids: np.ndarray = None
    matrix: sp.csc_matrix = None
    rhs: np.ndarray = None
    gauge_rhs: float = 0.0

    @property
    def constrained(self) -> bool:
        return self.matrix is not None

    @property
    def slices(self) -> dict:
        """Monolithic index ranges of each unknown block."""
        n_w = self.mass_w.shape[0]
        n_uf = self.free_ids.size
        n_p = self.mass_p.shape[0]
        return {
            "vorticity": slice(0, n_w),
            "velocity": slice(n_w, n_w + n_uf),
            "pressure": slice(n_w + n_uf, n_w + n_uf + n_p),
            "gauge": slice(n_w + n_uf + n_p, n_w + n_uf + n_p + 1),
        }

    def export_matrix_market(self, path) -> None:
        from scipy.io import mmwrite

        mmwrite(str(path), sp.coo_matrix(self.matrix))


def assemble_stokes(c: CellComplex, basis: SpectralBasis | None = None,
                    body_force=None, bc=None) -> StokesSystem:
    """Build mass matrices, incidence blocks and rhs, then apply BCs.

    ``bc`` is a callable ``bc(face, *coords) -> velocity components``
    giving the prescribed velocity on each box face (normal part is
    eliminated as essential data, tangential part feeds the vorticity
    equation). ``body_force`` is a vector field or None for zero.
    """
    if basis is None:
        basis = spectral_basis(c.degree)
    k_w = 0 if c.dim == 2 else 1
    mass_w = mass_matrix(c, basis, k_w)
    mass_u = mass_matrix(c, basis, c.dim - 1)
    mass_p = mass_matrix(c, basis, c.dim)
    curl = c.rot_matrix if c.dim == 2 else c.curl_matrix
    div = c.div_matrix
    if body_force is None:
        load = np.zeros(c.n_cells(c.dim - 1))
    else:
        load = load_vector(c, basis, body_force)
    if bc is None:
        bc = lambda face, *coords: np.zeros((c.dim,) + np.shape(coords[0]))
    tang = tangential_rhs(c, basis, bc)
    sys = StokesSystem(c, basis, mass_w, mass_u, mass_p, curl, div, tang, load)
    return apply_boundary_conditions(sys, bc)


def apply_boundary_conditions(sys: StokesSystem, bc) -> StokesSystem:
    """Eliminate prescribed normal-flux dofs and append the pressure gauge.

    Raises ValueError when the prescribed data carries a net boundary
    flux (incompatible with an exactly divergence-free velocity).
    """
    c = sys.complex
    fixed_ids, fixed_vals = reduce_normal_bc(c, bc)
    # net outward flux: dofs measure flux in the +coordinate direction
    outward = np.zeros(fixed_ids.size)
    for face, ids in c.boundary_cells(c.dim - 1).items():
        sgn = -1.0 if face.endswith("-") else 1.0
        sel = np.isin(fixed_ids, ids)
        outward[sel] += sgn
    imbalance = float(outward @ fixed_vals)
    scale = max(1.0, float(np.abs(fixed_vals).sum()))
    if abs(imbalance) > 1e-10 * scale:
        raise ValueError(
            f"boundary data carries net flux {imbalance:.3e}; "
            "incompatible with a divergence-free velocity"
        )
    n_u = c.n_cells(c.dim - 1)
    free = np.setdiff1d(np.arange(n_u), fixed_ids)
    ct_mu = (sys.curl.T @ sys.mass_u).tocsr()
    dt_mp = (sys.div.T @ sys.mass_p).tocsr()
    gauge = sp.csr_matrix(
        (sys.mass_p @ np.ones(sys.mass_p.shape[0])).reshape(-1, 1)
    )
    a = sp.bmat(
        [
            [sys.mass_w, -ct_mu[:, free], None, None],
            [-ct_mu[:, free].T, None, dt_mp[free], None],
            [None, dt_mp[free].T, None, gauge],
            [None, None, gauge.T, None],
        ],
        format="csc",
    )
    b = np.concatenate(
        [
            sys.tangential + ct_mu[:, fixed_ids] @ fixed_vals,
            -sys.load[free],
            -(sys.mass_p @ (sys.div[:, fixed_ids] @ fixed_vals)),
            [sys.gauge_rhs],
        ]
    )
    sys.fixed_ids = fixed_ids
    sys.fixed_values = fixed_vals
    sys.free_ids = free
    sys.matrix = a
    sys.rhs = b
    return sys
