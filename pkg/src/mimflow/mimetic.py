"""Reduction, reconstruction and projection between fields and cochains.

Reduction integrates an analytic field over every cell of one dimension
(point values, line integrals, face fluxes, volume integrals) to give a
cochain. Reconstruction expands a cochain in the tensor-product
Lagrange/edge basis of its element, with affine Jacobian scaling chosen
so the two maps are exact inverses on the discrete space. Projection is
their composition, and it commutes with grad/curl/div: differentiating a
reconstruction equals reconstructing the coboundary of its cochain.

Field callables take per-direction coordinate arrays and broadcast;
scalar fields return an array of the broadcast shape, vector fields an
array with a leading component axis.
"""

from dataclasses import dataclass

import numpy as np

from .basis import SpectralBasis, gauss_rule, spectral_basis
from .topology import CellComplex

# component index carried by each line species of a 2D flux cochain:
# x-directed lines measure flux in +y, y-directed lines in +x.
_FLUX_COMPONENT_2D = {"x": 1, "y": 0}


@dataclass
class Cochain:
    """Degrees of freedom attached to all k-cells of a complex."""

    complex: CellComplex
    k: int
    values: np.ndarray

    def __post_init__(self):
        expected = self.complex.n_cells(self.k)
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.shape != (expected,):
            raise ValueError(
                f"cochain needs {expected} values for k={self.k}, got {self.values.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("cochain values must be finite")

    @classmethod
    def zeros(cls, complex_: CellComplex, k: int) -> "Cochain":
        return cls(complex_, k, np.zeros(complex_.n_cells(k)))

    def species_view(self, name: str) -> np.ndarray:
        """Tensor-shaped view (x fastest) of one species' dofs."""
        c, k = self.complex, self.k
        off = c.species_offset(k, name)
        cnt = c.species_count(k, name)
        return self.values[off : off + cnt].reshape(c.species_shape(k, name), order="F")

    def copy(self) -> "Cochain":
        return Cochain(self.complex, self.k, self.values.copy())


def _cell_quadrature(grid: np.ndarray, order: int):
    """Gauss points/weights on every fine interval of a 1D grid.

    Returns arrays shaped (cells, order); weights include the interval
    half-length.
    """
    rule = gauss_rule(order)
    a, b = grid[:-1, None], grid[1:, None]
    pts = 0.5 * (a + b) + 0.5 * (b - a) * rule.points[None, :]
    wts = 0.5 * (b - a) * rule.weights[None, :]
    return pts, wts


def _eval_component(field, coords, comp):
    vals = np.asarray(field(*coords), dtype=float)
    if comp is not None:
        vals = vals[comp]
    if vals.shape != coords[0].shape:  # fields returning plain scalars
        vals = np.broadcast_to(vals, coords[0].shape)
    if not np.all(np.isfinite(vals)):
        raise ValueError("field evaluated to non-finite values")
    return vals


def reduce_field(field, c: CellComplex, k: int, quad_order: int | None = None,
                 line_orientation: str = "flux") -> Cochain:
    """Integrate an analytic field onto all k-cells of the complex.

    Point cells evaluate the field; lines carry tangential integrals in
    3D and transverse fluxes in 2D (the outer-oriented convention the
    Stokes system uses -- pass ``line_orientation="tangential"`` for the
    inner-oriented 2D line reduction); faces carry normal fluxes; top
    cells carry volume integrals. Each cell uses a tensor Gauss rule
    with ``quad_order`` points per direction (default N+2).
    """
    order = quad_order if quad_order is not None else c.degree + 2
    out = Cochain.zeros(c, k)
    axes = {"x": 0, "y": 1, "z": 2}
    for name in c.species(k):
        view = out.species_view(name)
        shape = c.species_shape(k, name)
        if k == 0:
            mesh = np.meshgrid(*c.grids, indexing="ij")
            view[...] = _eval_component(field, mesh, None)
            continue
        # directions the cell extends through (quadrature) vs sits on (plane)
        extended = [d for d in range(c.dim) if shape[d] == c.m[d]]
        if k == 1:
            d = axes[name]
            if c.dim == 2 and line_orientation == "flux":
                comp = _FLUX_COMPONENT_2D[name]
            elif c.dim == 2 and line_orientation == "tangential":
                comp = d
            elif c.dim == 3:
                comp = d
            else:
                raise ValueError(f"unknown line orientation {line_orientation!r}")
        elif k == 2 and c.dim == 3:
            comp = axes[name]
        else:
            comp = None  # volume integrals of a scalar
        coords_1d, weights = [], []
        for d in range(c.dim):
            if d in extended:
                pts, wts = _cell_quadrature(c.grids[d], order)
                coords_1d.append(pts.ravel())
                weights.append(wts)
            else:
                coords_1d.append(c.grids[d])
                weights.append(None)
        mesh = np.meshgrid(*coords_1d, indexing="ij")
        vals = _eval_component(field, mesh, comp)
        # contract the quadrature axes cell by cell
        for d in range(c.dim):
            if weights[d] is None:
                continue
            cells, npts = weights[d].shape
            new_shape = vals.shape[:d] + (cells, npts) + vals.shape[d + 1 :]
            vals = vals.reshape(new_shape)
            vals = np.einsum(vals, [*range(d), d, c.dim + 1, *range(d + 1, c.dim)],
                             weights[d], [d, c.dim + 1],
                             [*range(c.dim)])
        view[...] = vals
    return out


class DiscreteField:
    """Cochain plus basis pair, evaluable anywhere in the domain."""

    def __init__(self, cochain: Cochain, basis: SpectralBasis):
        if basis.degree != cochain.complex.degree:
            raise ValueError("basis degree does not match the complex")
        self.cochain = cochain
        self.basis = basis
        self.complex = cochain.complex
        self.k = cochain.k

    # ------------------------------------------------------------ locating

    def _locate(self, coords):
        """Element index and reference coordinate per direction.

        Points on interior interfaces resolve to the lower element;
        points outside the box (beyond a relative snap) are rejected.
        """
        c = self.complex
        elems, refs = [], []
        for d in range(c.dim):
            x = np.asarray(coords[d], dtype=float)
            h = c.element_size[d]
            t = (x - c.spec.lo[d]) / h
            kmax = c.spec.elements[d]
            tol = 1e-12 * max(1.0, kmax)
            if np.any(t < -tol) or np.any(t > kmax + tol):
                raise ValueError(f"evaluation point outside the domain in direction {d}")
            t = np.clip(t, 0.0, kmax)
            e = np.floor(t).astype(int)
            on_plane = (t == e) & (e > 0)
            e = np.where(on_plane, e - 1, np.minimum(e, kmax - 1))
            elems.append(e)
            refs.append(2.0 * (t - e) - 1.0)
        return elems, refs

    def _local_view(self, name: str, elem):
        """Element-local dof block of one species."""
        c, n = self.complex, self.complex.degree
        view = self.cochain.species_view(name)
        shape = c.species_shape(self.k, name)
        sl = []
        for d in range(c.dim):
            start = elem[d] * n
            width = n + 1 if shape[d] == c.n[d] else n
            sl.append(slice(start, start + width))
        return view[tuple(sl)]

    # ---------------------------------------------------------- evaluation

    def __call__(self, *coords):
        """Evaluate at broadcastable coordinate arrays.

        Scalar cochains (k = 0 or k = dim) return an array of the
        broadcast shape; vector cochains return components stacked on a
        leading axis.
        """
        coords = [np.asarray(x, dtype=float) for x in coords]
        if len(coords) != self.complex.dim:
            raise ValueError(f"expected {self.complex.dim} coordinate arrays")
        bshape = np.broadcast_shapes(*(x.shape for x in coords))
        flat = [np.broadcast_to(x, bshape).ravel() for x in coords]
        vals = self._eval_flat(flat)
        if vals.ndim == 1:
            return vals.reshape(bshape)
        return vals.reshape((vals.shape[0],) + bshape)

    def _scalarize(self):
        c = self.complex
        return self.k == 0 or self.k == c.dim

    def _eval_flat(self, flat):
        c = self.complex
        npts = flat[0].size
        nvec = 1 if self._scalarize() else c.dim
        out = np.zeros((nvec, npts))
        elems, refs = self._locate(flat)
        flat_elem = elems[0]
        base = c.spec.elements[0]
        for d in range(1, c.dim):
            flat_elem = flat_elem + elems[d] * base
            base *= c.spec.elements[d]
        order = np.argsort(flat_elem, kind="stable")
        sorted_ids = flat_elem[order]
        starts = np.searchsorted(sorted_ids, np.unique(sorted_ids))
        bounds = list(starts) + [npts]
        for gi in range(len(starts)):
            sel = order[bounds[gi] : bounds[gi + 1]]
            elem = tuple(int(elems[d][sel[0]]) for d in range(c.dim))
            xi = [refs[d][sel] for d in range(c.dim)]
            lag = [self.basis.lagrange.eval_all(x) for x in xi]
            edg = [self.basis.edge.eval_all(x) for x in xi]
            self._eval_element(elem, lag, edg, out, sel)
        return out[0] if nvec == 1 else out

    def _eval_element(self, elem, lag, edg, out, sel):
        c = self.complex
        h2 = [0.5 * h for h in c.element_size]
        k = self.k
        if c.dim == 2:
            if k == 0:
                loc = self._local_view("node", elem)
                out[0, sel] += np.einsum("pa,pb,ab->p", lag[0], lag[1], loc)
            elif k == 1:
                loc_y = self._local_view("y", elem)  # +x flux
                out[0, sel] += np.einsum("pa,pb,ab->p", lag[0], edg[1], loc_y) / h2[1]
                loc_x = self._local_view("x", elem)  # +y flux
                out[1, sel] += np.einsum("pa,pb,ab->p", edg[0], lag[1], loc_x) / h2[0]
            else:
                loc = self._local_view("vol", elem)
                out[0, sel] += np.einsum("pa,pb,ab->p", edg[0], edg[1], loc) / (h2[0] * h2[1])
        else:
            if k == 0:
                loc = self._local_view("node", elem)
                out[0, sel] += np.einsum("pa,pb,pc,abc->p", lag[0], lag[1], lag[2], loc)
            elif k == 1:
                for d, name in enumerate(("x", "y", "z")):
                    loc = self._local_view(name, elem)
                    facs = [edg[i] if i == d else lag[i] for i in range(3)]
                    out[d, sel] += (
                        np.einsum("pa,pb,pc,abc->p", *facs, loc) / h2[d]
                    )
            elif k == 2:
                for d, name in enumerate(("x", "y", "z")):
                    loc = self._local_view(name, elem)
                    facs = [lag[i] if i == d else edg[i] for i in range(3)]
                    scale = np.prod([h2[i] for i in range(3) if i != d])
                    out[d, sel] += np.einsum("pa,pb,pc,abc->p", *facs, loc) / scale
            else:
                loc = self._local_view("vol", elem)
                out[0, sel] += (
                    np.einsum("pa,pb,pc,abc->p", edg[0], edg[1], edg[2], loc)
                    / (h2[0] * h2[1] * h2[2])
                )

    # ---------------------------------------------------------- divergence

    def divergence(self, *coords):
        """Pointwise divergence of a flux field by direct differentiation.

        Independent of the incidence-matrix route: differentiates the
        tensor-product expansion itself. Only defined for (dim-1)-cochains.
        """
        c = self.complex
        if self.k != c.dim - 1:
            raise ValueError("divergence is defined for flux cochains only")
        coords = [np.asarray(x, dtype=float) for x in coords]
        bshape = np.broadcast_shapes(*(x.shape for x in coords))
        flat = [np.broadcast_to(x, bshape).ravel() for x in coords]
        npts = flat[0].size
        out = np.zeros(npts)
        elems, refs = self._locate(flat)
        flat_elem = elems[0]
        base = c.spec.elements[0]
        for d in range(1, c.dim):
            flat_elem = flat_elem + elems[d] * base
            base *= c.spec.elements[d]
        order = np.argsort(flat_elem, kind="stable")
        sorted_ids = flat_elem[order]
        starts = np.searchsorted(sorted_ids, np.unique(sorted_ids))
        bounds = list(starts) + [npts]
        h2 = [0.5 * h for h in c.element_size]
        jac = np.prod(h2)
        for gi in range(len(starts)):
            sel = order[bounds[gi] : bounds[gi + 1]]
            elem = tuple(int(elems[d][sel[0]]) for d in range(c.dim))
            xi = [refs[d][sel] for d in range(c.dim)]
            lag = [self.basis.lagrange.eval_all(x) for x in xi]
            dlag = [self.basis.lagrange.deriv_all(x) for x in xi]
            edg = [self.basis.edge.eval_all(x) for x in xi]
            if c.dim == 2:
                loc_y = self._local_view("y", elem)
                out[sel] += np.einsum("pa,pb,ab->p", dlag[0], edg[1], loc_y) / jac
                loc_x = self._local_view("x", elem)
                out[sel] += np.einsum("pa,pb,ab->p", edg[0], dlag[1], loc_x) / jac
            else:
                for d, name in enumerate(("x", "y", "z")):
                    loc = self._local_view(name, elem)
                    facs = [dlag[i] if i == d else edg[i] for i in range(3)]
                    out[sel] += np.einsum("pa,pb,pc,abc->p", *facs, loc) / jac
        return out.reshape(bshape)


def reconstruct(cochain: Cochain, basis: SpectralBasis | None = None) -> DiscreteField:
    """Expand a cochain in the tensor-product nodal/edge basis."""
    if basis is None:
        basis = spectral_basis(cochain.complex.degree)
    return DiscreteField(cochain, basis)


def project(field, c: CellComplex, k: int, basis: SpectralBasis | None = None,
            quad_order: int | None = None) -> DiscreteField:
    """Reduce then reconstruct: the structure-preserving projection."""
    return reconstruct(reduce_field(field, c, k, quad_order=quad_order), basis)


@dataclass(frozen=True)
class CommutationReport:
    """Residuals of one reduce-then-differentiate consistency check."""

    derivative: str
    cochain_residual: float
    cochain_scale: float
    reconstruction_residual: float | None

    @property
    def relative(self) -> float:
        return self.cochain_residual / max(self.cochain_scale, 1e-300)


def check_commutation(c: CellComplex, field, derivative_field, derivative: str,
                      quad_order: int | None = None, samples: int = 200,
                      seed: int = 0) -> CommutationReport:
    """Compare reducing a derivative against applying the coboundary.

    ``derivative`` selects the pair: "grad" (3D, points to lines),
    "rot" (2D, points to line fluxes), "curl" (3D, lines to faces) or
    "div" (flux cells to volumes); ``derivative_field`` must be the
    analytic derivative of ``field``. For "div" the reconstructed-side
    residual compares the directly differentiated interpolant with the
    reconstructed coboundary at random interior points.
    """
    table = {
        "grad": (3, 0, lambda: c.grad_matrix),
        "rot": (2, 0, lambda: c.rot_matrix),
        "curl": (3, 1, lambda: c.curl_matrix),
        "div": (c.dim, c.dim - 1, lambda: c.div_matrix),
    }
    if derivative not in table:
        raise ValueError(f"unknown derivative {derivative!r}")
    dim_req, k, matrix = table[derivative]
    if c.dim != dim_req:
        raise ValueError(f"{derivative} commutation needs a {dim_req}D complex")
    lo = "tangential" if derivative == "grad" else "flux"
    reduced = reduce_field(field, c, k, quad_order=quad_order, line_orientation=lo)
    lhs = reduce_field(derivative_field, c, k + 1, quad_order=quad_order,
                       line_orientation=lo).values
    rhs = matrix() @ reduced.values
    resid = float(np.max(np.abs(lhs - rhs)))
    scale = float(max(np.max(np.abs(lhs)), np.max(np.abs(rhs)), 1.0))
    recon_resid = None
    if derivative == "div":
        rng = np.random.default_rng(seed)
        pts = [
            rng.uniform(c.spec.lo[d], c.spec.hi[d], samples) for d in range(c.dim)
        ]
        fld = reconstruct(reduced)
        direct = fld.divergence(*pts)
        routed = reconstruct(Cochain(c, c.dim, c.div_matrix @ reduced.values))(*pts)
        recon_resid = float(np.max(np.abs(direct - routed)))
    return CommutationReport(derivative, resid, scale, recon_resid)
