"""Oriented tensor-product cell complexes on axis-aligned boxes.

A mesh of K elements per direction, each carrying a degree-N GLL grid,
is globally a tensor grid with K*N fine cells per direction (element
interfaces share grid planes). Cells are points, lines, surfaces and
volumes; the coboundary matrices are built from Kronecker products of
1D signed-difference matrices, so grad-then-curl and curl-then-div
vanish as exact integer identities.

Conventions, fixed once and validated end to end by the solver tests:

* numbering is lexicographic with x fastest;
* line species are named by direction ("x", "y", "z"), face species by
  normal direction (storage order yz, zx, xy);
* a line dof is the tangential integral in the positive direction;
  in 2D a line dof is the flux across the line in the positive
  transverse direction (x-lines carry +y flux, y-lines carry +x flux);
* a face dof is the flux in the positive normal direction;
* volume rows of the divergence sum bounding fluxes with + on the
  positive-coordinate side, reproducing
  m_ij = u_ij - u_(i-1)j + v_ij - v_i(j-1) on a single 2D cell.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .basis import gll_rule

# Refuse to build complexes whose dof vectors would not fit comfortably
# in memory; counts are validated before any allocation.
MAX_CELLS = 2**31

FACE_TAGS = {2: ("x-", "x+", "y-", "y+"), 3: ("x-", "x+", "y-", "y+", "z-", "z+")}


@dataclass(frozen=True)
class MeshSpec:
    """Mesh request: dimension, per-direction element counts, degree, box."""

    dim: int
    elements: tuple
    degree: int
    lo: tuple
    hi: tuple

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        object.__setattr__(self, "elements", tuple(int(k) for k in self.elements))
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.elements) != self.dim or len(self.lo) != self.dim or len(self.hi) != self.dim:
            raise ValueError("elements, lo and hi must all have length dim")
        if any(k < 1 for k in self.elements):
            raise ValueError("element counts must be >= 1")
        if self.degree < 1:
            raise ValueError("degree must be >= 1")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise ValueError("box must satisfy hi > lo componentwise")


def _ddx(m: int) -> sp.csr_matrix:
    """Signed 1D difference matrix (m, m+1): row i = -1 at i, +1 at i+1."""
    ones = np.ones(m, dtype=np.int64)
    return sp.diags([-ones, ones], [0, 1], shape=(m, m + 1), dtype=np.int64).tocsr()


def _eye(n: int) -> sp.csr_matrix:
    return sp.identity(n, dtype=np.int64, format="csr")


def _kron(*mats) -> sp.csr_matrix:
    """Kronecker chain ordered slowest axis first (x fastest overall)."""
    out = mats[0]
    for m in mats[1:]:
        out = sp.kron(out, m, format="csr")
    return out.astype(np.int64)


class CellComplex:
    """Immutable cell complex with GLL grid coordinates and coboundaries."""

    def __init__(self, spec: MeshSpec):
        self.spec = spec
        self.dim = spec.dim
        self.degree = spec.degree
        self.rule = gll_rule(spec.degree)
        # fine cells / grid planes per direction
        self.m = tuple(k * spec.degree for k in spec.elements)
        self.n = tuple(mi + 1 for mi in self.m)
        total_pts = 1
        for ni in self.n:
            total_pts *= ni
        if total_pts > MAX_CELLS:
            raise ValueError(
                f"mesh would carry {total_pts} grid points, above the supported "
                f"limit of {MAX_CELLS}; reduce elements or degree"
            )
        self.element_size = tuple(
            (h - l) / k for l, h, k in zip(spec.lo, spec.hi, spec.elements)
        )
        self.grids = tuple(self._grid(d) for d in range(self.dim))

    def _grid(self, d: int) -> np.ndarray:
        lo = self.spec.lo[d]
        h = self.element_size[d]
        ref = self.rule.nodes
        pieces = [lo + h * (k + 0.5 * (ref[:-1] + 1.0)) for k in range(self.spec.elements[d])]
        g = np.concatenate(pieces + [[self.spec.hi[d]]])
        g.setflags(write=False)
        return g

    # ------------------------------------------------------------- species

    def species(self, k: int):
        """Species names of k-cells in storage order."""
        if self.dim == 2:
            table = {0: ("node",), 1: ("x", "y"), 2: ("vol",)}
        else:
            table = {0: ("node",), 1: ("x", "y", "z"), 2: ("x", "y", "z"), 3: ("vol",)}
        if k not in table:
            raise ValueError(f"no {k}-cells in dimension {self.dim}")
        return table[k]

    def species_shape(self, k: int, name: str):
        """Per-direction index ranges of one species, x first."""
        axes = {"x": 0, "y": 1, "z": 2}
        if k == 0:
            return self.n
        if k == self.dim:
            return self.m
        if k == 1:  # line directed along `name`
            d = axes[name]
            return tuple(self.m[i] if i == d else self.n[i] for i in range(self.dim))
        if k == 2 and self.dim == 3:  # face with normal `name`
            d = axes[name]
            return tuple(self.n[i] if i == d else self.m[i] for i in range(self.dim))
        raise ValueError(f"no species {name!r} for k={k} in dimension {self.dim}")

    def species_count(self, k: int, name: str) -> int:
        return int(np.prod(self.species_shape(k, name)))

    def species_offset(self, k: int, name: str) -> int:
        off = 0
        for s in self.species(k):
            if s == name:
                return off
            off += self.species_count(k, s)
        raise ValueError(f"unknown species {name!r}")

    def n_cells(self, k: int) -> int:
        return sum(self.species_count(k, s) for s in self.species(k))

    def cell_id(self, k: int, name: str, idx) -> int:
        """Global id of a k-cell from its species and tensor index."""
        shape = self.species_shape(k, name)
        return self.species_offset(k, name) + int(
            np.ravel_multi_index(tuple(idx), shape, order="F")
        )

    def cell_index(self, k: int, gid: int):
        """Inverse numbering map: global id -> (species, tensor index)."""
        off = 0
        for s in self.species(k):
            cnt = self.species_count(k, s)
            if gid < off + cnt:
                idx = np.unravel_index(gid - off, self.species_shape(k, s), order="F")
                return s, tuple(int(i) for i in idx)
            off += cnt
        raise IndexError(f"{k}-cell id {gid} out of range")

    # --------------------------------------------------------- coboundaries

    @cached_property
    def grad_matrix(self) -> sp.csr_matrix:
        """Points -> lines: +1 at the head of each line, -1 at the tail."""
        n, m = self.n, self.m
        if self.dim == 2:
            blocks = [_kron(_eye(n[1]), _ddx(m[0])), _kron(_ddx(m[1]), _eye(n[0]))]
        else:
            blocks = [
                _kron(_eye(n[2]), _eye(n[1]), _ddx(m[0])),
                _kron(_eye(n[2]), _ddx(m[1]), _eye(n[0])),
                _kron(_ddx(m[2]), _eye(n[1]), _eye(n[0])),
            ]
        return sp.vstack(blocks, format="csr").astype(np.int64)

    @cached_property
    def rot_matrix(self) -> sp.csr_matrix:
        """2D points -> line fluxes: the outer-oriented scalar rotor.

        A y-line flux of the rotor is the head-tail point difference
        along the line; an x-line flux is its negative.
        """
        if self.dim != 2:
            raise ValueError("rot_matrix is the 2D operator; use curl_matrix in 3D")
        n, m = self.n, self.m
        return sp.vstack(
            [-_kron(_eye(n[1]), _ddx(m[0])), _kron(_ddx(m[1]), _eye(n[0]))],
            format="csr",
        ).astype(np.int64)

    @cached_property
    def curl_matrix(self) -> sp.csr_matrix:
        """3D lines -> face fluxes: each face row traces its boundary loop."""
        if self.dim != 3:
            raise ValueError("curl_matrix needs a 3D complex; use rot_matrix in 2D")
        n, m = self.n, self.m
        c_xy = -_kron(_ddx(m[2]), _eye(m[1]), _eye(n[0]))
        c_xz = _kron(_eye(m[2]), _ddx(m[1]), _eye(n[0]))
        c_yz = -_kron(_eye(m[2]), _eye(n[1]), _ddx(m[0]))
        c_yx = _kron(_ddx(m[2]), _eye(n[1]), _eye(m[0]))
        c_zx = -_kron(_eye(n[2]), _ddx(m[1]), _eye(m[0]))
        c_zy = _kron(_eye(n[2]), _eye(m[1]), _ddx(m[0]))
        return sp.bmat(
            [[None, c_xy, c_xz], [c_yx, None, c_yz], [c_zx, c_zy, None]], format="csr"
        ).astype(np.int64)

    @cached_property
    def div_matrix(self) -> sp.csr_matrix:
        """(dim-1)-cells -> volumes: signed sum of bounding fluxes."""
        n, m = self.n, self.m
        if self.dim == 2:
            blocks = [_kron(_ddx(m[1]), _eye(m[0])), _kron(_eye(m[1]), _ddx(m[0]))]
        else:
            blocks = [
                _kron(_eye(m[2]), _eye(m[1]), _ddx(m[0])),
                _kron(_eye(m[2]), _ddx(m[1]), _eye(m[0])),
                _kron(_ddx(m[2]), _eye(m[1]), _eye(m[0])),
            ]
        return sp.hstack(blocks, format="csr").astype(np.int64)

    def derivative_matrix(self, k: int) -> sp.csr_matrix:
        """Coboundary from k-cochains to (k+1)-cochains."""
        if k == 0:
            return self.grad_matrix if self.dim == 3 else self.rot_matrix
        if k == 1 and self.dim == 3:
            return self.curl_matrix
        if k == self.dim - 1:
            return self.div_matrix
        raise ValueError(f"no coboundary from k={k} in dimension {self.dim}")

    # ------------------------------------------------------------ boundary

    def boundary_cells(self, k: int, species=None):
        """Ids of k-cells lying on the box boundary, grouped by face tag.

        A cell lies on face "d-"/"d+" when it has no extent in direction
        d and sits on the first/last grid plane. Ids are sorted, so the
        grouping is deterministic. Point cells appear under every face
        that contains them.
        """
        names = self.species(k) if species is None else (species,)
        out = {tag: [] for tag in FACE_TAGS[self.dim]}
        axes = "xyz"[: self.dim]
        for name in names:
            shape = self.species_shape(k, name)
            off = self.species_offset(k, name)
            for d in range(self.dim):
                if shape[d] != self.n[d]:
                    continue  # cell species extends through direction d
                for side, plane in (("-", 0), ("+", self.n[d] - 1)):
                    idx = [np.arange(s) for s in shape]
                    idx[d] = np.array([plane])
                    mesh = np.meshgrid(*idx, indexing="ij")
                    ids = off + np.ravel_multi_index(
                        [g.ravel(order="F") for g in mesh], shape, order="F"
                    )
                    out[f"{axes[d]}{side}"].append(np.sort(ids))
        return {
            tag: (np.sort(np.concatenate(chunks)) if chunks else np.empty(0, dtype=int))
            for tag, chunks in out.items()
        }

    # ------------------------------------------------------------ elements

    @property
    def n_elements(self) -> int:
        out = 1
        for k in self.spec.elements:
            out *= k
        return out

    def element_multi_indices(self):
        """All element tensor indices in lexicographic order, x fastest."""
        ranges = [np.arange(k) for k in self.spec.elements]
        mesh = np.meshgrid(*ranges, indexing="ij")
        flat = [g.ravel(order="F") for g in mesh]
        return list(zip(*[f.tolist() for f in flat]))

    def element_origin(self, elem) -> tuple:
        return tuple(
            self.spec.lo[d] + elem[d] * self.element_size[d] for d in range(self.dim)
        )


def build_complex(spec: MeshSpec) -> CellComplex:
    """Build the oriented complex for a mesh request."""
    return CellComplex(spec)


def export_matrix_market(matrix, path) -> None:
    """Write a sparse matrix in Matrix Market coordinate format."""
    from scipy.io import mmwrite

    mmwrite(str(path), sp.coo_matrix(matrix))
