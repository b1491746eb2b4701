"""Built-in solver cases: a manufactured no-slip problem and lid-driven cavities.

The manufactured case on the unit square has

    u = ( -2 x^2 (x-1)^2 y (2y-1) (y-1),
           2 y^2 (y-1)^2 x (2x-1) (x-1) )
    p = (x - 1/2)^5 + (y - 1/2)^5

which is divergence-free, vanishes on the whole boundary, and has zero
mean pressure. Vorticity, its curl and the body force are the hand-
derived closed forms (checked against a symbolic oracle in the tests).

The lid-driven cavities live on the unit square/cube with all walls at
rest except the top boundary, which slides with velocity -1 in x.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ExactFields:
    """Analytic solution fields used for error measurement."""

    vorticity: callable
    curl_vorticity: callable
    velocity: callable
    pressure: callable


@dataclass(frozen=True)
class StokesCase:
    """One solvable configuration: domain, data, optional exact solution."""

    name: str
    dim: int
    lo: tuple
    hi: tuple
    body_force: callable
    boundary_velocity: callable
    exact: ExactFields | None = None


def _mf_velocity(x, y):
    u = -2.0 * x**2 * (x - 1.0) ** 2 * y * (2.0 * y - 1.0) * (y - 1.0)
    v = 2.0 * y**2 * (y - 1.0) ** 2 * x * (2.0 * x - 1.0) * (x - 1.0)
    return np.stack([u, v])


def _mf_pressure(x, y):
    return (x - 0.5) ** 5 + (y - 0.5) ** 5


def _mf_vorticity(x, y):
    return 2.0 * y**2 * (y - 1.0) ** 2 * (6.0 * x**2 - 6.0 * x + 1.0) + \
        2.0 * x**2 * (x - 1.0) ** 2 * (6.0 * y**2 - 6.0 * y + 1.0)


def _mf_curl_vorticity(x, y):
    dwdy = 4.0 * y * (y - 1.0) * (2.0 * y - 1.0) * (6.0 * x**2 - 6.0 * x + 1.0) + \
        12.0 * x**2 * (x - 1.0) ** 2 * (2.0 * y - 1.0)
    dwdx = 4.0 * x * (x - 1.0) * (2.0 * x - 1.0) * (6.0 * y**2 - 6.0 * y + 1.0) + \
        12.0 * y**2 * (y - 1.0) ** 2 * (2.0 * x - 1.0)
    return np.stack([dwdy, -dwdx])


def _mf_body_force(x, y):
    curl_w = _mf_curl_vorticity(x, y)
    grad_p = np.stack([5.0 * (x - 0.5) ** 4, 5.0 * (y - 0.5) ** 4])
    return curl_w + grad_p


def _mf_boundary(face, x, y):
    return _mf_velocity(x, y)


def _lid_boundary(dim, speed=-1.0):
    top = "y+" if dim == 2 else "z+"

    def bc(face, *coords):
        shape = np.shape(coords[0])
        out = np.zeros((dim,) + shape)
        if face == top:
            out[0] = speed
        return out

    return bc


def _zero_force(dim):
    def f(*coords):
        return np.zeros((dim,) + np.shape(coords[0]))

    return f


MANUFACTURED_2D = StokesCase(
    name="manufactured2d",
    dim=2,
    lo=(0.0, 0.0),
    hi=(1.0, 1.0),
    body_force=_mf_body_force,
    boundary_velocity=_mf_boundary,
    exact=ExactFields(_mf_vorticity, _mf_curl_vorticity, _mf_velocity, _mf_pressure),
)

LID_2D = StokesCase(
    name="lid2d",
    dim=2,
    lo=(0.0, 0.0),
    hi=(1.0, 1.0),
    body_force=_zero_force(2),
    boundary_velocity=_lid_boundary(2),
)

LID_3D = StokesCase(
    name="lid3d",
    dim=3,
    lo=(0.0, 0.0, 0.0),
    hi=(1.0, 1.0, 1.0),
    body_force=_zero_force(3),
    boundary_velocity=_lid_boundary(3),
)

CASES = {c.name: c for c in (MANUFACTURED_2D, LID_2D, LID_3D)}


def get_case(name: str) -> StokesCase:
    try:
        return CASES[name]
    except KeyError:
        raise ValueError(
            f"unknown case {name!r}; available: {', '.join(sorted(CASES))}"
        ) from None
