"""Deterministic file writers: summary JSON, delimited fields, legacy VTK.

All floats are written with a fixed 16-digit scientific format and no
timestamps, so identical runs produce byte-identical files.
"""

import json

import numpy as np

SUMMARY_SCHEMA = "mimflow.summary/1"

ERRORS_CSV_COLUMNS = (
    "dim,degree,elements,h,err_omega_l2,err_omega_hcurl,err_u_l2,err_u_hdiv,"
    "err_p_l2,max_div,residual"
)


def _fmt(x) -> str:
    return f"{float(x):.16e}"


def write_summary(path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_fields_csv(path, sampled: dict, dim: int) -> None:
    """Sampled solution fields, one grid point per row, x fastest."""
    axes = sampled["axes"]
    mesh = np.meshgrid(*axes, indexing="ij")
    coord_names = ["x", "y", "z"][:dim]
    columns = list(coord_names)
    arrays = [m for m in mesh]
    if dim == 2:
        columns += ["omega"]
        arrays += [sampled["vorticity"]]
    else:
        columns += ["omega_x", "omega_y", "omega_z"]
        arrays += [sampled["vorticity"][i] for i in range(3)]
    columns += [f"u_{n}" for n in coord_names]
    arrays += [sampled["velocity"][i] for i in range(dim)]
    columns += ["p", "div_u"]
    arrays += [sampled["pressure"], sampled["divergence"]]
    flat = [a.ravel(order="F") for a in arrays]
    with open(path, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for row in zip(*flat):
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_fields_vtk(path, sampled: dict, dim: int, title: str) -> None:
    """Legacy ASCII structured-points file with all solution fields."""
    axes = sampled["axes"]
    dims = [len(a) for a in axes] + [1] * (3 - dim)
    origin = [float(a[0]) for a in axes] + [0.0] * (3 - dim)
    spacing = [
        float(a[1] - a[0]) if len(a) > 1 else 1.0 for a in axes
    ] + [1.0] * (3 - dim)
    npts = int(np.prod(dims))

    def flat(a):
        return np.asarray(a).ravel(order="F")

    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write(f"{title}\n")
        fh.write("ASCII\nDATASET STRUCTURED_POINTS\n")
        fh.write(f"DIMENSIONS {dims[0]} {dims[1]} {dims[2]}\n")
        fh.write(f"ORIGIN {_fmt(origin[0])} {_fmt(origin[1])} {_fmt(origin[2])}\n")
        fh.write(f"SPACING {_fmt(spacing[0])} {_fmt(spacing[1])} {_fmt(spacing[2])}\n")
        fh.write(f"POINT_DATA {npts}\n")

        def scalars(name, arr):
            fh.write(f"SCALARS {name} double\nLOOKUP_TABLE default\n")
            for v in flat(arr):
                fh.write(_fmt(v) + "\n")

        def vectors(name, comps):
            fh.write(f"VECTORS {name} double\n")
            cols = [flat(comp) for comp in comps]
            if len(cols) == 2:
                cols.append(np.zeros_like(cols[0]))
            for row in zip(*cols):
                fh.write(" ".join(_fmt(v) for v in row) + "\n")

        scalars("pressure", sampled["pressure"])
        scalars("divergence", sampled["divergence"])
        vectors("velocity", [sampled["velocity"][i] for i in range(dim)])
        if dim == 2:
            scalars("vorticity", sampled["vorticity"])
        else:
            vectors("vorticity", [sampled["vorticity"][i] for i in range(3)])


def write_errors_csv(path, report, degrees, rate_fields) -> None:
    """Convergence table with fitted rates appended as comment footers."""
    with open(path, "w") as fh:
        fh.write(ERRORS_CSV_COLUMNS + "\n")
        for e in report.entries:
            row = [
                str(e.dim), str(e.degree), str(e.elements), _fmt(e.h),
                _fmt(e.errors["omega_l2"]), _fmt(e.errors["omega_hcurl"]),
                _fmt(e.errors["u_l2"]), _fmt(e.errors["u_hdiv"]),
                _fmt(e.errors["p_l2"]), _fmt(e.max_div), _fmt(e.residual),
            ]
            fh.write(",".join(row) + "\n")
        if report.partial:
            fh.write("# partial sweep: one or more solves failed\n")
        for n in degrees:
            for fld in rate_fields:
                fit = report.rates.get((n, fld))
                if fit is None:
                    continue
                tag = " saturated" if fit.saturated else ""
                fh.write(
                    f"# rate degree={n} field={fld} slope={fit.rate:.4f} "
                    f"fit_residual={fit.fit_residual:.3e}{tag}\n"
                )
