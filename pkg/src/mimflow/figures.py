"""Matplotlib renderings of solved fields and convergence tables.

Figures are written next to the delimited output of each CLI command:
field panels for a solve (velocity magnitude, divergence, pressure,
vorticity; y-slices in 3D) and a log-log error chart for a sweep.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import ERROR_FIELDS

_PNG_META = {"Software": "mimflow"}


def render_solution(path, sampled: dict, dim: int, title: str) -> None:
    if dim == 2:
        _render_2d(path, sampled, title)
    else:
        _render_3d_slices(path, sampled, title)


def _render_2d(path, sampled, title):
    axes = sampled["axes"]
    umag = np.hypot(sampled["velocity"][0], sampled["velocity"][1])
    panels = [
        ("|u|", umag),
        ("div u", sampled["divergence"]),
        ("p", sampled["pressure"]),
        ("omega", sampled["vorticity"]),
    ]
    fig, axs = plt.subplots(2, 2, figsize=(9, 8), constrained_layout=True)
    for ax, (label, data) in zip(axs.ravel(), panels):
        im = ax.pcolormesh(axes[0], axes[1], data.T, shading="gouraud")
        ax.set_aspect("equal")
        ax.set_title(label)
        fig.colorbar(im, ax=ax, shrink=0.85)
    fig.suptitle(title)
    fig.savefig(path, dpi=130, metadata=_PNG_META)
    plt.close(fig)


def _render_3d_slices(path, sampled, title, fractions=(0.1, 0.5, 0.9)):
    axes = sampled["axes"]
    ny = len(axes[1])
    umag = np.sqrt(sum(sampled["velocity"][i] ** 2 for i in range(3)))
    div = sampled["divergence"]
    fig, axs = plt.subplots(2, len(fractions), figsize=(11, 7), constrained_layout=True)
    for col, frac in enumerate(fractions):
        j = min(int(round(frac * (ny - 1))), ny - 1)
        for row, (label, data) in enumerate((("|u|", umag), ("div u", div))):
            ax = axs[row, col]
            im = ax.pcolormesh(axes[0], axes[2], data[:, j, :].T, shading="gouraud")
            ax.set_aspect("equal")
            ax.set_title(f"{label}, y = {axes[1][j]:.2f}")
            fig.colorbar(im, ax=ax, shrink=0.8)
    fig.suptitle(title)
    fig.savefig(path, dpi=130, metadata=_PNG_META)
    plt.close(fig)


def render_convergence(path, report, degrees, title) -> None:
    markers = "osd^v<>"
    fig, axs = plt.subplots(1, 3, figsize=(13, 4.2), constrained_layout=True)
    panels = (("omega_hcurl", "vorticity H(curl) error"),
              ("u_hdiv", "velocity H(div) error"),
              ("p_l2", "pressure L2 error"))
    for ax, (fld, label) in zip(axs, panels):
        for i, n in enumerate(degrees):
            entries = report.entries_for(n)
            if not entries:
                continue
            hs = np.array([e.h for e in entries])
            errs = np.array([e.errors[fld] for e in entries])
            ax.loglog(hs, errs, marker=markers[i % len(markers)], label=f"N = {n}")
            ref = errs[0] * (hs / hs[0]) ** n
            ax.loglog(hs, ref, "k--", linewidth=0.8, alpha=0.6)
        ax.set_xlabel("h")
        ax.set_title(label)
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
    fig.suptitle(title)
    fig.savefig(path, dpi=130, metadata=_PNG_META)
    plt.close(fig)
