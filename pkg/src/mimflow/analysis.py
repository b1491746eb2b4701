"""Error norms, h-convergence sweeps and the discrete inf-sup constant."""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .assembly import assemble_stokes, mass_matrix, reduce_normal_bc
from .basis import SpectralBasis, gauss_rule, spectral_basis
from .cases import StokesCase
from .mimetic import Cochain, reconstruct
from .solver import solve
from .topology import CellComplex, MeshSpec, build_complex

ERROR_FIELDS = ("omega_l2", "omega_hcurl", "u_l2", "u_hdiv", "p_l2")


@dataclass(frozen=True)
class ErrorEntry:
    """Norm errors of one solve against the analytic solution."""

    dim: int
    degree: int
    elements: int
    h: float
    errors: dict
    max_div: float
    residual: float


@dataclass
class RateFit:
    """Least-squares slope of log(error) against log(h)."""

    rate: float
    fit_residual: float
    saturated: bool


@dataclass
class ErrorReport:
    """Entries of a convergence sweep plus fitted rates per degree."""

    entries: list = field(default_factory=list)
    rates: dict = field(default_factory=dict)  # (degree, field) -> RateFit
    partial: bool = False

    def entries_for(self, degree: int):
        return [e for e in self.entries if e.degree == degree]


def _quad_mesh(c: CellComplex, order: int):
    """Per-element tensor Gauss points and combined weights."""
    rule = gauss_rule(order)
    h2 = [0.5 * h for h in c.element_size]
    pts, wts = [], None
    for elem in c.element_multi_indices():
        origin = c.element_origin(elem)
        coords = [origin[d] + h2[d] * (rule.points + 1.0) for d in range(c.dim)]
        mesh = np.meshgrid(*coords, indexing="ij")
        w = np.ones(mesh[0].shape)
        for d in range(c.dim):
            shape = [1] * c.dim
            shape[d] = -1
            w = w * (h2[d] * rule.weights).reshape(shape)
        pts.append([m.ravel() for m in mesh])
        wts = w.ravel() if wts is None else wts
    all_pts = [np.concatenate([p[d] for p in pts]) for d in range(c.dim)]
    all_wts = np.tile(wts, len(pts))
    return all_pts, all_wts


def _l2_norm_sq(weights, values):
    values = np.asarray(values)
    if values.ndim == 1:
        return float(weights @ values**2)
    return float(sum(weights @ comp**2 for comp in values))


def error_norms(sol, case: StokesCase, c: CellComplex,
                basis: SpectralBasis | None = None,
                quad_order: int | None = None) -> ErrorEntry:
    """L2, H(curl) and H(div) errors by over-integrated quadrature.

    Uses N+3 Gauss points per direction by default. The pressure error
    is measured after aligning domain means, since the solution pressure
    is only defined up to the gauge constant. The divergence part of
    the H(div) error is the norm of the reconstructed divergence itself
    (the exact solutions here are divergence-free).
    """
    if case.exact is None:
        raise ValueError(f"case {case.name!r} has no analytic solution")
    if basis is None:
        basis = spectral_basis(c.degree)
    order = quad_order if quad_order is not None else c.degree + 3
    pts, wts = _quad_mesh(c, order)
    volume = float(np.prod(np.asarray(c.spec.hi) - np.asarray(c.spec.lo)))

    w_h = reconstruct(sol.vorticity, basis)(*pts)
    u_h = reconstruct(sol.velocity, basis)(*pts)
    p_h = reconstruct(sol.pressure, basis)(*pts)
    curl_w_h = reconstruct(
        Cochain(c, c.dim - 1, c.derivative_matrix(0 if c.dim == 2 else 1)
                @ sol.vorticity.values), basis)(*pts)
    div_u_h = reconstruct(Cochain(c, c.dim, c.div_matrix @ sol.velocity.values),
                          basis)(*pts)

    w_ex = np.asarray(case.exact.vorticity(*pts))
    cw_ex = np.asarray(case.exact.curl_vorticity(*pts))
    u_ex = np.asarray(case.exact.velocity(*pts))
    p_ex = np.asarray(case.exact.pressure(*pts))

    # gauge alignment: shift the discrete pressure to the exact mean
    p_shift = (wts @ p_ex - wts @ p_h) / volume
    p_h = p_h + p_shift

    e_w = _l2_norm_sq(wts, w_h - w_ex)
    e_cw = _l2_norm_sq(wts, curl_w_h - cw_ex)
    e_u = _l2_norm_sq(wts, u_h - u_ex)
    e_div = _l2_norm_sq(wts, div_u_h)  # exact divergence vanishes
    e_p = _l2_norm_sq(wts, p_h - p_ex)
    errors = {
        "omega_l2": np.sqrt(e_w),
        "omega_hcurl": np.sqrt(e_w + e_cw),
        "u_l2": np.sqrt(e_u),
        "u_hdiv": np.sqrt(e_u + e_div),
        "p_l2": np.sqrt(e_p),
    }
    max_div = float(np.max(np.abs(div_u_h)))
    return ErrorEntry(
        dim=c.dim,
        degree=c.degree,
        elements=max(c.spec.elements),
        h=float(max(c.element_size)),
        errors=errors,
        max_div=max_div,
        residual=sol.residual,
    )


def fit_rates(hs, errs, n_points: int = 3) -> RateFit:
    """Slope of the log-log fit over the finest ``n_points`` meshes.

    Errors at roundoff level or no longer decreasing mark the fit as
    saturated; a single mesh yields a NaN rate.
    """
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if hs.size < 2:
        return RateFit(float("nan"), float("nan"), False)
    order = np.argsort(hs)[::-1]  # coarse to fine
    hs, errs = hs[order], errs[order]
    saturated = bool(np.any(errs < 1e-13) or np.any(np.diff(errs) > 0))
    tail = min(n_points, hs.size)
    lh, le = np.log(hs[-tail:]), np.log(np.maximum(errs[-tail:], 1e-300))
    coeffs, res = np.polyfit(lh, le, 1, full=True)[:2]
    fit_res = float(np.sqrt(res[0])) if res.size else 0.0
    return RateFit(float(coeffs[0]), fit_res, saturated)


def _solve_case_on(case: StokesCase, degree: int, elements: int):
    spec = MeshSpec(case.dim, (elements,) * case.dim, degree, case.lo, case.hi)
    c = build_complex(spec)
    basis = spectral_basis(degree)
    sys = assemble_stokes(c, basis, case.body_force, case.boundary_velocity)
    sol = solve(sys)
    return error_norms(sol, case, c, basis)


def convergence_study(case: StokesCase, degrees, element_counts,
                      threads: int | None = None) -> ErrorReport:
    """Sweep (degree, elements) combinations and fit per-degree rates.

    Independent solves may run in parallel (capped by MIMETIC_THREADS);
    the report is assembled in (degree, elements) order regardless.
    A failed solve aborts its degree's remaining meshes and marks the
    report partial.
    """
    degrees = list(degrees)
    element_counts = list(element_counts)
    if not degrees or not element_counts:
        raise ValueError("need at least one degree and one element count")
    if threads is None:
        threads = int(os.environ.get("MIMETIC_THREADS", "1"))
    jobs = [(n, k) for n in degrees for k in element_counts]
    results: dict = {}
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {
                (n, k): pool.submit(_solve_case_on, case, n, k) for n, k in jobs
            }
        for key, fut in futures.items():
            try:
                results[key] = fut.result()
            except Exception as exc:
                results[key] = exc
    else:
        for n, k in jobs:
            try:
                results[(n, k)] = _solve_case_on(case, n, k)
            except Exception as exc:
                results[(n, k)] = exc
    report = ErrorReport()
    for n in degrees:
        for k in element_counts:
            out = results[(n, k)]
            if isinstance(out, Exception):
                report.partial = True
                break
            report.entries.append(out)
    for n in degrees:
        entries = report.entries_for(n)
        if len(entries) < 2:
            for fld in ERROR_FIELDS:
                report.rates[(n, fld)] = RateFit(float("nan"), float("nan"), False)
            continue
        hs = [e.h for e in entries]
        for fld in ERROR_FIELDS:
            report.rates[(n, fld)] = fit_rates(hs, [e.errors[fld] for e in entries])
    return report


def inf_sup_constant(c: CellComplex, basis: SpectralBasis | None = None) -> float:
    """Discrete inf-sup constant of the velocity-pressure pair.

    Square root of the smallest nonzero eigenvalue of the dense pressure
    Schur pencil (M_p D) M_u^{-1} (M_p D)^T q = lambda M_p q with the
    essential (normal velocity) dofs removed and the constant-pressure
    mode deflated. Intended for small meshes.
    """
    eigs = pressure_schur_spectrum(c, basis)
    if eigs.size < 2:
        raise ValueError(
            "inf-sup constant needs at least two pressure dofs "
            "(a single cell at degree one has only the constant mode)"
        )
    nonzero = eigs[eigs > 1e-10 * max(eigs[-1], 1e-300)]
    if nonzero.size == 0:
        raise RuntimeError("pressure Schur spectrum collapsed to zero")
    return float(np.sqrt(nonzero[0]))


def pressure_schur_spectrum(c: CellComplex,
                            basis: SpectralBasis | None = None) -> np.ndarray:
    """Ascending eigenvalues of the pressure Schur pencil (dense solve)."""
    if basis is None:
        basis = spectral_basis(c.degree)
    m_u = mass_matrix(c, basis, c.dim - 1)
    m_p = mass_matrix(c, basis, c.dim)
    zero_bc = lambda face, *coords: np.zeros((c.dim,) + np.shape(coords[0]))
    fixed, _ = reduce_normal_bc(c, zero_bc)
    free = np.setdiff1d(np.arange(c.n_cells(c.dim - 1)), fixed)
    b = (m_p @ c.div_matrix.tocsc()[:, free]).toarray()
    mu_free = m_u.tocsc()[:, free].tocsr()[free].toarray()
    schur = b @ np.linalg.solve(mu_free, b.T)
    eigs = scipy.linalg.eigh(schur, m_p.toarray(), eigvals_only=True)
    return np.sort(eigs)
