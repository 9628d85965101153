"""Mesh-dependent norms, errors against an exact solution, and observed
convergence rates.

The energy norm combines, per element: nu * (broken gradients + scaled
velocity trace jumps), the reaction-weighted L2 norm, the upwind facet
seminorm weighted by |wind . n|, the pressure-jump seminorm weighted by
(alpha/nu) h_K, and gamma times the pressure L2 norm. When an exact solution
is supplied, volume terms integrate the pointwise difference while the jump
terms depend on the discrete fields alone (a continuous function and its own
skeleton trace cancel in every jump).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .tables import ElementTables, evaluate_scalar, evaluate_vector

@dataclass
class ErrorReport:
    h: float
    e_u: float
    e_p: float
    e_energy: float
    components: dict
    n: int = 0
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ConvergenceRecord:
    reports: list
    r_u: list
    r_p: list
    r_dg: list


def _trace_coefficients(layout, ubar, pbar):
    """Gather trace coefficients per (element, local edge) in facet order."""
    mesh = layout.mesh
    scal_v = layout.facet_scalar_v[mesh.elem_facets]  # (ne, 3, nf)
    ubar_c = np.stack(
        [ubar[comp * layout.n_scalar_v + scal_v] for comp in range(2)], axis=2
    )  # (ne, 3, 2, nf)
    pbar_c = pbar[layout.facet_scalar_q[mesh.elem_facets]]  # (ne, 3, nf)
    return ubar_c, pbar_c


def energy_norm(mesh, layout, config, u, ubar, p, pbar, exact=None):
    """Energy norm of the discrete fields, or of their deviation from an
    exact solution. Returns (value, component dict); the squared value is
    the sum of the components."""
    k = layout.k
    vol_ex = config.data_exactness if exact is not None else None
    tab = ElementTables(mesh, k, vol_exactness=vol_ex)
    ne, nb, nf = mesh.num_elements, layout.nb, layout.nf
    w, detj = tab.vol_weights, tab.detj

    uc = u.reshape(ne, 2, nb)
    grad_h = np.einsum(
        "eci,eiqd->ecqd", uc, tab.phys_gradients(), optimize=True
    )  # (ne, 2, nq, 2)
    val_h = np.einsum("eci,iq->ecq", uc, tab.vol_vals)
    p_h = np.einsum("ei,iq->eq", p.reshape(ne, nb), tab.vol_vals)
    if exact is not None:
        pts = tab.vol_points.reshape(-1, 2)
        grad_h = grad_h - exact.grad_u(pts).reshape(ne, -1, 2, 2).transpose(0, 2, 1, 3)
        val_h = val_h - exact.u(pts).reshape(ne, -1, 2).transpose(0, 2, 1)
        p_h = p_h - exact.p(pts).reshape(ne, -1)
    grad_sq = np.einsum("q,ecqd,ecqd,e->", w, grad_h, grad_h, detj, optimize=True)
    reaction = config.sigma * np.einsum(
        "q,ecq,ecq,e->", w, val_h, val_h, detj, optimize=True
    )
    pressure_l2 = config.gamma * np.einsum("q,eq,eq,e->", w, p_h, p_h, detj)

    ubar_c, pbar_c = _trace_coefficients(layout, ubar, pbar)
    uc_all = u.reshape(ne, 2, nb)
    tr_u = np.einsum("eci,liq->elcq", uc_all, tab.edge_vals)
    tr_ubar = np.einsum("elcm,elmq->elcq", ubar_c, tab.facet_vals)
    jump_u = tr_u - tr_ubar  # (ne, 3, 2, nqe)
    tr_p = np.einsum("ei,liq->elq", p.reshape(ne, nb), tab.edge_vals)
    tr_pbar = np.einsum("elm,elmq->elq", pbar_c, tab.facet_vals)
    jump_p = tr_p - tr_pbar

    we = tab.edge_weights
    lengths = tab.edge_lengths
    jump_sq = np.einsum("q,elcq,elcq->el", we, jump_u, jump_u)
    visc_jump = config.eta * np.einsum("el,el,e->", jump_sq, lengths, 1.0 / tab.h_k)
    viscous = config.nu * (grad_sq + visc_jump)

    wind_n = np.einsum(
        "elqd,eld->elq", tab.wind_edges(config.wind_fn()), tab.normals
    )
    upwind = 0.5 * np.einsum(
        "q,elq,elcq,elcq,el->", we, np.abs(wind_n), jump_u, jump_u, lengths,
        optimize=True,
    )
    pjump_sq = np.einsum("q,elq,elq,el->e", we, jump_p, jump_p, lengths)
    pressure_jump = config.alpha / config.nu * float(pjump_sq @ tab.h_k)

    components = {
        "viscous": float(viscous),
        "reaction": float(reaction),
        "upwind": float(upwind),
        "pressure_jump": float(pressure_jump),
        "pressure_l2": float(pressure_l2),
    }
    return math.sqrt(sum(components.values())), components


def l2_error(coefficients, exact, mesh, layout, field="velocity", exactness=16):
    """L2 distance between a broken field and a pointwise-evaluable one."""
    tab = ElementTables(mesh, layout.k, vol_exactness=exactness)
    ne, nb = mesh.num_elements, layout.nb
    pts = tab.vol_points.reshape(-1, 2)
    if field == "velocity":
        vals = np.einsum("eci,iq->ecq", coefficients.reshape(ne, 2, nb), tab.vol_vals)
        diff = vals - evaluate_vector(exact, pts).reshape(ne, -1, 2).transpose(0, 2, 1)
        sq = np.einsum("q,ecq,ecq,e->", tab.vol_weights, diff, diff, tab.detj)
    elif field == "pressure":
        vals = np.einsum("ei,iq->eq", coefficients.reshape(ne, nb), tab.vol_vals)
        diff = vals - evaluate_scalar(exact, pts).reshape(ne, -1)
        sq = np.einsum("q,eq,eq,e->", tab.vol_weights, diff, diff, tab.detj)
    else:
        raise ValueError(f"unknown field {field!r}")
    return math.sqrt(sq)


def error_report(mesh, layout, config, solution, case):
    """Errors of a discrete solution against a manufactured case."""
    e_u = l2_error(solution.u, case.u, mesh, layout, "velocity")
    e_p = l2_error(solution.p, case.p, mesh, layout, "pressure")
    e_dg, comps = energy_norm(
        mesh, layout, config,
        solution.u, solution.ubar, solution.p, solution.pbar, exact=case,
    )
    return ErrorReport(
        h=1.0 / mesh.n,
        e_u=e_u,
        e_p=e_p,
        e_energy=e_dg,
        components=comps,
        n=mesh.n,
        diagnostics=dict(solution.diagnostics),
    )


def compute_rates(reports):
    """Observed rates log2(e(h)/e(h/2)) between consecutive halvings."""
    if not reports:
        raise ValueError("need at least one error report")
    hs = [r.h for r in reports]
    for h0, h1 in zip(hs, hs[1:]):
        if not math.isclose(h0 / h1, 2.0, rel_tol=1e-9):
            raise ValueError("meshes must form a halving sequence")
    for r in reports:
        if min(r.e_u, r.e_p, r.e_energy) <= 0.0:
            raise ValueError("rates require positive errors")

    def rates(key):
        es = [getattr(r, key) for r in reports]
        return [None] + [
            math.log(a / b) / math.log(2.0) for a, b in zip(es, es[1:])
        ]

    return ConvergenceRecord(
        reports=list(reports),
        r_u=rates("e_u"),
        r_p=rates("e_p"),
        r_dg=rates("e_energy"),
    )
