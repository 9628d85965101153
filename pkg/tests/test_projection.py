import math

import numpy as np
import pytest

from oseenhdg.analysis import energy_norm, l2_error
from oseenhdg.forms import OseenConfig
from oseenhdg.mesh import build_uniform_mesh
from oseenhdg.projection import lagrange_interpolate, project_element, project_facet
from oseenhdg.refspace import edge_rule, reference_basis
from oseenhdg.spaces import build_layout
from oseenhdg.study import manufactured_case
from oseenhdg.tables import ElementTables

rng = np.random.default_rng(23)


def broken_l2(mesh, k, coef, fn):
    lay = build_layout(mesh, min(k, 2), "hdg")
    return l2_error(coef, fn, mesh, lay, "pressure")


def facet_l2_sq(mesh, k, coef, fn, normalized=False):
    """Squared skeleton L2 distance between facet coefficients and fn.

    With ``normalized`` the square is divided by the total skeleton length,
    which realizes the per-facet approximation order (the raw skeleton sum
    picks up an extra 1/h from the growing facet count).
    """
    rule = edge_rule(max(2 * k, 16))
    basis = reference_basis(k)
    mu = basis.edge_values(rule.points)
    va = mesh.vertices[mesh.facet_vertices[:, 0]]
    vb = mesh.vertices[mesh.facet_vertices[:, 1]]
    pts = (
        va[:, None, :] * (1 - rule.points)[None, :, None]
        + vb[:, None, :] * rule.points[None, :, None]
    )
    vals = coef.reshape(mesh.num_facets, k + 1) @ mu
    exact = fn(pts.reshape(-1, 2)).reshape(mesh.num_facets, -1)
    out = float(
        np.einsum(
            "q,fq,f->", rule.weights, (vals - exact) ** 2, mesh.facet_lengths
        )
    )
    return out / mesh.facet_lengths.sum() if normalized else out


@pytest.mark.parametrize("k", [1, 2])
def test_projection_reproduces_polynomials(k):
    mesh = build_uniform_mesh(2)

    def poly(pts):
        x, y = pts[:, 0], pts[:, 1]
        return 1.0 + 2 * x - y + (x * y if k == 2 else 0.0)

    coef = project_element(poly, mesh, k)
    assert broken_l2(mesh, k, coef, poly) < 1e-13


def test_projection_zero():
    mesh = build_uniform_mesh(2)
    assert np.all(project_element(lambda pts: np.zeros(len(pts)), mesh, 1) == 0.0)


def test_projection_orthogonality_residual():
    mesh = build_uniform_mesh(3)
    k = 2

    def f(pts):
        return np.sin(2 * np.pi * pts[:, 0]) * np.cos(pts[:, 1])

    coef = project_element(f, mesh, k)
    tab = ElementTables(mesh, k, vol_exactness=18)
    fq = f(tab.vol_points.reshape(-1, 2)).reshape(mesh.num_elements, -1)
    ph = np.einsum("ei,iq->eq", coef.reshape(mesh.num_elements, -1), tab.vol_vals)
    resid = np.einsum("q,eq,iq,e->ei", tab.vol_weights, ph - fq, tab.vol_vals, tab.detj)
    norm = math.sqrt(
        np.einsum("q,eq,eq,e->", tab.vol_weights, fq, fq, tab.detj)
    )
    assert np.abs(resid).max() <= 1e-11 * norm


def test_projection_idempotent():
    mesh = build_uniform_mesh(2)
    k = 2
    f = lambda pts: np.sin(pts[:, 0] + 0.3) * pts[:, 1]
    coef = project_element(f, mesh, k)
    lay = build_layout(mesh, k, "hdg")
    tab = ElementTables(mesh, k)

    def as_fn(pts):
        # evaluate the projected field pointwise (slow, test-only)
        out = np.empty(len(pts))
        coords = mesh.vertices[mesh.elements]
        from oseenhdg.spaces import eval_field

        for i, p in enumerate(pts):
            e = _locate(mesh, p)
            jac = np.stack(
                [coords[e, 1] - coords[e, 0], coords[e, 2] - coords[e, 0]], axis=1
            )
            ref = np.linalg.solve(jac, p - coords[e, 0])
            out[i] = eval_field(lay, coef, e, ref, "pressure")
        return out

    again = project_element(as_fn, mesh, k, exactness=2 * k)
    assert np.abs(again - coef).max() < 1e-13


def _locate(mesh, p):
    coords = mesh.vertices[mesh.elements]
    for e in range(mesh.num_elements):
        jac = np.stack(
            [coords[e, 1] - coords[e, 0], coords[e, 2] - coords[e, 0]], axis=1
        )
        ref = np.linalg.solve(jac, p - coords[e, 0])
        if ref.min() > -1e-12 and ref.sum() < 1 + 1e-12:
            return e
    raise AssertionError("point outside mesh")


@pytest.mark.parametrize("k", [1, 2])
def test_element_projection_rate(k):
    f = lambda pts: np.sin(2 * np.pi * pts[:, 0])
    errs = []
    for n in (4, 8, 16):
        mesh = build_uniform_mesh(n)
        coef = project_element(f, mesh, k)
        errs.append(broken_l2(mesh, k, coef, f))
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(2.0 ** (k + 1), rel=0.10)


def test_facet_projection_linear_exact():
    mesh = build_uniform_mesh(2)
    f = lambda pts: 2.0 * pts[:, 0] - pts[:, 1] + 0.25
    coef = project_facet(f, mesh, 1)
    assert facet_l2_sq(mesh, 1, coef, f) < 1e-26


@pytest.mark.parametrize("k", [1, 2])
def test_facet_projection_rate(k):
    f = lambda pts: np.sin(2 * np.pi * pts[:, 0])
    errs = []
    for n in (4, 8, 16):
        mesh = build_uniform_mesh(n)
        coef = project_facet(f, mesh, k)
        errs.append(math.sqrt(facet_l2_sq(mesh, k, coef, f, normalized=True)))
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(2.0 ** (k + 1), rel=0.10)


def test_volume_facet_projection_gap_trend():
    # sum_K h_K^{-1} |Pi_K f - Pi_F f|^2_bdry stays bounded by |f|_{1}^2
    f = lambda pts: np.sin(np.pi * pts[:, 0]) * np.sin(np.pi * pts[:, 1])
    k = 1
    ratios = []
    for n in (4, 8, 16, 32):
        mesh = build_uniform_mesh(n)
        ecoef = project_element(f, mesh, k)
        fcoef = project_facet(f, mesh, k)
        tab = ElementTables(mesh, k, edge_exactness=16)
        tr_e = np.einsum(
            "ei,liq->elq", ecoef.reshape(mesh.num_elements, -1), tab.edge_vals
        )
        fc = fcoef.reshape(mesh.num_facets, -1)[mesh.elem_facets]  # (ne, 3, nf)
        tr_f = np.einsum("elm,elmq->elq", fc, tab.facet_vals)
        gap = np.einsum(
            "q,elq,el->e", tab.edge_weights, (tr_e - tr_f) ** 2, tab.edge_lengths
        )
        ratios.append(float((gap / tab.h_k).sum()))
    # uniformly bounded: no growth beyond a small factor across refinements
    assert max(ratios) <= 2.0 * ratios[0] + 1e-12


def test_trace_estimate_trend():
    # |f - Pi_K f|_facet * h^{-1/2} stays bounded under refinement
    f = lambda pts: np.sin(np.pi * pts[:, 0]) * np.sin(2 * np.pi * pts[:, 1])
    k = 1
    vals = []
    for n in (4, 8, 16, 32):
        mesh = build_uniform_mesh(n)
        coef = project_element(f, mesh, k)
        tab = ElementTables(mesh, k, edge_exactness=16)
        tr_e = np.einsum(
            "ei,liq->elq", coef.reshape(mesh.num_elements, -1), tab.edge_vals
        )
        fe = f(tab.edge_points.reshape(-1, 2)).reshape(mesh.num_elements, 3, -1)
        gap = np.einsum(
            "q,elq,el->", tab.edge_weights, (tr_e - fe) ** 2, tab.edge_lengths
        )
        vals.append(math.sqrt(gap / tab.h_k[0]))
    assert max(vals) <= 2.0 * vals[0]


@pytest.mark.parametrize("k", [1, 2])
def test_interpolation_poly_exact_and_trace_match(k):
    mesh = build_uniform_mesh(2)

    def poly(pts):
        x, y = pts[:, 0], pts[:, 1]
        return 0.5 - x + 2 * y + (x * x if k == 2 else 0.0)

    ecoef, fcoef = lagrange_interpolate(poly, mesh, k)
    assert broken_l2(mesh, k, ecoef, poly) < 1e-13
    assert facet_l2_sq(mesh, k, fcoef, poly) < 1e-26


@pytest.mark.parametrize("k", [1, 2])
def test_interpolation_facet_jump_vanishes(k):
    # the skeleton interpolant is the trace of the element interpolant, so
    # the pressure-jump seminorm of the pair is exactly zero
    mesh = build_uniform_mesh(3)
    f = lambda pts: np.sin(2 * np.pi * pts[:, 0]) * np.sin(2 * np.pi * pts[:, 1])
    ecoef, fcoef = lagrange_interpolate(f, mesh, k)
    tab = ElementTables(mesh, k)
    tr_e = np.einsum(
        "ei,liq->elq", ecoef.reshape(mesh.num_elements, -1), tab.edge_vals
    )
    fc = fcoef.reshape(mesh.num_facets, -1)[mesh.elem_facets]
    tr_f = np.einsum("elm,elmq->elq", fc, tab.facet_vals)
    assert np.abs(tr_e - tr_f).max() < 1e-12


@pytest.mark.parametrize("k", [1, 2])
def test_interpolation_rate(k):
    f = lambda pts: np.sin(2 * np.pi * pts[:, 0]) * np.sin(2 * np.pi * pts[:, 1])
    errs = []
    # k=1 needs one extra halving to enter the asymptotic band
    for n in (8, 16, 32) if k == 1 else (4, 8, 16):
        mesh = build_uniform_mesh(n)
        ecoef, _ = lagrange_interpolate(f, mesh, k)
        errs.append(broken_l2(mesh, k, ecoef, f))
    for e0, e1 in zip(errs, errs[1:]):
        assert e0 / e1 == pytest.approx(2.0 ** (k + 1), rel=0.10)


@pytest.mark.parametrize("k", [1, 2])
def test_combined_interpolation_energy_trend(k):
    # energy norm of (u - Pi u, p - I p) decays at observed order >= k
    config = OseenConfig(nu=1.0, eta=6.0 * k * k, alpha=1e-2, sigma=1.0)
    case = manufactured_case(config)
    errs = []
    for n in (4, 8, 16):
        mesh = build_uniform_mesh(n)
        lay = build_layout(mesh, k, "hdg")
        ucoef = project_element(case.u, mesh, k)
        ubar = project_facet(case.u, mesh, k)
        pcoef, pbar = lagrange_interpolate(case.p, mesh, k)
        val, _ = energy_norm(mesh, lay, config, ucoef, ubar, pcoef, pbar, exact=case)
        errs.append(val)
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= k - 0.15
