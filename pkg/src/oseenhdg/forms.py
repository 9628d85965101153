"""Element-local bilinear-form blocks and global sparse assembly.

Local velocity dofs are ordered [u_x nodes, u_y nodes, then per local edge
the trace dofs (x nodes, y nodes)]; local pressure dofs [p nodes, then per
local edge the trace nodes]. Trace nodes use the facet's canonical order, so
blocks scatter directly through the layout's facet dof maps.

The global system stacks [u, free velocity traces, p, pressure traces] plus
one Lagrange-multiplier row/column enforcing the zero mean of the pressure.
The momentum equation is kept as assembled; the mass equation is negated so
the saddle-point coupling appears skew-symmetric and the pressure-jump
stabilization positive semidefinite.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .tables import ElementTables, evaluate_vector


@dataclass(frozen=True)
class OseenConfig:
    """Physical and stabilization parameters.

    ``wind`` is a constant pair or a vectorized callable (m, 2) -> (m, 2);
    it is assumed divergence-free. ``eta`` scales the velocity penalty
    eta*nu/h_K, ``alpha`` the pressure penalty (alpha/nu)*h_K, ``gamma``
    weights the pressure L2 part of the energy norm only.
    """

    nu: float
    eta: float
    alpha: float = 1e-2
    sigma: float = 1.0
    wind: object = (1.0, 0.0)
    gamma: float = 1.0
    data_exactness: int = 16
    # matrix quadrature overrides; None = exactness 2k (volume), 2k+2 (edge),
    # which integrates every form exactly for constant wind. Raise them when
    # the wind is a non-polynomial callable.
    vol_exactness: int = None
    edge_exactness: int = None

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("viscosity nu must be positive")
        if self.sigma < 0:
            raise ValueError("reaction sigma must be nonnegative")
        if not self.eta > 0:
            raise ValueError("velocity penalty eta must be positive")
        if not self.alpha > 0:
            raise ValueError("pressure penalty alpha must be positive")
        if not self.gamma > 0:
            raise ValueError("norm weight gamma must be positive")

    def wind_fn(self):
        if callable(self.wind):
            return self.wind
        w = np.asarray(self.wind, dtype=float)
        return lambda pts: np.broadcast_to(w, (len(pts), 2))


def default_eta(variant, k):
    """Interior-penalty values that are reliable in 2D: 6k^2 for hdg,
    4k^2 for the embedded variants."""
    from .spaces import MethodVariant

    v = MethodVariant.parse(variant)
    return float(6 * k * k if v is MethodVariant.HDG else 4 * k * k)


@dataclass
class LocalBlocks:
    """Batched per-element dense blocks (leading axis = element)."""

    a: np.ndarray  # (ne, nuL, nuL) viscous + penalty + consistency
    o: np.ndarray  # (ne, nuL, nuL) convection with upwinding
    reaction: np.ndarray  # (ne, 2nb, 2nb)
    b: np.ndarray  # (ne, 2nb, npL) pressure -> momentum coupling
    c: np.ndarray  # (ne, npL, npL) pressure-jump stabilization
    load: np.ndarray  # (ne, 2nb)
    nb: int
    nf: int

    @property
    def n_u_local(self):
        return 2 * self.nb + 6 * self.nf

    @property
    def n_p_local(self):
        return self.nb + 3 * self.nf


@dataclass
class GlobalSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    layout: object
    config: OseenConfig
    meta: dict = field(default_factory=dict)


def _kernel_tables(tables, config):
    wind = config.wind_fn()
    vol = _kernels.volume_blocks(
        np.ascontiguousarray(tables.vol_weights),
        np.ascontiguousarray(tables.vol_vals),
        np.ascontiguousarray(tables.vol_grads),
        tables.jinvT,
        np.ascontiguousarray(tables.detj),
        np.ascontiguousarray(tables.wind_volume(wind)),
    )
    edge = _kernels.edge_blocks(
        np.ascontiguousarray(tables.edge_weights),
        np.ascontiguousarray(tables.edge_vals),
        np.ascontiguousarray(tables.edge_grads),
        np.ascontiguousarray(tables.facet_vals),
        tables.jinvT,
        np.ascontiguousarray(tables.normals),
        np.ascontiguousarray(tables.edge_lengths),
        np.ascontiguousarray(tables.wind_edges(wind)),
    )
    return vol, edge


def _u_slice(nb, comp):
    return slice(comp * nb, (comp + 1) * nb)


def _ubar_slice(nb, nf, ell, comp):
    start = 2 * nb + ell * 2 * nf + comp * nf
    return slice(start, start + nf)


def _pbar_slice(nb, nf, ell):
    start = nb + ell * nf
    return slice(start, start + nf)


def _compose_a(tables, config, vol, edge):
    nb, nf = tables.nb, tables.nf
    ne = tables.mesh.num_elements
    nuL = 2 * nb + 6 * nf
    stiff = vol[0]
    a = np.zeros((ne, nuL, nuL))
    pen = (config.eta * config.nu / tables.h_k)[:, None, None]
    nu = config.nu
    for comp in range(2):
        su = _u_slice(nb, comp)
        a[:, su, su] += nu * stiff
        for ell in range(3):
            sb = _ubar_slice(nb, nf, ell, comp)
            dn = edge["dn_e"][:, ell]
            a[:, su, su] += pen * edge["m_ee"][:, ell] - nu * (
                dn + dn.transpose(0, 2, 1)
            )
            cross = -pen * edge["m_ef"][:, ell] + nu * edge["dn_f"][:, ell]
            a[:, su, sb] += cross
            a[:, sb, su] += cross.transpose(0, 2, 1)
            a[:, sb, sb] += pen * edge["m_ff"][:, ell]
    return a


def _compose_o(tables, vol, edge):
    nb, nf = tables.nb, tables.nf
    ne = tables.mesh.num_elements
    nuL = 2 * nb + 6 * nf
    conv = vol[3]
    o = np.zeros((ne, nuL, nuL))
    for comp in range(2):
        su = _u_slice(nb, comp)
        o[:, su, su] -= conv
        for ell in range(3):
            sb = _ubar_slice(nb, nf, ell, comp)
            wm_ee, am_ee = edge["wm_ee"][:, ell], edge["am_ee"][:, ell]
            wm_ef, am_ef = edge["wm_ef"][:, ell], edge["am_ef"][:, ell]
            wm_ff, am_ff = edge["wm_ff"][:, ell], edge["am_ff"][:, ell]
            o[:, su, su] += 0.5 * (wm_ee + am_ee)
            o[:, su, sb] += 0.5 * (wm_ef - am_ef)
            o[:, sb, su] += (-0.5 * (wm_ef + am_ef)).transpose(0, 2, 1)
            o[:, sb, sb] += 0.5 * (am_ff - wm_ff)
    return o


def _compose_b(tables, vol, edge):
    nb, nf = tables.nb, tables.nf
    ne = tables.mesh.num_elements
    npL = nb + 3 * nf
    dgrad = vol[2]
    b = np.zeros((ne, 2 * nb, npL))
    for comp in range(2):
        su = _u_slice(nb, comp)
        b[:, su, :nb] -= dgrad[:, comp].transpose(0, 2, 1)  # -int p d(v_c)/dx_c
        for ell in range(3):
            sq = _pbar_slice(nb, nf, ell)
            b[:, su, sq] += (
                tables.normals[:, ell, comp, None, None] * edge["m_ef"][:, ell]
            )
    return b


def _compose_c(tables, config, edge):
    nb, nf = tables.nb, tables.nf
    ne = tables.mesh.num_elements
    npL = nb + 3 * nf
    c = np.zeros((ne, npL, npL))
    scale = (config.alpha / config.nu * tables.h_k)[:, None, None]
    for ell in range(3):
        sq = _pbar_slice(nb, nf, ell)
        c[:, :nb, :nb] += scale * edge["m_ee"][:, ell]
        cross = -scale * edge["m_ef"][:, ell]
        c[:, :nb, sq] += cross
        c[:, sq, :nb] += cross.transpose(0, 2, 1)
        c[:, sq, sq] += scale * edge["m_ff"][:, ell]
    return c


def _compose_reaction(tables, config, vol):
    nb = tables.nb
    ne = tables.mesh.num_elements
    mass = vol[1]
    r = np.zeros((ne, 2 * nb, 2 * nb))
    for comp in range(2):
        su = _u_slice(nb, comp)
        r[:, su, su] = config.sigma * mass
    return r


def _compose_load(mesh, k, config, f):
    from .refspace import reference_basis

    nb = reference_basis(k).dim_tri
    if f is None:
        return np.zeros((mesh.num_elements, 2 * nb))
    tab = ElementTables(mesh, k, vol_exactness=config.data_exactness)
    fq = evaluate_vector(
        f, tab.vol_points.reshape(-1, 2)
    ).reshape(mesh.num_elements, -1, 2)
    comp_load = np.einsum(
        "q,eqc,iq,e->eci", tab.vol_weights, fq, tab.vol_vals, tab.detj, optimize=True
    )
    return comp_load.reshape(mesh.num_elements, 2 * nb)


def _matrix_tables(mesh, k, config):
    return ElementTables(
        mesh, k,
        vol_exactness=config.vol_exactness,
        edge_exactness=config.edge_exactness,
    )


def local_blocks(mesh, k, config, f=None):
    """All per-element blocks at once (shared quadrature tables)."""
    tables = _matrix_tables(mesh, k, config)
    vol, edge = _kernel_tables(tables, config)
    return LocalBlocks(
        a=_compose_a(tables, config, vol, edge),
        o=_compose_o(tables, vol, edge),
        reaction=_compose_reaction(tables, config, vol),
        b=_compose_b(tables, vol, edge),
        c=_compose_c(tables, config, edge),
        load=_compose_load(mesh, k, config, f),
        nb=tables.nb,
        nf=tables.nf,
    )


def local_a(mesh, k, config):
    tables = _matrix_tables(mesh, k, config)
    return _compose_a(tables, config, *_kernel_tables(tables, config))


def local_o(mesh, k, config):
    tables = _matrix_tables(mesh, k, config)
    return _compose_o(tables, *_kernel_tables(tables, config))


def local_b(mesh, k, config=None):
    config = config or OseenConfig(nu=1.0, eta=1.0)
    tables = _matrix_tables(mesh, k, config)
    return _compose_b(tables, *_kernel_tables(tables, config))


def local_c(mesh, k, config):
    tables = _matrix_tables(mesh, k, config)
    _, edge = _kernel_tables(tables, config)
    return _compose_c(tables, config, edge)


def local_reaction_and_load(mesh, k, config, f=None):
    tables = _matrix_tables(mesh, k, config)
    vol, _ = _kernel_tables(tables, config)
    return _compose_reaction(tables, config, vol), _compose_load(mesh, k, config, f)


def _gather_indices(layout):
    """Global dof ids for the local orders; -1 marks eliminated trace dofs."""
    mesh, nb, nf = layout.mesh, layout.nb, layout.nf
    ne = mesh.num_elements
    off = layout.offsets
    gu = off["u"] + (
        2 * nb * np.arange(ne, dtype=np.int64)[:, None]
        + np.arange(2 * nb, dtype=np.int64)[None, :]
    )
    scal = layout.facet_scalar_v[mesh.elem_facets]  # (ne, 3, nf)
    free = layout.vbar_free_index[scal]  # -1 where constrained
    gubar = np.empty((ne, 3, 2, nf), dtype=np.int64)
    for comp in range(2):
        gcomp = np.where(
            free >= 0, off["ubar"] + comp * layout.n_vbar_free_scalar + free, -1
        )
        gubar[:, :, comp, :] = gcomp
    gv = np.concatenate([gu, gubar.reshape(ne, 6 * nf)], axis=1)
    gp = off["p"] + (
        nb * np.arange(ne, dtype=np.int64)[:, None]
        + np.arange(nb, dtype=np.int64)[None, :]
    )
    gpbar = off["pbar"] + layout.facet_scalar_q[mesh.elem_facets].reshape(ne, 3 * nf)
    gq = np.concatenate([gp, gpbar], axis=1)
    return gu, gv, gp, gq


def _block_triplets(rows_idx, cols_idx, values):
    ne, nr = rows_idx.shape
    nc = cols_idx.shape[1]
    r = np.broadcast_to(rows_idx[:, :, None], (ne, nr, nc)).ravel()
    c = np.broadcast_to(cols_idx[:, None, :], (ne, nr, nc)).ravel()
    v = values.reshape(ne * nr * nc)
    keep = (r >= 0) & (c >= 0)
    return r[keep], c[keep], v[keep]


def assemble_global(mesh, layout, config, f=None):
    """Assemble the full coupled system over the layout's free dofs plus the
    zero-mean multiplier."""
    t0 = time.perf_counter()
    tables = _matrix_tables(mesh, layout.k, config)
    vol, edge = _kernel_tables(tables, config)
    gu, gv, gp, gq = _gather_indices(layout)

    # accumulate the velocity blocks in place to bound peak memory
    vel = _compose_a(tables, config, vol, edge)
    vel += _compose_o(tables, vol, edge)
    nb2 = 2 * tables.nb
    vel[:, :nb2, :nb2] += _compose_reaction(tables, config, vol)

    b_blk = _compose_b(tables, vol, edge)
    parts = [
        _block_triplets(gv, gv, vel),
        _block_triplets(gu, gq, b_blk),
        _block_triplets(gq, gu, -b_blk.transpose(0, 2, 1)),
        _block_triplets(gq, gq, _compose_c(tables, config, edge)),
    ]
    del vel, b_blk, vol, edge
    load = _compose_load(mesh, layout.k, config, f)
    pint = tables.detj[:, None] * (tables.vol_vals @ tables.vol_weights)[None, :]
    mult = np.full(gp.size, layout.offsets["mult"], dtype=np.int64)
    parts.append((mult, gp.ravel(), pint.ravel()))
    parts.append((gp.ravel(), mult, pint.ravel()))

    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    n = layout.n_total
    matrix = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()

    rhs = np.zeros(n)
    np.add.at(rhs, gu.ravel(), load.ravel())
    return GlobalSystem(
        matrix=matrix,
        rhs=rhs,
        layout=layout,
        config=config,
        meta={
            "dim": n,
            "nnz": matrix.nnz,
            "assemble_seconds": time.perf_counter() - t0,
            "kernel_backend": _kernels.backend,
        },
    )


def assemble_operator(mesh, layout, config, form):
    """Assemble a single form over its field space (free dofs).

    ``form`` in {"a", "o", "mass"} gives a square matrix on the velocity
    space [u, free traces]; "c" on the pressure space [p, traces]; "b" the
    rectangular velocity x pressure coupling.
    """
    blocks = local_blocks(mesh, layout.k, config)
    gu, gv, gp, gq = _gather_indices(layout)
    # u starts at 0 and free traces follow it, so gv doubles as the
    # velocity-space numbering; pressure ids just drop their offset
    gv_loc = gv
    nv = layout.n_u + layout.n_vbar_free
    nq = layout.n_p + layout.n_pbar
    gq_loc = gq - layout.offsets["p"]
    if form in ("a", "o", "mass"):
        if form == "mass":
            vals = np.zeros_like(blocks.a)
            vals[:, : 2 * blocks.nb, : 2 * blocks.nb] = blocks.reaction
        else:
            vals = getattr(blocks, form)
        r, c, v = _block_triplets(gv_loc, gv_loc, vals)
        return sp.coo_matrix((v, (r, c)), shape=(nv, nv)).tocsr()
    if form == "c":
        r, c, v = _block_triplets(gq_loc, gq_loc, blocks.c)
        return sp.coo_matrix((v, (r, c)), shape=(nq, nq)).tocsr()
    if form == "b":
        r, c, v = _block_triplets(gu, gq_loc, blocks.b)
        return sp.coo_matrix((v, (r, c)), shape=(nv, nq)).tocsr()
    raise ValueError(f"unknown form {form!r}")


def exact_residual(mesh, layout, config, case):
    """Residual of both equations when the discrete fields are replaced by a
    smooth exact solution with its own skeleton trace, evaluated with
    high-order quadrature against every free test dof.

    All element/trace differences of the exact solution are formed from the
    same point evaluations and vanish identically, so the penalty, upwind and
    pressure-jump terms contribute exact zeros and are omitted. Returns
    max-norms {"momentum": ..., "mass": ...}; both vanish up to quadrature
    error when ``case`` solves the strong problem.
    """
    tab = ElementTables(
        mesh,
        layout.k,
        vol_exactness=config.data_exactness,
        edge_exactness=config.data_exactness,
    )
    ne = mesh.num_elements
    wv, we = tab.vol_weights, tab.edge_weights
    detj, lengths = tab.detj, tab.edge_lengths
    wind = config.wind_fn()

    vpts = tab.vol_points.reshape(-1, 2)
    u_v = case.u(vpts).reshape(ne, -1, 2)  # (ne, nq, 2)
    gu_v = case.grad_u(vpts).reshape(ne, -1, 2, 2)
    p_v = case.p(vpts).reshape(ne, -1)
    f_v = case.f(vpts).reshape(ne, -1, 2)
    gphi = tab.phys_gradients()  # (ne, nb, nq, 2)
    phi = tab.vol_vals
    b_v = tab.wind_volume(wind)

    epts = tab.edge_points.reshape(-1, 2)
    u_e = case.u(epts).reshape(ne, 3, -1, 2)
    gu_e = case.grad_u(epts).reshape(ne, 3, -1, 2, 2)
    p_e = case.p(epts).reshape(ne, 3, -1)
    bn = np.einsum("elqd,eld->elq", tab.wind_edges(wind), tab.normals)
    dudn = np.einsum("elqcd,eld->elqc", gu_e, tab.normals)

    # (f, v) - a_h - b_h - sigma(u, v) - o_h against element tests phi_i e_c
    r_u = np.einsum("q,eqc,iq,e->eci", wv, f_v, phi, detj, optimize=True)
    r_u -= config.nu * np.einsum(
        "q,eqcd,eiqd,e->eci", wv, gu_v, gphi, detj, optimize=True
    )
    r_u += config.nu * np.einsum(
        "q,elqc,liq,el->eci", we, dudn, tab.edge_vals, lengths, optimize=True
    )
    r_u -= config.sigma * np.einsum(
        "q,eqc,iq,e->eci", wv, u_v, phi, detj, optimize=True
    )
    # o_h element part: -int u_c (b . grad phi_i) + bdry (b.n) u_c phi_i
    r_u += np.einsum(
        "q,eqc,eqd,eiqd,e->eci", wv, u_v, b_v, gphi, detj, optimize=True
    )
    r_u -= np.einsum(
        "q,elq,elqc,liq,el->eci", we, bn, u_e, tab.edge_vals, lengths, optimize=True
    )
    # b_h element part: -int p d(phi_i)/dx_c + bdry p n_c phi_i
    r_u += np.einsum("q,eq,eiqc,e->eci", wv, p_v, gphi, detj, optimize=True)
    r_u -= np.einsum(
        "q,elq,elc,liq,el->eci", we, p_e, tab.normals, tab.edge_vals, lengths,
        optimize=True,
    )

    # trace tests mu_m e_c: -a_h and -o_h leave nu dudn . mu - (b.n) u . mu,
    # which cancels across the two sides of every interior facet
    tr_term = -config.nu * np.einsum(
        "q,elqc,elmq,el->elcm", we, dudn, tab.facet_vals, lengths, optimize=True
    )
    tr_term += np.einsum(
        "q,elq,elqc,elmq,el->elcm", we, bn, u_e, tab.facet_vals, lengths,
        optimize=True,
    )
    r_ubar = np.zeros((2, layout.n_scalar_v))
    scal = layout.facet_scalar_v[mesh.elem_facets]  # (ne, 3, nf)
    for comp in range(2):
        np.add.at(r_ubar[comp], scal.ravel(), tr_term[:, :, comp, :].ravel())
    r_ubar = r_ubar[:, ~layout.vbar_constrained]

    # mass equation: -int q div(u) + bdry u.n q_trace
    div_u = gu_v[:, :, 0, 0] + gu_v[:, :, 1, 1]
    r_p = -np.einsum("q,eq,iq,e->ei", wv, div_u, phi, detj)
    un = np.einsum("elqc,elc->elq", u_e, tab.normals)
    r_pbar = np.zeros(layout.n_scalar_q)
    fl = np.einsum("q,elq,elmq,el->elm", we, un, tab.facet_vals, lengths)
    np.add.at(r_pbar, layout.facet_scalar_q[mesh.elem_facets].ravel(), fl.ravel())

    return {
        "momentum": max(
            np.abs(r_u).max(), np.abs(r_ubar).max() if r_ubar.size else 0.0
        ),
        "mass": max(np.abs(r_p).max(), np.abs(r_pbar).max()),
    }


def dump_matrix(system, path):
    """Coordinate-format text dump (row col value per line)."""
    coo = system.matrix.tocoo()
    with open(path, "w") as fh:
        fh.write(f"{coo.shape[0]} {coo.shape[1]} {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v!r}\n")
