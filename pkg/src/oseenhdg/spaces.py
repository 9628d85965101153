"""Global degree-of-freedom layouts for the four fields (velocity, velocity
trace, pressure, pressure trace) under the three method variants.

Element fields are broken (element-major numbering, x-component block before
y-component block). Trace fields live on the mesh skeleton; their scalar dofs
are indexed per facet in canonical node order [t=0 endpoint, t=1 endpoint,
interior nodes], where t runs from the facet's lower to its higher vertex id.

Variant continuity:
  * hdg  - velocity and pressure traces both per-facet (no sharing),
  * ehdg - velocity trace continuous on the skeleton, pressure trace per-facet,
  * edg  - both traces continuous on the skeleton.

Continuous trace spaces share the endpoint dofs of all facets meeting at a
vertex and keep k-1 private interior dofs per facet. Velocity-trace dofs
whose node lies on the domain boundary are constrained to zero and dropped
from the global numbering; pressure traces are unconstrained.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .refspace import reference_basis


class MethodVariant(enum.Enum):
    HDG = "hdg"
    EHDG = "ehdg"
    EDG = "edg"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower().replace("-", ""))
        except ValueError:
            raise ValueError(f"unknown method variant {value!r}") from None


def _facet_scalar_dofs_discontinuous(mesh, nf):
    return np.arange(mesh.num_facets * nf, dtype=np.int64).reshape(
        mesh.num_facets, nf
    ), mesh.num_facets * nf


def _facet_scalar_dofs_continuous(mesh, nf):
    k = nf - 1
    nfc = mesh.num_facets
    dofs = np.empty((nfc, nf), dtype=np.int64)
    dofs[:, 0] = mesh.facet_vertices[:, 0]
    dofs[:, 1] = mesh.facet_vertices[:, 1]
    nv = mesh.num_vertices
    for j in range(k - 1):
        dofs[:, 2 + j] = nv + np.arange(nfc, dtype=np.int64) * (k - 1) + j
    return dofs, nv + nfc * (k - 1)


@dataclass
class SpaceLayout:
    mesh: object
    k: int
    variant: MethodVariant
    nb: int  # element basis size
    nf: int  # facet basis size (k+1)
    n_u: int  # broken vector velocity dofs
    n_p: int  # broken pressure dofs
    facet_scalar_v: np.ndarray  # (nfc, nf) scalar velocity-trace dof per node
    facet_scalar_q: np.ndarray  # (nfc, nf) scalar pressure-trace dof per node
    n_scalar_v: int
    n_scalar_q: int
    vbar_constrained: np.ndarray  # (n_scalar_v,) bool, node on boundary
    vbar_free_index: np.ndarray  # (n_scalar_v,) free scalar id or -1
    n_vbar_free_scalar: int
    offsets: dict = field(default_factory=dict)

    @property
    def n_vbar_total(self):
        return 2 * self.n_scalar_v

    @property
    def n_vbar_free(self):
        return 2 * self.n_vbar_free_scalar

    @property
    def n_pbar(self):
        return self.n_scalar_q

    @property
    def n_total(self):
        return self.offsets["mult"] + 1

    def vbar_free_dof(self, scalar, comp):
        """Global index (within the free trace-velocity block) or -1."""
        f = self.vbar_free_index[scalar]
        return -1 if f < 0 else comp * self.n_vbar_free_scalar + f

    def ubar_full_from_free(self, free):
        """Expand a free trace-velocity vector to include constrained zeros."""
        full = np.zeros(self.n_vbar_total)
        for comp in range(2):
            sel = ~self.vbar_constrained
            full[comp * self.n_scalar_v + np.flatnonzero(sel)] = free[
                comp * self.n_vbar_free_scalar
                + self.vbar_free_index[sel]
            ]
        return full

    def ubar_free_from_full(self, full):
        free = np.zeros(self.n_vbar_free)
        for comp in range(2):
            sel = ~self.vbar_constrained
            free[
                comp * self.n_vbar_free_scalar + self.vbar_free_index[sel]
            ] = full[comp * self.n_scalar_v + np.flatnonzero(sel)]
        return free


def build_layout(mesh, k, variant):
    """Construct the dof layout for degree ``k`` under ``variant``."""
    variant = MethodVariant.parse(variant)
    if k not in (1, 2):
        raise ValueError(f"unsupported degree {k}: layouts require k in {{1, 2}}")
    basis = reference_basis(k)
    nb, nf = basis.dim_tri, basis.dim_edge
    ne, nfc = mesh.num_elements, mesh.num_facets

    if variant is MethodVariant.HDG:
        fs_v, n_scalar_v = _facet_scalar_dofs_discontinuous(mesh, nf)
    else:
        fs_v, n_scalar_v = _facet_scalar_dofs_continuous(mesh, nf)
    if variant is MethodVariant.EDG:
        fs_q, n_scalar_q = _facet_scalar_dofs_continuous(mesh, nf)
    else:
        fs_q, n_scalar_q = _facet_scalar_dofs_discontinuous(mesh, nf)

    # a trace-velocity dof is constrained iff its node lies on the boundary:
    # endpoint nodes inherit the vertex flag, interior nodes the facet flag
    constrained = np.zeros(n_scalar_v, dtype=bool)
    np.logical_or.at(
        constrained, fs_v[:, 0], mesh.vertex_on_boundary[mesh.facet_vertices[:, 0]]
    )
    np.logical_or.at(
        constrained, fs_v[:, 1], mesh.vertex_on_boundary[mesh.facet_vertices[:, 1]]
    )
    for j in range(2, nf):
        np.logical_or.at(constrained, fs_v[:, j], mesh.facet_boundary)

    free_index = np.full(n_scalar_v, -1, dtype=np.int64)
    free_ids = np.flatnonzero(~constrained)
    free_index[free_ids] = np.arange(len(free_ids))

    layout = SpaceLayout(
        mesh=mesh,
        k=k,
        variant=variant,
        nb=nb,
        nf=nf,
        n_u=2 * nb * ne,
        n_p=nb * ne,
        facet_scalar_v=fs_v,
        facet_scalar_q=fs_q,
        n_scalar_v=n_scalar_v,
        n_scalar_q=n_scalar_q,
        vbar_constrained=constrained,
        vbar_free_index=free_index,
        n_vbar_free_scalar=len(free_ids),
    )
    off_u = 0
    off_ubar = off_u + layout.n_u
    off_p = off_ubar + layout.n_vbar_free
    off_pbar = off_p + layout.n_p
    off_mult = off_pbar + layout.n_pbar
    layout.offsets = {
        "u": off_u,
        "ubar": off_ubar,
        "p": off_p,
        "pbar": off_pbar,
        "mult": off_mult,
    }
    return layout


def trace_prolongation(coarse, fine):
    """Embedding of a constrained-variant trace space into the HDG one.

    Returns a sparse boolean matrix C of shape
    (fine.n_vbar_free + fine.n_pbar, coarse.n_vbar_free + coarse.n_pbar):
    a coarse coefficient vector x represents, facet by facet, the HDG
    coefficient vector C @ x.
    """
    if coarse.mesh is not fine.mesh or coarse.k != fine.k:
        raise ValueError("prolongation requires matching mesh and degree")
    if fine.variant is not MethodVariant.HDG:
        raise ValueError("fine layout must be the hdg one")
    if coarse.variant is MethodVariant.HDG:
        raise ValueError("coarse layout must impose continuity (edg or ehdg)")
    nf = fine.nf
    rows, cols = [], []
    for f in range(fine.mesh.num_facets):
        for m in range(nf):
            cs = coarse.facet_scalar_v[f, m]
            fs = fine.facet_scalar_v[f, m]
            if coarse.vbar_free_index[cs] < 0 or fine.vbar_free_index[fs] < 0:
                continue
            for comp in range(2):
                rows.append(fine.vbar_free_dof(fs, comp))
                cols.append(coarse.vbar_free_dof(cs, comp))
    C_v = sp.coo_matrix(
        (np.ones(len(rows)), (rows, cols)),
        shape=(fine.n_vbar_free, coarse.n_vbar_free),
    )
    if coarse.variant is MethodVariant.EDG:
        rows, cols = [], []
        for f in range(fine.mesh.num_facets):
            for m in range(nf):
                rows.append(fine.facet_scalar_q[f, m])
                cols.append(coarse.facet_scalar_q[f, m])
        C_q = sp.coo_matrix(
            (np.ones(len(rows)), (rows, cols)),
            shape=(fine.n_pbar, coarse.n_pbar),
        )
    else:
        C_q = sp.identity(fine.n_pbar, format="coo")
    return sp.block_diag([C_v, C_q]).tocsr()


def system_prolongation(coarse, fine):
    """Full-system embedding (broken fields and the mean multiplier map by
    identity); EDG/EHDG global matrices are congruent to the HDG one by it."""
    C = trace_prolongation(coarse, fine)
    C_v = C[: fine.n_vbar_free, : coarse.n_vbar_free]
    C_q = C[fine.n_vbar_free :, coarse.n_vbar_free :]
    return sp.block_diag(
        [
            sp.identity(fine.n_u),
            C_v,
            sp.identity(fine.n_p),
            C_q,
            sp.identity(1),
        ]
    ).tocsr()


def eval_field(layout, coefficients, element, point, field="velocity"):
    """Evaluate a broken field at a reference point of one element.

    ``coefficients`` is the field's full coefficient vector (length n_u for
    velocity, n_p for pressure). Returns a length-2 array or a scalar.
    """
    basis = reference_basis(layout.k)
    vals = basis.tri_values(np.atleast_2d(point))[:, 0]
    nb = layout.nb
    if field == "velocity":
        if len(coefficients) != layout.n_u:
            raise IndexError("velocity coefficient vector has wrong length")
        base = 2 * nb * element
        return np.array(
            [
                coefficients[base : base + nb] @ vals,
                coefficients[base + nb : base + 2 * nb] @ vals,
            ]
        )
    if field == "pressure":
        if len(coefficients) != layout.n_p:
            raise IndexError("pressure coefficient vector has wrong length")
        return float(coefficients[nb * element : nb * (element + 1)] @ vals)
    raise ValueError(f"unknown field {field!r}")


def eval_trace(layout, coefficients, facet, t, field="velocity"):
    """Evaluate a trace field at canonical parameter(s) ``t`` on a facet."""
    basis = reference_basis(layout.k)
    vals = basis.edge_values(t)  # (nf, npts)
    if field == "velocity":
        if len(coefficients) != layout.n_vbar_total:
            raise IndexError("trace-velocity coefficient vector has wrong length")
        dofs = layout.facet_scalar_v[facet]
        out = np.stack(
            [
                coefficients[comp * layout.n_scalar_v + dofs] @ vals
                for comp in range(2)
            ],
            axis=-1,
        )
        return out[0] if np.ndim(t) == 0 else out
    if field == "pressure":
        if len(coefficients) != layout.n_pbar:
            raise IndexError("trace-pressure coefficient vector has wrong length")
        out = coefficients[layout.facet_scalar_q[facet]] @ vals
        return float(out[0]) if np.ndim(t) == 0 else out
    raise ValueError(f"unknown field {field!r}")
