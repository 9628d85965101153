"""Direct solution of the assembled system, with optional static
condensation of element-interior velocity/pressure dofs onto the traces."""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla


@dataclass
class DiscreteSolution:
    u: np.ndarray  # broken vector velocity
    ubar: np.ndarray  # trace velocity, full (constrained entries zero)
    p: np.ndarray  # broken pressure
    pbar: np.ndarray  # trace pressure
    multiplier: float
    diagnostics: dict = field(default_factory=dict)


def split_solution(layout, x, diagnostics=None):
    off = layout.offsets
    ubar_free = x[off["ubar"] : off["p"]]
    return DiscreteSolution(
        u=x[off["u"] : off["ubar"]].copy(),
        ubar=layout.ubar_full_from_free(ubar_free),
        p=x[off["p"] : off["pbar"]].copy(),
        pbar=x[off["pbar"] : off["mult"]].copy(),
        multiplier=float(x[off["mult"]]),
        diagnostics=diagnostics or {},
    )


def _residual(matrix, rhs, x):
    scale = np.linalg.norm(rhs)
    return float(np.linalg.norm(matrix @ x - rhs) / (scale if scale > 0 else 1.0))


def _factorize(matrix, what):
    try:
        return spla.splu(matrix.tocsc())
    except RuntimeError as exc:
        raise RuntimeError(
            f"singular factorization of the {what} system "
            f"(dim={matrix.shape[0]}, nnz={matrix.nnz}); "
            "this points at a layout/boundary-condition or penalty bug"
        ) from exc


def solve_direct(system):
    """Sparse LU solve with one step of iterative refinement if needed."""
    t0 = time.perf_counter()
    lu = _factorize(system.matrix, "global")
    t1 = time.perf_counter()
    x = lu.solve(system.rhs)
    res = _residual(system.matrix, system.rhs, x)
    for _ in range(3):
        if res <= 1e-13:
            break
        x = x + lu.solve(system.rhs - system.matrix @ x)
        res = _residual(system.matrix, system.rhs, x)
    diag = {
        "method": "direct",
        "dim": system.matrix.shape[0],
        "nnz": system.matrix.nnz,
        "relative_residual": res,
        "factor_seconds": t1 - t0,
        "solve_seconds": time.perf_counter() - t1,
    }
    return split_solution(system.layout, x, diag)


def _interior_and_kept(layout):
    off = layout.offsets
    ne = layout.mesh.num_elements
    nb = layout.nb
    m = 3 * nb  # 2nb velocity + nb pressure per element
    interior = np.empty((ne, m), dtype=np.int64)
    interior[:, : 2 * nb] = off["u"] + (
        2 * nb * np.arange(ne)[:, None] + np.arange(2 * nb)[None, :]
    )
    interior[:, 2 * nb :] = off["p"] + (
        nb * np.arange(ne)[:, None] + np.arange(nb)[None, :]
    )
    kept = np.concatenate(
        [
            np.arange(off["ubar"], off["p"]),
            np.arange(off["pbar"], off["mult"] + 1),
        ]
    )
    return interior.ravel(), kept, m


def condense_and_solve(system, layout=None):
    """Eliminate element-interior (u, p) blocks, solve the trace-level Schur
    complement, then recover the interior fields.

    The zero-mean multiplier stays in the global system; its coupling to the
    element pressures rides through the local solves like any other kept dof.
    """
    layout = layout or system.layout
    t0 = time.perf_counter()
    interior, kept, m = _interior_and_kept(layout)
    ne = layout.mesh.num_elements
    A = system.matrix.tocsr()
    A_int_rows = A[interior]
    A_II = A_int_rows[:, interior].tocoo()
    if np.any(A_II.row // m != A_II.col // m):
        raise RuntimeError("interior coupling crosses elements; cannot condense")
    dense = np.zeros((ne, m, m))
    dense[A_II.row // m, A_II.row % m, A_II.col % m] = A_II.data
    try:
        inv_blocks = np.linalg.inv(dense)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError(
            "non-invertible element-interior block; eta is too small or the "
            "assembly is inconsistent"
        ) from exc
    invA = sp.bsr_matrix(
        (inv_blocks, np.arange(ne), np.arange(ne + 1)), shape=(ne * m, ne * m)
    )
    A_IG = A_int_rows[:, kept]
    A_kept_rows = A[kept]
    A_GI = A_kept_rows[:, interior]
    A_GG = A_kept_rows[:, kept]
    b_I = system.rhs[interior]
    b_G = system.rhs[kept]

    schur = (A_GG - A_GI @ (invA @ A_IG)).tocsc()
    g = b_G - A_GI @ (invA @ b_I)
    t1 = time.perf_counter()
    lu = _factorize(schur, "condensed")
    t2 = time.perf_counter()
    x_G = lu.solve(g)
    x_I = invA @ (b_I - A_IG @ x_G)

    x = np.empty(system.matrix.shape[0])
    x[interior] = x_I
    x[kept] = x_G
    res = _residual(system.matrix, system.rhs, x)
    for _ in range(3):
        if res <= 1e-13:
            break
        r = system.rhs - system.matrix @ x
        dx_G = lu.solve(r[kept] - A_GI @ (invA @ r[interior]))
        dx_I = invA @ (r[interior] - A_IG @ dx_G)
        x[interior] += dx_I
        x[kept] += dx_G
        res = _residual(system.matrix, system.rhs, x)
    diag = {
        "method": "condensed",
        "dim": system.matrix.shape[0],
        "condensed_dim": len(kept),
        "nnz": schur.nnz,
        "relative_residual": res,
        "factor_seconds": t2 - t1,
        "solve_seconds": time.perf_counter() - t2,
        "schur_seconds": t1 - t0,
    }
    return split_solution(layout, x, diag)


def pressure_mean(layout, p):
    """Integral of a broken pressure field over the domain."""
    from .tables import ElementTables

    tab = ElementTables(layout.mesh, layout.k)
    pint = tab.detj[:, None] * (tab.vol_vals @ tab.vol_weights)[None, :]
    return float(pint.ravel() @ p)
