"""Batched numpy implementation of the assembly kernels."""

import numpy as np

_OPT = True


def volume_blocks(w, vals, grads, jinvT, detj, wind_q):
    """Element-volume quadrature contractions.

    Shapes: w (nq,), vals (nb, nq), grads (nb, nq, 2), jinvT (ne, 2, 2),
    detj (ne,), wind_q (ne, nq, 2). Returns
      stiff (ne, nb, nb): grad(phi_i) . grad(phi_j)
      mass  (ne, nb, nb): phi_i phi_j
      dgrad (ne, 2, nb, nb): phi_i d(phi_j)/dx_d
      conv  (ne, nb, nb): (wind . grad(phi_i)) phi_j
    """
    metric = np.einsum("eab,eac->ebc", jinvT, jinvT) * detj[:, None, None]
    S = np.einsum("q,iqb,jqc->bcij", w, grads, grads)
    stiff = np.einsum("ebc,bcij->eij", metric, S, optimize=_OPT)
    mass = detj[:, None, None] * np.einsum("q,iq,jq->ij", w, vals, vals)
    D = np.einsum("q,iq,jqb->bij", w, vals, grads)
    dgrad = np.einsum("edb,bij,e->edij", jinvT, D, detj, optimize=_OPT)
    wt = np.einsum("eqd,edb->eqb", wind_q, jinvT)
    conv = np.einsum("q,eqb,iqb,jq,e->eij", w, wt, grads, vals, detj, optimize=_OPT)
    return stiff, mass, dgrad, conv


def edge_blocks(w, eval_e, egrad, fvals, jinvT, normals, lengths, wind_e):
    """Element-boundary quadrature contractions, per local edge.

    Shapes: w (nqe,), eval_e (3, nb, nqe), egrad (3, nb, nqe, 2),
    fvals (ne, 3, nf, nqe), jinvT (ne, 2, 2), normals (ne, 3, 2),
    lengths (ne, 3), wind_e (ne, 3, nqe, 2). Returns a dict of
      m_ee/m_ef/m_ff   plain products of element (phi) and facet (mu) bases,
      dn_e/dn_f        normal derivative of phi against phi resp. mu,
      wm_*             the same mass products weighted by wind . n,
      am_*             weighted by |wind . n|.
    """
    E = np.einsum("q,liq,ljq->lij", w, eval_e, eval_e)
    out = {"m_ee": lengths[:, :, None, None] * E[None]}
    out["m_ef"] = np.einsum(
        "q,liq,elmq,el->elim", w, eval_e, fvals, lengths, optimize=_OPT
    )
    out["m_ff"] = np.einsum(
        "q,elmq,elnq,el->elmn", w, fvals, fvals, lengths, optimize=_OPT
    )
    nrm_t = np.einsum("eld,edb->elb", normals, jinvT)
    dphidn = np.einsum("elb,liqb->eliq", nrm_t, egrad)
    out["dn_e"] = np.einsum(
        "q,eliq,ljq,el->elij", w, dphidn, eval_e, lengths, optimize=_OPT
    )
    out["dn_f"] = np.einsum(
        "q,eliq,elmq,el->elim", w, dphidn, fvals, lengths, optimize=_OPT
    )
    bn = np.einsum("elqd,eld->elq", wind_e, normals)
    for tag, weight in (("wm", bn), ("am", np.abs(bn))):
        out[f"{tag}_ee"] = np.einsum(
            "q,elq,liq,ljq,el->elij", w, weight, eval_e, eval_e, lengths, optimize=_OPT
        )
        out[f"{tag}_ef"] = np.einsum(
            "q,elq,liq,elmq,el->elim", w, weight, eval_e, fvals, lengths, optimize=_OPT
        )
        out[f"{tag}_ff"] = np.einsum(
            "q,elq,elmq,elnq,el->elmn", w, weight, fvals, fvals, lengths, optimize=_OPT
        )
    return out
