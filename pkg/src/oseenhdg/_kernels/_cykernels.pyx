# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled assembly kernels: explicit per-element loops over quadrature
points. Mirrors the numpy backend's contracts exactly."""

import numpy as np

from libc.math cimport fabs


def volume_blocks(const double[::1] w, const double[:, ::1] vals,
                  const double[:, :, ::1] grads,
                  const double[:, :, ::1] jinvT, const double[::1] detj,
                  const double[:, :, ::1] wind_q):
    cdef Py_ssize_t ne = jinvT.shape[0]
    cdef Py_ssize_t nb = vals.shape[0]
    cdef Py_ssize_t nq = vals.shape[1]

    stiff_arr = np.zeros((ne, nb, nb))
    mass_arr = np.zeros((ne, nb, nb))
    dgrad_arr = np.zeros((ne, 2, nb, nb))
    conv_arr = np.zeros((ne, nb, nb))
    ga_arr = np.empty((nb, 2))
    cdef double[:, :, ::1] stiff = stiff_arr
    cdef double[:, :, ::1] mass = mass_arr
    cdef double[:, :, :, ::1] dgrad = dgrad_arr
    cdef double[:, :, ::1] conv = conv_arr
    cdef double[:, ::1] ga = ga_arr

    cdef Py_ssize_t e, q, i, j, a
    cdef double wq, wt0, wt1, bi, vij
    with nogil:
        for e in range(ne):
            for q in range(nq):
                wq = w[q] * detj[e]
                for i in range(nb):
                    for a in range(2):
                        ga[i, a] = (jinvT[e, a, 0] * grads[i, q, 0]
                                    + jinvT[e, a, 1] * grads[i, q, 1])
                wt0 = (wind_q[e, q, 0] * jinvT[e, 0, 0]
                       + wind_q[e, q, 1] * jinvT[e, 1, 0])
                wt1 = (wind_q[e, q, 0] * jinvT[e, 0, 1]
                       + wind_q[e, q, 1] * jinvT[e, 1, 1])
                for i in range(nb):
                    bi = wt0 * grads[i, q, 0] + wt1 * grads[i, q, 1]
                    for j in range(nb):
                        stiff[e, i, j] += wq * (ga[i, 0] * ga[j, 0]
                                                + ga[i, 1] * ga[j, 1])
                        vij = vals[i, q] * vals[j, q]
                        mass[e, i, j] += wq * vij
                        dgrad[e, 0, i, j] += wq * vals[i, q] * ga[j, 0]
                        dgrad[e, 1, i, j] += wq * vals[i, q] * ga[j, 1]
                        conv[e, i, j] += wq * bi * vals[j, q]
    return stiff_arr, mass_arr, dgrad_arr, conv_arr


def edge_blocks(const double[::1] w, const double[:, :, ::1] eval_e,
                const double[:, :, :, ::1] egrad,
                const double[:, :, :, ::1] fvals,
                const double[:, :, ::1] jinvT, const double[:, :, ::1] normals,
                const double[:, ::1] lengths,
                const double[:, :, :, ::1] wind_e):
    cdef Py_ssize_t ne = fvals.shape[0]
    cdef Py_ssize_t nf = fvals.shape[2]
    cdef Py_ssize_t nqe = fvals.shape[3]
    cdef Py_ssize_t nb = eval_e.shape[1]

    out = {
        "m_ee": np.zeros((ne, 3, nb, nb)),
        "m_ef": np.zeros((ne, 3, nb, nf)),
        "m_ff": np.zeros((ne, 3, nf, nf)),
        "dn_e": np.zeros((ne, 3, nb, nb)),
        "dn_f": np.zeros((ne, 3, nb, nf)),
        "wm_ee": np.zeros((ne, 3, nb, nb)),
        "wm_ef": np.zeros((ne, 3, nb, nf)),
        "wm_ff": np.zeros((ne, 3, nf, nf)),
        "am_ee": np.zeros((ne, 3, nb, nb)),
        "am_ef": np.zeros((ne, 3, nb, nf)),
        "am_ff": np.zeros((ne, 3, nf, nf)),
    }
    cdef double[:, :, :, ::1] m_ee = out["m_ee"]
    cdef double[:, :, :, ::1] m_ef = out["m_ef"]
    cdef double[:, :, :, ::1] m_ff = out["m_ff"]
    cdef double[:, :, :, ::1] dn_e = out["dn_e"]
    cdef double[:, :, :, ::1] dn_f = out["dn_f"]
    cdef double[:, :, :, ::1] wm_ee = out["wm_ee"]
    cdef double[:, :, :, ::1] wm_ef = out["wm_ef"]
    cdef double[:, :, :, ::1] wm_ff = out["wm_ff"]
    cdef double[:, :, :, ::1] am_ee = out["am_ee"]
    cdef double[:, :, :, ::1] am_ef = out["am_ef"]
    cdef double[:, :, :, ::1] am_ff = out["am_ff"]

    dphidn_arr = np.empty(nb)
    cdef double[::1] dphidn = dphidn_arr

    cdef Py_ssize_t e, l, q, i, j, m, n
    cdef double wq, bn, abn, nx, ny, tx, ty, vi, di
    with nogil:
        for e in range(ne):
            for l in range(3):
                nx = normals[e, l, 0]
                ny = normals[e, l, 1]
                # physical-gradient factors: n . J^{-T} ghat
                tx = nx * jinvT[e, 0, 0] + ny * jinvT[e, 1, 0]
                ty = nx * jinvT[e, 0, 1] + ny * jinvT[e, 1, 1]
                for q in range(nqe):
                    wq = w[q] * lengths[e, l]
                    bn = (wind_e[e, l, q, 0] * nx + wind_e[e, l, q, 1] * ny)
                    abn = fabs(bn)
                    for i in range(nb):
                        dphidn[i] = (tx * egrad[l, i, q, 0]
                                     + ty * egrad[l, i, q, 1])
                    for i in range(nb):
                        vi = eval_e[l, i, q]
                        di = dphidn[i]
                        for j in range(nb):
                            m_ee[e, l, i, j] += wq * vi * eval_e[l, j, q]
                            dn_e[e, l, i, j] += wq * di * eval_e[l, j, q]
                            wm_ee[e, l, i, j] += wq * bn * vi * eval_e[l, j, q]
                            am_ee[e, l, i, j] += wq * abn * vi * eval_e[l, j, q]
                        for m in range(nf):
                            m_ef[e, l, i, m] += wq * vi * fvals[e, l, m, q]
                            dn_f[e, l, i, m] += wq * di * fvals[e, l, m, q]
                            wm_ef[e, l, i, m] += wq * bn * vi * fvals[e, l, m, q]
                            am_ef[e, l, i, m] += wq * abn * vi * fvals[e, l, m, q]
                    for m in range(nf):
                        vi = fvals[e, l, m, q]
                        for n in range(nf):
                            m_ff[e, l, m, n] += wq * vi * fvals[e, l, n, q]
                            wm_ff[e, l, m, n] += wq * bn * vi * fvals[e, l, n, q]
                            am_ff[e, l, m, n] += wq * abn * vi * fvals[e, l, n, q]
    return out
