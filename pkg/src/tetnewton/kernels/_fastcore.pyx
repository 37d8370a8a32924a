# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled element kernels: fused energy / gradient / filtered-Hessian loops.

Mirrors ``kernels.reference`` exactly (same formulas, same conventions);
the per-element 3x3 SVDs and 12x12 eigendecompositions go straight to
LAPACK.  Row-major buffers are handed to Fortran routines by exploiting
transpose symmetry, so U/Vt swap roles on the way out of dgesvd.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, log, sqrt
from scipy.linalg.cython_lapack cimport dgesvd, dsyev

cnp.import_array()

MODEL_SNH = 0
MODEL_NH_LOG = 1
MODEL_ARAP_VOL = 2
MODEL_SD_VOL = 3

DEF NEG_TOL = 1e-12

cdef int _LEVI[3][3]
_LEVI[0][1] = 1
_LEVI[1][0] = -1
_LEVI[1][2] = 1
_LEVI[2][1] = -1
_LEVI[2][0] = 1
_LEVI[0][2] = -1

# singular-value pairs (i, j) and the leftover axis, matching the reference
cdef int _PAIR_I[3]
cdef int _PAIR_J[3]
cdef int _PAIR_K[3]
_PAIR_I[0] = 0; _PAIR_J[0] = 1; _PAIR_K[0] = 2
_PAIR_I[1] = 0; _PAIR_J[1] = 2; _PAIR_K[1] = 1
_PAIR_I[2] = 1; _PAIR_J[2] = 2; _PAIR_K[2] = 0


cdef inline double _det3(const double* f) noexcept nogil:
    return (
        f[0] * (f[4] * f[8] - f[7] * f[5])
        - f[1] * (f[3] * f[8] - f[6] * f[5])
        + f[2] * (f[3] * f[7] - f[6] * f[4])
    )


cdef inline void _cof3(const double* f, double* c) noexcept nogil:
    # column j of the cofactor is the cross product of columns j+1, j+2
    c[0] = f[4] * f[8] - f[7] * f[5]
    c[3] = f[7] * f[2] - f[1] * f[8]
    c[6] = f[1] * f[5] - f[4] * f[2]
    c[1] = f[5] * f[6] - f[8] * f[3]
    c[4] = f[8] * f[0] - f[2] * f[6]
    c[7] = f[2] * f[3] - f[5] * f[0]
    c[2] = f[3] * f[7] - f[6] * f[4]
    c[5] = f[6] * f[1] - f[0] * f[7]
    c[8] = f[0] * f[4] - f[3] * f[1]


cdef inline void _gather_f(
    const double[:, ::1] x,
    const cnp.int64_t* tet,
    const double* bm,
    double* f,
) noexcept nogil:
    cdef double ds[9]
    cdef int a, b, c
    for a in range(3):
        for c in range(3):
            ds[3 * a + c] = x[tet[c + 1], a] - x[tet[0], a]
    for a in range(3):
        for b in range(3):
            f[3 * a + b] = (
                ds[3 * a + 0] * bm[0 + b]
                + ds[3 * a + 1] * bm[3 + b]
                + ds[3 * a + 2] * bm[6 + b]
            )


cdef int _svd3_signed(
    const double* f, double* u, double* s, double* vt
) noexcept nogil:
    """Signed SVD, det(U) = det(V) = +1; u/vt are row-major for F."""
    cdef double a[9]
    cdef double ubuf[9]
    cdef double vtbuf[9]
    cdef double work[64]
    cdef int n = 3, lwork = 64, info = 0, i
    cdef char job = b'A'
    cdef double du, dv
    for i in range(9):
        a[i] = f[i]
    # a holds F row-major = F^T column-major; dgesvd factors F^T = Ubar S Vbar^T,
    # so row-major Ubar^T (the ubuf buffer) is Vt of F and vtbuf is U of F.
    dgesvd(&job, &job, &n, &n, a, &n, s, ubuf, &n, vtbuf, &n, work, &lwork, &info)
    if info != 0:
        return info
    for i in range(9):
        u[i] = vtbuf[i]
        vt[i] = ubuf[i]
    du = _det3(u)
    dv = _det3(vt)
    if du < 0.0:
        u[2] = -u[2]
        u[5] = -u[5]
        u[8] = -u[8]
    if dv < 0.0:
        vt[6] = -vt[6]
        vt[7] = -vt[7]
        vt[8] = -vt[8]
    if du * dv < 0.0:
        s[2] = -s[2]
    return 0


cdef int _svd3_values(const double* f, double* s) noexcept nogil:
    cdef double a[9]
    cdef double work[64]
    cdef double dummy[1]
    cdef int n = 3, lwork = 64, info = 0, i
    cdef char jobn = b'N'
    for i in range(9):
        a[i] = f[i]
    dgesvd(&jobn, &jobn, &n, &n, a, &n, s, dummy, &n, dummy, &n, work, &lwork, &info)
    if info == 0 and _det3(f) < 0.0:
        s[2] = -s[2]
    return info


cdef double _psi(int model, double mu, double lam, const double* f) noexcept nogil:
    cdef double ic = 0.0, j, t, val, cn
    cdef double cof[9]
    cdef double s[3]
    cdef int i
    for i in range(9):
        ic += f[i] * f[i]
    j = _det3(f)
    if model == 0:  # stable Neo-Hookean
        t = (j - 1.0) - mu / lam
        return 0.5 * mu * (ic - 3.0) + 0.5 * lam * t * t
    if model == 1:  # Neo-Hookean with log barrier
        if j <= 0.0:
            return INFINITY
        return 0.5 * mu * (ic - 3.0) - mu * log(j) + 0.5 * lam * (j - 1.0) ** 2
    if model == 2:  # ARAP + volume
        if _svd3_values(f, s) != 0:
            return INFINITY
        val = (s[0] - 1.0) ** 2 + (s[1] - 1.0) ** 2 + (s[2] - 1.0) ** 2
        return 0.5 * mu * val + 0.5 * lam * (j - 1.0) ** 2
    # symmetric Dirichlet + volume
    if j <= 0.0:
        return INFINITY
    _cof3(f, cof)
    cn = 0.0
    for i in range(9):
        cn += cof[i] * cof[i]
    return 0.25 * mu * (ic + cn / (j * j) - 6.0) + 0.5 * lam * (j - 1.0) ** 2


cdef int _pk1(int model, double mu, double lam, const double* f, double* p) noexcept nogil:
    """dPsi/dF into p; returns nonzero on invalid queries (J <= 0, SVD failure)."""
    cdef double cof[9]
    cdef double u[9]
    cdef double vt[9]
    cdef double s[3]
    cdef double finv[9]
    cdef double tmp[9]
    cdef double ttt[9]
    cdef double j, kvol
    cdef int i, r, c
    j = _det3(f)
    _cof3(f, cof)
    if model == 0:
        kvol = lam * (j - 1.0) - mu
        for i in range(9):
            p[i] = mu * f[i] + kvol * cof[i]
        return 0
    if model == 1:
        if j <= 0.0:
            return 1
        kvol = lam * (j - 1.0) - mu / j
        for i in range(9):
            p[i] = mu * f[i] + kvol * cof[i]
        return 0
    if model == 2:
        if _svd3_signed(f, u, s, vt) != 0:
            return 2
        kvol = lam * (j - 1.0)
        for r in range(3):
            for c in range(3):
                p[3 * r + c] = mu * (
                    f[3 * r + c]
                    - (u[3 * r + 0] * vt[0 + c] + u[3 * r + 1] * vt[3 + c] + u[3 * r + 2] * vt[6 + c])
                ) + kvol * cof[3 * r + c]
        return 0
    if j <= 0.0:
        return 1
    for r in range(3):
        for c in range(3):
            finv[3 * r + c] = cof[3 * c + r] / j
    # tmp = Finv * Finv^T, ttt = Finv^T * tmp
    for r in range(3):
        for c in range(3):
            tmp[3 * r + c] = (
                finv[3 * r + 0] * finv[3 * c + 0]
                + finv[3 * r + 1] * finv[3 * c + 1]
                + finv[3 * r + 2] * finv[3 * c + 2]
            )
    for r in range(3):
        for c in range(3):
            ttt[3 * r + c] = (
                finv[3 * 0 + r] * tmp[3 * 0 + c]
                + finv[3 * 1 + r] * tmp[3 * 1 + c]
                + finv[3 * 2 + r] * tmp[3 * 2 + c]
            )
    kvol = lam * (j - 1.0)
    for i in range(9):
        p[i] = 0.5 * mu * (f[i] - ttt[i]) + kvol * cof[i]
    return 0


cdef void _add_det_hessian(double coef, const double* f, double* h9) noexcept nogil:
    """h9 += coef * d2(det F)/dF2 with H[(i,j),(k,l)] = eps_ikm eps_jln F_mn."""
    cdef int i, k, jj, l, m, n, s1, s2
    for i in range(3):
        for k in range(3):
            if i == k:
                continue
            m = 3 - i - k
            s1 = _LEVI[i][k]
            for jj in range(3):
                for l in range(3):
                    if jj == l:
                        continue
                    n = 3 - jj - l
                    s2 = _LEVI[jj][l]
                    h9[(3 * i + jj) * 9 + (3 * k + l)] += coef * s1 * s2 * f[3 * m + n]


cdef void _add_outer(double coef, const double* v, double* h9) noexcept nogil:
    cdef int r, c
    for r in range(9):
        for c in range(9):
            h9[9 * r + c] += coef * v[r] * v[c]


cdef int _hess9(int model, double mu, double lam, const double* f, double* h9) noexcept nogil:
    cdef double cof[9]
    cdef double u[9]
    cdef double vt[9]
    cdef double s[3]
    cdef double p3[3]
    cdef double amat[9]
    cdef double modes[81]  # rows: 3 scaling, 3 twist, 3 flip (vec9 each)
    cdef double tw[3]
    cdef double fl[3]
    cdef double j, c_outer, c_hj, jm1, den, floor, si, sj, cube, inv_sqrt2
    cdef int i, r, c, idx, a, b, k
    j = _det3(f)
    for i in range(81):
        h9[i] = 0.0
    if model == 0 or model == 1:
        if model == 1 and j <= 0.0:
            return 1
        _cof3(f, cof)
        if model == 0:
            c_outer = lam
            c_hj = lam * (j - 1.0) - mu
        else:
            c_outer = lam + mu / (j * j)
            c_hj = lam * (j - 1.0) - mu / j
        for i in range(9):
            h9[9 * i + i] = mu
        _add_outer(c_outer, cof, h9)
        _add_det_hessian(c_hj, f, h9)
        return 0

    if model == 3 and j <= 0.0:
        return 1
    if _svd3_signed(f, u, s, vt) != 0:
        return 2
    j = s[0] * s[1] * s[2]
    jm1 = j - 1.0
    p3[0] = s[1] * s[2]
    p3[1] = s[0] * s[2]
    p3[2] = s[0] * s[1]

    if model == 2:  # ARAP + volume
        for i in range(3):
            amat[3 * i + i] = mu + lam * p3[i] * p3[i]
        for idx in range(3):
            i = _PAIR_I[idx]; r = _PAIR_J[idx]; k = _PAIR_K[idx]
            amat[3 * i + r] = lam * (p3[i] * p3[r] + jm1 * s[k])
            amat[3 * r + i] = amat[3 * i + r]
            den = s[i] + s[r]
            floor = 1e-8 * (s[0] if s[0] > 1.0 else 1.0)
            if den >= 0.0:
                den = den if den > floor else floor
            else:
                den = den if den < -floor else -floor
            tw[idx] = mu - 2.0 * mu / den + lam * jm1 * s[k]
            fl[idx] = mu - lam * jm1 * s[k]
    else:  # symmetric Dirichlet + volume
        for i in range(3):
            amat[3 * i + i] = 0.5 * mu * (1.0 + 3.0 / (s[i] ** 4)) + lam * p3[i] * p3[i]
        for idx in range(3):
            i = _PAIR_I[idx]; r = _PAIR_J[idx]; k = _PAIR_K[idx]
            amat[3 * i + r] = lam * (p3[i] * p3[r] + jm1 * s[k])
            amat[3 * r + i] = amat[3 * i + r]
            si = s[i]; sj = s[r]
            cube = (si ** 3) * (sj ** 3)
            tw[idx] = 0.5 * mu * (1.0 - (si * si - si * sj + sj * sj) / cube) + lam * jm1 * s[k]
            fl[idx] = 0.5 * mu * (1.0 + (si * si + si * sj + sj * sj) / cube) - lam * jm1 * s[k]

    inv_sqrt2 = 1.0 / sqrt(2.0)
    for a in range(3):  # scaling modes: u_a v_a^T
        for r in range(3):
            for c in range(3):
                modes[9 * a + 3 * r + c] = u[3 * r + a] * vt[3 * a + c]
    for idx in range(3):  # twist / flip modes
        i = _PAIR_I[idx]
        k = _PAIR_J[idx]
        for r in range(3):
            for c in range(3):
                si = u[3 * r + i] * vt[3 * k + c]
                sj = u[3 * r + k] * vt[3 * i + c]
                modes[9 * (3 + idx) + 3 * r + c] = inv_sqrt2 * (si - sj)
                modes[9 * (6 + idx) + 3 * r + c] = inv_sqrt2 * (si + sj)
    for a in range(3):
        for b in range(3):
            if amat[3 * a + b] != 0.0:
                for r in range(9):
                    for c in range(9):
                        h9[9 * r + c] += amat[3 * a + b] * modes[9 * a + r] * modes[9 * b + c]
    for idx in range(3):
        _add_outer(tw[idx], &modes[9 * (3 + idx)], h9)
        _add_outer(fl[idx], &modes[9 * (6 + idx)], h9)
    # symmetrize away rounding skew, mirroring the reference
    for r in range(9):
        for c in range(r + 1, 9):
            si = 0.5 * (h9[9 * r + c] + h9[9 * c + r])
            h9[9 * r + c] = si
            h9[9 * c + r] = si
    return 0


cdef void _sandwich12(
    const double* h9, const double* bm, double vol, double* h12
) noexcept nogil:
    """h12 = vol * G^T h9 G for the element's dF/dx structure."""
    cdef double w[12]  # 4 x 3 vertex weights
    cdef double tmp[108]  # 9 x 12
    cdef int k, d, l, ff, b, c, col
    cdef double acc
    for b in range(3):
        w[0 * 3 + b] = -(bm[0 + b] + bm[3 + b] + bm[6 + b])
        w[1 * 3 + b] = bm[0 + b]
        w[2 * 3 + b] = bm[3 + b]
        w[3 * 3 + b] = bm[6 + b]
    for d in range(3):
        for b in range(3):
            for l in range(4):
                for ff in range(3):
                    acc = 0.0
                    for c in range(3):
                        acc += h9[(3 * d + b) * 9 + (3 * ff + c)] * w[3 * l + c]
                    tmp[(3 * d + b) * 12 + (3 * l + ff)] = acc
    for k in range(4):
        for d in range(3):
            for col in range(12):
                acc = 0.0
                for b in range(3):
                    acc += w[3 * k + b] * tmp[(3 * d + b) * 12 + col]
                h12[(3 * k + d) * 12 + col] = vol * acc
    for k in range(12):
        for col in range(k + 1, 12):
            acc = 0.5 * (h12[12 * k + col] + h12[12 * col + k])
            h12[12 * k + col] = acc
            h12[12 * col + k] = acc


def total_energy(x, tets, bm, vol, double mu, double lam, int model):
    """Sum of rest_volume * Psi over all elements; +inf propagates."""
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] tv = np.ascontiguousarray(tets, dtype=np.int64)
    cdef double[:, :, ::1] bv = np.ascontiguousarray(bm, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(vol, dtype=np.float64)
    cdef Py_ssize_t m = tv.shape[0], e
    cdef double f[9]
    cdef double total = 0.0
    with nogil:
        for e in range(m):
            _gather_f(xv, &tv[e, 0], &bv[e, 0, 0], f)
            total += vv[e] * _psi(model, mu, lam, f)
    return float(total)


def energy_gradient(x, tets, bm, vol, double mu, double lam, int model):
    """Total energy and its (n, 3) gradient over all vertices."""
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] tv = np.ascontiguousarray(tets, dtype=np.int64)
    cdef double[:, :, ::1] bv = np.ascontiguousarray(bm, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(vol, dtype=np.float64)
    cdef Py_ssize_t m = tv.shape[0], e
    grad_arr = np.zeros((xv.shape[0], 3), dtype=np.float64)
    cdef double[:, ::1] gv = grad_arr
    cdef double f[9]
    cdef double p[9]
    cdef double w[12]
    cdef double g0, g1, g2, ve
    cdef double total = 0.0
    cdef int bad = 0, k, a, b
    with nogil:
        for e in range(m):
            _gather_f(xv, &tv[e, 0], &bv[e, 0, 0], f)
            total += vv[e] * _psi(model, mu, lam, f)
            if _pk1(model, mu, lam, f, p) != 0:
                bad += 1
                continue
            for b in range(3):
                w[0 + b] = -(bv[e, 0, b] + bv[e, 1, b] + bv[e, 2, b])
                w[3 + b] = bv[e, 0, b]
                w[6 + b] = bv[e, 1, b]
                w[9 + b] = bv[e, 2, b]
            ve = vv[e]
            for k in range(4):
                for a in range(3):
                    gv[tv[e, k], a] += ve * (
                        p[3 * a + 0] * w[3 * k + 0]
                        + p[3 * a + 1] * w[3 * k + 1]
                        + p[3 * a + 2] * w[3 * k + 2]
                    )
    if bad:
        raise ValueError(
            f"energy gradient undefined: {bad} element(s) have J <= 0 "
            "(infinite-energy state for this model)"
        )
    return float(total), grad_arr


def element_hessians(
    x, tets, bm, vol, double mu, double lam, int model, int mode, double eps
):
    """Per-element filtered 12x12 blocks plus pre-filter negative counts.

    mode: 0 = none, 1 = clamp(eps), 2 = abs, 3 = shift (as in projection.py).
    """
    cdef double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.int64_t[:, ::1] tv = np.ascontiguousarray(tets, dtype=np.int64)
    cdef double[:, :, ::1] bv = np.ascontiguousarray(bm, dtype=np.float64)
    cdef double[::1] vv = np.ascontiguousarray(vol, dtype=np.float64)
    cdef Py_ssize_t m = tv.shape[0], e
    blocks_arr = np.empty((m, 12, 12), dtype=np.float64)
    counts_arr = np.zeros(m, dtype=np.int64)
    cdef double[:, :, ::1] hv = blocks_arr
    cdef cnp.int64_t[::1] cv = counts_arr
    cdef double f[9]
    cdef double h9[81]
    cdef double h12[144]
    cdef double asym[144]
    cdef double wvals[12]
    cdef double wnew[12]
    cdef double work[512]
    cdef int n12 = 12, lwork = 512, info, i, r, c, nneg
    cdef char jobn = b'N', jobv = b'V', uplo = b'L'
    cdef double scale, tau, acc
    cdef int bad = 0, eig_fail = -1
    with nogil:
        for e in range(m):
            _gather_f(xv, &tv[e, 0], &bv[e, 0, 0], f)
            if _hess9(model, mu, lam, f, h9) != 0:
                bad += 1
                continue
            _sandwich12(h9, &bv[e, 0, 0], vv[e], h12)
            for i in range(144):
                asym[i] = h12[i]
            if mode == 0 or mode == 3:
                dsyev(&jobn, &uplo, &n12, asym, &n12, wvals, work, &lwork, &info)
            else:
                dsyev(&jobv, &uplo, &n12, asym, &n12, wvals, work, &lwork, &info)
            if info != 0:
                if eig_fail < 0:
                    eig_fail = <int> e
                continue
            scale = 0.0
            for i in range(12):
                if fabs(wvals[i]) > scale:
                    scale = fabs(wvals[i])
            nneg = 0
            for i in range(12):
                if wvals[i] < -NEG_TOL * scale:
                    nneg += 1
            cv[e] = nneg
            if mode == 0:
                pass  # raw block
            elif mode == 3:
                tau = -wvals[0] if wvals[0] < 0.0 else 0.0
                for i in range(12):
                    h12[12 * i + i] += tau
            else:
                if mode == 1:
                    for i in range(12):
                        wnew[i] = wvals[i] if wvals[i] > eps else eps
                else:
                    for i in range(12):
                        wnew[i] = fabs(wvals[i])
                # eigenvector k is row k of asym in this row-major view
                for r in range(12):
                    for c in range(r, 12):
                        acc = 0.0
                        for i in range(12):
                            acc += wnew[i] * asym[12 * i + r] * asym[12 * i + c]
                        h12[12 * r + c] = acc
                        h12[12 * c + r] = acc
            for r in range(12):
                for c in range(12):
                    hv[e, r, c] = h12[12 * r + c]
    if bad:
        raise ValueError(
            f"energy Hessian undefined: {bad} element(s) have J <= 0 "
            "(infinite-energy state for this model)"
        )
    if eig_fail >= 0:
        raise RuntimeError(f"eigendecomposition failed for element {eig_fail}")
    return blocks_arr, counts_arr
