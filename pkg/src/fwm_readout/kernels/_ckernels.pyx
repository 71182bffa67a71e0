# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the simulation kernels.

Mirrors ``_pykernels`` operation for operation: same counter-based streams,
same floating-point evaluation order, so the two backends produce bit
identical output.  Any change must be applied to both modules.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, floor, log, log1p, pow, sqrt
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

BACKEND_NAME = "compiled"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15u
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9u
cdef uint64_t MIX2 = 0x94D049BB133111EBu
cdef uint64_t KEY1 = 0xA24BAED4963EE407u
cdef uint64_t KEY2 = 0x9FB21C651E98DF25u

cdef double TO_UNIT = 1.0 / 9007199254740992.0  # 2^-53
cdef double TWO_PI = 6.283185307179586

cdef int PURPOSE_WRITE = 1
cdef int PURPOSE_THIN = 2
cdef int PURPOSE_NOISE_RA = 3
cdef int PURPOSE_NOISE_RS = 4
cdef int PURPOSE_READNOISE = 5
cdef int PURPOSE_COUNTING = 6


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = z ^ (z >> 30)
    z = z * MIX1
    z = z ^ (z >> 27)
    z = z * MIX2
    return z ^ (z >> 31)


cdef inline uint64_t stream_key(uint64_t seed, uint64_t purpose, uint64_t index) nogil:
    cdef uint64_t k = mix64(seed ^ (purpose * KEY1))
    return mix64(k ^ ((index + 1u) * KEY2))


cdef inline uint64_t raw64(uint64_t key, uint64_t counter) nogil:
    return mix64(key + (counter + 1u) * GOLDEN)


cdef inline double u01(uint64_t key, uint64_t counter) nogil:
    return <double>(raw64(key, counter) >> 11) * TO_UNIT


cdef inline double normal_at(uint64_t key, uint64_t counter) nogil:
    cdef uint64_t x1 = raw64(key, counter * 2u)
    cdef uint64_t x2 = raw64(key, counter * 2u + 1u)
    cdef double u1 = <double>((x1 >> 11) + 1u) * TO_UNIT
    cdef double u2 = <double>(x2 >> 11) * TO_UNIT
    return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)


cdef inline double geometric_from_u(double u, double mean, double logq) nogil:
    # logq = log(mean / (mean + 1)) precomputed by the caller; mean <= 0 is
    # handled there as well.
    return floor(log1p(-u) / logq)


cdef inline double binomial_from_u(double u, double n, double p, double odds) nogil:
    # Single-uniform CDF inversion with the ratio recurrence; p in (0, 1).
    cdef double pmf = pow(1.0 - p, n)
    cdef double cum = pmf
    cdef double k = 0.0
    cdef double ratio
    while u >= cum and k < n:
        ratio = (n - k) / (k + 1.0)
        pmf = pmf * ratio
        pmf = pmf * odds
        cum = cum + pmf
        k = k + 1.0
    return k


cdef inline double _deposit_value(
    Py_ssize_t s,
    Py_ssize_t d,
    int64_t[::1] sela,
    int64_t[::1] moda,
    int64_t[::1] selb,
    int64_t[::1] modb,
    double[:, ::1] ws,
    double[:, ::1] ra,
    double[:, ::1] rs,
    double t_ws,
    double t_ra,
    double t_rs,
) nogil:
    cdef int64_t sel = sela[d]
    cdef double v
    if sel == 0:
        v = t_ws * ws[s, moda[d]]
    elif sel == 1:
        v = t_ra * ra[s, moda[d]]
    else:
        v = t_rs * rs[s, moda[d]]
    sel = selb[d]
    if sel == 0:
        v = v + t_ws * ws[s, modb[d]]
    elif sel == 1:
        v = v + t_ra * ra[s, modb[d]]
    elif sel == 2:
        v = v + t_rs * rs[s, modb[d]]
    return v


def sample_write_block(seed, shot0, n_shots, n_modes, mean_nb, eta_w):
    """Compiled twin of ``_pykernels.sample_write_block``."""
    cdef uint64_t c_seed = <uint64_t>seed
    cdef uint64_t c_shot0 = <uint64_t>shot0
    cdef Py_ssize_t ns = n_shots, nm = n_modes
    cdef double mean = mean_nb, p = eta_w
    out_ws = np.empty((ns, nm), dtype=np.float64)
    out_b = np.empty((ns, nm), dtype=np.float64)
    cdef double[:, ::1] ws = out_ws
    cdef double[:, ::1] nb = out_b
    keys_ws_arr = np.empty(nm, dtype=np.uint64)
    keys_th_arr = np.empty(nm, dtype=np.uint64)
    cdef uint64_t[::1] keys_ws = keys_ws_arr
    cdef uint64_t[::1] keys_th = keys_th_arr
    cdef Py_ssize_t s, m
    cdef uint64_t ctr
    cdef double u, n, logq = 0.0, odds = 0.0
    cdef bint degenerate_mean = mean <= 0.0
    cdef bint thin_all = p >= 1.0
    cdef bint thin_none = p <= 0.0
    if not degenerate_mean:
        logq = log(mean / (mean + 1.0))
    if not (thin_all or thin_none):
        odds = p / (1.0 - p)
    with nogil:
        for m in range(nm):
            keys_ws[m] = stream_key(c_seed, <uint64_t>PURPOSE_WRITE, <uint64_t>m)
            keys_th[m] = stream_key(c_seed, <uint64_t>PURPOSE_THIN, <uint64_t>m)
        for s in range(ns):
            ctr = c_shot0 + <uint64_t>s
            for m in range(nm):
                if degenerate_mean:
                    n = 0.0
                else:
                    u = u01(keys_ws[m], ctr)
                    n = geometric_from_u(u, mean, logq)
                ws[s, m] = n
                if thin_all:
                    nb[s, m] = n
                elif thin_none or n <= 0.0:
                    nb[s, m] = 0.0
                else:
                    u = u01(keys_th[m], ctr)
                    nb[s, m] = binomial_from_u(u, n, p, odds)
    return out_ws, out_b


def sample_readout_block(seed, shot0, n_b, eta_r, gbar_ra, sbar_ra, gbar_rs, sbar_rs):
    """Compiled twin of ``_pykernels.sample_readout_block``."""
    cdef uint64_t c_seed = <uint64_t>seed
    cdef uint64_t c_shot0 = <uint64_t>shot0
    nb_arr = np.ascontiguousarray(n_b, dtype=np.float64)
    cdef double[:, ::1] nb = nb_arr
    cdef Py_ssize_t ns = nb.shape[0], nm = nb.shape[1]
    out_ra = np.empty((ns, nm), dtype=np.float64)
    out_rs = np.empty((ns, nm), dtype=np.float64)
    cdef double[:, ::1] ra = out_ra
    cdef double[:, ::1] rs = out_rs
    keys_ra_arr = np.empty(nm, dtype=np.uint64)
    keys_rs_arr = np.empty(nm, dtype=np.uint64)
    cdef uint64_t[::1] keys_ra = keys_ra_arr
    cdef uint64_t[::1] keys_rs = keys_rs_arr
    cdef double a_ra = eta_r * gbar_ra
    cdef double a_rs = eta_r * gbar_rs
    cdef double m_ra = sbar_ra, m_rs = sbar_rs
    cdef double logq_ra = 0.0, logq_rs = 0.0
    cdef bint no_ra = m_ra <= 0.0
    cdef bint no_rs = m_rs <= 0.0
    if not no_ra:
        logq_ra = log(m_ra / (m_ra + 1.0))
    if not no_rs:
        logq_rs = log(m_rs / (m_rs + 1.0))
    cdef Py_ssize_t s, m
    cdef uint64_t ctr
    cdef double noise
    with nogil:
        for m in range(nm):
            keys_ra[m] = stream_key(c_seed, <uint64_t>PURPOSE_NOISE_RA, <uint64_t>m)
            keys_rs[m] = stream_key(c_seed, <uint64_t>PURPOSE_NOISE_RS, <uint64_t>m)
        for s in range(ns):
            ctr = c_shot0 + <uint64_t>s
            for m in range(nm):
                if no_ra:
                    noise = 0.0
                else:
                    noise = geometric_from_u(u01(keys_ra[m], ctr), m_ra, logq_ra)
                ra[s, m] = a_ra * nb[s, m] + noise
                if no_rs:
                    noise = 0.0
                else:
                    noise = geometric_from_u(u01(keys_rs[m], ctr), m_rs, logq_rs)
                rs[s, m] = a_rs * nb[s, m] + noise
    return out_ra, out_rs


def render_block(
    seed,
    shot0,
    n_ws,
    n_ra,
    n_rs,
    dep_sel_a,
    dep_mode_a,
    dep_sel_b,
    dep_mode_b,
    stencil_pix,
    stencil_w,
    stencil_start,
    n_pixels,
    t_ws,
    t_ra,
    t_rs,
    kappa,
    qe,
    counting,
):
    """Compiled twin of ``_pykernels.render_block``."""
    cdef uint64_t c_seed = <uint64_t>seed
    cdef uint64_t c_shot0 = <uint64_t>shot0
    ws_arr = np.ascontiguousarray(n_ws, dtype=np.float64)
    ra_arr = np.ascontiguousarray(n_ra, dtype=np.float64)
    rs_arr = np.ascontiguousarray(n_rs, dtype=np.float64)
    sela_arr = np.ascontiguousarray(dep_sel_a, dtype=np.int64)
    moda_arr = np.ascontiguousarray(dep_mode_a, dtype=np.int64)
    selb_arr = np.ascontiguousarray(dep_sel_b, dtype=np.int64)
    modb_arr = np.ascontiguousarray(dep_mode_b, dtype=np.int64)
    pix_arr = np.ascontiguousarray(stencil_pix, dtype=np.int64)
    w_arr = np.ascontiguousarray(stencil_w, dtype=np.float64)
    start_arr = np.ascontiguousarray(stencil_start, dtype=np.int64)
    # all per-shot work happens on the compact set of pixels any stencil can
    # light; noise counters use the true pixel index, so results match the
    # full-frame evaluation bit for bit
    upix_arr = np.unique(pix_arr)
    local_arr = np.searchsorted(upix_arr, pix_arr).astype(np.int64)
    cdef double[:, ::1] ws = ws_arr
    cdef double[:, ::1] ra = ra_arr
    cdef double[:, ::1] rs = rs_arr
    cdef int64_t[::1] sela = sela_arr
    cdef int64_t[::1] moda = moda_arr
    cdef int64_t[::1] selb = selb_arr
    cdef int64_t[::1] modb = modb_arr
    cdef double[::1] sw = w_arr
    cdef int64_t[::1] sstart = start_arr
    cdef int64_t[::1] upix = upix_arr
    cdef int64_t[::1] slocal = local_arr
    cdef Py_ssize_t ns = ws.shape[0]
    cdef Py_ssize_t n_dep = sela.shape[0]
    cdef Py_ssize_t n_up = upix_arr.shape[0]
    cdef Py_ssize_t npix = n_pixels
    cdef double c_tws = t_ws, c_tra = t_ra, c_trs = t_rs
    cdef double c_kappa = kappa, c_qe = qe
    cdef bint c_counting = counting

    row_arr = np.zeros(max(n_up, 1), dtype=np.float64)
    cdef double[::1] row = row_arr
    cdef uint64_t key_rn = stream_key(c_seed, <uint64_t>PURPOSE_READNOISE, 0u)
    cdef uint64_t key_cnt = stream_key(c_seed, <uint64_t>PURPOSE_COUNTING, 0u)

    cdef Py_ssize_t s, d, e, q
    cdef int64_t sel
    cdef double v, z, fac, counts, k
    cdef double odds = 0.0
    cdef uint64_t ctr
    cdef bint qe_all = c_qe >= 1.0
    cdef bint qe_none = c_qe <= 0.0
    if c_counting and not (qe_all or qe_none):
        odds = c_qe / (1.0 - c_qe)

    cdef float[:, ::1] of32
    cdef unsigned short[:, ::1] ou16

    if c_counting:
        out_u16 = np.zeros((ns, npix), dtype=np.uint16)
        ou16 = out_u16
        with nogil:
            for s in range(ns):
                for q in range(n_up):
                    row[q] = 0.0
                for d in range(n_dep):
                    v = _deposit_value(s, d, sela, moda, selb, modb, ws, ra, rs, c_tws, c_tra, c_trs)
                    for e in range(sstart[d], sstart[d + 1]):
                        row[slocal[e]] += sw[e] * v
                for q in range(n_up):
                    counts = floor(row[q] + 0.5)
                    if counts <= 0.0:
                        continue
                    if qe_all:
                        k = counts
                    elif qe_none:
                        k = 0.0
                    else:
                        ctr = (c_shot0 + <uint64_t>s) * <uint64_t>npix + <uint64_t>upix[q]
                        k = binomial_from_u(u01(key_cnt, ctr), counts, c_qe, odds)
                    if k > 65535.0:
                        k = 65535.0
                    ou16[s, upix[q]] = <unsigned short>k
        return out_u16

    out_f32 = np.zeros((ns, npix), dtype=np.float32)
    of32 = out_f32
    with nogil:
        for s in range(ns):
            for q in range(n_up):
                row[q] = 0.0
            for d in range(n_dep):
                v = _deposit_value(s, d, sela, moda, selb, modb, ws, ra, rs, c_tws, c_tra, c_trs)
                for e in range(sstart[d], sstart[d + 1]):
                    row[slocal[e]] += sw[e] * v
            for q in range(n_up):
                v = row[q]
                if c_kappa != 0.0 and v != 0.0:
                    ctr = (c_shot0 + <uint64_t>s) * <uint64_t>npix + <uint64_t>upix[q]
                    z = normal_at(key_rn, ctr)
                    fac = 1.0 + c_kappa * z
                    if fac < 0.0:
                        fac = 0.0
                    v = v * fac
                of32[s, upix[q]] = <float>v
    return out_f32
