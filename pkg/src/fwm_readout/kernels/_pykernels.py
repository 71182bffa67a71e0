"""NumPy implementation of the simulation kernels.

This is the fallback backend and the behavioral reference: the compiled
extension must reproduce its output bit for bit (same counter-based streams,
same floating-point operation order).  Keep the two in lockstep.

Shots are addressed by absolute index, so any block decomposition of a run
yields identical results.
"""

from __future__ import annotations

import numpy as np

from .. import rng

BACKEND_NAME = "python"


def _keys(seed: int, purpose: int, n: int) -> np.ndarray:
    return np.array([rng.stream_key(seed, purpose, m) for m in range(n)], dtype=np.uint64)


def _shot_column(shot0: int, n_shots: int) -> np.ndarray:
    return np.arange(shot0, shot0 + n_shots, dtype=np.uint64)[:, None]


def sample_write_block(seed, shot0, n_shots, n_modes, mean_nb, eta_w):
    """Write-in photon numbers and stored excitations for a block of shots.

    Per (shot, mode): thermal (geometric) Stokes photon number with mean
    ``mean_nb``, then binomial thinning with probability ``eta_w`` for the
    surviving excitation number.  Returns (n_ws, n_b) as float64 arrays of
    shape (n_shots, n_modes).
    """
    shots = _shot_column(shot0, n_shots)
    u_ws = rng.uniform01(_keys(seed, rng.PURPOSE_WRITE, n_modes), shots)
    n_ws = rng.geometric_from_u(u_ws, mean_nb)
    u_th = rng.uniform01(_keys(seed, rng.PURPOSE_THIN, n_modes), shots)
    n_b = rng.binomial_from_u(u_th, n_ws, eta_w)
    return n_ws, n_b


def sample_readout_block(seed, shot0, n_b, eta_r, gbar_ra, sbar_ra, gbar_rs, sbar_rs):
    """Readout photon numbers for a block of shots.

    Per (shot, mode): deterministic gain ``eta_r * gbar * n_b`` plus an
    independent geometric spontaneous term with the model mean.  Returns
    (n_ra, n_rs) matching the shape of ``n_b``.
    """
    n_b = np.asarray(n_b, dtype=np.float64)
    n_shots, n_modes = n_b.shape
    shots = _shot_column(shot0, n_shots)
    a_ra = eta_r * gbar_ra
    a_rs = eta_r * gbar_rs
    s_ra = rng.geometric_from_u(rng.uniform01(_keys(seed, rng.PURPOSE_NOISE_RA, n_modes), shots), sbar_ra)
    s_rs = rng.geometric_from_u(rng.uniform01(_keys(seed, rng.PURPOSE_NOISE_RS, n_modes), shots), sbar_rs)
    n_ra = a_ra * n_b + s_ra
    n_rs = a_rs * n_b + s_rs
    return n_ra, n_rs


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
    """Render a block of camera frames from per-mode photon numbers.

    The caller lays out one deposit per physical spot: field selector and
    mode index for the direct term (``dep_sel_a``/``dep_mode_a``, selector 0
    = write-Stokes, 1 = readout anti-Stokes, 2 = readout Stokes) plus an
    optional conjugate-mode term (``dep_sel_b`` = -1 when absent), spread
    over the CSR stencil.  In linear mode every nonzero pixel then gets
    multiplicative read noise with standard deviation ``kappa`` times its
    intensity (clipped so intensities stay nonnegative); in counting mode
    the rounded pixel sum is thinned through a Binomial with the counting
    efficiency ``qe``.
    """
    n_ws = np.asarray(n_ws, dtype=np.float64)
    n_ra = np.asarray(n_ra, dtype=np.float64)
    n_rs = np.asarray(n_rs, dtype=np.float64)
    n_shots = n_ws.shape[0]
    n_dep = len(dep_sel_a)

    # Only stencil pixels can be lit, so all per-shot work happens on that
    # compact column set; untouched pixels stay exactly zero.  Camera-noise
    # counters are addressed by the true pixel index, so this compaction
    # cannot change any value.
    stencil_pix = np.asarray(stencil_pix, dtype=np.int64)
    upix = np.unique(stencil_pix)
    local = np.searchsorted(upix, stencil_pix)
    work = np.zeros((n_shots, upix.size), dtype=np.float64)

    prods = (t_ws * n_ws, t_ra * n_ra, t_rs * n_rs)
    for d in range(n_dep):
        v = prods[int(dep_sel_a[d])][:, int(dep_mode_a[d])]
        if dep_sel_b[d] >= 0:
            v = v + prods[int(dep_sel_b[d])][:, int(dep_mode_b[d])]
        for e in range(int(stencil_start[d]), int(stencil_start[d + 1])):
            work[:, int(local[e])] += stencil_w[e] * v

    if counting:
        counts = np.floor(work + 0.5)
        if qe >= 1.0:
            lit = counts
        elif qe <= 0.0:
            lit = np.zeros_like(counts)
        else:
            lit = np.zeros_like(counts)
            rows, cols = np.nonzero(counts)
            if rows.size:
                ctr = (np.uint64(shot0) + rows.astype(np.uint64)) * np.uint64(n_pixels) + upix[
                    cols
                ].astype(np.uint64)
                u = rng.uniform01(rng.stream_key(seed, rng.PURPOSE_COUNTING, 0), ctr)
                lit[rows, cols] = rng.binomial_from_u(u, counts[rows, cols], qe)
        out = np.zeros((n_shots, n_pixels), dtype=np.uint16)
        out[:, upix] = np.minimum(lit, 65535.0).astype(np.uint16)
        return out

    if kappa != 0.0:
        rows, cols = np.nonzero(work)
        if rows.size:
            ctr = (np.uint64(shot0) + rows.astype(np.uint64)) * np.uint64(n_pixels) + upix[
                cols
            ].astype(np.uint64)
            z = rng.normals(rng.stream_key(seed, rng.PURPOSE_READNOISE, 0), ctr)
            fac = np.maximum(1.0 + kappa * z, 0.0)
            work[rows, cols] = work[rows, cols] * fac
    out = np.zeros((n_shots, n_pixels), dtype=np.float32)
    out[:, upix] = work.astype(np.float32)
    return out
