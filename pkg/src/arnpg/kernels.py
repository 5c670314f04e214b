"""Hot Monte-Carlo kernels.

Each kernel has a numba ``@njit`` version and a pure-numpy version that
produces bit-identical output.  Set ``ARNPG_DISABLE_NUMBA=1`` (before import)
to force the numpy path; the numpy path is also used if numba is missing.
"""
from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("ARNPG_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def rollout_returns_numpy(p_cdf, pi_cdf, rho_cdf, tables0, tables, gamma, start_s, start_a,
                          uniforms, from_rho):
    """Mean truncated discounted return per start and per reward table.

    p_cdf (S, A, S), pi_cdf (S, A) and rho_cdf (S,) are cumulative sums.
    uniforms has shape (N, B, H, 2): slot [.., t, 0] draws the state at step t,
    slot [.., t, 1] the action.  Step 0 uses ``tables0`` and is either the given
    (start_s, start_a) pair or a draw from rho and the policy when ``from_rho``.
    Returns (N, n) where n = tables.shape[0].
    """
    N, B, H, _ = uniforms.shape
    S = p_cdf.shape[0]
    A = p_cdf.shape[1]
    if from_rho:
        s = np.minimum((rho_cdf[None, None, :] <= uniforms[:, :, 0, 0, None]).sum(axis=-1), S - 1)
        a = np.minimum((pi_cdf[s] <= uniforms[:, :, 0, 1, None]).sum(axis=-1), A - 1)
    else:
        s = np.broadcast_to(np.asarray(start_s)[:, None], (N, B)).copy()
        a = np.broadcast_to(np.asarray(start_a)[:, None], (N, B)).copy()
    acc = tables0[:, s, a]  # (n, N, B)
    disc = 1.0
    for t in range(1, H):
        s = np.minimum((p_cdf[s, a] <= uniforms[:, :, t, 0, None]).sum(axis=-1), S - 1)
        a = np.minimum((pi_cdf[s] <= uniforms[:, :, t, 1, None]).sum(axis=-1), A - 1)
        disc = disc * gamma
        acc = acc + disc * tables[:, s, a]
    out = acc[:, :, 0].copy()
    for b in range(1, B):
        out = out + acc[:, :, b]
    return (out / B).T.copy()


def sample_categorical_numpy(cdf_rows, uniforms):
    """Index drawn from each cdf row (..., K) with matching uniforms (...)."""
    K = cdf_rows.shape[-1]
    return np.minimum((cdf_rows <= uniforms[..., None]).sum(axis=-1), K - 1)


if HAVE_NUMBA:

    @njit(cache=True)
    def _search(cdf, u):
        k = 0
        for j in range(cdf.shape[0]):
            if cdf[j] <= u:
                k += 1
        if k > cdf.shape[0] - 1:
            k = cdf.shape[0] - 1
        return k

    @njit(cache=True)
    def _rollout_numba(p_cdf, pi_cdf, rho_cdf, tables0, tables, gamma, start_s, start_a,
                       uniforms, from_rho):
        N, B, H = uniforms.shape[0], uniforms.shape[1], uniforms.shape[2]
        n = tables.shape[0]
        acc = np.empty((n, N, B))
        for i in range(N):
            for b in range(B):
                if from_rho:
                    s = _search(rho_cdf, uniforms[i, b, 0, 0])
                    a = _search(pi_cdf[s], uniforms[i, b, 0, 1])
                else:
                    s = start_s[i]
                    a = start_a[i]
                for k in range(n):
                    acc[k, i, b] = tables0[k, s, a]
                disc = 1.0
                for t in range(1, H):
                    s = _search(p_cdf[s, a], uniforms[i, b, t, 0])
                    a = _search(pi_cdf[s], uniforms[i, b, t, 1])
                    disc = disc * gamma
                    for k in range(n):
                        acc[k, i, b] = acc[k, i, b] + disc * tables[k, s, a]
        out = np.empty((N, n))
        for i in range(N):
            for k in range(n):
                tot = acc[k, i, 0]
                for b in range(1, B):
                    tot = tot + acc[k, i, b]
                out[i, k] = tot / B
        return out

    @njit(cache=True)
    def _sample_categorical_numba(cdf_rows, uniforms):
        flat_u = uniforms.ravel()
        K = cdf_rows.shape[-1]
        rows = cdf_rows.reshape(-1, K)
        out = np.empty(flat_u.shape[0], dtype=np.int64)
        for i in range(flat_u.shape[0]):
            out[i] = _search(rows[i], flat_u[i])
        return out

    def rollout_returns(p_cdf, pi_cdf, rho_cdf, tables0, tables, gamma, start_s, start_a,
                        uniforms, from_rho):
        return _rollout_numba(p_cdf, pi_cdf, rho_cdf, np.ascontiguousarray(tables0),
                              np.ascontiguousarray(tables), float(gamma),
                              np.asarray(start_s, dtype=np.int64),
                              np.asarray(start_a, dtype=np.int64), uniforms, bool(from_rho))

    def sample_categorical(cdf_rows, uniforms):
        uniforms = np.asarray(uniforms, dtype=np.float64)
        rows = np.ascontiguousarray(np.broadcast_to(cdf_rows, uniforms.shape + cdf_rows.shape[-1:]))
        return _sample_categorical_numba(rows, np.ascontiguousarray(uniforms)).reshape(uniforms.shape)

else:
    rollout_returns = rollout_returns_numpy
    sample_categorical = sample_categorical_numpy
