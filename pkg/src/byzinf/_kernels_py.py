"""Pure numpy kernels. The compiled module ``_kernels`` mirrors these exactly.

Both implementations use only comparisons, integer counting and elementwise
IEEE arithmetic in the same order, so their outputs are bit-identical.
"""

import numpy as np

_CHUNK_ELEMS = 1 << 22


def _categorical(u, cdf):
    # symbol = 1 + #{k < M-1 : cdf[k] <= u}; cdf broadcasts against u[..., None]
    m = cdf.shape[-1]
    return (cdf[..., : m - 1] <= u[..., None]).sum(axis=-1, dtype=np.int32) + 1


def draw_symbols(u_obs, obs_cdf, byz, u_flip, attack_cdf):
    """Categorical draws of honest symbols, then flips for Byzantine nodes.

    u_obs, u_flip : (rows, N) uniforms
    obs_cdf       : (rows, M) cumulative symbol law of each row
    byz           : (N,) or (rows, N) nonzero for Byzantine nodes
    attack_cdf    : (M, M) cumulative rows of the flipping matrix
    """
    u_obs = np.asarray(u_obs, dtype=np.float64)
    rows, n = u_obs.shape
    m = obs_cdf.shape[1]
    byz = np.broadcast_to(np.asarray(byz, dtype=bool), (rows, n))
    out = np.empty((rows, n), dtype=np.int32)
    step = max(1, _CHUNK_ELEMS // max(1, n * m))
    for lo in range(0, rows, step):
        hi = min(rows, lo + step)
        sym = _categorical(u_obs[lo:hi], obs_cdf[lo:hi, None, :])
        b = byz[lo:hi]
        if b.any():
            flipped = _categorical(u_flip[lo:hi][b], attack_cdf[sym[b] - 1])
            sym[b] = flipped
        out[lo:hi] = sym
    return out


def symbol_counts(symbols, m):
    symbols = np.asarray(symbols, dtype=np.int32)
    rows = symbols.shape[0]
    counts = np.zeros((rows, m), dtype=np.int64)
    np.add.at(counts, (np.repeat(np.arange(rows), symbols.shape[1]), symbols.ravel() - 1), 1)
    return counts


def cumulative_deviations(symbols, centroids, predicted):
    """Running sums over time of ``(centroid[v] - predicted[t])**2``; shape (T, N)."""
    c = np.asarray(centroids, dtype=np.float64)[np.asarray(symbols) - 1]
    diff = c - np.asarray(predicted, dtype=np.float64)[:, None]
    return np.cumsum(diff * diff, axis=0)
