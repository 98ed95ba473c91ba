"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""

import numpy as np

# cap on elements materialised per batch of simulated paths
_BATCH_ELEMENTS = 1 << 22


def _norms(x, p_inf):
    if p_inf:
        return np.abs(x).max(axis=-1)
    return np.sqrt(np.einsum("...k,...k->...", x, x))


def mc_statistics(gen, normals, p_inf, full_sum):
    gen = np.asarray(gen, dtype=float)
    normals = np.asarray(normals, dtype=float)
    S, T = normals.shape
    if T != gen.shape[0]:
        raise ValueError("normals must have one column per time")
    out = np.empty(S)
    if full_sum:
        # sum_t gen[t] * g[r, t] for all r at once
        out[:] = _norms(normals @ gen, p_inf)
        return out
    step = max(1, _BATCH_ELEMENTS // max(T * gen.shape[1], 1))
    for lo in range(0, S, step):
        paths = normals[lo:lo + step, :, None] * gen[None, :, :]
        np.cumsum(paths, axis=1, out=paths)
        out[lo:lo + step] = _norms(paths, p_inf).max(axis=1)
    return out


def path_statistic(values, p_inf, full_sum):
    values = np.asarray(values, dtype=float)
    if full_sum:
        return float(_norms(values.sum(axis=0), p_inf))
    return float(_norms(np.cumsum(values, axis=0), p_inf).max())
