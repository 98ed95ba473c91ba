"""Rolling lag-window covariance of residual products.

Each local covariance estimate is rank one,
``Sigma_t = a_t a_t'`` with ``a_t = L**-0.5 * sum(R[t-L+1 .. t])``, so only
the generators ``a_t`` are stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidCandidates, OutOfRange, WindowTooLarge


def _as_matrix(R):
    """Return ``(values, first_time)`` for a ResidualProducts or an array."""
    if hasattr(R, "values") and hasattr(R, "times"):
        return np.asarray(R.values, dtype=float), int(R.times[0])
    arr = np.asarray(R, dtype=float)
    if arr.ndim == 1:
        arr = arr[:, None]
    return arr, 1


def window_sums(values: np.ndarray, window: int) -> np.ndarray:
    """Sums over every length-``window`` run of rows, summed directly."""
    view = np.lib.stride_tricks.sliding_window_view(values, window, axis=0)
    return view.sum(axis=-1)


@dataclass(frozen=True)
class CovariancePath:
    """Generators ``a_t`` for times ``t_start .. t_start + len(generators) - 1``."""

    window: int
    t_start: int
    generators: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t_start, self.t_start + len(self.generators))

    def _pos(self, t: int) -> int:
        pos = int(t) - self.t_start
        if not 0 <= pos < len(self.generators):
            raise OutOfRange(f"time {t} outside [{self.t_start}, {self.t_start + len(self.generators) - 1}]")
        return pos

    def covariance(self, t: int) -> np.ndarray:
        a = self.generators[self._pos(t)]
        return np.outer(a, a)


def rolling_path(R, window: int) -> CovariancePath:
    """Lag-window covariance path of residual products ``R``.

    The first time of the path is ``window - 1`` steps after the first row of ``R``.
    """
    values, t0 = _as_matrix(R)
    T = values.shape[0]
    if not 1 <= window <= T:
        raise WindowTooLarge(f"lag window {window} not in [1, {T}]")
    gens = window_sums(values, window) / np.sqrt(window)
    return CovariancePath(int(window), t0 + window - 1, gens)


def cumulative_cov(path: CovariancePath, t: int) -> np.ndarray:
    """Running sum of the path's covariance estimates up to time ``t``."""
    G = path.generators[: path._pos(t) + 1]
    return G.T @ G


@dataclass(frozen=True)
class LagWindowSelection:
    candidates: tuple[int, ...]
    delta: int
    index: int
    mv: np.ndarray

    @property
    def window(self) -> int:
        return self.candidates[self.index]


def default_candidates(n: int, T: int) -> list[int]:
    """Windows ``1 .. floor(n ** 0.75)``, capped so the comparison times are nonempty."""
    H = int(np.floor(n ** 0.75 + 1e-9))
    return list(range(1, max(1, min(H, T - 1)) + 1))


def volatility_se(mats: np.ndarray) -> np.ndarray:
    """Trace of the PSD square root of the mean squared deviation matrix.

    ``mats`` has shape ``(..., k, D, D)``; the deviation is taken over the
    ``k`` axis.
    """
    dev = mats - mats.mean(axis=-3, keepdims=True)
    msd = np.einsum("...hab,...hbc->...ac", dev, dev) / mats.shape[-3]
    eig = np.linalg.eigvalsh(msd)
    return np.sqrt(np.clip(eig, 0.0, None)).sum(axis=-1)


def select_lag_window(R, candidates=None, delta: int = 12, n: int | None = None) -> LagWindowSelection:
    """Minimum-volatility choice among candidate lag windows.

    For each candidate index ``j`` the criterion is the largest, over the
    common comparison times, volatility of the covariance estimates for
    the neighbouring windows ``j - delta .. j + delta``.  Ties go to the
    smallest window.
    """
    values, _ = _as_matrix(R)
    T, D = values.shape
    if candidates is None:
        candidates = default_candidates(n if n is not None else T, T)
    cands = [int(c) for c in candidates]
    if not cands or any(c < 1 for c in cands) or any(b <= a for a, b in zip(cands, cands[1:])):
        raise InvalidCandidates("candidates must be nonempty, positive and strictly increasing")
    if cands[-1] > T:
        raise InvalidCandidates(f"largest candidate {cands[-1]} exceeds {T} rows")
    if delta < 0:
        raise InvalidCandidates("delta must be nonnegative")
    H = len(cands)
    if H == 1:
        return LagWindowSelection(tuple(cands), delta, 0, np.zeros(1))
    l_max = cands[-1]
    pos = np.arange(l_max, T)
    if pos.size == 0:
        raise InvalidCandidates(f"largest candidate {l_max} leaves no comparison times in {T} rows")
    cs = np.vstack([np.zeros((1, D)), np.cumsum(values, axis=0)])
    # sums[p, h] over rows pos[p]-l_h+1 .. pos[p]
    sums = np.stack([cs[pos + 1] - cs[pos + 1 - l] for l in cands], axis=1)
    lengths = np.asarray(cands, dtype=float)
    mv = np.empty(H)
    if D == 1:
        est = sums[..., 0] ** 2 / lengths
        for j in range(H):
            lo, hi = max(0, j - delta), min(H, j + delta + 1)
            mv[j] = est[:, lo:hi].std(axis=1).max()
    else:
        for j in range(H):
            lo, hi = max(0, j - delta), min(H, j + delta + 1)
            s = sums[:, lo:hi]
            mats = np.einsum("phi,phk->phik", s, s) / lengths[lo:hi, None, None]
            mv[j] = volatility_se(mats).max()
    return LagWindowSelection(tuple(cands), delta, int(np.argmin(mv)), mv)
