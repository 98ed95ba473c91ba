"""Buffered subsampling cross-validation for sieve basis sizes.

The effective times are split into ``2(gamma + 1)`` interleaved folds with
stride ``2(gamma + 1)``.  Fold ``k`` is paired with fold ``k + gamma + 1``
so that consecutive members of the two folds are ``gamma`` times apart;
each member of a pair is fit on and the other scored, in both directions.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import eval_covariate_basis, eval_time_basis
from .errors import FoldTooSmall, RangeTooSmall, RankDeficient, Underdetermined
from .panel import (
    EffectiveTimeRange,
    HypothesisSpec,
    OffsetSpec,
    TimeSeriesPanel,
    effective_times,
    regressor_matrix,
)
from .sieve import (
    MIN_ROWS_PER_COLUMN,
    SieveConfig,
    design_from_tables,
    fit_ols,
    identifiable_mask,
    response_key_series,
)

DEFAULT_SIZES = (2, 4, 6, 8, 10)
DEFAULT_GRID = tuple(itertools.product(DEFAULT_SIZES, DEFAULT_SIZES))


def build_cv_folds(time_range: EffectiveTimeRange, gamma: int) -> list[np.ndarray]:
    """Fold ``k`` (1-based) holds ``t_lo + k - 1 + 2j(gamma + 1)`` for ``j >= 0``."""
    if gamma < 0:
        raise RangeTooSmall("buffer must be nonnegative")
    stride = 2 * (gamma + 1)
    if time_range.count < stride:
        raise RangeTooSmall(f"{time_range.count} times cannot fill {stride} folds")
    return [np.arange(time_range.t_lo + k, time_range.t_hi + 1, stride) for k in range(stride)]


@dataclass
class CvResult:
    chosen: tuple[int, int]
    mse: dict
    fold_mse: dict
    residuals: dict = field(repr=False, default_factory=dict)
    skipped: list = field(default_factory=list)


def cross_validate(panel: TimeSeriesPanel, response_key, conditioning, grid=None, gamma: int = 1,
                   time_range: EffectiveTimeRange | None = None, ridge: float | str = 0.0,
                   scale: float = 1.0) -> CvResult:
    """Average held-out MSE of each ``(time_basis, covariate_basis)`` candidate.

    With an empty ``conditioning`` the covariate size is ignored (mean fit).
    Candidates that cannot be fit on a fold, or that would violate the
    minimum-sample rule on the full range, are skipped with a
    :class:`FoldTooSmall` warning.  Ties go to the smallest ``c * d`` then
    the smallest ``c``.
    """
    conditioning = tuple(sorted(conditioning))
    if time_range is None:
        role, dim, off = response_key
        offs = [off] + [c for _, c in conditioning]
        time_range = effective_times(panel.n, OffsetSpec({0: offs}))
    if grid is None:
        grid = DEFAULT_GRID if conditioning else tuple((c, 1) for c in DEFAULT_SIZES)
    grid = tuple(dict.fromkeys((int(c), int(d) if conditioning else 1) for c, d in grid))
    folds = build_cv_folds(time_range, gamma)
    times = time_range.times()
    y = response_key_series(panel, response_key, times)
    c_max = max(c for c, _ in grid)
    d_max = max(d for _, d in grid)
    time_tab = eval_time_basis(time_range.rescaled(times), c_max)
    Z = regressor_matrix(panel, times, conditioning)
    cov_tabs = [eval_covariate_basis(Z[:, p], d_max, scale) for p in range(Z.shape[1])]
    idx = [f - time_range.t_lo for f in folds]
    half = gamma + 1
    n_pairs = len(conditioning)

    mse, fold_mse, residuals, skipped = {}, {}, {}, []
    for c, d in grid:
        design = design_from_tables(time_tab[:, :c], [ct[:, :d] for ct in cov_tabs])
        mask = identifiable_mask(n_pairs, c, d)
        design = design[:, mask]
        cols = design.shape[1]
        if min(len(i) for i in idx) < cols or len(times) < MIN_ROWS_PER_COLUMN * SieveConfig(c, d).n_columns(n_pairs):
            warnings.warn(f"candidate {(c, d)} skipped: folds too small for {cols} columns", FoldTooSmall)
            skipped.append((c, d))
            continue
        res = [None] * (2 * half)
        try:
            for k in range(half):
                for fit_k, score_k in ((k, k + half), (k + half, k)):
                    beta = fit_ols(design[idx[fit_k]], y[idx[fit_k]], ridge)
                    res[score_k] = y[idx[score_k]] - design[idx[score_k]] @ beta
        except RankDeficient:
            warnings.warn(f"candidate {(c, d)} skipped: rank-deficient fold design", FoldTooSmall)
            skipped.append((c, d))
            continue
        per_fold = np.array([np.mean(r**2) for r in res])
        fold_mse[(c, d)] = per_fold
        mse[(c, d)] = float(per_fold.mean())
        residuals[(c, d)] = res
    if not mse:
        raise Underdetermined("no cross-validation candidate could be fit")
    chosen = min(mse, key=lambda cd: (mse[cd], cd[0] * cd[1], cd[0]))
    return CvResult(chosen, mse, fold_mse, residuals, skipped)


def select_parameters(panel: TimeSeriesPanel, spec: HypothesisSpec, grid=None, gamma: int = 1,
                      time_range: EffectiveTimeRange | None = None, ridge: float | str = 0.0) -> dict:
    """Cross-validated :class:`SieveConfig` for every response in ``spec``."""
    if time_range is None:
        time_range = effective_times(panel.n, spec.offsets)
    keys = [("X", i, a) for i, a in spec.x_keys] + [("Y", j, b) for j, b in spec.y_keys]
    out = {}
    for key in keys:
        cv = cross_validate(panel, key, spec.conditioning, grid, gamma, time_range, ridge)
        c, d = cv.chosen
        out[key] = SieveConfig(c, d, ridge=ridge)
    return out
