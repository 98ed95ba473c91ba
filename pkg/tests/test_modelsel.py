import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dgcm.errors import FoldTooSmall, RangeTooSmall
from dgcm.modelsel import DEFAULT_GRID, build_cv_folds, cross_validate, select_parameters
from dgcm.panel import EffectiveTimeRange, HypothesisSpec, TimeSeriesPanel
from dgcm.sieve import SieveConfig, build_design_matrix


def test_fold_examples():
    tr = EffectiveTimeRange(3, 14)
    f0 = build_cv_folds(tr, 0)
    assert [f.tolist() for f in f0] == [[3, 5, 7, 9, 11, 13], [4, 6, 8, 10, 12, 14]]
    f1 = build_cv_folds(tr, 1)
    assert [f.tolist() for f in f1] == [[3, 7, 11], [4, 8, 12], [5, 9, 13], [6, 10, 14]]


@given(st.integers(1, 5), st.integers(0, 40), st.integers(0, 3))
def test_folds_partition_range(lo, extra, gamma):
    tr = EffectiveTimeRange(lo, lo + 2 * (gamma + 1) - 1 + extra)
    folds = build_cv_folds(tr, gamma)
    assert len(folds) == 2 * (gamma + 1)
    allt = np.sort(np.concatenate(folds))
    assert allt.tolist() == tr.times().tolist()
    half = gamma + 1
    for k in range(half):
        a, b = folds[k], folds[k + half]
        # nearest cross-fold members are at least gamma + 1 apart, i.e. gamma times between
        gaps = np.abs(a[:, None] - b[None, :]).min()
        assert gaps >= gamma + 1


def test_folds_too_small():
    with pytest.raises(RangeTooSmall):
        build_cv_folds(EffectiveTimeRange(1, 3), 1)


def sieve_panel(n=400, c=3, d=3, seed=0):
    rng = np.random.default_rng(seed)
    z = rng.normal(size=n)
    p0 = TimeSeriesPanel.from_arrays(X=np.zeros(n), Z=z)
    tr = EffectiveTimeRange(1, n)
    D = build_design_matrix(tr.times(), p0, [(0, 0)], SieveConfig(c, d), tr)
    x = D @ rng.normal(size=c * d)
    return TimeSeriesPanel.from_arrays(X=x, Y=rng.normal(size=n), Z=z), tr


def test_noiseless_recovery():
    p, tr = sieve_panel()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FoldTooSmall)
        cv = cross_validate(p, ("X", 0, 0), [(0, 0)], [(2, 2), (3, 3), (4, 4), (2, 4)], gamma=1, time_range=tr)
    assert cv.mse[cv.chosen] <= 1e-8
    assert cv.chosen == (3, 3)


def test_single_candidate_and_recomputation():
    p, tr = sieve_panel(seed=1)
    cv = cross_validate(p, ("Y", 0, 0), [(0, 0)], [(2, 2)], gamma=1, time_range=tr)
    assert cv.chosen == (2, 2)
    res = cv.residuals[(2, 2)]
    assert len(res) == 4
    recomputed = np.mean([np.mean(r ** 2) for r in res])
    assert abs(cv.mse[(2, 2)] - recomputed) <= 1e-12


def test_manual_fold_scoring():
    p, tr = sieve_panel(n=120, seed=2)
    cv = cross_validate(p, ("Y", 0, 0), [(0, 0)], [(2, 2)], gamma=0, time_range=tr)
    folds = build_cv_folds(tr, 0)
    D = build_design_matrix(tr.times(), p, [(0, 0)], SieveConfig(2, 2), tr)
    y = p.values("Y", 0)
    errs = []
    for fit_f, score_f in ((folds[0], folds[1]), (folds[1], folds[0])):
        beta = np.linalg.lstsq(D[fit_f - 1], y[fit_f - 1], rcond=None)[0]
        errs.append(np.mean((y[score_f - 1] - D[score_f - 1] @ beta) ** 2))
    assert cv.mse[(2, 2)] == pytest.approx(np.mean(errs), rel=1e-10)


def test_oversized_candidate_skipped_with_warning():
    p, tr = sieve_panel(n=100, seed=3)
    with pytest.warns(FoldTooSmall):
        cv = cross_validate(p, ("Y", 0, 0), [(0, 0)], [(2, 2), (10, 10)], gamma=1, time_range=tr)
    assert (10, 10) in cv.skipped and cv.chosen == (2, 2)


def test_tie_break_prefers_small_models():
    n = 200
    u = np.arange(n) / n
    p = TimeSeriesPanel.from_arrays(X=np.ones(n), Z=np.sin(u * 7))
    cv = cross_validate(p, ("X", 0, 0), [(0, 0)], [(4, 2), (2, 2), (2, 4)], gamma=1)
    assert cv.chosen == (2, 2)


def test_default_grid_and_select_parameters():
    assert len(DEFAULT_GRID) == 25 and (10, 10) in DEFAULT_GRID
    rng = np.random.default_rng(4)
    p = TimeSeriesPanel.from_arrays(X=rng.normal(size=300), Y=rng.normal(size=300), Z=rng.normal(size=300))
    spec = HypothesisSpec.single(0, 0, {0: (0,)})
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", FoldTooSmall)
        out = select_parameters(p, spec, grid=[(2, 2), (4, 2)])
    assert set(out) == {("X", 0, 0), ("Y", 0, 0)}
    assert all(isinstance(c, SieveConfig) for c in out.values())
    mean = select_parameters(p, HypothesisSpec.single(), grid=[(2, 7), (4, 7)])
    assert all(c.covariate_basis == 1 for c in mean.values())
