"""Time-varying nonlinear regression by sieve least squares.

The conditional mean of a response given the regressor vector is modelled
additively, one time-varying partial response per conditioning pair, each
expanded in a tensor product of time and covariate Legendre bases.  Column
order of the design is lexicographic in ``(k, c, l1, l2)``.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .basis import eval_covariate_basis, eval_time_basis
from .errors import DataError, MissingFit, RankDeficient, Underdetermined
from .panel import (
    EffectiveTimeRange,
    HypothesisSpec,
    TimeSeriesPanel,
    regressor_matrix,
    response_vector,
)


@dataclass(frozen=True)
class SieveConfig:
    """Basis sizes and solver options for one regression.

    ``ridge`` may be a nonnegative float or ``"auto"``; the latter solves
    unregularised and falls back to ``1e-10 * trace(D'D) / cols`` when the
    design is numerically rank deficient.
    """

    time_basis: int = 4
    covariate_basis: int = 4
    mode: str = "global"
    ridge: float | str = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.time_basis < 1 or self.covariate_basis < 1:
            raise DataError("basis counts must be >= 1")
        if self.mode not in ("global", "sequential"):
            raise DataError(f"unknown sieve mode {self.mode!r}")
        if self.ridge != "auto" and (not isinstance(self.ridge, (int, float)) or self.ridge < 0):
            raise DataError(f"ridge must be a nonnegative number or 'auto', got {self.ridge!r}")
        if self.scale <= 0:
            raise DataError("covariate map scale must be positive")

    def n_columns(self, n_pairs: int) -> int:
        if n_pairs == 0:
            return self.time_basis
        return n_pairs * self.time_basis * self.covariate_basis


def design_from_tables(time_tab: np.ndarray, cov_tabs: Sequence[np.ndarray]) -> np.ndarray:
    """Tensor-product design from evaluated bases.

    ``time_tab`` is ``(N, c)``; each ``cov_tabs[p]`` is ``(N, d)`` for one
    conditioning pair.  With no pairs the design is the time basis alone.
    """
    if not cov_tabs:
        return np.ascontiguousarray(time_tab)
    n = time_tab.shape[0]
    blocks = [np.einsum("nl,nm->nlm", time_tab, ct).reshape(n, -1) for ct in cov_tabs]
    return np.hstack(blocks)


def identifiable_mask(n_pairs: int, c: int, d: int) -> np.ndarray:
    """Columns kept when solving: the time-only columns (``l2 == 0``) repeat
    in every additive block, so only the first block keeps them."""
    if n_pairs <= 1:
        return np.ones(max(n_pairs, 1) * c * (d if n_pairs else 1), dtype=bool)
    mask = np.ones((n_pairs, c, d), dtype=bool)
    mask[1:, :, 0] = False
    return mask.ravel()


def build_design_matrix(times, panel: TimeSeriesPanel, conditioning, config: SieveConfig,
                        time_range: EffectiveTimeRange) -> np.ndarray:
    """Design rows for ``times`` with time rescaled over ``time_range``."""
    times = np.asarray(times, dtype=int)
    u = time_range.rescaled(times)
    time_tab = eval_time_basis(u, config.time_basis)
    Z = regressor_matrix(panel, times, conditioning)
    cov_tabs = [eval_covariate_basis(Z[:, p], config.covariate_basis, config.scale)
                for p in range(Z.shape[1])]
    return design_from_tables(time_tab, cov_tabs)


def fit_ols(design: np.ndarray, response: np.ndarray, ridge: float | str = 0.0) -> np.ndarray:
    """Least-squares coefficients via an SVD-based solver.

    With ``ridge > 0`` the penalised problem is solved as an augmented
    least-squares system, never through the normal equations.
    """
    design = np.asarray(design, dtype=float)
    response = np.asarray(response, dtype=float)
    rows, cols = design.shape
    if rows < cols:
        raise Underdetermined(f"{rows} rows for {cols} columns")
    if not np.all(np.isfinite(response)):
        raise DataError("response contains non-finite values")
    if ridge == "auto":
        try:
            return fit_ols(design, response, 0.0)
        except RankDeficient:
            ridge = 1e-10 * float(np.sum(design**2)) / cols
            if ridge == 0.0:
                ridge = 1e-10
    if ridge > 0:
        aug = np.vstack([design, np.sqrt(ridge) * np.eye(cols)])
        rhs = np.concatenate([response, np.zeros(cols)])
        beta, *_ = np.linalg.lstsq(aug, rhs, rcond=None)
        return beta
    beta, _, rank, _ = np.linalg.lstsq(design, response, rcond=None)
    if rank < cols:
        raise RankDeficient(f"design has numerical rank {rank} < {cols} columns")
    return beta


@dataclass(frozen=True)
class SieveFit:
    """Fitted sieve regression.

    ``columns[p]`` is ``(k, c, l1, l2)`` for coefficient ``beta[p]`` (0-based
    basis indices; ``k = c = None`` for a time-only mean fit).  Rescaled
    time is computed over ``time_range``.
    """

    beta: np.ndarray
    columns: tuple
    time_range: EffectiveTimeRange
    conditioning: tuple
    config: SieveConfig

    def design(self, panel: TimeSeriesPanel, times) -> np.ndarray:
        if not self.conditioning:
            u = self.time_range.rescaled(np.asarray(times))
            return eval_time_basis(u, self.config.time_basis)
        return build_design_matrix(times, panel, self.conditioning, self.config, self.time_range)

    def design_row(self, t: int, z=None) -> np.ndarray:
        time_tab = eval_time_basis(self.time_range.rescaled([t]), self.config.time_basis)
        if not self.conditioning:
            return time_tab[0]
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if z.shape != (len(self.conditioning),):
            raise DataError(f"regressor vector must have length {len(self.conditioning)}")
        cov = [eval_covariate_basis(z[[p]], self.config.covariate_basis, self.config.scale)
               for p in range(len(z))]
        return design_from_tables(time_tab, cov)[0]

    def predict_at(self, panel: TimeSeriesPanel, times) -> np.ndarray:
        return self.design(panel, times) @ self.beta


def predict(fit: SieveFit, t: int, z=None) -> float:
    """Fitted regression at time ``t`` and regressor vector ``z``."""
    return float(fit.design_row(t, z) @ fit.beta)


def _columns(conditioning, c, d):
    if not conditioning:
        return tuple((None, None, l1, 0) for l1 in range(c))
    return tuple((k, off, l1, l2) for k, off in conditioning for l1 in range(c) for l2 in range(d))


def solve_masked(design: np.ndarray, response: np.ndarray, n_pairs: int, config: SieveConfig) -> np.ndarray:
    """Solve on the identifiable columns and scatter back; dropped columns get 0."""
    c = config.time_basis
    d = config.covariate_basis if n_pairs else 1
    mask = identifiable_mask(n_pairs, c, d)
    beta = np.zeros(design.shape[1])
    beta[mask] = fit_ols(design[:, mask], response, config.ridge)
    return beta


def fit_sieve(panel: TimeSeriesPanel, times, response: np.ndarray, conditioning,
              config: SieveConfig, time_range: EffectiveTimeRange) -> SieveFit:
    """Global sieve fit of ``response`` (aligned with ``times``) on the regressors."""
    conditioning = tuple(sorted(conditioning))
    cfg = config if conditioning else _time_only(config)
    probe = SieveFit(np.empty(0), (), time_range, conditioning, cfg)
    design = probe.design(panel, times)
    beta = solve_masked(design, np.asarray(response, dtype=float), len(conditioning), cfg)
    return SieveFit(beta, _columns(conditioning, cfg.time_basis, cfg.covariate_basis),
                    time_range, conditioning, cfg)


def _time_only(config: SieveConfig) -> SieveConfig:
    if config.covariate_basis == 1:
        return config
    return SieveConfig(config.time_basis, 1, config.mode, config.ridge, config.scale)


def fit_time_varying_mean(series, time_basis: int, ridge: float | str = 0.0) -> SieveFit:
    """Time-varying mean of ``series`` using the time basis only.

    Positions ``1..len(series)`` play the role of times.
    """
    series = np.asarray(series, dtype=float)
    rng = EffectiveTimeRange(1, len(series))
    cfg = SieveConfig(time_basis, 1, "global", ridge)
    dummy = TimeSeriesPanel.from_arrays(X=series)
    return fit_sieve(dummy, rng.times(), series, (), cfg, rng)


@dataclass(frozen=True)
class SequentialFit:
    """Predictions where the value at each time uses data up to that time only.

    ``fitted`` is NaN for the warm-up times with fewer rows than columns.
    ``final`` is the fit on all times.
    """

    times: np.ndarray
    fitted: np.ndarray
    final: SieveFit
    first_usable: int

    def predict_at(self, panel: TimeSeriesPanel, times) -> np.ndarray:
        times = np.asarray(times, dtype=int)
        pos = times - self.times[0]
        if pos.size and (pos.min() < 0 or pos.max() >= len(self.times)):
            raise DataError("sequential fit queried outside its time range")
        return self.fitted[pos]


def fit_sieve_sequential(panel: TimeSeriesPanel, times, response, conditioning,
                         config: SieveConfig, time_range: EffectiveTimeRange) -> SequentialFit:
    times = np.asarray(times, dtype=int)
    response = np.asarray(response, dtype=float)
    conditioning = tuple(sorted(conditioning))
    cfg = config if conditioning else _time_only(config)
    probe = SieveFit(np.empty(0), (), time_range, conditioning, cfg)
    design = probe.design(panel, times)
    n_pairs = len(conditioning)
    cols = int(identifiable_mask(n_pairs, cfg.time_basis, cfg.covariate_basis if n_pairs else 1).sum())
    fitted = np.full(len(times), np.nan)
    beta = None
    for s in range(cols - 1, len(times)):
        beta = solve_masked(design[: s + 1], response[: s + 1], n_pairs, cfg)
        fitted[s] = design[s] @ beta
    if beta is None:
        raise Underdetermined(f"{len(times)} rows for {cols} columns")
    final = SieveFit(beta, _columns(conditioning, cfg.time_basis, cfg.covariate_basis),
                     time_range, conditioning, cfg)
    return SequentialFit(times, fitted, final, int(times[cols - 1]))


@dataclass(frozen=True)
class FixedFit:
    """Externally supplied fitted values (e.g. the true regression functions)."""

    times: np.ndarray
    fitted: np.ndarray

    def predict_at(self, panel, times) -> np.ndarray:
        pos = np.asarray(times, dtype=int) - int(self.times[0])
        return np.asarray(self.fitted)[pos]


def response_key_series(panel: TimeSeriesPanel, key, times) -> np.ndarray:
    role, dim, offset = key
    return response_vector(panel, times, role, dim, offset)


MIN_ROWS_PER_COLUMN = 5


def fit_regressions(panel: TimeSeriesPanel, spec: HypothesisSpec, time_range: EffectiveTimeRange,
                    configs: SieveConfig | Mapping) -> dict:
    """Fit one regression per distinct ``("X", i, a)`` and ``("Y", j, b)`` response.

    ``configs`` is a single :class:`SieveConfig` or a mapping from response
    key to config.
    """
    times = time_range.times()
    fits = {}
    keys = [("X", i, a) for i, a in spec.x_keys] + [("Y", j, b) for j, b in spec.y_keys]
    for key in keys:
        cfg = configs if isinstance(configs, SieveConfig) else configs[key]
        cols = cfg.n_columns(len(spec.conditioning))
        if len(times) < MIN_ROWS_PER_COLUMN * cols:
            raise Underdetermined(
                f"{len(times)} effective times for {cols} sieve columns; need at least "
                f"{MIN_ROWS_PER_COLUMN * cols}"
            )
        y = response_key_series(panel, key, times)
        fitter = fit_sieve_sequential if cfg.mode == "sequential" else fit_sieve
        fits[key] = fitter(panel, times, y, spec.conditioning, cfg, time_range)
    return fits


@dataclass(frozen=True)
class ResidualProducts:
    """Residual products: rows are effective times, columns are hypothesis tuples.

    ``first_usable`` is the earliest time at which every residual is
    available (later than ``times[0]`` only for sequential fits).
    """

    times: np.ndarray
    tuples: tuple
    values: np.ndarray
    residuals: dict = field(default_factory=dict)

    @property
    def first_usable(self) -> int:
        ok = np.all(np.isfinite(self.values), axis=1)
        if not ok.any():
            return int(self.times[-1]) + 1
        return int(self.times[np.argmax(ok)])

    def usable(self) -> "ResidualProducts":
        start = self.first_usable - int(self.times[0])
        if start == 0:
            return self
        return ResidualProducts(self.times[start:], self.tuples, self.values[start:],
                                {k: v[start:] for k, v in self.residuals.items()})


def residual_products(panel: TimeSeriesPanel, spec: HypothesisSpec, fits: Mapping,
                      time_range: EffectiveTimeRange) -> ResidualProducts:
    """Products of X and Y residuals for every tuple; each response's
    residual is computed once and shared across tuples."""
    times = time_range.times()
    resid = {}
    for key in [("X", i, a) for i, a in spec.x_keys] + [("Y", j, b) for j, b in spec.y_keys]:
        if key not in fits:
            raise MissingFit(f"no fit for response {key}")
        resid[key] = response_key_series(panel, key, times) - fits[key].predict_at(panel, times)
    values = np.column_stack([resid[("X", i, a)] * resid[("Y", j, b)] for i, j, a, b in spec.tuples])
    return ResidualProducts(times, spec.tuples, values, resid)
