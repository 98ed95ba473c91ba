"""Test statistics, Gaussian calibration and the end-to-end test runners."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .covest import CovariancePath, rolling_path, select_lag_window
from .errors import DataError, InsufficientData
from .panel import HypothesisSpec, TimeSeriesPanel, effective_times
from .sieve import FixedFit, SieveConfig, fit_regressions, residual_products

# simulations per RNG substream; fixed so results do not depend on workers
SIM_BLOCK = 256


@dataclass(frozen=True)
class StatisticKind:
    family: str = "max-partial-sum"
    p: float = 2

    def __post_init__(self):
        if self.family not in ("max-partial-sum", "full-sum"):
            raise DataError(f"unknown statistic family {self.family!r}")
        p = float(self.p)
        if p not in (2.0, math.inf):
            raise DataError(f"norm must be 2 or inf, got {self.p!r}")
        object.__setattr__(self, "p", p)

    @property
    def p_inf(self) -> bool:
        return self.p == math.inf

    @property
    def full_sum(self) -> bool:
        return self.family == "full-sum"

    def label(self) -> str:
        return f"{self.family}/{'inf' if self.p_inf else 2}"


@dataclass(frozen=True)
class TestConfig:
    alpha: float = 0.05
    sims: int = 5000
    seed: int = 0
    statistic: StatisticKind = field(default_factory=StatisticKind)
    workers: int = 1
    center: bool = True

    __test__ = False

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DataError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.sims < 1:
            raise DataError("sims must be >= 1")
        if not 0 <= int(self.seed) < 2**64:
            raise DataError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class TestReport:
    statistic: float
    quantile: float
    p_value: float
    reject: bool
    diagnostics: dict = field(default_factory=dict)

    __test__ = False


def statistic(R, kind: StatisticKind = StatisticKind()) -> float:
    """Largest (or final) scaled partial-sum norm of the rows of ``R``."""
    R = np.asarray(R, dtype=float)
    if R.ndim == 1:
        R = R[:, None]
    return kernels.path_statistic(R, kind.p_inf, kind.full_sum) / math.sqrt(R.shape[0])


def simulate_gaussian_path(path: CovariancePath, rng: np.random.Generator) -> np.ndarray:
    """One draw with independent ``N(0, a_t a_t')`` rows, sampled as ``a_t * g_t``."""
    g = rng.standard_normal(len(path.generators))
    return path.generators * g[:, None]


def make_rng(seed, *key: int) -> np.random.Generator:
    """Counter-based Philox stream for ``seed`` and substream ``key``."""
    if isinstance(seed, np.random.SeedSequence):
        ss = np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    else:
        ss = np.random.SeedSequence(int(seed), spawn_key=key)
    return np.random.Generator(np.random.Philox(ss))


def quantile_index(alpha: float, sims: int) -> int:
    """1-based order statistic ``ceil((1 - alpha) * sims)``, robust to roundoff."""
    k = math.ceil(round((1.0 - alpha) * sims, 9))
    return min(max(k, 1), sims)


@dataclass(frozen=True)
class Calibration:
    quantile: float
    draws: np.ndarray


def simulated_statistics(path: CovariancePath, kind: StatisticKind, sims: int, seed,
                         workers: int = 1, backend=None) -> np.ndarray:
    """Statistics of ``sims`` independent Gaussian paths, in simulation order."""
    gen = np.ascontiguousarray(path.generators)
    T = gen.shape[0]
    scale = 1.0 / math.sqrt(T)
    blocks = [(b, min(SIM_BLOCK, sims - b * SIM_BLOCK)) for b in range(-(-sims // SIM_BLOCK))]

    def run(block):
        b, size = block
        normals = make_rng(seed, 1, b).standard_normal((size, T))
        return kernels.mc_statistics(gen, normals, kind.p_inf, kind.full_sum, backend) * scale

    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    return np.concatenate(parts)


def calibrate(path: CovariancePath, kind: StatisticKind, sims: int, alpha: float, seed,
              workers: int = 1, backend=None) -> Calibration:
    draws = np.sort(simulated_statistics(path, kind, sims, seed, workers, backend))
    return Calibration(float(draws[quantile_index(alpha, sims) - 1]), draws)


def p_value(observed: float, simulated) -> float:
    """Add-one Monte Carlo p-value."""
    sims = np.asarray(simulated, dtype=float)
    if sims.size == 0:
        raise DataError("need at least one simulated statistic")
    return (1.0 + np.count_nonzero(sims >= observed)) / (1.0 + sims.size)


def _key_label(key) -> str:
    role, dim, off = key
    return f"{role}{dim}{off:+d}"


def _test_from_products(R, lag_window, config: TestConfig, n: int, diagnostics: dict) -> TestReport:
    R = R.usable()
    T = len(R.times)
    if T < 2:
        raise InsufficientData(f"only {T} usable residual products")
    # mean-zero under the null; removing the sample mean keeps the covariance
    # estimate from growing with the window under alternatives
    cov_input = R.values - R.values.mean(axis=0) if config.center else R.values
    if lag_window is None:
        sel = select_lag_window(cov_input, n=n)
        L = sel.window
        diagnostics["lag_window_mv"] = float(sel.mv[sel.index])
    else:
        L = int(lag_window)
    if T - L + 1 < 2:
        raise InsufficientData(f"lag window {L} leaves {T - L + 1} time(s) for the statistic")
    path = rolling_path(cov_input, L)
    observed = statistic(R.values[L - 1:], config.statistic)
    cal = calibrate(path, config.statistic, config.sims, config.alpha, config.seed, config.workers)
    diagnostics.update(
        lag_window=L,
        T_n=T,
        T_nL=T - L + 1,
        D_n=R.values.shape[1],
        first_time=int(R.times[0]),
        seed=int(config.seed),
        sims=config.sims,
        alpha=config.alpha,
        statistic_kind=config.statistic.label(),
        centered=bool(config.center),
    )
    return TestReport(observed, cal.quantile, p_value(observed, cal.draws),
                      bool(observed > cal.quantile), diagnostics)


def _oracle_fits(oracle, spec, time_range, n):
    times = time_range.times()
    fits = {}
    for key in [("X", i, a) for i, a in spec.x_keys] + [("Y", j, b) for j, b in spec.y_keys]:
        vals = np.asarray(oracle[key], dtype=float)
        if vals.shape == (n,):
            vals = vals[times - 1]
        fits[key] = FixedFit(times, vals)
    return fits


def _run(panel, spec, sieve, lag_window, config, gamma, grid, oracle, kind):
    from .modelsel import select_parameters

    if spec.kind != kind:
        raise DataError(f"expected a {kind} hypothesis, got {spec.kind}")
    time_range = effective_times(panel.n, spec.offsets)
    diagnostics = {"kind": kind}
    if oracle is not None:
        fits = _oracle_fits(oracle, spec, time_range, panel.n)
        diagnostics["oracle"] = True
    else:
        if sieve is None:
            configs = select_parameters(panel, spec, grid=grid, gamma=gamma, time_range=time_range)
        else:
            configs = sieve
        fits = fit_regressions(panel, spec, time_range, configs)
        diagnostics["basis"] = {
            _key_label(k): [f.config.time_basis, f.config.covariate_basis]
            for k, f in ((k, getattr(f, "final", f)) for k, f in fits.items())
        }
    R = residual_products(panel, spec, fits, time_range)
    return _test_from_products(R, lag_window, config, panel.n, diagnostics)


def run_dgcm(panel: TimeSeriesPanel, spec: HypothesisSpec, sieve: SieveConfig | dict | None = None,
             lag_window: int | None = None, config: TestConfig = TestConfig(), *,
             gamma: int = 1, grid=None, oracle=None) -> TestReport:
    """Conditional independence test from one realization.

    Parameters
    ----------
    sieve : SieveConfig, mapping or None
        Basis sizes for every regression, a mapping from response key
        ``("X", i, a)``/``("Y", j, b)`` to configs, or None to choose them
        per regression by buffered subsampling cross-validation over ``grid``.
    lag_window : int or None
        None selects the window by minimum volatility.
    oracle : mapping, optional
        True conditional means per response key (arrays over ``1..n`` or over
        the effective times); bypasses regression fitting entirely.
    """
    return _run(panel, spec, sieve, lag_window, config, gamma, grid, oracle, "conditional")


def run_independence(panel: TimeSeriesPanel, spec: HypothesisSpec, time_basis: int | SieveConfig | None = None,
                     lag_window: int | None = None, config: TestConfig = TestConfig(), *,
                     gamma: int = 1, grid=None, oracle=None) -> TestReport:
    """Unconditional independence test with time-varying mean fits."""
    sieve = SieveConfig(time_basis, 1) if isinstance(time_basis, int) else time_basis
    return _run(panel, spec, sieve, lag_window, config, gamma, grid, oracle, "unconditional")
