"""Synthetic data-generating processes and an empirical rejection-rate harness.

Three families are available:

``correlated-shocks``
    Nonlinear time-varying regressions of X and Y on a tvAR(1) covariate,
    with heteroskedastic tvAR(1) errors coupled through correlated shocks
    (``strength`` is the shock correlation, ``complexity`` the frequency K).
``additive-effect``
    X and Y share the same regression function and X has an additive
    effect of size ``strength`` on Y.
``indep-trend``
    X and Y are time-varying trends (``complexity`` controls the trend
    frequency) plus tvAR(1) errors with correlated shocks; no covariate.

AR recursions start at zero and run ``burn_in`` steps with the parameter
curves frozen at rescaled time 0 before the ``n`` emitted observations.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .engine import TestConfig, make_rng, run_dgcm, run_independence
from .errors import DataError, DgcmError
from .panel import HypothesisSpec, TimeSeriesPanel

FAMILIES = ("correlated-shocks", "additive-effect", "indep-trend")
BURN_IN = 200


@dataclass(frozen=True)
class DgpSpec:
    family: str = "correlated-shocks"
    complexity: int = 1
    strength: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise DataError(f"unknown DGP family {self.family!r}")
        if int(self.complexity) != self.complexity or self.complexity < 1:
            raise DataError("complexity must be a positive integer")
        if self.family != "additive-effect" and not -1 <= self.strength <= 1:
            raise DataError("shock correlation must lie in [-1, 1]")

    @property
    def conditional(self) -> bool:
        return self.family != "indep-trend"


def f_corr(z, u, K):
    return (0.5 + 0.25 * np.cos(2 * np.pi * u)) * np.exp(-z**2) * np.sin(K * z)


def g_corr(z, u, K):
    return (0.3 + 0.15 * np.sin(np.pi * u)) * np.exp(-z**2) * np.cos(K * z)


def f_additive(z, u, K):
    return (0.4 + 0.2 * np.sin(2 * np.pi * u)) * np.exp(-z**2) * np.sin(K * z)


def mu_x(u, psi):
    return 0.5 + 0.25 * np.cos(psi * np.pi * u)


def mu_y(u, psi):
    return 0.3 + 0.15 * np.sin(psi * np.pi * u)


def tvar1(theta, shocks: np.ndarray, burn_in: int = BURN_IN) -> np.ndarray:
    """Time-varying AR(1) ``x_t = theta[t] x_{t-1} + shocks[t]`` started at zero.

    ``theta`` is a callable of rescaled time or a constant.  ``shocks`` has
    length ``burn_in + n``; the last ``n`` values are returned.
    """
    total = len(shocks)
    n = total - burn_in
    u = np.arange(1, n + 1) / n
    if callable(theta):
        coef = np.concatenate([np.full(burn_in, theta(0.0)), theta(u)])
    else:
        coef = np.full(total, float(theta))
    out = np.empty(total)
    prev = 0.0
    for t in range(total):
        prev = coef[t] * prev + shocks[t]
        out[t] = prev
    return out[burn_in:]


def _shock_pair(rng, size, rho):
    e1 = rng.standard_normal(size)
    e2 = rng.standard_normal(size)
    return e1, rho * e1 + math.sqrt(max(0.0, 1.0 - rho * rho)) * e2


def generate(dgp: DgpSpec, n: int, rng: np.random.Generator, burn_in: int = BURN_IN) -> TimeSeriesPanel:
    """One realization of length ``n``."""
    if n < 1:
        raise DataError("n must be >= 1")
    total = n + burn_in
    u = np.arange(1, n + 1) / n
    K = dgp.complexity
    if dgp.family == "correlated-shocks":
        Z = tvar1(lambda v: 0.35 + 0.2 * np.cos(2 * np.pi * v), rng.standard_normal(total), burn_in)
        h_eps, h_xi = _shock_pair(rng, total, dgp.strength)
        e = tvar1(lambda v: 0.4 + 0.2 * np.sin(np.pi * v), h_eps, burn_in)
        x = tvar1(lambda v: 0.5 + 0.25 * np.sin(2 * np.pi * v), h_xi, burn_in)
        sig_e = 0.2 + (0.5 + 0.25 * np.sin(2 * np.pi * u)) * (np.exp(-5 * Z) / (1 + np.exp(-5 * Z)))
        sig_x = 0.5 + (0.4 + 0.2 * np.cos(2 * np.pi * u)) * np.exp(-Z**2) * np.sin(Z)
        X = f_corr(Z, u, K) + sig_e * e
        Y = g_corr(Z, u, K) + sig_x * x
        return TimeSeriesPanel.from_arrays(X=X, Y=Y, Z=Z)
    if dgp.family == "additive-effect":
        Z = tvar1(lambda v: 0.5 + 0.25 * np.cos(np.pi * v), rng.standard_normal(total), burn_in)
        theta_e = lambda v: 0.45 + 0.3 * np.sin(2 * np.pi * v)  # noqa: E731
        e = 0.3 * tvar1(theta_e, rng.standard_normal(total), burn_in)
        x = 0.3 * tvar1(theta_e, rng.standard_normal(total), burn_in)
        X = f_additive(Z, u, K) + e
        Y = f_additive(Z, u, K) + dgp.strength * X + x
        return TimeSeriesPanel.from_arrays(X=X, Y=Y, Z=Z)
    h_eps, h_xi = _shock_pair(rng, total, dgp.strength)
    e = tvar1(lambda v: 0.4 + 0.2 * np.sin(np.pi * v), h_eps, burn_in)
    x = tvar1(lambda v: 0.5 + 0.25 * np.sin(2 * np.pi * v), h_xi, burn_in)
    sig_e = 0.2 + (0.5 + 0.25 * np.sin(2 * np.pi * u))
    sig_x = 0.5 + (0.4 + 0.2 * np.cos(2 * np.pi * u))
    X = mu_x(u, K) + sig_e * e
    Y = mu_y(u, K) + sig_x * x
    return TimeSeriesPanel.from_arrays(X=X, Y=Y)


def oracle_means(dgp: DgpSpec, panel: TimeSeriesPanel) -> dict:
    """True conditional (or unconditional) means over times ``1..n``."""
    n = panel.n
    u = np.arange(1, n + 1) / n
    K = dgp.complexity
    if dgp.family == "indep-trend":
        return {("X", 0, 0): mu_x(u, K), ("Y", 0, 0): mu_y(u, K)}
    Z = panel.values("Z", 0)
    if dgp.family == "correlated-shocks":
        return {("X", 0, 0): f_corr(Z, u, K), ("Y", 0, 0): g_corr(Z, u, K)}
    f = f_additive(Z, u, K)
    return {("X", 0, 0): f, ("Y", 0, 0): (1.0 + dgp.strength) * f}


def hypothesis_for(dgp: DgpSpec) -> HypothesisSpec:
    if dgp.conditional:
        return HypothesisSpec.single(0, 0, {0: (0,)})
    return HypothesisSpec.single(0, 0)


@dataclass(frozen=True)
class ReplicationPlan:
    ns: tuple[int, ...] = (250, 500, 750, 1000)
    replications: int = 100
    seed: int = 0
    config: TestConfig = field(default_factory=TestConfig)
    oracle: bool = False
    workers: int = 1
    lag_window: int | None = None
    sieve: object = None
    gamma: int = 1
    burn_in: int = BURN_IN

    def __post_init__(self):
        if self.replications < 1:
            raise DataError("replications must be >= 1")
        if not self.ns or any(n < 1 for n in self.ns):
            raise DataError("sample sizes must be positive")


@dataclass(frozen=True)
class RateCell:
    family: str
    complexity: int
    strength: float
    n: int
    oracle: bool
    replications: int
    rejections: int
    failures: int
    rate: float
    se: float
    errors: tuple = ()


def _family_code(family: str) -> int:
    return FAMILIES.index(family)


def replication_seeds(base_seed: int, dgp: DgpSpec, n: int, r: int) -> tuple[np.random.SeedSequence, int]:
    """Data stream and test seed for one replication, fixed by its coordinates."""
    key = (_family_code(dgp.family), int(dgp.complexity),
           int(round((dgp.strength + 1e3) * 1e6)), int(n), int(r))
    ss = np.random.SeedSequence(int(base_seed), spawn_key=key)
    test_seed = int(np.random.SeedSequence(int(base_seed), spawn_key=key + (1,)).generate_state(1, np.uint64)[0])
    return ss, test_seed


def run_replication(plan: ReplicationPlan, dgp: DgpSpec, n: int, r: int):
    """Return ``(reject, error_message)`` for one replication."""
    ss, test_seed = replication_seeds(plan.seed, dgp, n, r)
    rng = make_rng(ss)
    panel = generate(dgp, n, rng, plan.burn_in)
    cfg = TestConfig(plan.config.alpha, plan.config.sims, test_seed, plan.config.statistic,
                     center=plan.config.center)
    oracle = oracle_means(dgp, panel) if plan.oracle else None
    spec = hypothesis_for(dgp)
    runner = run_dgcm if dgp.conditional else run_independence
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report = runner(panel, spec, plan.sieve, plan.lag_window, cfg, gamma=plan.gamma, oracle=oracle)
    except DgcmError as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return report.reject, None


def _task(args):
    return run_replication(*args)


def rejection_rates(plan: ReplicationPlan, dgps) -> list[RateCell]:
    """Empirical rejection frequency per ``(dgp, n)`` cell.

    Replications are seeded by their coordinates, so the table does not
    depend on ``plan.workers``.  Failed replications are counted in
    ``failures`` and excluded from the rate.
    """
    dgps = list(dgps)
    tasks = [(plan, dgp, n, r) for dgp in dgps for n in plan.ns for r in range(plan.replications)]
    if plan.workers > 1:
        with ProcessPoolExecutor(plan.workers) as pool:
            results = list(pool.map(_task, tasks, chunksize=4))
    else:
        results = [_task(t) for t in tasks]
    cells = []
    pos = 0
    for dgp in dgps:
        for n in plan.ns:
            chunk = results[pos:pos + plan.replications]
            pos += plan.replications
            ok = [rej for rej, err in chunk if err is None]
            errors = tuple(err for _, err in chunk if err is not None)
            m = len(ok)
            rate = sum(ok) / m if m else float("nan")
            se = math.sqrt(rate * (1 - rate) / m) if m else float("nan")
            cells.append(RateCell(dgp.family, int(dgp.complexity), float(dgp.strength), int(n), plan.oracle,
                                  plan.replications, int(sum(ok)), len(errors), rate, se, errors))
    return cells


def rate_rows(cells) -> list[dict]:
    """Long-format rows (one per cell) for tabular output."""
    rows = []
    for c in cells:
        row = asdict(c)
        row.pop("errors")
        rows.append(row)
    return rows
