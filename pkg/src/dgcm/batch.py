"""Batches of hypotheses on one dataset, with multiplicity adjustment.

A batch config is a JSON document::

    {
      "data": {"path": "prices.csv", "values": "prices", "date_column": "date"},
      "test": {"alpha": 0.05, "sims": 5000, "seed": 0,
               "statistic": {"family": "max-partial-sum", "p": 2},
               "lag_window": null, "gamma": 1, "grid": null, "sieve": null, "center": true},
      "hypotheses": [
        {"x": "FTSE", "y": "SPX", "y_offset": -1},
        {"name": "FTSE _||_ HSI | SPX(t-1)", "x": "FTSE", "y": "HSI",
         "z": [{"series": "SPX", "offset": -1}]}
      ],
      "jobs": 1,
      "output": {"csv": "pvalues.csv", "json": "pvalues.json"}
    }

Relative paths resolve against the config file's directory.  A hypothesis
without ``z`` is an unconditional independence test.
"""

from __future__ import annotations

import hashlib
import json
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .dataio import PvalueRow, PvalueTable, ReturnsTable, bh_adjust, emit_report, load_returns
from .engine import StatisticKind, TestConfig, run_dgcm, run_independence
from .errors import DataError, DgcmError, FoldTooSmall
from .panel import HypothesisSpec
from .sieve import SieveConfig


@dataclass(frozen=True)
class HypothesisEntry:
    """``x(t + x_offset) _||_ y(t + y_offset) | {z_k(t + c_k)}`` on named series."""

    x: str
    y: str
    x_offset: int = 0
    y_offset: int = 0
    z: tuple[tuple[str, int], ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.x == self.y and self.x_offset == self.y_offset:
            raise DataError(f"hypothesis compares {self.x} with itself")
        if any(c > 0 for _, c in self.z):
            raise DataError("conditioning offsets must be non-positive")
        if not self.name:
            object.__setattr__(self, "name", self.describe())

    @property
    def kind(self) -> str:
        return "conditional" if self.z else "unconditional"

    def describe(self) -> str:
        def lab(s, o):
            return f"{s}(t)" if o == 0 else f"{s}(t{o:+d})"
        text = f"{lab(self.x, self.x_offset)} _||_ {lab(self.y, self.y_offset)}"
        if self.z:
            text += " | " + ", ".join(lab(s, c) for s, c in self.z)
        return text

    def series(self) -> list[str]:
        names = [self.x, self.y] + [s for s, _ in self.z]
        return list(dict.fromkeys(names))

    def definition(self) -> dict:
        return {"x": self.x, "y": self.y, "x_offset": self.x_offset, "y_offset": self.y_offset,
                "z": [list(p) for p in self.z]}

    def digest(self) -> int:
        """Stable 64-bit digest of the hypothesis definition (name excluded)."""
        blob = json.dumps(self.definition(), sort_keys=True, separators=(",", ":")).encode()
        return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")

    @classmethod
    def from_dict(cls, d: dict) -> "HypothesisEntry":
        unknown = set(d) - {"x", "y", "x_offset", "y_offset", "z", "name"}
        if unknown:
            raise DataError(f"unknown hypothesis field(s): {', '.join(sorted(unknown))}")
        try:
            z = []
            for item in d.get("z", []) or []:
                if isinstance(item, str):
                    z.append((item, 0))
                else:
                    z.append((str(item["series"]), int(item.get("offset", 0))))
            return cls(str(d["x"]), str(d["y"]), int(d.get("x_offset", 0)), int(d.get("y_offset", 0)),
                       tuple(z), str(d.get("name", "")))
        except (KeyError, TypeError) as exc:
            raise DataError(f"malformed hypothesis {d!r}: {exc}") from None


@dataclass(frozen=True)
class TestOptions:
    """Per-test settings shared by every hypothesis of a batch."""

    alpha: float = 0.05
    sims: int = 5000
    seed: int = 0
    statistic: StatisticKind = field(default_factory=StatisticKind)
    lag_window: int | None = None
    gamma: int = 1
    grid: tuple | None = None
    sieve: tuple[int, int] | None = None
    center: bool = True

    __test__ = False

    def config(self, seed: int) -> TestConfig:
        return TestConfig(self.alpha, self.sims, seed, self.statistic, center=self.center)

    def as_dict(self) -> dict:
        return {"alpha": self.alpha, "sims": self.sims, "seed": self.seed,
                "statistic": {"family": self.statistic.family,
                              "p": "inf" if self.statistic.p_inf else 2},
                "lag_window": self.lag_window, "gamma": self.gamma,
                "grid": [list(g) for g in self.grid] if self.grid else None,
                "sieve": list(self.sieve) if self.sieve else None, "center": self.center}

    @classmethod
    def from_dict(cls, d: dict) -> "TestOptions":
        known = {"alpha", "sims", "seed", "statistic", "lag_window", "gamma", "grid", "sieve", "center"}
        unknown = set(d) - known
        if unknown:
            raise DataError(f"unknown test field(s): {', '.join(sorted(unknown))}")
        st = d.get("statistic") or {}
        p = st.get("p", 2)
        kind = StatisticKind(st.get("family", "max-partial-sum"), float("inf") if p in ("inf", "Inf") else p)
        grid = d.get("grid")
        sieve = d.get("sieve")
        opts = cls(float(d.get("alpha", 0.05)), int(d.get("sims", 5000)), int(d.get("seed", 0)), kind,
                   None if d.get("lag_window") is None else int(d["lag_window"]), int(d.get("gamma", 1)),
                   tuple(tuple(int(v) for v in g) for g in grid) if grid else None,
                   tuple(int(v) for v in sieve) if sieve else None, bool(d.get("center", True)))
        opts.config(opts.seed)  # validates alpha/sims/seed
        return opts


@dataclass(frozen=True)
class BatchConfig:
    data_path: Path
    hypotheses: tuple[HypothesisEntry, ...]
    test: TestOptions = field(default_factory=TestOptions)
    values: str = "prices"
    date_column: str | None = None
    jobs: int = 1
    csv_path: Path | None = None
    json_path: Path | None = None
    timings: bool = False

    def __post_init__(self):
        if not self.hypotheses:
            raise DataError("batch needs at least one hypothesis")
        if self.jobs < 1:
            raise DataError("jobs must be >= 1")

    def series(self) -> list[str]:
        return list(dict.fromkeys(s for h in self.hypotheses for s in h.series()))

    @classmethod
    def from_dict(cls, doc: dict, base_dir=".") -> "BatchConfig":
        base = Path(base_dir)
        unknown = set(doc) - {"data", "test", "hypotheses", "jobs", "output"}
        if unknown:
            raise DataError(f"unknown config section(s): {', '.join(sorted(unknown))}")
        data = doc.get("data") or {}
        if "path" not in data:
            raise DataError("config needs data.path")
        out = doc.get("output") or {}
        hyps = tuple(HypothesisEntry.from_dict(h) for h in doc.get("hypotheses") or [])
        return cls(base / data["path"], hyps, TestOptions.from_dict(doc.get("test") or {}),
                   data.get("values", "prices"), data.get("date_column"), int(doc.get("jobs", 1)),
                   base / out["csv"] if out.get("csv") else None,
                   base / out["json"] if out.get("json") else None)

    @classmethod
    def load(cls, path) -> "BatchConfig":
        path = Path(path)
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from None
        return cls.from_dict(doc, path.parent)


def hypothesis_seed(base_seed: int, entry: HypothesisEntry) -> int:
    """Test seed fixed by the base seed and the hypothesis definition."""
    ss = np.random.SeedSequence(int(base_seed), spawn_key=(entry.digest(),))
    return int(ss.generate_state(1, np.uint64)[0])


def run_hypothesis(returns: ReturnsTable, entry: HypothesisEntry, opts: TestOptions, seed: int):
    """Run one hypothesis; returns a :class:`~dgcm.engine.TestReport`."""
    z_names = list(dict.fromkeys(s for s, _ in entry.z))
    schema = {"X": [entry.x], "Y": [entry.y]}
    if z_names:
        schema["Z"] = z_names
    panel = returns.panel(schema)
    cfg = opts.config(seed)
    if entry.z:
        spec = HypothesisSpec(((0, 0, entry.x_offset, entry.y_offset),),
                              tuple((z_names.index(s), c) for s, c in entry.z), "conditional")
        sieve = SieveConfig(*opts.sieve) if opts.sieve else None
        return run_dgcm(panel, spec, sieve, opts.lag_window, cfg, gamma=opts.gamma, grid=opts.grid)
    spec = HypothesisSpec(((0, 0, entry.x_offset, entry.y_offset),), (), "unconditional")
    tb = opts.sieve[0] if opts.sieve else None
    return run_independence(panel, spec, tb, opts.lag_window, cfg, gamma=opts.gamma, grid=opts.grid)


def _job(args):
    returns, entry, opts, seed = args
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", FoldTooSmall)
            rep = run_hypothesis(returns, entry, opts, seed)
    except DgcmError as exc:
        return None, f"{type(exc).__name__}: {exc}"
    return (rep.statistic, rep.quantile, rep.p_value), ""


def run_batch(config: BatchConfig, returns: ReturnsTable | None = None, write: bool = True) -> PvalueTable:
    """Run every hypothesis, adjust the p-values and write the configured outputs.

    Each hypothesis is seeded from the base seed and its own definition, so
    results do not depend on ``jobs`` or on the position in the list.  A
    failing hypothesis is recorded with its error and left out of the
    adjustment.  ``reject`` is the adjusted decision ``p_bh <= alpha``.
    """
    started = time.perf_counter()
    if returns is None:
        returns = load_returns(config.data_path, config.series(), config.values, config.date_column)
    opts = config.test
    seeds = [hypothesis_seed(opts.seed, h) for h in config.hypotheses]
    tasks = [(returns, h, opts, s) for h, s in zip(config.hypotheses, seeds)]
    if config.jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(min(config.jobs, len(tasks))) as pool:
            results = list(pool.map(_job, tasks))
    else:
        results = [_job(t) for t in tasks]

    ok = [i for i, (res, _) in enumerate(results) if res is not None]
    adjusted = dict(zip(ok, bh_adjust([results[i][0][2] for i in ok]))) if ok else {}
    rows = []
    for i, (h, s, (res, err)) in enumerate(zip(config.hypotheses, seeds, results)):
        if res is None:
            rows.append(PvalueRow(h.name, h.kind, None, None, None, None, None, s, err))
            continue
        stat, q, p = res
        p_bh = float(adjusted[i])
        rows.append(PvalueRow(h.name, h.kind, float(stat), float(q), float(p), p_bh,
                              bool(p_bh <= opts.alpha), s))
    metadata = {
        "version": __version__,
        "config": {"data": {"path": config.data_path.name, "values": config.values},
                   "test": opts.as_dict(),
                   "hypotheses": [dict(h.definition(), name=h.name) for h in config.hypotheses]},
        "n": returns.n,
        "dates": [returns.dates[0].isoformat(), returns.dates[-1].isoformat()] if returns.n else [],
        "interpolated": dict(sorted(returns.filled.items())),
        "burn_in": None,
    }
    if config.timings:
        metadata["timings"] = {"seconds": time.perf_counter() - started, "jobs": config.jobs}
    table = PvalueTable(tuple(rows), metadata)
    if write:
        if config.csv_path is not None:
            emit_report(table, config.csv_path, "csv")
        if config.json_path is not None:
            emit_report(table, config.json_path, "json")
    return table


def with_overrides(config: BatchConfig, **kw) -> BatchConfig:
    """Copy of ``config`` with non-None test/batch fields replaced."""
    test_kw = {k: v for k, v in kw.items() if k in ("alpha", "sims", "seed") and v is not None}
    other = {k: v for k, v in kw.items() if k not in ("alpha", "sims", "seed") and v is not None}
    return replace(config, test=replace(config.test, **test_kw), **other)
