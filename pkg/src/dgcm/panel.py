"""Panel data model, time offsets and effective-time bookkeeping.

Times are 1-based labels ``t = 1..n`` as in the usual time-series notation;
dimension indices ``i, j, k`` are 0-based positions within a role.  Vectors
built from several (dimension, offset) pairs are always ordered
lexicographically by dimension index, then by ascending offset.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyRange, OutOfRange

ROLES = ("X", "Y", "Z")


@dataclass(frozen=True)
class Series:
    role: str
    label: str
    values: np.ndarray


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeriesPanel:
    """Rectangular real-valued observations tagged with roles X, Y, Z.

    Parameters
    ----------
    n : int
        Sample length shared by every series.
    series : tuple of Series
        Ordered collection.  Within a role, the position of a series is its
        dimension index.
    """

    n: int
    series: tuple[Series, ...]

    def __post_init__(self):
        if self.n < 1:
            raise DataError(f"panel length must be positive, got {self.n}")
        seen = set()
        for s in self.series:
            if s.role not in ROLES:
                raise DataError(f"unknown role {s.role!r}")
            if s.values.shape != (self.n,):
                raise DataError(
                    f"series {s.role}:{s.label} has shape {s.values.shape}, expected ({self.n},)"
                )
            if not np.all(np.isfinite(s.values)):
                raise DataError(f"series {s.role}:{s.label} contains non-finite values")
            if (s.role, s.label) in seen:
                raise DataError(f"duplicate label {s.label!r} within role {s.role}")
            seen.add((s.role, s.label))

    @classmethod
    def from_arrays(cls, X=None, Y=None, Z=None) -> "TimeSeriesPanel":
        """Build a panel from 1-d/2-d arrays or ``{label: values}`` mappings.

        2-d arrays are read column-wise; columns get labels ``"X0"``, ``"X1"``...
        """
        series = []
        n = None
        for role, data in (("X", X), ("Y", Y), ("Z", Z)):
            if data is None:
                continue
            if isinstance(data, Mapping):
                items = list(data.items())
            else:
                arr = np.asarray(data, dtype=float)
                if arr.ndim == 1:
                    arr = arr[:, None]
                items = [(f"{role}{d}", arr[:, d]) for d in range(arr.shape[1])]
            for label, values in items:
                values = _frozen(values)
                n = len(values) if n is None else n
                series.append(Series(role, str(label), values))
        if n is None:
            raise DataError("panel needs at least one series")
        return cls(n, tuple(series))

    def dims(self, role: str) -> tuple[Series, ...]:
        return tuple(s for s in self.series if s.role == role)

    def dim_count(self, role: str) -> int:
        return len(self.dims(role))

    def values(self, role: str, dim: int) -> np.ndarray:
        dims = self.dims(role)
        if not 0 <= dim < len(dims):
            raise DataError(f"role {role} has {len(dims)} dimension(s); no dimension {dim}")
        return dims[dim].values

    def labels(self, role: str) -> tuple[str, ...]:
        return tuple(s.label for s in self.dims(role))

    def scaled(self, factors: Mapping[str, float]) -> "TimeSeriesPanel":
        """Copy with every series of a role multiplied by ``factors[role]``."""
        return TimeSeriesPanel(
            self.n,
            tuple(
                Series(s.role, s.label, _frozen(s.values * factors.get(s.role, 1.0)))
                for s in self.series
            ),
        )


@dataclass(frozen=True)
class OffsetSpec:
    """Time offsets per dimension: ``A`` for X, ``B`` for Y, ``C`` for Z."""

    A: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    B: Mapping[int, tuple[int, ...]] = field(default_factory=dict)
    C: Mapping[int, tuple[int, ...]] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("A", "B", "C"):
            raw = getattr(self, name)
            clean = {}
            for dim, offs in raw.items():
                offs = tuple(sorted({int(o) for o in offs}))
                if not offs:
                    raise DataError(f"offset set {name}[{dim}] is empty")
                clean[int(dim)] = offs
            object.__setattr__(self, name, dict(sorted(clean.items())))
        for k, offs in self.C.items():
            if any(c > 0 for c in offs):
                raise DataError(f"conditioning offsets must be non-positive, got C[{k}]={offs}")

    def all_offsets(self) -> list[int]:
        return [o for m in (self.A, self.B, self.C) for offs in m.values() for o in offs]

    def validate(self, n: int) -> None:
        for o in self.all_offsets():
            if not -n < o < n:
                raise DataError(f"offset {o} outside (-{n}, {n})")


@dataclass(frozen=True)
class HypothesisSpec:
    """One test: the tuple set of ``(i, j, a, b)`` plus conditioning pairs ``(k, c)``.

    ``i``/``j``/``k`` index dimensions of X/Y/Z, ``a``/``b``/``c`` are time
    offsets.  An empty conditioning set means an unconditional test.
    """

    tuples: tuple[tuple[int, int, int, int], ...]
    conditioning: tuple[tuple[int, int], ...] = ()
    kind: str = "conditional"

    def __post_init__(self):
        tuples = tuple(tuple(int(v) for v in m) for m in self.tuples)
        if not tuples:
            raise DataError("hypothesis needs at least one (i, j, a, b) tuple")
        if len(set(tuples)) != len(tuples):
            raise DataError("hypothesis tuples must be distinct")
        if any(len(m) != 4 for m in tuples):
            raise DataError("tuples must have the form (i, j, a, b)")
        cond = tuple(sorted({(int(k), int(c)) for k, c in self.conditioning}))
        if self.kind not in ("conditional", "unconditional"):
            raise DataError(f"unknown hypothesis kind {self.kind!r}")
        if self.kind == "unconditional" and cond:
            raise DataError("unconditional hypotheses take no conditioning set")
        if self.kind == "conditional" and not cond:
            raise DataError("conditional hypotheses need a conditioning set")
        if any(c > 0 for _, c in cond):
            raise DataError("conditioning offsets must be non-positive")
        object.__setattr__(self, "tuples", tuples)
        object.__setattr__(self, "conditioning", cond)

    @classmethod
    def single(cls, a: int = 0, b: int = 0, z_offsets: Mapping[int, Iterable[int]] | None = None):
        """Univariate hypothesis ``X_{t+a} _||_ Y_{t+b} | Z`` on the first X and Y dimensions."""
        if z_offsets is None:
            return cls(((0, 0, a, b),), (), "unconditional")
        cond = [(k, c) for k, offs in z_offsets.items() for c in offs]
        return cls(((0, 0, a, b),), tuple(cond), "conditional")

    @property
    def offsets(self) -> OffsetSpec:
        A: dict[int, set] = {}
        B: dict[int, set] = {}
        C: dict[int, set] = {}
        for i, j, a, b in self.tuples:
            A.setdefault(i, set()).add(a)
            B.setdefault(j, set()).add(b)
        for k, c in self.conditioning:
            C.setdefault(k, set()).add(c)
        return OffsetSpec(A, B, C)

    @property
    def x_keys(self) -> tuple[tuple[int, int], ...]:
        """Distinct ``(i, a)`` responses in first-appearance order."""
        return tuple(dict.fromkeys((i, a) for i, _, a, _ in self.tuples))

    @property
    def y_keys(self) -> tuple[tuple[int, int], ...]:
        return tuple(dict.fromkeys((j, b) for _, j, _, b in self.tuples))

    @property
    def size(self) -> int:
        return len(self.tuples)


@dataclass(frozen=True)
class EffectiveTimeRange:
    t_lo: int
    t_hi: int

    @property
    def count(self) -> int:
        return self.t_hi - self.t_lo + 1

    def times(self) -> np.ndarray:
        return np.arange(self.t_lo, self.t_hi + 1)

    def rescaled(self, times) -> np.ndarray:
        """Affine map of ``times`` onto [0, 1] with ``t_lo -> 0`` and ``t_hi -> 1``."""
        times = np.asarray(times, dtype=float)
        if self.t_hi == self.t_lo:
            return np.zeros_like(times)
        return (times - self.t_lo) / (self.t_hi - self.t_lo)


def effective_times(n: int, offsets: OffsetSpec) -> EffectiveTimeRange:
    """Times at which every requested lead and lag is observed.

    Lags shift the start forward, leads pull the end back; absent lags
    (or leads) contribute zero.
    """
    offsets.validate(n)
    all_offs = offsets.all_offsets()
    lo = 1 - min(min(all_offs, default=0), 0)
    hi = n - max(max(all_offs, default=0), 0)
    if lo > hi:
        raise EmptyRange(f"no time has all offsets observed (range [{lo}, {hi}] for n={n})")
    return EffectiveTimeRange(lo, hi)


def _check_times(n: int, shifted: np.ndarray) -> None:
    if shifted.size and (shifted.min() < 1 or shifted.max() > n):
        bad = shifted[(shifted < 1) | (shifted > n)][0]
        raise OutOfRange(f"shifted time {bad} outside [1, {n}]")


def response_vector(panel: TimeSeriesPanel, times, role: str, dim: int, offset: int) -> np.ndarray:
    """Observations ``role[dim]`` at ``times + offset``."""
    shifted = np.asarray(times, dtype=int) + int(offset)
    _check_times(panel.n, shifted)
    return panel.values(role, dim)[shifted - 1]


def response_value(panel: TimeSeriesPanel, t: int, role: str, dim: int, offset: int) -> float:
    return float(response_vector(panel, [t], role, dim, offset)[0])


def regressor_matrix(panel: TimeSeriesPanel, times, conditioning: Sequence[tuple[int, int]]) -> np.ndarray:
    """Rows are times, columns are ``Z[k]`` shifted by ``c`` for each ``(k, c)``."""
    times = np.asarray(times, dtype=int)
    cols = [response_vector(panel, times, "Z", k, c) for k, c in sorted(conditioning)]
    if not cols:
        return np.empty((len(times), 0))
    return np.column_stack(cols)


def regressor_vector(panel: TimeSeriesPanel, t: int, conditioning: Sequence[tuple[int, int]]) -> np.ndarray:
    return regressor_matrix(panel, [t], conditioning)[0]
