import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dgcm.errors import DataError, EmptyRange, OutOfRange
from dgcm.panel import (
    HypothesisSpec,
    OffsetSpec,
    TimeSeriesPanel,
    effective_times,
    regressor_matrix,
    regressor_vector,
    response_value,
    response_vector,
)


def test_zero_offsets_cover_everything():
    r = effective_times(100, OffsetSpec({0: [0]}, {0: [0]}, {0: [0]}))
    assert (r.t_lo, r.t_hi, r.count) == (1, 100, 100)


@pytest.mark.parametrize("spec,n,expected", [
    (OffsetSpec({0: [0]}, {0: [7]}, {0: [-1, 0]}), 100, (2, 93)),
    (OffsetSpec({0: [-3]}, {0: [0]}, {0: [0]}), 10, (4, 10)),
    (OffsetSpec({0: [2]}, {0: [3]}), 10, (1, 7)),  # leads only: lower end clamps at 1
])
def test_effective_times_examples(spec, n, expected):
    r = effective_times(n, spec)
    assert (r.t_lo, r.t_hi) == expected


def test_empty_range():
    with pytest.raises(EmptyRange):
        effective_times(5, OffsetSpec({0: [-3]}, {0: [3]}))


def test_offset_validation():
    with pytest.raises(DataError):
        OffsetSpec(C={0: [1]})
    with pytest.raises(DataError):
        OffsetSpec(A={0: []})
    with pytest.raises(DataError):
        effective_times(5, OffsetSpec({0: [5]}))


offsets = st.lists(st.integers(-6, 6), min_size=1, max_size=3)


@given(offsets, offsets, st.lists(st.integers(-6, 0), min_size=1, max_size=3), st.integers(-6, 6))
def test_range_shrinks_when_offsets_added(a, b, c, extra):
    n = 40
    base = effective_times(n, OffsetSpec({0: a}, {0: b}, {0: c}))
    bigger = effective_times(n, OffsetSpec({0: a + [extra]}, {0: b}, {0: c}))
    assert bigger.t_lo >= base.t_lo and bigger.t_hi <= base.t_hi


def test_regressor_vector_examples():
    p = TimeSeriesPanel.from_arrays(X=[0, 0, 0, 0], Z=[1.0, 2.0, 3.0, 4.0])
    assert regressor_vector(p, 3, [(0, 0)]).tolist() == [3.0]
    assert regressor_vector(p, 3, [(0, -1), (0, 0)]).tolist() == [2.0, 3.0]
    with pytest.raises(OutOfRange):
        regressor_vector(p, 1, [(0, -1)])


def test_regressor_order_is_dimension_then_offset():
    p = TimeSeriesPanel.from_arrays(X=[0] * 4, Z={"a": [1.0, 2, 3, 4], "b": [10.0, 20, 30, 40]})
    # given out of order on purpose
    v = regressor_vector(p, 3, [(1, -1), (0, 0), (0, -2)])
    assert v.tolist() == [1.0, 3.0, 20.0]


def test_response_value_examples():
    p = TimeSeriesPanel.from_arrays(X=[10.0, 20.0, 30.0])
    assert response_value(p, 1, "X", 0, 2) == 30.0
    assert response_value(p, 2, "X", 0, 0) == 20.0
    with pytest.raises(OutOfRange):
        response_value(p, 3, "X", 0, 1)


@given(st.integers(5, 12), st.integers(-2, 0), st.integers(-2, 2))
def test_extraction_matches_direct_indexing(n, c, a):
    rng = np.random.default_rng(n)
    x, z = rng.normal(size=n), rng.normal(size=n)
    p = TimeSeriesPanel.from_arrays(X=x, Z=z)
    r = effective_times(n, OffsetSpec({0: [a]}, {}, {0: [c]}))
    times = r.times()
    np.testing.assert_array_equal(response_vector(p, times, "X", 0, a), x[times + a - 1])
    np.testing.assert_array_equal(regressor_matrix(p, times, [(0, c)])[:, 0], z[times + c - 1])
    for t in times:
        assert response_value(p, int(t), "X", 0, a) == x[t + a - 1]
        assert regressor_vector(p, int(t), [(0, c)])[0] == z[t + c - 1]


def test_panel_invariants():
    with pytest.raises(DataError):
        TimeSeriesPanel.from_arrays(X=[1.0, 2.0], Y=[1.0])
    with pytest.raises(DataError):
        TimeSeriesPanel.from_arrays(X=[1.0, np.nan])
    p = TimeSeriesPanel.from_arrays(X={"a": [1.0, 2.0]}, Y=np.ones((2, 2)))
    assert p.labels("Y") == ("Y0", "Y1") and p.dim_count("X") == 1
    with pytest.raises(DataError):
        p.values("Z", 0)
    assert p.scaled({"X": 3.0}).values("X", 0).tolist() == [3.0, 6.0]


def test_hypothesis_spec():
    h = HypothesisSpec.single(0, -1, {0: (0, -1)})
    assert h.conditioning == ((0, -1), (0, 0)) and h.kind == "conditional"
    assert h.offsets.B == {0: (-1,)}
    with pytest.raises(DataError):
        HypothesisSpec(((0, 0, 0, 0),), ((0, 0),), "unconditional")
    with pytest.raises(DataError):
        HypothesisSpec(((0, 0, 0, 0), (0, 0, 0, 0)))
    with pytest.raises(DataError):
        HypothesisSpec((), ((0, 0),))
    u = HypothesisSpec.single()
    assert u.kind == "unconditional" and u.conditioning == ()
