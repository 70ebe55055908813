import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from funcpd.core import (
    CSVFormatError,
    FunctionalSample,
    GridWeighting,
    inner,
    norm,
    parse_csv,
    read_csv,
    read_manifest,
    write_csv,
)

E, M = GridWeighting.EUCLIDEAN, GridWeighting.MEAN


def test_inner_examples():
    assert inner([1, 0], [0, 1], E) == 0
    assert inner([1, 2], [3, 4], E) == 11
    assert inner([2, 2], [1, 1], M) == 2


def test_norm_examples():
    assert norm([0, 0, 0]) == 0
    assert norm([3, 4], E) == 5
    assert norm([3, 4], M) == pytest.approx(np.sqrt(25 / 2), rel=1e-15)


def test_dimension_mismatch_names_both():
    with pytest.raises(ValueError, match="3 vs 2"):
        inner([1, 2, 3], [1, 2])


pairs = st.integers(1, 12).flatmap(
    lambda d: st.tuples(
        arrays(float, d, elements=st.floats(-1e3, 1e3)),
        arrays(float, d, elements=st.floats(-1e3, 1e3)),
        st.sampled_from([E, M]),
    )
)


@given(pairs)
def test_inner_symmetric_and_cauchy_schwarz(args):
    u, v, w = args
    assert inner(u, v, w) == inner(v, u, w)
    assert abs(inner(u, v, w)) <= norm(u, w) * norm(v, w) * (1 + 1e-12) + 1e-300


@given(pairs)
def test_norm_squared_is_inner(args):
    u, _, w = args
    assert norm(u, w) ** 2 == pytest.approx(inner(u, u, w), rel=1e-12, abs=1e-300)


def test_sample_validation():
    with pytest.raises(ValueError, match="at least 2"):
        FunctionalSample(np.zeros((1, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        FunctionalSample(np.array([[1.0, np.nan], [0.0, 0.0]]))
    s = FunctionalSample([1.0, 2.0, 3.0])
    assert (s.n, s.d) == (3, 1)
    with pytest.raises(ValueError):
        s.data[0, 0] = 5.0


def test_csv_roundtrip_is_lossless(tmp_path, rng):
    data = rng.standard_normal((7, 4)) * 10.0 ** rng.integers(-8, 8, size=(7, 4))
    p = tmp_path / "x.csv"
    write_csv(FunctionalSample(data), p, manifest={"k": 1})
    back = read_csv(p)
    assert np.array_equal(back.data, data)
    assert read_manifest(p) == {"k": 1}


def test_csv_header_detection():
    s = parse_csv("a,b\n1,2\n3,4\n")
    assert np.array_equal(s.data, [[1, 2], [3, 4]])
    s = parse_csv("1,2\n3,4\n")
    assert s.n == 2


def test_csv_ragged_row_reports_line():
    with pytest.raises(CSVFormatError, match="line 3 has 1 fields, expected 2"):
        parse_csv("1,2\n3,4\n5\n")


def test_csv_rejects_missing_values():
    with pytest.raises(CSVFormatError, match="missing value"):
        parse_csv("1,2\n3,\n")
    with pytest.raises(CSVFormatError, match="not a number"):
        parse_csv("1,2\n3,NA\n")


def test_csv_date_column():
    s = parse_csv("date,x,y\n2020-01-01,1,2\n2020-01-02,3,4\n", date_column="date")
    assert s.labels == ("2020-01-01", "2020-01-02")
    assert np.array_equal(s.data, [[1, 2], [3, 4]])
    s = parse_csv("2020-01-01,1,2\n2020-01-02,3,4\n", date_column=0)
    assert s.labels[1] == "2020-01-02" and s.d == 2
