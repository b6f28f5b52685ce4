import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtwa_ising.model import (
    CorrelationSeries,
    QuenchSpec,
    SpecError,
    load_spec,
    parse_key_values,
    save_spec,
    spec_from_mapping,
    time_grid,
    validate_spec,
)


@pytest.mark.parametrize(
    "kwargs, invariant",
    [
        (dict(n=7), "n"),
        (dict(n=0), "n"),
        (dict(j=0.0), "j"),
        (dict(h_i=0.0), "h_i"),
        (dict(h_f=-0.5), "h_f"),
        (dict(h_f=math.inf), "h_f"),
        (dict(t_grid=()), "t_grid"),
        (dict(t_grid=(0.0, 1.0, 1.0)), "t_grid"),
        (dict(t_grid=(-1.0, 0.0)), "t_grid"),
    ],
)
def test_invalid_specs_name_the_broken_invariant(kwargs, invariant):
    base = dict(n=8, h_i=1000.0, h_f=1.1, t_grid=(0.0, 1.0), j=1.0)
    base.update(kwargs)
    with pytest.raises(SpecError) as info:
        validate_spec(QuenchSpec(**base))
    assert info.value.invariant == invariant


def test_time_grid_is_inclusive():
    assert time_grid(0.0, 1.0, 0.25) == (0.0, 0.25, 0.5, 0.75, 1.0)
    assert time_grid(0.0, 12.5, 0.25)[-1] == 12.5
    with pytest.raises(SpecError):
        time_grid(0.0, 1.0, 0.0)


def test_parse_key_values_comments_and_embedded_lines():
    text = "# comment\nn = 8\n#: h_f = 1.1\n\nH-I = 1000\n"
    assert parse_key_values(text) == {"n": "8", "h_f": "1.1", "h_i": "1000"}
    with pytest.raises(ValueError, match="duplicate"):
        parse_key_values("n = 2\nn = 4")
    with pytest.raises(ValueError, match="key = value"):
        parse_key_values("n 2")


def test_missing_required_key():
    with pytest.raises(SpecError) as info:
        spec_from_mapping({"n": "8", "h_i": "2"})
    assert info.value.invariant == "h_f"


@given(
    n=st.integers(1, 40).map(lambda k: 2 * k),
    h_i=st.floats(0.01, 1e4),
    h_f=st.floats(0.0, 20.0),
    steps=st.lists(st.floats(0.01, 3.0), min_size=1, max_size=6),
)
def test_spec_file_round_trip(tmp_path_factory, n, h_i, h_f, steps):
    times = tuple(np.cumsum([0.0] + steps).tolist())
    spec = QuenchSpec(n, h_i, h_f, times)
    path = tmp_path_factory.mktemp("spec") / "q.txt"
    save_spec(spec, path)
    assert load_spec(path) == spec


def test_series_shape_and_invariants():
    with pytest.raises(ValueError):
        CorrelationSeries([0.0, 1.0], [0, 1], np.zeros((2, 3)))
    good = CorrelationSeries([0.0], [0, 1], [[1.0, 0.3]])
    good.check_invariants()
    assert np.all(good.stderr == 0)
    with pytest.raises(ValueError):
        CorrelationSeries([0.0], [0, 1], [[0.9, 0.3]]).check_invariants()
    with pytest.raises(ValueError):
        CorrelationSeries([0.0], [0, 1], [[1.0, 1.2]]).check_invariants()
    d, v, e = good.at(0.0)
    assert list(d) == [0, 1] and v[1] == 0.3
    with pytest.raises(KeyError):
        good.at(0.5)
