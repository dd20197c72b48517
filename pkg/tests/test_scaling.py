import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from bmwdesign.scaling import ScalingClampWarning, apply_minmax, fit_minmax

from conftest import make_table


def test_fit_records_min_and_max():
    p = fit_minmax(make_table([2.0, 4.0, 6.0]), ["f0"])
    assert (p.mins, p.maxs) == ((2.0,), (6.0,))


def test_zero_range_is_excluded():
    p = fit_minmax(make_table([5.0, 5.0, 5.0]), ["f0"])
    assert p.excluded_features == ("f0",) and p.retained == ()


def test_columns_are_independent():
    p = fit_minmax(make_table(np.array([[0.0, 10.0], [1.0, 30.0]])), ["f0", "f1"])
    assert list(zip(p.mins, p.maxs)) == [(0.0, 1.0), (10.0, 30.0)]


def test_apply_examples():
    t = make_table([2.0, 4.0, 6.0])
    out = apply_minmax(fit_minmax(t, ["f0"]), t)[:, 0]
    assert out.tolist() == [0.0, 0.5, 1.0]


def test_already_scaled_column_unchanged():
    t = make_table([0.0, 0.25, 1.0])
    assert apply_minmax(fit_minmax(t, ["f0"]), t)[:, 0].tolist() == [0.0, 0.25, 1.0]


def test_excluded_features_dropped_in_order():
    x = np.array([[3.0, 1.0, 0.0], [3.0, 2.0, 5.0], [3.0, 3.0, 10.0]])
    t = make_table(x)
    p = fit_minmax(t, ["f2", "f0", "f1"])
    assert p.retained == ("f2", "f1")
    assert apply_minmax(p, t).tolist() == [[0.0, 0.0], [0.5, 0.5], [1.0, 1.0]]


def test_reused_params_clamp_with_warning():
    p = fit_minmax(make_table([0.0, 10.0]), ["f0"])
    other = make_table([-5.0, 5.0, 20.0])
    with pytest.warns(ScalingClampWarning):
        out = apply_minmax(p, other)[:, 0]
    assert out.tolist() == [0.0, 0.5, 1.0]


def test_unknown_feature():
    with pytest.raises(KeyError):
        fit_minmax(make_table([1.0, 2.0]), ["zzz"])


# eighths keep gaps far above float resolution so strict monotonicity is checkable
finite = st.integers(-8_000_000, 8_000_000).map(lambda k: k / 8)


@settings(max_examples=100, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(4, 20), st.integers(1, 4)), elements=finite))
def test_properties(x):
    t = make_table(x)
    names = list(t.feature_names)
    p = fit_minmax(t, names)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        once = apply_minmax(p, t)
    assert np.all((once >= 0) & (once <= 1))
    # idempotent
    t2 = make_table(once, names=list(p.retained))
    twice = apply_minmax(fit_minmax(t2, list(p.retained)), t2)
    np.testing.assert_allclose(twice, once, atol=1e-12)
    # strictly monotone per column
    for j, name in enumerate(p.retained):
        col = t.columns([name])[:, 0]
        order = np.argsort(col, kind="stable")
        a, b = col[order][:-1], col[order][1:]
        sa, sb = once[order, j][:-1], once[order, j][1:]
        assert np.all(sa[a < b] < sb[a < b])
