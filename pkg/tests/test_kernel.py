import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from crossquant.errors import ConfigError
from crossquant.kernel import (
    analyze_kernel,
    count_for_proportion,
    kernel_mask,
    remove_by_proportion,
    remove_kernel,
    zero_bound,
)
from crossquant.quantizers import QuantScheme, cross_quantize, cross_scale, per_token_quantize, quantize

PT8 = QuantScheme.per_token(8)
X2 = [[10.0, 0.03], [0.05, 0.2]]
ROW = [[2.0, -1.0, 0.006]]


def test_zero_bound_per_token():
    b = zero_bound([[2.0, -1.0, 0.006], [0.0, 0.0, 0.0]], PT8)
    assert b[0].tolist() == [0.5 * 2.0 / 127] * 3
    assert b[0, 0] == pytest.approx(0.007874, abs=1e-6)
    assert not b[1].any()


def test_zero_bound_cross_alpha_one_equals_per_token():
    x = np.random.default_rng(0).normal(size=(4, 5))
    assert zero_bound(x, QuantScheme.cross_quant(8, 1.0)).tobytes() == zero_bound(x, PT8).tobytes()


@pytest.mark.parametrize("scheme", [QuantScheme.per_channel(8), QuantScheme.group_wise(8, 2)])
def test_unsupported_schemes(scheme):
    for fn in (zero_bound, kernel_mask, analyze_kernel, remove_kernel):
        with pytest.raises(ConfigError):
            fn(X2, scheme)


def test_kernel_mask_examples():
    assert kernel_mask(ROW, PT8).tolist() == [[False, False, True]]
    assert kernel_mask([[0.0, 0.0]], PT8).tolist() == [[True, True]]
    assert not kernel_mask(X2, QuantScheme.cross_quant(8, 0.5)).any()


def test_kernel_mask_exact_tie():
    # 0.5 / 127 * 2.0 scales to exactly 0.5: rounds away from zero, not in kernel
    x = [[127.0, 0.5]]
    assert per_token_quantize(x, 8).codes.tolist() == [[127, 1]]
    assert kernel_mask(x, PT8).tolist() == [[False, False]]
    x = [[127.0, np.nextafter(0.5, 0)]]
    assert kernel_mask(x, PT8).tolist() == [[False, True]]


def test_analyze_all_equal():
    r = analyze_kernel(np.full((3, 4), 5.0), QuantScheme.cross_quant(8, 0.15))
    assert r.frac_c_ge_t == 1.0
    assert r.frac_Btilde_lt_B == 0.0
    assert r.kernel_proportion == 0.0


def test_analyze_small_example():
    pt = analyze_kernel(X2, PT8)
    cq = analyze_kernel(X2, QuantScheme.cross_quant(8, 0.5))
    assert pt.kernel_proportion == 0.25
    assert pt.frac_Btilde_lt_B is None
    assert cq.kernel_proportion == 0.0
    # c = [10, 0.2], t = [10, 0.2]: pairs (0,0), (1,0), (1,1) satisfy c_j >= t_i
    assert cq.frac_c_ge_t == 0.75
    # only (0,1) has a CrossQuant bound below per-token: sqrt(2) < 10
    assert cq.frac_Btilde_lt_B == 0.25


def test_report_dict_fields():
    d = analyze_kernel(X2, QuantScheme.cross_quant(8, 0.5)).to_dict()
    assert set(d) == {"scheme", "bits", "alpha", "kernel_proportion", "nonzero_kernel_proportion",
                      "frac_c_ge_t", "frac_Btilde_lt_B", "rows", "cols"}
    assert d["rows"] == 2 and d["cols"] == 2 and d["scheme"] == "crossquant"


def test_nonzero_kernel_excludes_exact_zeros():
    r = analyze_kernel([[1000.0, 0.0, 0.001]], PT8)
    assert r.kernel_proportion == pytest.approx(2 / 3)
    assert r.nonzero_kernel_proportion == pytest.approx(1 / 3)


def test_remove_kernel_examples():
    assert remove_kernel(ROW, PT8).tolist() == [[2.0, -1.0, 0.0]]
    assert not remove_kernel(np.zeros((2, 2)), PT8).any()
    x = np.array(X2)
    assert remove_kernel(x, QuantScheme.cross_quant(8, 0.5)).tobytes() == x.tobytes()


def test_remove_by_proportion_examples():
    x = np.array([[3.0, -1.0], [0.5, 2.0]])
    assert remove_by_proportion(x, 0.0).tobytes() == x.tobytes()
    assert not remove_by_proportion(x, 1.0).any()
    assert remove_by_proportion(x, 0.5).tolist() == [[3.0, 0.0], [0.0, 2.0]]


def test_remove_by_proportion_ties_row_major():
    x = np.array([[1.0, -1.0, 2.0], [1.0, 3.0, -1.0]])
    out = remove_by_proportion(x, 0.5)  # 3 of 6, four elements tie at |1|
    assert out.tolist() == [[0.0, 0.0, 2.0], [0.0, 3.0, -1.0]]


@pytest.mark.parametrize("p, n, k", [(0.7, 10, 7), (0.29, 100, 29), (0.05, 131072, 6553), (0.3, 3, 0), (1.0, 7, 7)])
def test_count_for_proportion(p, n, k):
    assert count_for_proportion(p, n) == k


def test_proportion_out_of_range():
    with pytest.raises(ConfigError):
        remove_by_proportion([[1.0]], 1.1)


elements = st.one_of(
    st.floats(-100, 100, allow_subnormal=False),
    st.integers(-100, 100).map(float),
    st.floats(-1e-2, 1e-2, allow_subnormal=False),
)
matrices = hnp.arrays(np.float64, hnp.array_shapes(min_dims=2, max_dims=2, min_side=1, max_side=10), elements=elements)
kernel_schemes = st.one_of(
    st.builds(QuantScheme.per_token, st.sampled_from([4, 8])),
    st.builds(QuantScheme.cross_quant, st.sampled_from([4, 8]), st.floats(0, 1)),
)


@settings(max_examples=400, deadline=None)
@given(matrices, kernel_schemes)
def test_mask_matches_codes(x, scheme):
    np.testing.assert_array_equal(kernel_mask(x, scheme), quantize(x, scheme).codes == 0)


@settings(max_examples=300, deadline=None)
@given(matrices, st.sampled_from([0.15, 0.45, 0.75]), st.floats(0.01, 0.99))
def test_case_one_bounds_shrink(x, a1, a2):
    t = np.abs(x).max(axis=1)
    c = np.abs(x).max(axis=0)
    case1 = (c[None, :] > 0) & (c[None, :] < t[:, None])
    for alpha in (a1, a2):
        b_cross = zero_bound(x, QuantScheme.cross_quant(8, alpha))
        b_tok = zero_bound(x, PT8)
        assert np.all(b_cross[case1] < b_tok[case1])


@settings(max_examples=200, deadline=None)
@given(matrices, kernel_schemes)
def test_remove_kernel_touches_only_mask(x, scheme):
    mask = kernel_mask(x, scheme)
    out = remove_kernel(x, scheme)
    assert np.array_equal(out[~mask], x[~mask])
    assert not out[mask].any()


@settings(max_examples=200, deadline=None)
@given(hnp.arrays(np.float64, st.tuples(st.integers(1, 8), st.integers(1, 8)),
                  elements=st.integers(-3, 3).map(float).filter(bool)), st.floats(0, 1))
def test_removal_count_with_ties(x, p):
    # no zeros in x, so zero count equals the number removed
    out = remove_by_proportion(x, p)
    k = count_for_proportion(p, x.size)
    assert np.count_nonzero(out == 0) == k
    kept = np.abs(x[out != 0])
    gone = np.abs(x[out == 0])
    if kept.size and gone.size:
        assert gone.max() <= kept.min()


@settings(max_examples=100, deadline=None)
@given(matrices, kernel_schemes)
def test_report_invariants(x, scheme):
    r = analyze_kernel(x, scheme)
    assert r.kernel_proportion == np.count_nonzero(r.mask) / x.size
    assert 0 <= r.nonzero_kernel_proportion <= r.kernel_proportion <= 1
    assert 0 <= r.frac_c_ge_t <= 1
    if r.frac_Btilde_lt_B is not None:
        assert 0 <= r.frac_Btilde_lt_B <= 1


@pytest.mark.parametrize("alpha", [0.15, 0.45, 0.75, 0.999])
def test_case_one_adjacent_floats(alpha):
    below = np.nextafter(100.0, 0.0)
    x = [[100.0, 1.0], [0.0, below]]  # c_1 is one ulp under t_0
    b_cross = zero_bound(x, QuantScheme.cross_quant(8, alpha))
    assert b_cross[0, 1] < zero_bound(x, PT8)[0, 1]
    assert cross_scale(np.array([100.0]), np.array([below]), alpha)[0, 0] == below
