import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cmhgibbs.diagnostics import (
    ChainSummary,
    acceptance_rate,
    beta_hat,
    esjd,
    msjd,
    mse,
    ratio_with_se,
)
from cmhgibbs.sampler import KernelStepRecord, StateVector

finite = st.floats(-100, 100, allow_nan=False)


def test_msjd_examples():
    assert msjd(np.zeros((10, 2))) == 0.0
    assert msjd(np.array([[0.0, 0.0], [1.0, 1.0]])) == 2.0
    assert msjd([StateVector.of(0.0, (0.0, 0.0)), StateVector.of(1.0, (1.0, 1.0))]) == 3.0
    with pytest.raises(ValueError):
        msjd(np.zeros((1, 2)))


@settings(max_examples=100)
@given(arrays(float, st.tuples(st.integers(2, 30), st.integers(1, 4)), elements=finite), arrays(float, 4, elements=finite))
def test_msjd_invariances(path, shift):
    base = msjd(path)
    assert msjd(path[:, ::-1]) == pytest.approx(base, rel=1e-12, abs=1e-12)
    assert msjd(path + shift[: path.shape[1]]) == pytest.approx(base, rel=1e-9, abs=1e-9)


def test_esjd_and_mse_examples():
    assert esjd([2.5] * 7) == (2.5, 0.0)
    assert esjd([ChainSummary(1.0, 0.0, 0, 0), ChainSummary(3.0, 0.0, 0, 0)]) == (2.0, 1.0)
    assert mse([0.3] * 5, 0.3) == (0.0, 0.0)
    assert mse([-1.0, 1.0], 0.0) == (1.0, 0.0)
    with pytest.raises(ValueError):
        esjd([1.0])
    with pytest.raises(ValueError):
        mse([1.0], 0.0)


@settings(max_examples=100)
@given(st.lists(finite, min_size=2, max_size=50), finite)
def test_mse_shift_invariance_and_order(betas, shift):
    ref = 0.5
    a = mse(betas, ref)
    b = mse([x + shift for x in betas], ref + shift)
    assert b[0] == pytest.approx(a[0], rel=1e-6, abs=1e-6)
    c = mse(list(reversed(betas)), ref)
    assert c[0] == pytest.approx(a[0], rel=1e-12, abs=1e-12)
    assert a[0] == pytest.approx(np.mean([(x - ref) ** 2 for x in betas]), rel=1e-12, abs=1e-12)


def test_ratio_with_se():
    assert ratio_with_se((3.0, 0.1), (3.0, 0.1))[0] == 1.0
    assert ratio_with_se((2.0, 0.0), (1.0, 0.0)) == (2.0, 0.0)
    r, se = ratio_with_se((2.0, 0.2), (4.0, 0.2))
    assert r == 0.5 and se == pytest.approx(0.5 * np.sqrt(0.01 + 0.0025))
    with pytest.raises(ValueError):
        ratio_with_se((1.0, 0.1), (0.0, 0.1))


def test_beta_hat_uses_every_iterate():
    assert beta_hat([0.0, 1.0, 2.0, 3.0]) == 1.5
    with pytest.raises(ValueError):
        beta_hat([])


def test_acceptance_rate():
    gs = [KernelStepRecord(0, None, True, 1.0, 1)] * 4
    assert acceptance_rate(gs) == 1.0
    mixed = gs + [KernelStepRecord(1, None, False, 0.2, 1)] * 4
    assert acceptance_rate(mixed) == 0.5
    with pytest.raises(ValueError):
        acceptance_rate([])


def test_chain_summary_validation():
    with pytest.raises(ValueError):
        ChainSummary(-1.0, 0.0, 0, 0)
    with pytest.raises(ValueError):
        ChainSummary(1.0, 0.0, 5, 3)
