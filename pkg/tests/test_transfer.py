import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from bieprecond import transfer

sizes = st.sampled_from([(16, 8), (32, 16), (64, 16), (128, 32), (64, 64)])


def _grid(n):
    return 2 * np.pi * np.arange(n) / n


def test_restrict_samples_low_modes():
    t = _grid(64)
    v = np.cos(3 * t) + 0.5 * np.sin(7 * t) + 2.0
    np.testing.assert_allclose(transfer.restrict(v, 32), v[::2], atol=1e-13)


def test_restrict_kills_high_mode():
    t = _grid(32)
    v = np.cos(15 * t)
    np.testing.assert_allclose(transfer.restrict(v, 16), 0.0, atol=1e-14)


def test_prolong_interpolates_trig_polynomial():
    m, n = 32, 128
    f = lambda t: np.sin(t) - np.cos(5 * t) + 0.25 * np.sin(12 * t)  # noqa: E731
    np.testing.assert_allclose(transfer.prolong(f(_grid(m)), n), f(_grid(n)), atol=1e-13)


def test_real_in_real_out():
    v = np.random.default_rng(1).standard_normal(64)
    assert np.isrealobj(transfer.restrict(v, 16))
    assert np.isrealobj(transfer.prolong(v, 256))


@pytest.mark.parametrize("n,m", [(64, 24), (64, 128), (96, 64)])
def test_bad_sizes(n, m):
    with pytest.raises(ValueError):
        transfer.restrict(np.ones(n), m)


@settings(max_examples=30, deadline=None)
@given(nm=sizes, seed=st.integers(0, 2 ** 31))
def test_restrict_after_prolong_is_identity(nm, seed):
    n, m = nm
    v = np.random.default_rng(seed).standard_normal(m)
    np.testing.assert_allclose(transfer.restrict(transfer.prolong(v, n), m), v, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(nm=sizes)
def test_prolong_restrict_is_orthogonal_projection(nm):
    n, m = nm
    r = transfer.restriction_matrix(n, m)
    p = transfer.prolongation_matrix(m, n)
    np.testing.assert_allclose(r @ p, np.eye(m), atol=1e-13)
    pr = p @ r
    np.testing.assert_allclose(pr @ pr, pr, atol=1e-13)
    np.testing.assert_allclose(pr, pr.T, atol=1e-13)


@settings(max_examples=20, deadline=None)
@given(v=arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)))
def test_restriction_composes(v):
    np.testing.assert_allclose(transfer.restrict(transfer.restrict(v, 32), 8),
                               transfer.restrict(v, 8), atol=1e-9)


@pytest.mark.parametrize("n,m", [(64, 32), (128, 32)])
def test_project_operator_matches_dense_product(n, m):
    a = np.random.default_rng(n).standard_normal((n, n))
    explicit = transfer.restriction_matrix(n, m) @ a @ transfer.prolongation_matrix(m, n)
    np.testing.assert_allclose(transfer.project_operator(a, m), explicit, atol=1e-12)


def test_axis_argument():
    a = np.random.default_rng(0).standard_normal((32, 5))
    np.testing.assert_allclose(transfer.restrict(a, 16, axis=0)[:, 2], transfer.restrict(a[:, 2], 16))
    np.testing.assert_allclose(transfer.prolong(a.T, 64, axis=1)[3], transfer.prolong(a[:, 3], 64))
