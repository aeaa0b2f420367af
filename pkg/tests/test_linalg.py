import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from classicality.errors import FormatError
from classicality.linalg import (
    constrained_lstsq,
    matrix_rank,
    null_space,
    orthonormal_basis,
    project_onto_span,
    rref,
)


def test_null_space_full_rank_is_empty():
    assert null_space(np.eye(2), tol=1e-9) == []


def test_null_space_proportional_rows():
    basis = null_space([[1.0, 1.0], [2.0, 2.0]])
    assert len(basis) == 1
    v = basis[0]
    assert abs(abs(v[0]) - abs(v[1])) < 1e-12
    assert abs(v @ np.array([1.0, 1.0])) < 1e-12


def test_null_space_pr_states_coefficients():
    # Four square-corner states stacked as rows; coefficient null space of
    # the transpose carries the single linear dependence (1, 1, -1, -1).
    states = np.array([[1, 1, 1], [1, 0, 0], [1, 1, 0], [1, 0, 1]], dtype=float)
    basis = null_space(states.T)
    assert len(basis) == 1
    v = basis[0] / basis[0][0]
    assert np.allclose(v, [1.0, 1.0, -1.0, -1.0], atol=1e-9)


def test_null_space_rejects_empty():
    with pytest.raises(FormatError):
        null_space(np.zeros((0, 3)))


@given(st.integers(2, 6), st.integers(1, 6), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_null_space_residual_property(cols, rows, seed):
    rng = np.random.default_rng(seed)
    m = rng.normal(size=(rows, cols))
    for v in null_space(m):
        assert np.max(np.abs(m @ v)) <= 10 * 1e-9 * np.max(np.abs(m))
        assert abs(np.linalg.norm(v) - 1.0) < 1e-12


def test_projection_examples():
    assert np.allclose(project_onto_span([[1, 0, 0]], [3, 4, 0]), [3, 0, 0])
    t = np.array([0.3, -1.2, 0.5])
    assert np.allclose(project_onto_span(np.eye(3), t), t)
    p = project_onto_span([np.array([1, 1, 0]) / np.sqrt(2)], [1, 0, 0])
    assert np.allclose(p, [0.5, 0.5, 0])


def test_projection_empty_span_is_zero():
    assert np.allclose(project_onto_span([], [1.0, 2.0]), [0.0, 0.0])


@given(st.integers(1, 5), st.integers(1, 4), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_projection_idempotent_and_pairings(dim, nvec, seed):
    rng = np.random.default_rng(seed)
    vecs = rng.normal(size=(nvec, dim))
    target = rng.normal(size=dim)
    p1 = project_onto_span(vecs, target)
    p2 = project_onto_span(vecs, p1)
    assert np.max(np.abs(p1 - p2)) < 1e-12
    for v in vecs:
        assert abs(v @ p1 - v @ target) < 1e-9


def test_rref_canonical_leading_ones():
    r = rref([[0.0, 2.0, 4.0], [1.0, 1.0, 1.0]])
    assert r.shape == (2, 3)
    for row in r:
        lead = np.flatnonzero(np.abs(row) > 1e-12)[0]
        assert row[lead] == pytest.approx(1.0)


def test_orthonormal_basis_rank():
    b = orthonormal_basis([[1, 0, 0], [2, 0, 0], [0, 1, 0]])
    assert b.shape == (2, 3)
    assert np.allclose(b @ b.T, np.eye(2), atol=1e-12)
    assert matrix_rank([[1, 2], [2, 4]]) == 1


def test_constrained_lstsq_matches_unconstrained_when_interior():
    rng = np.random.default_rng(7)
    a = rng.normal(size=(8, 3))
    x_true = np.array([0.5, -0.2, 0.3])
    b = a @ x_true
    x = constrained_lstsq(a, b, g=np.eye(3), h=np.full(3, -10.0))
    assert np.allclose(x, x_true, atol=1e-8)


def test_constrained_lstsq_active_bound():
    # min (x-2)^2 with x <= 1  ->  x = 1
    x = constrained_lstsq(np.array([[1.0]]), np.array([2.0]), g=[[-1.0]], h=[-1.0])
    assert x[0] == pytest.approx(1.0, abs=1e-9)


def test_constrained_lstsq_equality_elimination():
    # Fit two numbers to targets with a fixed sum.
    a = np.eye(2)
    b = np.array([0.8, 0.9])
    x = constrained_lstsq(a, b, e=[[1.0, 1.0]], f=[1.0])
    assert x[0] + x[1] == pytest.approx(1.0, abs=1e-12)
    assert x[0] == pytest.approx(0.45, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_constrained_lstsq_kkt_property(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(6, 3))
    b = rng.normal(size=6)
    g = np.vstack([np.eye(3), -np.eye(3)])
    h = np.concatenate([np.full(3, -1.0), np.full(3, -1.0)])  # box [-1, 1]
    x = constrained_lstsq(a, b, g=g, h=h)
    assert np.all(g @ x >= h - 1e-9)
    # No feasible descent direction: project the gradient on the box.
    grad = 2 * a.T @ (a @ x - b)
    for i in range(3):
        if x[i] > -1 + 1e-7 and x[i] < 1 - 1e-7:
            assert abs(grad[i]) < 1e-5
        elif x[i] <= -1 + 1e-7:
            assert grad[i] > -1e-5
        else:
            assert grad[i] < 1e-5
