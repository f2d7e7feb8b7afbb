import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from frohlich.fock import (
    LAMBDA0,
    annihilation_op,
    build_mode_grid,
    coupling_amplitudes,
    creation_op,
    diagonal_contraction,
    direction_set,
    enumerate_basis,
    field_op,
    number_op,
    weighted_number_op,
)

EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# mode grid


def test_zero_alpha_kills_all_couplings():
    grid = build_mode_grid(alpha=0.0, lambda_max=2.0, n_shells=3, n_dirs=6, r_min=0.4)
    assert np.all(grid.g == 0.0)


def test_reference_grid_weights_and_couplings():
    # two shells on [0.5, 2.0]: midpoints 0.875 and 1.625, dr = 0.75
    grid = build_mode_grid(alpha=1.0, lambda_max=2.0, n_shells=2, n_dirs=6, r_min=0.5)
    assert grid.n_modes == 12
    dr = 0.75
    w_inner = 0.875**2 * dr * (4.0 * np.pi / 6.0)
    assert grid.weight[0] == pytest.approx(w_inner, rel=0, abs=0)
    assert grid.g[0] == pytest.approx(LAMBDA0 * math.sqrt(w_inner) / 0.875, rel=1e-15)
    assert np.all(grid.radius[:6] == 0.875)
    assert np.all(grid.radius[6:] == 1.625)


@pytest.mark.parametrize("n_dirs", [1, 6, 14])
def test_direction_sets_are_unit_vectors(n_dirs):
    dirs = direction_set(n_dirs)
    assert dirs.shape == (n_dirs, 3)
    assert np.allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-15)


def test_total_weight_converges_to_shell_volume():
    # Riemann-sum oracle on the radial integral of 4 pi r^2
    r_min, lam = 0.5, 2.0
    volume = 4.0 * np.pi / 3.0 * (lam**3 - r_min**3)
    errors = []
    for n_shells in (5, 20, 80):
        grid = build_mode_grid(1.0, lam, n_shells, 6, r_min=r_min)
        errors.append(abs(grid.weight.sum() - volume) / volume)
    assert errors[2] < errors[1] < errors[0]
    assert errors[2] < 1e-4


def test_grid_is_sorted_with_positive_weights():
    grid = build_mode_grid(0.7, 3.0, 4, 14, r_min=0.3)
    assert np.all(np.diff(grid.radius) >= 0)
    assert np.all(grid.weight > 0)
    assert grid.prefix_count(grid.radius[0]) == 14
    assert grid.prefix_count(grid.lambda_max) == grid.n_modes
    assert grid.prefix_count(0.0) == 0


def test_default_inner_cutoff_is_tenth_of_outer():
    grid = build_mode_grid(1.0, 5.0, 2, 1)
    assert grid.r_min == pytest.approx(0.5)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(alpha=1.0, lambda_max=2.0, n_shells=2, n_dirs=6, r_min=0.0),
        dict(alpha=1.0, lambda_max=2.0, n_shells=2, n_dirs=6, r_min=-0.1),
        dict(alpha=1.0, lambda_max=2.0, n_shells=2, n_dirs=6, r_min=2.5),
        dict(alpha=1.0, lambda_max=2.0, n_shells=2, n_dirs=5, r_min=0.5),
        dict(alpha=1.0, lambda_max=2.0, n_shells=0, n_dirs=6, r_min=0.5),
        dict(alpha=-1.0, lambda_max=2.0, n_shells=2, n_dirs=6, r_min=0.5),
    ],
)
def test_grid_rejects_bad_parameters(kwargs):
    with pytest.raises(ValueError):
        build_mode_grid(**kwargs)


# ---------------------------------------------------------------------------
# basis enumeration


def test_vacuum_only_basis():
    basis = enumerate_basis(1, 0)
    assert basis.dim == 1
    assert basis.states.tolist() == [[0]]


def test_stars_and_bars_dimension():
    basis = enumerate_basis(2, 2)
    assert basis.dim == math.comb(4, 2) == 6


def test_single_boson_states():
    basis = enumerate_basis(3, 1)
    assert basis.dim == 4
    assert sorted(map(tuple, basis.states.tolist())) == sorted(
        [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    )


@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 4), n_max=st.integers(0, 4))
def test_basis_order_and_index_bijection(m, n_max):
    basis = enumerate_basis(m, n_max)
    assert basis.dim == math.comb(m + n_max, m)
    totals = basis.totals()
    assert totals[0] == 0
    assert np.all(np.diff(totals) >= 0)
    rows = [tuple(r) for r in basis.states.tolist()]
    for total in range(n_max + 1):
        sector = [r for r in rows if sum(r) == total]
        assert sector == sorted(sector)
    for j in range(basis.dim):
        assert basis.index_of(basis.states[j]) == j


def test_dimension_cap_names_offender():
    with pytest.raises(ValueError, match="184756"):
        enumerate_basis(10, 10, max_dim=1000)


# ---------------------------------------------------------------------------
# ladder operators


def test_creation_from_vacuum_has_unit_amplitude():
    basis = enumerate_basis(2, 2)
    c = creation_op(basis, 1)
    col = c.matrix[:, basis.index_of((0, 0))].toarray().ravel()
    target = basis.index_of((0, 1))
    assert col[target] == 1.0
    assert np.sum(col != 0) == 1


def test_creation_amplitude_is_sqrt_n_plus_one():
    basis = enumerate_basis(1, 3)
    c = creation_op(basis, 0)
    assert c.matrix[basis.index_of((2,)), basis.index_of((1,))] == math.sqrt(2)
    assert c.matrix[basis.index_of((3,)), basis.index_of((2,))] == math.sqrt(3)


def test_creation_annihilates_top_sector():
    basis = enumerate_basis(2, 2)
    c = creation_op(basis, 0)
    for occ in [(2, 0), (1, 1), (0, 2)]:
        assert c.matrix[:, basis.index_of(occ)].count_nonzero() == 0


def test_creation_entries_are_nonnegative():
    basis = enumerate_basis(3, 2)
    for i in range(3):
        assert np.all(creation_op(basis, i).matrix.data >= 0)


def test_annihilation_is_transpose_and_kills_vacuum():
    basis = enumerate_basis(1, 2)
    a = annihilation_op(basis, 0)
    c = creation_op(basis, 0)
    assert (a.matrix - c.matrix.T).count_nonzero() == 0
    assert a.matrix[:, basis.index_of((0,))].count_nonzero() == 0
    assert a.matrix[basis.index_of((1,)), basis.index_of((2,))] == math.sqrt(2)


def test_mode_index_out_of_range():
    basis = enumerate_basis(2, 1)
    with pytest.raises(IndexError):
        creation_op(basis, 2)
    with pytest.raises(IndexError):
        annihilation_op(basis, -1)


def test_ccr_on_interior_sector():
    # [a_i, a_j^dag] = delta_ij on states kept away from the total cap
    basis = enumerate_basis(3, 3)
    interior = np.flatnonzero(basis.totals() <= basis.n_max - 1)
    eye = np.eye(basis.dim)
    for i in range(3):
        a_i = annihilation_op(basis, i).matrix
        for j in range(3):
            c_j = creation_op(basis, j).matrix
            comm = (a_i @ c_j - c_j @ a_i).toarray()
            block = comm[np.ix_(interior, interior)]
            expected = eye[np.ix_(interior, interior)] if i == j else 0.0
            off = block - expected
            if i != j:
                assert np.array_equal(off, np.zeros_like(block))
            else:
                # products of sqrt amplitudes reproduce integers only up to ulps
                assert np.max(np.abs(off)) <= 4 * EPS * (basis.n_max + 1)
                assert np.array_equal(block - np.diag(np.diag(block)),
                                      np.zeros_like(block))


# ---------------------------------------------------------------------------
# diagonal second quantization


def test_weighted_number_vacuum_entry_zero():
    basis = enumerate_basis(2, 2)
    op = weighted_number_op(basis, [0.7, 1.3])
    assert op.matrix[0, 0] == 0.0


def test_unit_weights_give_total_number():
    basis = enumerate_basis(2, 3)
    op = number_op(basis)
    assert np.array_equal(op.matrix.diagonal(), basis.totals().astype(float))


def test_weighted_number_squared_frequency():
    basis = enumerate_basis(1, 2)
    k2 = 1.7**2
    op = weighted_number_op(basis, [k2])
    assert op.matrix[basis.index_of((2,)), basis.index_of((2,))] == pytest.approx(2 * k2)


def test_weighted_number_rejects_length_mismatch():
    basis = enumerate_basis(2, 1)
    with pytest.raises(ValueError):
        weighted_number_op(basis, [1.0])


def test_contraction_of_ones_is_identity():
    basis = enumerate_basis(3, 2)
    op = diagonal_contraction(basis, np.ones(3))
    assert np.array_equal(op.toarray(), np.eye(basis.dim))


def test_contraction_exponential_matches_number_semigroup():
    basis = enumerate_basis(2, 3)
    t = 0.37
    op = diagonal_contraction(basis, np.full(2, math.exp(-t)))
    expected = np.exp(-t * basis.totals())
    assert np.allclose(op.matrix.diagonal(), expected, rtol=1e-13, atol=0)


def test_indicator_contraction_is_projection():
    basis = enumerate_basis(3, 2)
    q = diagonal_contraction(basis, np.array([1.0, 1.0, 0.0]))
    qd = q.toarray()
    assert set(np.unique(qd)) <= {0.0, 1.0}
    assert np.array_equal(qd @ qd, qd)


def test_contraction_multiplicativity():
    basis = enumerate_basis(2, 3)
    # dyadic factors multiply exactly; generic ones only up to ulps
    c1 = np.array([0.5, 1.0])
    c2 = np.array([0.25, 0.5])
    lhs = diagonal_contraction(basis, c1).matrix.diagonal() * diagonal_contraction(
        basis, c2
    ).matrix.diagonal()
    rhs = diagonal_contraction(basis, c1 * c2).matrix.diagonal()
    assert np.array_equal(lhs, rhs)
    rng = np.random.default_rng(7)
    c3, c4 = rng.uniform(0, 1, (2, 2))
    lhs = diagonal_contraction(basis, c3).matrix.diagonal() * diagonal_contraction(
        basis, c4
    ).matrix.diagonal()
    rhs = diagonal_contraction(basis, c3 * c4).matrix.diagonal()
    assert np.allclose(lhs, rhs, rtol=1e-14, atol=0)


def test_contraction_rejects_factor_outside_unit_interval():
    basis = enumerate_basis(2, 1)
    with pytest.raises(ValueError, match="mode 1"):
        diagonal_contraction(basis, np.array([0.5, 1.2]))


# ---------------------------------------------------------------------------
# field operator


def test_zero_field_is_zero_matrix():
    basis = enumerate_basis(2, 2)
    op = field_op(basis, np.zeros(2))
    assert op.matrix.count_nonzero() == 0


def test_single_mode_field_matrix():
    basis = enumerate_basis(1, 1)
    f = 0.8
    op = field_op(basis, [f]).toarray()
    assert np.array_equal(op, np.array([[0.0, f], [f, 0.0]]))


def test_nonnegative_field_gives_nonnegative_entries():
    basis = enumerate_basis(3, 2)
    op = field_op(basis, [0.3, 0.0, 1.1])
    assert np.all(op.matrix.data >= 0)


def test_field_operator_is_exactly_symmetric():
    basis = enumerate_basis(2, 3)
    op = field_op(basis, [0.4, -0.9])
    assert op.symmetric
    assert (op.matrix - op.matrix.T).count_nonzero() == 0
