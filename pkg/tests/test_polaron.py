import math

import numpy as np
import pytest

from frohlich.cone import op_order_geq
from frohlich.fock import LAMBDA0, build_mode_grid, enumerate_basis
from frohlich.polaron import (
    PolaronModel,
    assemble_hamiltonian,
    assemble_local_hamiltonian,
    cutoff_projection,
    form_bound_margins,
    lieb_yamazaki_bound,
    snap_cutoff,
)

from conftest import dense_creation_oracle, make_single_mode_grid


# ---------------------------------------------------------------------------
# assembly


def test_two_by_two_hand_assembly(single_mode_grid):
    # one mode k = (1,0,0), g = 0.5, n_max = 1, P = 0:
    # vacuum diagonal 0, one-boson diagonal 0.5*1 + 1 = 1.5, off-diagonal -g
    basis = enumerate_basis(1, 1)
    h = assemble_hamiltonian(single_mode_grid, basis, np.zeros(3), 2.0).toarray()
    g = single_mode_grid.g[0]
    assert g == pytest.approx(0.5, abs=1e-15)
    assert np.array_equal(h, np.array([[0.0, -g], [-g, 1.5]]))


def test_alpha_zero_is_diagonal_with_zero_ground():
    grid = build_mode_grid(0.0, 2.0, 2, 6, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 2)
    h = assemble_hamiltonian(grid, basis, np.zeros(3), 2.0)
    off = h.matrix - np.diag(h.matrix.diagonal().copy())
    assert np.count_nonzero(off) == 0
    assert h.matrix.diagonal().min() == 0.0


def test_offdiagonals_match_ladder_oracle():
    grid = build_mode_grid(1.0, 2.0, 2, 1, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 2)
    P = np.array([0.2, -0.1, 0.4])
    cut = grid.radius[0]  # inner shell only
    h = assemble_hamiltonian(grid, basis, P, cut).toarray()

    inside = grid.radius <= cut
    expected_off = np.zeros_like(h)
    for i in range(grid.n_modes):
        if inside[i]:
            ladder = dense_creation_oracle(basis, i)
            expected_off -= grid.g[i] * (ladder + ladder.T)
    assert np.allclose(h - np.diag(np.diag(h)), expected_off, atol=1e-15, rtol=0)

    for j, state in enumerate(basis.states.tolist()):
        total_k = sum(n * grid.k[i] for i, n in enumerate(state))
        expected = 0.5 * float(np.dot(P - total_k, P - total_k)) + sum(state)
        assert h[j, j] == pytest.approx(expected, rel=1e-14)


def test_metzler_structure():
    grid = build_mode_grid(1.3, 2.5, 3, 6, r_min=0.4)
    basis = enumerate_basis(grid.n_modes, 2)
    h = assemble_hamiltonian(grid, basis, np.array([0.3, 0.0, -0.2]), 2.5)
    dense = h.toarray()
    assert np.all(np.diag(dense) >= 0)
    off = dense - np.diag(np.diag(dense))
    assert np.all(off <= 0)


def test_assembly_rejects_cutoff_beyond_grid():
    grid = build_mode_grid(1.0, 2.0, 2, 1, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 1)
    with pytest.raises(ValueError):
        assemble_hamiltonian(grid, basis, np.zeros(3), 2.5)


def test_interaction_monotonicity_is_exact():
    grid = build_mode_grid(1.0, 2.0, 3, 6, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 2)
    shells = grid.shell_radii()
    hams = [assemble_hamiltonian(grid, basis, np.zeros(3), s) for s in shells]
    for small, large in zip(hams, hams[1:]):
        report = op_order_geq(small, large, tol=0.0)
        assert report.holds and report.margin == 0.0


# ---------------------------------------------------------------------------
# local Hamiltonian and projection


def test_local_equals_full_at_outer_cutoff():
    grid = build_mode_grid(1.0, 2.0, 2, 6, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 2)
    h = assemble_hamiltonian(grid, basis, np.zeros(3), grid.lambda_max)
    k = assemble_local_hamiltonian(grid, basis, np.zeros(3), grid.lambda_max)
    assert (h.matrix - k.matrix).count_nonzero() == 0


def test_vacuum_diagonal_is_half_p_squared_in_both():
    grid = build_mode_grid(1.0, 2.0, 2, 6, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 1)
    P = np.array([0.4, -0.3, 0.1])
    cut = grid.radius[0]
    h = assemble_hamiltonian(grid, basis, P, cut)
    k = assemble_local_hamiltonian(grid, basis, P, cut)
    expected = 0.5 * float(P @ P)
    assert h.matrix[0, 0] == pytest.approx(expected, rel=1e-15)
    assert k.matrix[0, 0] == h.matrix[0, 0]


def test_full_and_local_agree_exactly_on_projected_block():
    grid = build_mode_grid(1.0, 2.0, 2, 6, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 2)
    P = np.array([0.1, 0.2, -0.3])
    cut = grid.radius[0]
    h = assemble_hamiltonian(grid, basis, P, cut)
    k = assemble_local_hamiltonian(grid, basis, P, cut)
    q = cutoff_projection(grid, basis, cut)

    intertwine = h.matrix @ q.matrix - q.matrix @ k.matrix
    assert intertwine.count_nonzero() == 0

    idx = np.flatnonzero(q.matrix.diagonal())
    hd = h.toarray()
    kd = k.toarray()
    assert np.array_equal(hd[np.ix_(idx, idx)], kd[np.ix_(idx, idx)])


def test_cutoff_projection_properties():
    grid = build_mode_grid(1.0, 2.0, 2, 6, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 2)
    q_full = cutoff_projection(grid, basis, grid.lambda_max)
    assert np.array_equal(q_full.toarray(), np.eye(basis.dim))

    q = cutoff_projection(grid, basis, grid.radius[0])
    qd = q.toarray()
    assert qd[0, 0] == 1.0  # vacuum always kept
    assert np.array_equal(qd @ qd, qd)
    assert np.all(qd >= 0)
    assert np.all(np.eye(basis.dim) - qd >= 0)


def test_model_bundle_is_consistent():
    grid = build_mode_grid(1.0, 2.0, 4, 1, r_min=0.5)
    basis = enumerate_basis(grid.n_modes, 1)
    cut = 0.5 * (grid.radius[1] + grid.radius[2])
    model = PolaronModel.make(grid, basis, np.zeros(3), cut)
    inside = grid.radius <= model.cutoff
    assert model.cutoff_index == int(inside.sum())
    assert np.all(inside[: model.cutoff_index])
    assert not np.any(inside[model.cutoff_index :])
    assert snap_cutoff(grid, cut) == grid.radius[1]
    assert snap_cutoff(grid, grid.r_min / 2) == 0.0
    assert (model.hamiltonian().matrix != assemble_hamiltonian(
        grid, basis, np.zeros(3), cut
    ).matrix).count_nonzero() == 0


# ---------------------------------------------------------------------------
# interaction-splitting lower bound


def test_lower_bound_with_zero_alpha():
    grid = build_mode_grid(0.0, 2.0, 3, 6, r_min=0.5)
    result = lieb_yamazaki_bound(grid, 0.0, 1.0)
    assert result.valid
    assert result.lower_bound == -0.5


def test_coupling_normalization_square():
    assert LAMBDA0**2 == pytest.approx(math.sqrt(2.0) / (4.0 * math.pi**2), rel=1e-15)


def test_bound_sums_match_analytic_radial_integrals():
    # fine grid against the closed-form integrals of 1/r^2 over the two ranges
    r_min, lam = 0.5, 10.0
    grid = build_mode_grid(1.0, lam, 400, 6, r_min=r_min)
    split = 16.0 * math.sqrt(2.0) / math.pi  # makes alpha*l0^2*4pi/split = 1/16
    result = lieb_yamazaki_bound(grid, 1.0, split)

    tail_analytic = 4.0 * math.pi * (1.0 / split - 1.0 / lam)
    head_analytic = 4.0 * math.pi * (split - r_min)
    assert result.tail_sum == pytest.approx(tail_analytic, rel=0.05)
    assert result.head_sum == pytest.approx(head_analytic, rel=0.05)
    assert result.valid  # full-tail value would be 1/16 < 1/8 already
    assert result.condition_value < 1.0 / 16.0
    expected_bound = -LAMBDA0**2 * head_analytic - 0.5
    assert result.lower_bound == pytest.approx(expected_bound, rel=0.05)


def test_split_beyond_grid_is_trivially_valid():
    grid = build_mode_grid(1.0, 2.0, 3, 6, r_min=0.5)
    result = lieb_yamazaki_bound(grid, 1.0, 5.0)
    assert result.valid and result.tail_sum == 0.0
    assert result.condition_value == 0.0


# ---------------------------------------------------------------------------
# quadratic form bounds


def test_zero_field_margins_vanish():
    basis = enumerate_basis(2, 2)
    crea, vhove = form_bound_margins(basis, np.ones(2), np.zeros(2))
    assert crea == pytest.approx(0.0, abs=1e-14)
    assert vhove == pytest.approx(0.0, abs=1e-14)


def test_displaced_oscillator_ground_energy():
    # single mode, omega = 1: ground of dGamma(1) + phi(f) is exactly -f^2
    basis = enumerate_basis(1, 40)
    f = 1.3
    crea, vhove = form_bound_margins(basis, np.array([1.0]), np.array([f]))
    assert 0.0 <= vhove < 1e-3
    assert crea >= -1e-9

    ladder = dense_creation_oracle(basis, 0)
    h = np.diag(np.arange(41).astype(float)) + f * (ladder + ladder.T)
    ground = np.linalg.eigvalsh(h)[0]
    assert ground == pytest.approx(-(f**2), abs=1e-3)


def test_margins_match_dense_oracle_on_random_instances():
    rng = np.random.default_rng(101)
    basis = enumerate_basis(3, 4)
    eye = np.eye(basis.dim)
    for _ in range(10):
        omega = rng.uniform(0.3, 2.0, 3)
        f = rng.uniform(-1.0, 1.0, 3)
        crea, vhove = form_bound_margins(basis, omega, f)
        assert crea >= -1e-9 and vhove >= -1e-9

        cf = sum(f[i] * dense_creation_oracle(basis, i) for i in range(3))
        dg = sum(
            omega[i] * np.diag(basis.states[:, i].astype(float)) for i in range(3)
        )
        norm_sq = float(np.sum(f**2 / omega))
        crea_oracle = np.linalg.eigvalsh(norm_sq * (dg + eye) - cf @ cf.T)[0]
        vhove_oracle = np.linalg.eigvalsh(dg + cf + cf.T + norm_sq * eye)[0]
        assert crea == pytest.approx(crea_oracle, abs=1e-10)
        assert vhove == pytest.approx(vhove_oracle, abs=1e-10)


def test_form_bounds_reject_bad_omega():
    basis = enumerate_basis(2, 2)
    with pytest.raises(ValueError, match="entry 1"):
        form_bound_margins(basis, np.array([1.0, 0.0]), np.ones(2))
    with pytest.raises(ValueError):
        form_bound_margins(basis, np.ones(3), np.ones(2))
