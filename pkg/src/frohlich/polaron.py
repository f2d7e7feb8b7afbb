"""Fixed-momentum polaron Hamiltonians on the truncated Fock space.

The Hamiltonian at total momentum P couples the electron recoil
(P - sum_i n_i k_i)^2 / 2 and the boson number to a linear interaction
-sum g_i (a_i + a_i^dag) restricted to modes inside the radial cutoff.
Its off-diagonal entries are nonpositive, so the heat semigroup has
nonnegative entries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fock import (
    FockBasis,
    ModeGrid,
    SparseOperator,
    creation_op,
    gershgorin_floor,
    weighted_number_op,
)

# Dense path for small minimum-eigenvalue problems inside this module.
_DENSE_EIG_MAX = 2000


def _check_cutoff(grid: ModeGrid, cutoff: float) -> int:
    if cutoff > grid.lambda_max + 1e-15:
        raise ValueError(
            f"cutoff {cutoff} exceeds the grid support lambda_max={grid.lambda_max}"
        )
    return grid.prefix_count(cutoff)


def snap_cutoff(grid: ModeGrid, cutoff: float) -> float:
    """Largest realized shell radius <= cutoff (0.0 when no mode is inside)."""
    c = _check_cutoff(grid, cutoff)
    return float(grid.radius[c - 1]) if c > 0 else 0.0


def _diagonal_part(
    grid: ModeGrid, basis: FockBasis, P, cutoff_index: int
) -> np.ndarray:
    """Diagonal 0.5 |P - sum n_i k_i|^2 + sum n_i over the first cutoff_index modes.

    The mode sums accumulate left to right, one mode at a time, so the
    diagonal for any cutoff is a bitwise prefix of the full one: diagonals
    of different cutoffs are identical floats wherever the extra modes are
    unoccupied, and the full diagonal never depends on the cutoff at all.
    """
    P = np.asarray(P, dtype=float).reshape(3)
    momentum = np.zeros((basis.dim, 3))
    count = np.zeros(basis.dim)
    for i in range(cutoff_index):
        occ = basis.states[:, i].astype(float)
        momentum += occ[:, None] * grid.k[i]
        count += occ
    recoil = P[None, :] - momentum
    return 0.5 * np.einsum("ij,ij->i", recoil, recoil) + count


def _interaction(grid: ModeGrid, basis: FockBasis, cutoff_index: int) -> sp.csr_matrix:
    acc = sp.csr_matrix((basis.dim, basis.dim))
    for i in range(cutoff_index):
        gi = grid.g[i]
        if gi == 0.0:
            continue
        c = creation_op(basis, i).matrix
        acc = acc + gi * (c + c.T)
    return acc


def assemble_hamiltonian(
    grid: ModeGrid, basis: FockBasis, P, cutoff: float
) -> SparseOperator:
    """Polaron Hamiltonian at momentum P with interaction cut at |k| <= cutoff.

    Kinetic and number terms run over the whole grid; only the interaction
    is restricted, so growing the cutoff lowers the operator entrywise.
    """
    c = _check_cutoff(grid, cutoff)
    diag = _diagonal_part(grid, basis, P, grid.n_modes)
    mat = sp.diags(diag).tocsr() - _interaction(grid, basis, c)
    mat.sum_duplicates()
    return SparseOperator(mat.tocsr(), symmetric=True)


def assemble_local_hamiltonian(
    grid: ModeGrid, basis: FockBasis, P, cutoff: float
) -> SparseOperator:
    """Variant with kinetic and number sums restricted to modes inside the cutoff.

    It agrees with the full Hamiltonian on states that occupy only inside
    modes, which underlies the projected resolvent identity.
    """
    c = _check_cutoff(grid, cutoff)
    diag = _diagonal_part(grid, basis, P, c)
    mat = sp.diags(diag).tocsr() - _interaction(grid, basis, c)
    mat.sum_duplicates()
    return SparseOperator(mat.tocsr(), symmetric=True)


def cutoff_projection(grid: ModeGrid, basis: FockBasis, cutoff: float) -> SparseOperator:
    """0/1 diagonal projection onto states with no bosons outside the cutoff."""
    c = _check_cutoff(grid, cutoff)
    outside = basis.states[:, c:]
    diag = (outside.sum(axis=1) == 0).astype(float)
    return SparseOperator(sp.diags(diag).tocsr(), symmetric=True)


@dataclass(frozen=True)
class PolaronModel:
    """A grid, basis, momentum and cutoff bundled for the check suites."""

    grid: ModeGrid
    basis: FockBasis
    P: np.ndarray
    cutoff: float
    cutoff_index: int

    @classmethod
    def make(cls, grid: ModeGrid, basis: FockBasis, P, cutoff: float) -> "PolaronModel":
        c = _check_cutoff(grid, cutoff)
        return cls(
            grid=grid,
            basis=basis,
            P=np.asarray(P, dtype=float).reshape(3),
            cutoff=float(cutoff),
            cutoff_index=c,
        )

    def hamiltonian(self) -> SparseOperator:
        return assemble_hamiltonian(self.grid, self.basis, self.P, self.cutoff)

    def local_hamiltonian(self) -> SparseOperator:
        return assemble_local_hamiltonian(self.grid, self.basis, self.P, self.cutoff)

    def projection(self) -> SparseOperator:
        return cutoff_projection(self.grid, self.basis, self.cutoff)


@dataclass(frozen=True)
class LiebYamazakiBound:
    """Cutoff-uniform lower bound obtained by splitting the interaction.

    The bound is valid when alpha * lambda0^2 * (tail sum of w/|k|^4 over
    modes with |k| >= split_radius) stays below 1/8; it is diagnostic and
    never blocks assembly.
    """

    valid: bool
    lower_bound: float
    condition_value: float   # alpha * lambda0^2 * tail_sum, compared to 1/8
    tail_sum: float          # sum of w/|k|^4 over modes with |k| >= split_radius
    head_sum: float          # sum of w/|k|^2 over modes with |k| <= split_radius
    split_radius: float


def lieb_yamazaki_bound(
    grid: ModeGrid, alpha: float, split_radius: float
) -> LiebYamazakiBound:
    """Evaluate the interaction-splitting lower bound at the given split radius."""
    r = grid.radius
    w = grid.weight
    tail = r >= split_radius
    head = r <= split_radius
    tail_sum = float(np.sum(w[tail] / r[tail] ** 4))
    head_sum = float(np.sum(w[head] / r[head] ** 2))
    condition_value = alpha * grid.lambda0**2 * tail_sum
    lower = -alpha * grid.lambda0**2 * head_sum - 0.5
    return LiebYamazakiBound(
        valid=bool(condition_value < 0.125),
        lower_bound=lower,
        condition_value=condition_value,
        tail_sum=tail_sum,
        head_sum=head_sum,
        split_radius=float(split_radius),
    )


def _min_eigenvalue(mat: sp.csr_matrix) -> float:
    dim = mat.shape[0]
    if dim <= _DENSE_EIG_MAX:
        return float(np.linalg.eigvalsh(mat.toarray())[0])
    sigma = gershgorin_floor(mat) - 1.0
    vals = spla.eigsh(
        mat, k=1, sigma=sigma, which="LM", v0=np.ones(dim), tol=0,
        return_eigenvectors=False,
    )
    return float(vals[0])


def form_bound_margins(basis: FockBasis, omega, f) -> tuple[float, float]:
    """Minimum eigenvalues of the two quadratic form bounds.

    Returns (margin_crea, margin_vhove) where
      margin_crea  = min eig of  |omega^{-1/2} f|^2 (dGamma(omega) + 1) - a(f)^dag a(f),
      margin_vhove = min eig of  dGamma(omega) + phi(f)  plus  sum f_i^2/omega_i.
    Both are nonnegative up to roundoff on the truncated space.
    """
    w = np.asarray(omega, dtype=float)
    fv = np.asarray(f, dtype=float)
    if w.shape != (basis.mode_count,) or fv.shape != (basis.mode_count,):
        raise ValueError("omega and f must have one entry per mode")
    if np.any(w <= 0):
        bad = int(np.argmax(w <= 0))
        raise ValueError(f"omega must be strictly positive; entry {bad} is {w[bad]}")

    norm_sq = float(np.sum(fv**2 / w))
    dgamma = weighted_number_op(basis, w).matrix
    eye = sp.identity(basis.dim, format="csr")

    cf = sp.csr_matrix((basis.dim, basis.dim))
    for i in np.flatnonzero(fv):
        cf = cf + fv[i] * creation_op(basis, i).matrix

    crea_matrix = norm_sq * (dgamma + eye) - cf @ cf.T
    vhove_matrix = dgamma + cf + cf.T + norm_sq * eye
    return _min_eigenvalue(crea_matrix.tocsr()), _min_eigenvalue(vhove_matrix.tocsr())
