"""Discretized phonon modes and the truncated bosonic Fock space.

Single-phonon momenta live on a spherical product grid (uniform radial
shells times a fixed direction set).  The many-body basis enumerates
occupation vectors with a total boson cap, graded so the vacuum comes
first, and every operator is assembled as a real sparse matrix in that
basis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

# Coupling normalization for the polaron interaction, 2^(1/4) / (2 pi).
LAMBDA0 = 2.0 ** 0.25 / (2.0 * np.pi)

# Default cap on the many-body dimension; dense oracles stay feasible below it.
DEFAULT_MAX_DIM = 200_000

_AXES = np.array(
    [
        [1.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, -1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0],
    ]
)

_DIAGONALS = np.array(
    [[sx, sy, sz] for sx in (1.0, -1.0) for sy in (1.0, -1.0) for sz in (1.0, -1.0)]
) / math.sqrt(3.0)


def direction_set(n_dirs: int) -> np.ndarray:
    """Unit direction vectors for the supported angular discretizations."""
    if n_dirs == 1:
        return _AXES[:1].copy()
    if n_dirs == 6:
        return _AXES.copy()
    if n_dirs == 14:
        return np.vstack([_AXES, _DIAGONALS])
    raise ValueError(f"unsupported n_dirs {n_dirs}; choose one of 1, 6, 14")


def coupling_amplitudes(
    alpha: float, lambda0: float, weights: np.ndarray, radii: np.ndarray
) -> np.ndarray:
    """Per-mode interaction amplitudes sqrt(alpha) * lambda0 * sqrt(w) / |k|."""
    return math.sqrt(alpha) * lambda0 * np.sqrt(weights) / radii


@dataclass(frozen=True)
class ModeGrid:
    """Sorted phonon modes with quadrature weights and coupling amplitudes.

    Modes are sorted ascending by radius |k|, so any radial cutoff selects a
    contiguous prefix of the mode list.  The radius is stored explicitly so
    the coupling formula and prefix selection stay floating-point exact.
    """

    k: np.ndarray          # (m, 3) momenta
    radius: np.ndarray     # (m,) mode radii |k_i|, ascending
    weight: np.ndarray     # (m,) k-space cell volumes
    g: np.ndarray          # (m,) coupling amplitudes
    alpha: float
    lambda0: float
    r_min: float
    lambda_max: float

    def __post_init__(self):
        k = np.atleast_2d(np.asarray(self.k, dtype=float))
        r = np.asarray(self.radius, dtype=float)
        w = np.asarray(self.weight, dtype=float)
        g = np.asarray(self.g, dtype=float)
        if k.shape != (w.size, 3) or g.shape != w.shape or r.shape != w.shape:
            raise ValueError("mode arrays have inconsistent shapes")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.r_min <= 0:
            raise ValueError("r_min must be positive; the 1/|k| coupling is singular at k=0")
        if np.any(w <= 0):
            raise ValueError("all quadrature weights must be strictly positive")
        norms = np.linalg.norm(k, axis=1)
        if np.any(np.abs(norms - r) > 1e-12 * (1.0 + r)):
            raise ValueError("stored radii are inconsistent with the momenta")
        if np.any(r < self.r_min - 1e-15) or np.any(r > self.lambda_max + 1e-15):
            raise ValueError("mode radii must lie inside [r_min, lambda_max]")
        if np.any(np.diff(r) < 0):
            raise ValueError("modes must be sorted ascending by |k|")
        expected = coupling_amplitudes(self.alpha, self.lambda0, w, r)
        if not np.array_equal(g, expected):
            raise ValueError("couplings do not match sqrt(alpha)*lambda0*sqrt(w)/|k|")
        for arr in (k, r, w, g):
            arr.setflags(write=False)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "radius", r)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "g", g)

    @property
    def n_modes(self) -> int:
        return self.weight.size

    def prefix_count(self, cutoff: float) -> int:
        """Number of modes with |k| <= cutoff (a prefix of the sorted grid)."""
        return int(np.searchsorted(self.radius, cutoff, side="right"))

    def shell_radii(self) -> np.ndarray:
        """Distinct mode radii, ascending."""
        return np.unique(self.radius)


def build_mode_grid(
    alpha: float,
    lambda_max: float,
    n_shells: int,
    n_dirs: int,
    r_min: float | None = None,
) -> ModeGrid:
    """Build the spherical product grid over the shell [r_min, lambda_max].

    Shell radii are midpoints of n_shells equal subintervals; each shell
    carries n_dirs directions with equal angular weight 4 pi / n_dirs, so the
    cell volume of a mode at radius r is r^2 * dr * (4 pi / n_dirs).
    """
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if lambda_max <= 0:
        raise ValueError("lambda_max must be positive")
    if n_shells < 1:
        raise ValueError("n_shells must be at least 1")
    if r_min is None:
        r_min = 0.1 * lambda_max
    if r_min <= 0:
        raise ValueError("r_min must be positive; the 1/|k| coupling is singular at k=0")
    if r_min >= lambda_max:
        raise ValueError("r_min must be smaller than lambda_max")

    dirs = direction_set(n_dirs)
    dr = (lambda_max - r_min) / n_shells
    radii = r_min + (np.arange(n_shells) + 0.5) * dr

    k = np.vstack([r * dirs for r in radii])
    r_per_mode = np.repeat(radii, n_dirs)
    weight = r_per_mode**2 * dr * (4.0 * np.pi / n_dirs)
    g = coupling_amplitudes(alpha, LAMBDA0, weight, r_per_mode)
    return ModeGrid(
        k=k,
        radius=r_per_mode,
        weight=weight,
        g=g,
        alpha=alpha,
        lambda0=LAMBDA0,
        r_min=r_min,
        lambda_max=lambda_max,
    )


def _occupations_with_sum(n_modes: int, total: int):
    """Yield occupation tuples of length n_modes summing to total, lex ascending."""
    if n_modes == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in _occupations_with_sum(n_modes - 1, total - head):
            yield (head,) + rest


class FockBasis:
    """Occupation-number basis with total boson number at most n_max.

    States are ordered graded lexicographically: primary key total boson
    number ascending, secondary key lexicographic on the occupation tuple.
    Index 0 is the vacuum.
    """

    def __init__(self, mode_count: int, n_max: int, states: np.ndarray):
        self.mode_count = int(mode_count)
        self.n_max = int(n_max)
        self.states = states
        self.states.setflags(write=False)
        self._index = {tuple(row): j for j, row in enumerate(states.tolist())}
        self._raising: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray]] = {}

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    def index_of(self, occupation) -> int:
        """Basis index of an occupation vector; KeyError if it is not in the basis."""
        return self._index[tuple(int(n) for n in occupation)]

    def state(self, j: int) -> np.ndarray:
        return self.states[j]

    def totals(self) -> np.ndarray:
        """Total boson number per state."""
        return self.states.sum(axis=1)

    def raising(self, i: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Source indices, target indices and amplitudes sqrt(n_i + 1) for a_i^dag.

        Transitions that would exceed the total cap are dropped, so the
        truncated creation operator annihilates the top sector.
        """
        if not 0 <= i < self.mode_count:
            raise IndexError(f"mode index {i} out of range for {self.mode_count} modes")
        cached = self._raising.get(i)
        if cached is not None:
            return cached
        src_list, dst_list, amp_list = [], [], []
        totals = self.totals()
        for j in range(self.dim):
            if totals[j] >= self.n_max:
                continue
            occ = self.states[j].copy()
            occ[i] += 1
            src_list.append(j)
            dst_list.append(self.index_of(occ))
            amp_list.append(math.sqrt(occ[i]))
        result = (
            np.array(src_list, dtype=np.int64),
            np.array(dst_list, dtype=np.int64),
            np.array(amp_list, dtype=float),
        )
        self._raising[i] = result
        return result


def enumerate_basis(
    mode_count: int, n_max: int, max_dim: int = DEFAULT_MAX_DIM
) -> FockBasis:
    """Enumerate all occupation vectors with total boson number <= n_max."""
    if mode_count < 1:
        raise ValueError("mode_count must be positive")
    if n_max < 0:
        raise ValueError("n_max must be nonnegative")
    dim = math.comb(mode_count + n_max, mode_count)
    if dim > max_dim:
        raise ValueError(
            f"basis dimension {dim} exceeds the configured cap {max_dim}; "
            "reduce mode_count or n_max"
        )
    rows = []
    for total in range(n_max + 1):
        rows.extend(_occupations_with_sum(mode_count, total))
    states = np.array(rows, dtype=np.int64).reshape(dim, mode_count)
    return FockBasis(mode_count, n_max, states)


@dataclass(frozen=True)
class SparseOperator:
    """Real sparse matrix in the occupation basis."""

    matrix: sp.csr_matrix
    symmetric: bool = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()

    def transpose(self) -> "SparseOperator":
        return SparseOperator(self.matrix.T.tocsr(), symmetric=self.symmetric)

    def entries(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Coordinate view (rows, cols, values) without duplicates."""
        coo = self.matrix.tocoo()
        return coo.row, coo.col, coo.data


def _as_csr(values, dim: int) -> sp.csr_matrix:
    mat = sp.csr_matrix(values, shape=(dim, dim))
    mat.sum_duplicates()
    return mat


def to_csr(operator) -> sp.csr_matrix:
    """Accept SparseOperator, scipy sparse or ndarray; return CSR."""
    if isinstance(operator, SparseOperator):
        return operator.matrix
    if sp.issparse(operator):
        return operator.tocsr()
    return sp.csr_matrix(np.asarray(operator))


def to_dense(operator) -> np.ndarray:
    """Accept SparseOperator, scipy sparse or ndarray; return a dense array."""
    if isinstance(operator, SparseOperator):
        return operator.matrix.toarray()
    if sp.issparse(operator):
        return operator.toarray()
    return np.asarray(operator, dtype=float)


def gershgorin_floor(matrix: sp.csr_matrix) -> float:
    """Lower bound on the spectrum from row sums of off-diagonal magnitudes."""
    diag = matrix.diagonal()
    radii = np.abs(matrix).sum(axis=1).A1 - np.abs(diag)
    return float(np.min(diag - radii))


def creation_op(basis: FockBasis, i: int) -> SparseOperator:
    """Truncated creation operator for mode i.

    Matrix element sqrt(n_i + 1) from state n to n + e_i whenever the total
    stays within the cap; the top sector maps to zero.
    """
    src, dst, amp = basis.raising(i)
    mat = _as_csr(sp.coo_matrix((amp, (dst, src)), shape=(basis.dim, basis.dim)), basis.dim)
    return SparseOperator(mat, symmetric=False)


def annihilation_op(basis: FockBasis, i: int) -> SparseOperator:
    """Annihilation operator for mode i, the transpose of creation_op."""
    return creation_op(basis, i).transpose()


def weighted_number_op(basis: FockBasis, weights) -> SparseOperator:
    """Diagonal second quantization of a per-mode multiplier.

    Entry sum_i n_i * weights[i] at each occupation state.  weights may be
    signed, which covers momentum components as well as frequencies.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (basis.mode_count,):
        raise ValueError(
            f"expected {basis.mode_count} per-mode weights, got shape {w.shape}"
        )
    diag = basis.states @ w
    return SparseOperator(_as_csr(sp.diags(diag), basis.dim), symmetric=True)


def number_op(basis: FockBasis) -> SparseOperator:
    """Total boson number operator."""
    return weighted_number_op(basis, np.ones(basis.mode_count))


def diagonal_contraction(basis: FockBasis, factors) -> SparseOperator:
    """Diagonal multiplicative contraction with entry prod_i c_i^(n_i).

    With 0/1 indicator factors this is the projection onto states occupying
    only the indicated modes.
    """
    c = np.asarray(factors, dtype=float)
    if c.shape != (basis.mode_count,):
        raise ValueError(
            f"expected {basis.mode_count} per-mode factors, got shape {c.shape}"
        )
    if np.any((c < 0) | (c > 1)):
        bad = int(np.argmax((c < 0) | (c > 1)))
        raise ValueError(f"contraction factor {c[bad]} at mode {bad} is outside [0, 1]")
    diag = np.prod(c[None, :] ** basis.states, axis=1)
    return SparseOperator(_as_csr(sp.diags(diag), basis.dim), symmetric=True)


def field_op(basis: FockBasis, f) -> SparseOperator:
    """Field operator sum_i f_i (a_i + a_i^dag); symmetric by construction."""
    fv = np.asarray(f, dtype=float)
    if fv.shape != (basis.mode_count,):
        raise ValueError(
            f"expected {basis.mode_count} per-mode amplitudes, got shape {fv.shape}"
        )
    acc = sp.csr_matrix((basis.dim, basis.dim))
    for i in np.flatnonzero(fv):
        acc = acc + fv[i] * creation_op(basis, i).matrix
    total = acc + acc.T
    return SparseOperator(_as_csr(total, basis.dim), symmetric=True)
