"""Order calculus on the nonnegative orthant of the occupation basis.

Vectors belong to the cone when every coefficient is nonnegative; an
operator dominates another when their difference maps the cone into
itself, which for the orthant is exactly entrywise nonnegativity.  That
equivalence holds for the orthant only and is itself property-tested
against the definitional check on basis vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fock import to_dense

# Relative part of the default comparison tolerance.
TOL_SCALE = 1e-12


def default_tolerance(values) -> float:
    """Absolute-plus-relative guard: TOL_SCALE * (1 + max |entry|)."""
    arr = np.asarray(values)
    peak = float(np.max(np.abs(arr))) if arr.size else 0.0
    return TOL_SCALE * (1.0 + peak)


def in_cone(v, tol: float | None = None) -> bool:
    """True when all real parts are >= -tol and imaginary parts vanish within tol."""
    arr = np.asarray(v)
    if tol is None:
        tol = default_tolerance(arr)
    if np.iscomplexobj(arr):
        if np.max(np.abs(arr.imag), initial=0.0) > tol:
            return False
        arr = arr.real
    return bool(np.min(arr, initial=0.0) >= -tol)


def strictly_positive(v, tol: float | None = None) -> bool:
    """True when every real part exceeds tol and imaginary parts vanish within tol."""
    arr = np.asarray(v)
    if arr.size == 0:
        return False
    if tol is None:
        tol = default_tolerance(arr)
    if np.iscomplexobj(arr):
        if np.max(np.abs(arr.imag)) > tol:
            return False
        arr = arr.real
    return bool(np.min(arr) > tol)


def jordan_decompose(v):
    """Split v into (re_plus, re_minus, im_plus, im_minus), all in the cone.

    The positive and negative parts have disjoint support, so orthogonality
    and the recomposition v = re_plus - re_minus + i*(im_plus - im_minus)
    hold exactly in floating point.
    """
    arr = np.asarray(v)
    re = arr.real.astype(float, copy=True)
    im = arr.imag.astype(float, copy=True) if np.iscomplexobj(arr) else np.zeros_like(re)
    zero = np.zeros_like(re)
    return (
        np.maximum(re, zero),
        np.maximum(-re, zero),
        np.maximum(im, zero),
        np.maximum(-im, zero),
    )


@dataclass(frozen=True)
class OrderReport:
    """Outcome of an entrywise order check."""

    holds: bool
    margin: float                         # minimum entry of the tested matrix
    worst_entry: tuple[int, int, float]   # most violating (row, col, value)
    tol: float


def _entry_extremum(mat: np.ndarray) -> tuple[float, tuple[int, int, float]]:
    flat = int(np.argmin(mat))
    row, col = divmod(flat, mat.shape[1])
    value = float(mat[row, col])
    return value, (row, col, value)


def op_order_geq(a, b, tol: float | None = None) -> OrderReport:
    """Check A >= B in the cone order, i.e. A - B entrywise >= -tol."""
    aa = to_dense(a)
    bb = to_dense(b)
    if aa.shape != bb.shape:
        raise ValueError(f"dimension mismatch: {aa.shape} vs {bb.shape}")
    diff = aa - bb
    if tol is None:
        tol = default_tolerance(diff)
    margin, worst = _entry_extremum(diff)
    return OrderReport(holds=margin >= -tol, margin=margin, worst_entry=worst, tol=tol)


def positivity_preserving(a, tol: float | None = None) -> OrderReport:
    """Check that A maps the cone into itself: all entries >= -tol."""
    mat = to_dense(a)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("positivity checks need a square matrix")
    if tol is None:
        tol = default_tolerance(mat)
    margin, worst = _entry_extremum(mat)
    return OrderReport(holds=margin >= -tol, margin=margin, worst_entry=worst, tol=tol)


def positivity_improving(a, tol: float | None = None) -> OrderReport:
    """Check that A maps nonzero cone vectors to strictly positive ones.

    Strictness is decided by margin > tol, never >=, so improving is
    distinguished from merely preserving under roundoff.
    """
    mat = to_dense(a)
    if mat.shape[0] != mat.shape[1]:
        raise ValueError("positivity checks need a square matrix")
    if tol is None:
        tol = default_tolerance(mat)
    margin, worst = _entry_extremum(mat)
    return OrderReport(holds=margin > tol, margin=margin, worst_entry=worst, tol=tol)


def ergodicity_check(ops, x, y, tol: float | None = None):
    """Search the family for a member with <x, A_j y> > tol.

    Returns (found, witness_index); witness_index is None when no member
    connects the pair.  Both probes must be nonzero cone vectors.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if not in_cone(xv) or not in_cone(yv):
        raise ValueError("ergodicity probes must lie in the cone")
    nx = float(np.linalg.norm(xv))
    ny = float(np.linalg.norm(yv))
    if nx == 0.0 or ny == 0.0:
        raise ValueError("ergodicity probes must be nonzero")
    if tol is None:
        tol = TOL_SCALE * (1.0 + nx * ny)
    for j, op in enumerate(ops):
        mat = to_dense(op)
        value = float(xv @ (mat @ yv))
        if value > tol:
            return True, j
    return False, None
