"""Dense complex tensor algebra: contraction, SVD splitting, isometry completion.

Tensors are plain numpy arrays in row-major (C) order; a "matrix" is a
2-d array. The two tolerances used across the package are centralized
here: STRUCTURAL_ATOL bounds max-norm residuals of unitary/isometry
checks, LINDEP_TOL is the rejection threshold for near-dependent
candidate vectors during completion.
"""

from __future__ import annotations

import numpy as np

STRUCTURAL_ATOL = 1e-10
LINDEP_TOL = 1e-8


def unitarity_defect(m) -> float:
    """Max-norm of U†U - I."""
    m = np.asarray(m)
    return float(np.max(np.abs(m.conj().T @ m - np.eye(m.shape[1]))))


def is_unitary(m, atol: float = STRUCTURAL_ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and unitarity_defect(m) <= atol


def is_isometry(m, atol: float = STRUCTURAL_ATOL) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[1] <= m.shape[0] and unitarity_defect(m) <= atol


def contract(a, b, pairs):
    """Contract tensors `a` and `b` over the axis pairs [(axis_of_a, axis_of_b), ...].

    Result axes are the unpaired axes of `a` in order, followed by the
    unpaired axes of `b`. Implemented as permute-reshape-matmul.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    ax_a = [p[0] for p in pairs]
    ax_b = [p[1] for p in pairs]
    if len(set(ax_a)) != len(ax_a) or len(set(ax_b)) != len(ax_b):
        raise ValueError("an axis appears twice in the contraction pairs")
    for i, j in pairs:
        if not (0 <= i < a.ndim and 0 <= j < b.ndim):
            raise ValueError(f"axis pair ({i}, {j}) out of range for shapes {a.shape}, {b.shape}")
        if a.shape[i] != b.shape[j]:
            raise ValueError(
                f"dimension mismatch: axis {i} of a has size {a.shape[i]}, "
                f"axis {j} of b has size {b.shape[j]}"
            )
    free_a = [i for i in range(a.ndim) if i not in set(ax_a)]
    free_b = [j for j in range(b.ndim) if j not in set(ax_b)]
    da = int(np.prod([a.shape[i] for i in free_a], dtype=np.int64)) if free_a else 1
    db = int(np.prod([b.shape[j] for j in free_b], dtype=np.int64)) if free_b else 1
    dk = int(np.prod([a.shape[i] for i in ax_a], dtype=np.int64)) if ax_a else 1
    ta = np.transpose(a, free_a + ax_a).reshape(da, dk)
    tb = np.transpose(b, ax_b + free_b).reshape(dk, db)
    out_shape = [a.shape[i] for i in free_a] + [b.shape[j] for j in free_b]
    return (ta @ tb).reshape(out_shape)


def svd_split(t, left_axes, max_rank):
    """Split `t` across the bipartition (left_axes | rest) by truncated SVD.

    Returns (U, s, V) where U has the left axes plus a trailing rank axis,
    V has a leading rank axis plus the remaining axes, and s holds at most
    `max_rank` singular values in descending order. Reassembling
    U @ diag(s) @ V reproduces `t` exactly when rank(t) <= max_rank.
    """
    t = np.asarray(t)
    if max_rank < 1:
        raise ValueError("max_rank must be >= 1")
    left = list(left_axes)
    if len(set(left)) != len(left) or any(not (0 <= i < t.ndim) for i in left):
        raise ValueError(f"invalid left_axes {left} for tensor of rank {t.ndim}")
    if not left or len(left) >= t.ndim:
        raise ValueError("left_axes must be a nonempty proper subset of the axes")
    right = [i for i in range(t.ndim) if i not in set(left)]
    ldims = [t.shape[i] for i in left]
    rdims = [t.shape[i] for i in right]
    m = np.transpose(t, left + right).reshape(int(np.prod(ldims)), int(np.prod(rdims)))
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    r = min(max_rank, s.size)
    return (
        u[:, :r].reshape(ldims + [r]),
        s[:r],
        vh[:r].reshape([r] + rdims),
    )


def complete_isometry(v):
    """Extend an isometry (cols <= rows, V†V = I) to a square unitary.

    The first `cols` columns of the result equal `v`; the remaining
    columns are the canonical completion obtained by orthonormalizing
    standard basis vectors against the existing columns in index order,
    skipping candidates whose residual falls below LINDEP_TOL.
    """
    v = np.ascontiguousarray(v, dtype=np.complex128)
    if v.ndim != 2 or v.shape[1] > v.shape[0]:
        raise ValueError(f"expected cols <= rows, got shape {v.shape}")
    if unitarity_defect(v) > STRUCTURAL_ATOL:
        raise ValueError(
            f"input is not an isometry within {STRUCTURAL_ATOL:g} "
            f"(residual {unitarity_defect(v):.3e})"
        )
    rows, cols = v.shape
    basis = [v[:, j].copy() for j in range(cols)]
    for k in range(rows):
        if len(basis) == rows:
            break
        w = np.zeros(rows, dtype=np.complex128)
        w[k] = 1.0
        # two projection passes for numerical orthogonality
        for _ in range(2):
            for c in basis:
                w -= np.vdot(c, w) * c
        nrm = np.linalg.norm(w)
        if nrm > LINDEP_TOL:
            basis.append(w / nrm)
    if len(basis) < rows:
        raise ValueError("failed to complete isometry: candidate basis exhausted")
    u = np.column_stack(basis)
    assert unitarity_defect(u) <= STRUCTURAL_ATOL
    return u
