"""Parameterized unitary building blocks and unitary <-> tensor conversions.

The two-qubit block is a single Molmer-Sorensen gate with a U3 rotation
on each incoming and outgoing rail (12 parameters); the three-qubit
block staggers two of those (24 parameters). The MS convention is fixed
to exp(-i pi/4 X(x)X); any other maximally entangling convention differs
only by single-qubit rotations that the surrounding U3s absorb.
"""

from __future__ import annotations

import numpy as np

from .tensor import STRUCTURAL_ATOL, svd_split, unitarity_defect

_I2 = np.eye(2, dtype=complex)
_XX = np.kron(np.array([[0, 1], [1, 0]], dtype=complex), np.array([[0, 1], [1, 0]], dtype=complex))
_MS = (np.eye(4, dtype=complex) - 1j * _XX) / np.sqrt(2.0)


def u3(theta: float, phi: float, lam: float) -> np.ndarray:
    """Three-Euler-angle single-qubit rotation (global-phase-free form)."""
    c = np.cos(theta / 2.0)
    s = np.sin(theta / 2.0)
    out = np.empty((2, 2), dtype=np.complex128)
    out[0, 0] = c
    out[0, 1] = -np.exp(1j * lam) * s
    out[1, 0] = np.exp(1j * phi) * s
    out[1, 1] = np.exp(1j * (phi + lam)) * c
    return out


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """np.kron without its shape-juggling overhead (hot path)."""
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def ms_gate() -> np.ndarray:
    """exp(-i pi/4 XX); maps |00> to (|00> - i|11>)/sqrt(2)."""
    return _MS.copy()


def two_qubit_block(params) -> np.ndarray:
    """(U3_out0 x U3_out1) . MS . (U3_in0 x U3_in1), 12 parameters.

    Parameter order: in-rail-0 U3, in-rail-1 U3, out-rail-0 U3,
    out-rail-1 U3, three angles each.
    """
    p = np.asarray(params, dtype=float)
    if p.shape != (12,):
        raise ValueError(f"two_qubit_block takes 12 parameters, got {p.shape}")
    u_in = _kron(u3(*p[0:3]), u3(*p[3:6]))
    u_out = _kron(u3(*p[6:9]), u3(*p[9:12]))
    return u_out @ _MS @ u_in


def three_qubit_block(params) -> np.ndarray:
    """(I x B2) . (B1 x I) with B1 on qubits (0, 1), B2 on (1, 2); 24 parameters."""
    p = np.asarray(params, dtype=float)
    if p.shape != (24,):
        raise ValueError(f"three_qubit_block takes 24 parameters, got {p.shape}")
    b1 = two_qubit_block(p[:12])
    b2 = two_qubit_block(p[12:])
    return _kron(_I2, b2) @ _kron(b1, _I2)


def staggered_block_ladder(n_qubits: int, params) -> np.ndarray:
    """Ladder of n_qubits-1 staggered two-qubit blocks on rails (0,1), (1,2), ...

    Generalizes the three-qubit block to wider registers; 12*(n_qubits-1)
    parameters. For n_qubits == 1 this is a bare U3 (3 parameters).
    """
    p = np.asarray(params, dtype=float)
    if n_qubits == 1:
        if p.shape != (3,):
            raise ValueError("single-qubit ladder takes 3 parameters")
        return u3(*p)
    if p.shape != (12 * (n_qubits - 1),):
        raise ValueError(
            f"ladder on {n_qubits} qubits takes {12 * (n_qubits - 1)} parameters, got {p.shape}"
        )
    u = np.eye(1 << n_qubits, dtype=complex)
    for j in range(n_qubits - 1):
        b = two_qubit_block(p[12 * j : 12 * (j + 1)])
        full = np.kron(np.kron(np.eye(1 << j), b), np.eye(1 << (n_qubits - 2 - j)))
        u = full @ u
    return u


def unitary_to_tensor(u, fixed_inputs) -> np.ndarray:
    """Clamp the listed input qubits of a unitary to |0> and return the tensor.

    Axes of the result are the free input qubits (in qubit order) followed
    by all output qubits. Qubit 0 is the most significant index bit on both
    sides. The result is an isometry from the free-input space to the
    output space by construction.
    """
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise ValueError("expected a square matrix")
    k = u.shape[0].bit_length() - 1
    if 1 << k != u.shape[0]:
        raise ValueError("matrix dimension must be a power of two")
    if unitarity_defect(u) > STRUCTURAL_ATOL:
        raise ValueError("input matrix is not unitary within tolerance")
    fixed = sorted(set(fixed_inputs))
    if any(not 0 <= q < k for q in fixed):
        raise ValueError(f"fixed input {fixed} out of range for {k} qubits")
    t = u.reshape((2,) * (2 * k))
    index = [slice(None)] * k + [0 if q in fixed else slice(None) for q in range(k)]
    t = t[tuple(index)]
    n_free = k - len(fixed)
    # clamped layout is outputs then free inputs; move free inputs first
    return np.transpose(t, list(range(k, k + n_free)) + list(range(k)))


def split_final_row(u, clamp_inputs=()) -> tuple[np.ndarray, ...]:
    """Split a fused final-row unitary into per-site tensors by successive SVDs.

    Input qubit j is site j's incoming bond (unless listed in
    `clamp_inputs`, in which case it is a fresh |0>), output qubit j is
    site j's physical leg. Site tensors come back in PEPs axis order:
    (phys, up) for clamped-free ends, plus left/right internal bond axes.
    Internal bonds keep their exact SVD rank (singular values absorbed
    rightward); recontracting the tensors reproduces the clamped map.
    """
    u = np.asarray(u, dtype=complex)
    k = u.shape[0].bit_length() - 1
    if u.ndim != 2 or u.shape[0] != u.shape[1] or (1 << k) != u.shape[0]:
        raise ValueError("expected a square power-of-two matrix")
    if unitarity_defect(u) > STRUCTURAL_ATOL:
        raise ValueError("input matrix is not unitary within tolerance")
    clamps = set(clamp_inputs)
    t = unitary_to_tensor(u, sorted(clamps))  # axes: free ins, then outs
    free = [q for q in range(k) if q not in clamps]
    # interleave to per-site groups: (out_j, in_j?) left to right
    perm = []
    for j in range(k):
        perm.append(len(free) + j)
        if j in set(free):
            perm.append(free.index(j))
    t = np.transpose(t, perm)
    group_sizes = [2 if j not in clamps else 1 for j in range(k)]

    tensors = []
    current = t
    carried = 0  # leading internal-bond axis on `current` after the first split
    for j in range(k - 1):
        n_left = carried + group_sizes[j]
        u_part, s, rest = svd_split(current, list(range(n_left)), max_rank=1 << k)
        keep = max(1, int(np.sum(s > 1e-12 * max(1.0, float(s[0])))))
        u_part = u_part[..., :keep]
        right_shape = current.shape[n_left:]
        rest = (s[:keep, None] * rest.reshape(s.size, -1)[:keep]).reshape((keep,) + right_shape)
        tensors.append(_site_axes(u_part, has_up=j not in clamps, has_left=j > 0, has_right=True))
        current = rest
        carried = 1
    tensors.append(
        _site_axes(current, has_up=(k - 1) not in clamps, has_left=k > 1, has_right=False)
    )
    return tuple(tensors)


def _site_axes(t, has_up: bool, has_left: bool, has_right: bool) -> np.ndarray:
    """Reorder a split factor to PEPs order (phys, up?, left?, right?).

    Split factors arrive as (left-bond?, phys, up?, right-bond?).
    """
    pos = 0
    left_ax = None
    if has_left:
        left_ax = pos
        pos += 1
    phys_ax = pos
    pos += 1
    up_ax = None
    if has_up:
        up_ax = pos
        pos += 1
    right_ax = pos if has_right else None
    order = [phys_ax]
    if up_ax is not None:
        order.append(up_ax)
    if left_ax is not None:
        order.append(left_ax)
    if right_ax is not None:
        order.append(right_ax)
    return np.ascontiguousarray(np.transpose(t, order))
