"""PEPs network container and exact dense contraction oracle.

Each site tensor carries its physical axis first, then the present bond
axes in (up, left, down, right) order; bonds on the grid boundary are
omitted rather than stored as dummies. Contraction is exact (single
einsum over the whole network), which is the point: this module is the
ground truth the compiled circuits are checked against, so no
approximate contraction scheme is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DENSE_SITE_LIMIT = 14
BOND_ROLES = ("up", "left", "down", "right")


def present_roles(rows: int, cols: int, r: int, c: int) -> tuple[str, ...]:
    """Bond roles present at grid position (r, c), in canonical order."""
    roles = []
    if r > 0:
        roles.append("up")
    if c > 0:
        roles.append("left")
    if r < rows - 1:
        roles.append("down")
    if c < cols - 1:
        roles.append("right")
    return tuple(roles)


@dataclass
class PepsNetwork:
    """rows x cols grid of site tensors with physical dimension 2."""

    rows: int
    cols: int
    tensors: list = field(repr=False)
    chi: int = 2

    def __post_init__(self):
        if len(self.tensors) != self.rows or any(len(row) != self.cols for row in self.tensors):
            raise ValueError("tensor grid does not match rows x cols")
        for r in range(self.rows):
            for c in range(self.cols):
                t = np.asarray(self.tensors[r][c])
                roles = present_roles(self.rows, self.cols, r, c)
                if t.ndim != 1 + len(roles):
                    raise ValueError(
                        f"tensor at ({r}, {c}) has rank {t.ndim}, expected {1 + len(roles)}"
                    )
                if t.shape[0] != 2:
                    raise ValueError(f"tensor at ({r}, {c}) has physical dimension {t.shape[0]}")
                self.tensors[r][c] = np.ascontiguousarray(t, dtype=np.complex128)
        for r in range(self.rows):
            for c in range(self.cols):
                if c + 1 < self.cols and self.bond_dim(r, c, "right") != self.bond_dim(r, c + 1, "left"):
                    raise ValueError(f"bond dimension mismatch on edge ({r},{c})-({r},{c+1})")
                if r + 1 < self.rows and self.bond_dim(r, c, "down") != self.bond_dim(r + 1, c, "up"):
                    raise ValueError(f"bond dimension mismatch on edge ({r},{c})-({r+1},{c})")

    def axis_of(self, r: int, c: int, role: str) -> int:
        roles = present_roles(self.rows, self.cols, r, c)
        if role not in roles:
            raise ValueError(f"site ({r}, {c}) has no {role} bond")
        return 1 + roles.index(role)

    def bond_dim(self, r: int, c: int, role: str) -> int:
        return self.tensors[r][c].shape[self.axis_of(r, c, role)]


def _einsum_args(p: PepsNetwork, conjugate_layer: bool = False):
    """Interleaved einsum operands for the network (optionally a bra layer too)."""
    n = p.rows * p.cols
    args = []
    next_id = n  # 0..n-1 are the physical indices
    h_ids = {}
    v_ids = {}
    for r in range(p.rows):
        for c in range(p.cols):
            if c + 1 < p.cols:
                h_ids[(r, c)] = next_id
                next_id += 1
            if r + 1 < p.rows:
                v_ids[(r, c)] = next_id
                next_id += 1

    def site_subs(r, c, offset):
        subs = [r * p.cols + c]
        for role in present_roles(p.rows, p.cols, r, c):
            if role == "up":
                subs.append(v_ids[(r - 1, c)] + offset)
            elif role == "left":
                subs.append(h_ids[(r, c - 1)] + offset)
            elif role == "down":
                subs.append(v_ids[(r, c)] + offset)
            else:
                subs.append(h_ids[(r, c)] + offset)
        return subs

    for r in range(p.rows):
        for c in range(p.cols):
            args.append(p.tensors[r][c])
            args.append(site_subs(r, c, 0))
    if conjugate_layer:
        bond_count = next_id - n
        for r in range(p.rows):
            for c in range(p.cols):
                args.append(np.conj(p.tensors[r][c]))
                args.append(site_subs(r, c, bond_count))
    return args


_PATH_CACHE: dict = {}


def contract_all(p: PepsNetwork) -> np.ndarray:
    """Contract the network to a statevector (site 1 most significant).

    No normalization is applied; the caller normalizes when needed.
    """
    n = p.rows * p.cols
    if n > DENSE_SITE_LIMIT:
        raise ValueError(f"network too large for dense contraction ({n} > {DENSE_SITE_LIMIT})")
    args = _einsum_args(p) + [list(range(n))]
    key = (p.rows, p.cols, tuple(t.shape for row in p.tensors for t in row))
    path = _PATH_CACHE.get(key)
    if path is None:
        path = np.einsum_path(*args, optimize="greedy")[0]
        _PATH_CACHE[key] = path
    return np.einsum(*args, optimize=path).reshape(-1)


def norm(p: PepsNetwork) -> float:
    """l2 norm of the contracted statevector."""
    return float(np.linalg.norm(contract_all(p)))


def double_layer_norm_sq(p: PepsNetwork) -> float:
    """<psi|psi> contracted directly as a two-layer network (independent oracle)."""
    args = _einsum_args(p, conjugate_layer=True) + [[]]
    val = np.einsum(*args, optimize="greedy")
    return float(np.real(val))
