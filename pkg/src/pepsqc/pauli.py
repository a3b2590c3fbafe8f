"""Wen plaquette model, boundary loop observable, and exact diagonalization.

Sites are labeled 1-based in row-major order over the grid (1..cols on
the top row). Basis states order site 1 as the most significant bit.

The plaquette term anchored at site i reads X_i Y_{i+x} X_{i+x+y} Y_{i+y}
with x pointing to the next column and y to the previous row, so each
anchor needs a right and an up neighbor. With this orientation the
boundary loop Y1 Z2 X3 Z4 Z6 X7 Z8 Y9 on the 3x3 grid is exactly the
product of the four plaquette stabilizers (verified symbolically in the
test suite), hence |<O>| = 1 on the whole g = 0 ground space.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import kernels

DENSE_SITE_LIMIT = 14

_I2 = np.eye(2, dtype=complex)
_PAULI = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# single-site products: (a, b) -> (phase, result or None for identity)
_MUL = {
    ("X", "X"): (1, None),
    ("Y", "Y"): (1, None),
    ("Z", "Z"): (1, None),
    ("X", "Y"): (1j, "Z"),
    ("Y", "X"): (-1j, "Z"),
    ("Y", "Z"): (1j, "X"),
    ("Z", "Y"): (-1j, "X"),
    ("Z", "X"): (1j, "Y"),
    ("X", "Z"): (-1j, "Y"),
}


@dataclass(frozen=True)
class PauliString:
    """A phase times a tensor product of single-site X/Y/Z operators.

    `items` maps 1-based site labels to Pauli labels; absent sites carry
    the identity. The phase has magnitude 1 (or 0 for the zero operator).
    """

    items: tuple[tuple[int, str], ...] = ()
    phase: complex = 1.0 + 0j

    @classmethod
    def from_ops(cls, ops, phase=1.0 + 0j):
        for site, p in ops.items():
            if site < 1:
                raise ValueError(f"site labels are 1-based, got {site}")
            if p not in _PAULI:
                raise ValueError(f"unknown Pauli label {p!r}")
        return cls(tuple(sorted(ops.items())), complex(phase))

    @property
    def ops(self) -> dict[int, str]:
        return dict(self.items)

    def support(self) -> tuple[int, ...]:
        return tuple(site for site, _ in self.items)

    def __mul__(self, other: "PauliString") -> "PauliString":
        phase = self.phase * other.phase
        ops = dict(self.items)
        for site, p in other.items:
            if site in ops:
                ph, c = _MUL[(ops[site], p)]
                phase *= ph
                if c is None:
                    del ops[site]
                else:
                    ops[site] = c
            else:
                ops[site] = p
        return PauliString.from_ops(ops, phase)

    def commutes_with(self, other: "PauliString") -> bool:
        anti = 0
        mine = dict(self.items)
        for site, p in other.items:
            q = mine.get(site)
            if q is not None and q != p:
                anti += 1
        return anti % 2 == 0

    def masks(self, n_sites: int):
        """(x_mask, z_mask, weight) with site 1 on the most significant bit."""
        x = z = 0
        n_y = 0
        for site, p in self.items:
            if site > n_sites:
                raise ValueError(f"site {site} outside a {n_sites}-site register")
            bit = 1 << (n_sites - site)
            if p in ("X", "Y"):
                x |= bit
            if p in ("Z", "Y"):
                z |= bit
            if p == "Y":
                n_y += 1
        return x, z, self.phase * (1j) ** n_y


@dataclass(frozen=True)
class OperatorSum:
    """Real-weighted sum of PauliStrings; duplicates merge on construction."""

    terms: tuple[tuple[float, PauliString], ...] = ()

    @classmethod
    def from_terms(cls, terms):
        merged: dict[tuple, float] = {}
        for coeff, ps in terms:
            if not np.isfinite(coeff):
                raise ValueError("coefficients must be finite")
            if abs(ps.phase.imag) > 1e-12 or abs(abs(ps.phase.real) - 1.0) > 1e-12:
                raise ValueError("OperatorSum terms must carry a +/-1 phase")
            merged[ps.items] = merged.get(ps.items, 0.0) + coeff * ps.phase.real
        out = tuple(
            (c, PauliString(items, 1.0 + 0j))
            for items, c in sorted(merged.items())
            if c != 0.0
        )
        return cls(out)

    def __add__(self, other: "OperatorSum") -> "OperatorSum":
        return OperatorSum.from_terms(self.terms + other.terms)

    def __len__(self) -> int:
        return len(self.terms)


def site_label(row: int, col: int, cols: int) -> int:
    """1-based row-major site label for 0-based (row, col)."""
    return row * cols + col + 1


def wen_hamiltonian(rows: int, cols: int) -> OperatorSum:
    """-sum of plaquette terms X_i Y_right X_right+up Y_up, one per anchor.

    Anchors are the sites with both a right and an up neighbor, i.e. rows
    2..rows of the grid, giving (rows-1)*(cols-1) terms.
    """
    if rows < 2 or cols < 2:
        raise ValueError("grid too small: need rows >= 2 and cols >= 2")
    terms = []
    for r in range(1, rows):
        for c in range(cols - 1):
            ops = {
                site_label(r, c, cols): "X",
                site_label(r, c + 1, cols): "Y",
                site_label(r - 1, c + 1, cols): "X",
                site_label(r - 1, c, cols): "Y",
            }
            terms.append((-1.0, PauliString.from_ops(ops)))
    return OperatorSum.from_terms(terms)


def magnetic_term(rows: int, cols: int, g: float) -> OperatorSum:
    """-g * sum over sites of (X + Y + Z)."""
    if rows < 1 or cols < 1:
        raise ValueError("grid too small")
    terms = []
    for s in range(1, rows * cols + 1):
        for p in ("X", "Y", "Z"):
            terms.append((-float(g), PauliString.from_ops({s: p})))
    return OperatorSum.from_terms(terms)


def boundary_loop(rows: int = 3, cols: int = 3) -> PauliString:
    """The 8-site boundary loop Y1 Z2 X3 Z4 Z6 X7 Z8 Y9 (3x3 only)."""
    if (rows, cols) != (3, 3):
        raise ValueError("boundary_loop is only defined for the 3x3 grid")
    return PauliString.from_ops(
        {1: "Y", 2: "Z", 3: "X", 4: "Z", 6: "Z", 7: "X", 8: "Z", 9: "Y"}
    )


def _term_dense(ps: PauliString, n_sites: int) -> np.ndarray:
    m = np.array([[1.0]], dtype=complex)
    ops = ps.ops
    for s in range(1, n_sites + 1):
        m = np.kron(m, _PAULI[ops[s]] if s in ops else _I2)
    return ps.phase * m


def to_dense(op, n_sites: int) -> np.ndarray:
    """Dense 2**n x 2**n matrix, Kronecker-assembled, site 1 most significant."""
    if n_sites > DENSE_SITE_LIMIT:
        raise ValueError(f"too many sites for dense assembly ({n_sites} > {DENSE_SITE_LIMIT})")
    if isinstance(op, PauliString):
        return _term_dense(op, n_sites)
    h = np.zeros((1 << n_sites, 1 << n_sites), dtype=complex)
    for coeff, ps in op.terms:
        h += coeff * _term_dense(ps, n_sites)
    return h


def exact_ground(op, n_sites: int):
    """Minimum eigenvalue and one unit-norm ground vector of a dense operator.

    When the ground space is degenerate (g = 0) the returned vector is an
    arbitrary member; downstream observables must be reported as magnitudes.
    """
    h = to_dense(op, n_sites)
    w, v = scipy.linalg.eigh(h, subset_by_index=(0, 0))
    return float(w[0]), np.ascontiguousarray(v[:, 0])


def ground_curve(base, field, g_values, n_sites: int, observable=None):
    """Ground energy (and |<observable>|) along H(g) = base + g*field.

    Walks the g grid with a LOBPCG solver warm-started from the previous
    point's ground vector; every point is verified by its residual norm and
    recomputed with the dense solver when the iteration has not fully
    converged, so the output matches exact_ground to oracle accuracy.
    Returns a list of (g, energy, obs_abs) rows (obs_abs omitted when no
    observable is given).
    """
    import warnings

    import scipy.sparse.linalg

    h0 = to_dense(base, n_sites)
    f = to_dense(field, n_sites)
    obs = to_dense(observable, n_sites) if observable is not None else None
    x = None
    rows = []
    for g in g_values:
        h = h0 + float(g) * f
        done = False
        if x is not None:
            with warnings.catch_warnings(), np.errstate(all="ignore"):
                warnings.simplefilter("ignore")
                w, v = scipy.sparse.linalg.lobpcg(
                    h, x, largest=False, tol=1e-13, maxiter=120, verbosityLevel=0
                )
            gs = v[:, 0]
            nrm = np.linalg.norm(gs)
            if np.isfinite(nrm) and nrm > 0:
                gs = gs / nrm
                energy = float(np.real(np.vdot(gs, h @ gs)))
                residual = float(np.linalg.norm(h @ gs - energy * gs))
                done = residual <= 1e-9
        if not done:
            w, v = scipy.linalg.eigh(h, subset_by_index=(0, 0))
            energy = float(w[0])
            gs = v[:, 0]
        x = gs.reshape(-1, 1)
        if obs is None:
            rows.append((float(g), energy))
        else:
            rows.append((float(g), energy, abs(complex(np.vdot(gs, obs @ gs)))))
    return rows


@lru_cache(maxsize=64)
def _mask_table(op: OperatorSum, n_sites: int):
    xs, zs, ws = [], [], []
    for coeff, ps in op.terms:
        x, z, w = ps.masks(n_sites)
        xs.append(x)
        zs.append(z)
        ws.append(coeff * w)
    return (
        np.array(ws, dtype=np.complex128),
        np.array(xs, dtype=np.int64),
        np.array(zs, dtype=np.int64),
    )


def expectation(state, op) -> complex:
    """<state| op |state> for a PauliString or an OperatorSum."""
    state = np.ascontiguousarray(state, dtype=np.complex128)
    n = state.size.bit_length() - 1
    if 1 << n != state.size:
        raise ValueError("state length must be a power of two")
    if isinstance(op, PauliString):
        x, z, w = op.masks(n)
        weights = np.array([w], dtype=np.complex128)
        xs = np.array([x], dtype=np.int64)
        zs = np.array([z], dtype=np.int64)
    else:
        weights, xs, zs = _mask_table(op, n)
        if len(weights) == 0:
            return 0j
    return kernels.pauli_sum(state, weights, xs, zs)
