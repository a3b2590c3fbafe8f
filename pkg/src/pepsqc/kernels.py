"""Hot statevector kernels: gate application, Pauli sums, measurement.

Two interchangeable backends. The default is numba @njit; a pure-numpy
path is selected by setting PEPSQC_PURE_NUMPY=1 (or when numba is not
installed). `select_backend` switches at runtime, which the benchmark
uses to compare both on identical workloads.

Conventions: a statevector over n qubits has 2**n complex amplitudes,
qubit 0 is the most significant bit of the basis index. A k-qubit gate
matrix is indexed the same way (its first listed qubit is the most
significant bit of the matrix row/column index).
"""

from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False


# ---------------------------------------------------------------- numpy path


def apply_gate_numpy(state, u, qubits, n):
    k = len(qubits)
    t = np.moveaxis(state.reshape((2,) * n), qubits, range(k))
    shape = t.shape
    m = u @ t.reshape(1 << k, -1)
    state[:] = np.moveaxis(m.reshape(shape), range(k), qubits).reshape(-1)


def prob_one_numpy(state, q, n):
    v = state.reshape(1 << q, 2, -1)
    return float(np.sum(np.abs(v[:, 1, :]) ** 2))


def collapse_numpy(state, q, n, outcome, prob):
    v = state.reshape(1 << q, 2, -1)
    v[:, 1 - outcome, :] = 0.0
    v[:, outcome, :] *= 1.0 / np.sqrt(prob)


def reset_known_numpy(state, q, n, outcome):
    if outcome == 1:
        v = state.reshape(1 << q, 2, -1)
        v[:, 0, :] = v[:, 1, :]
        v[:, 1, :] = 0.0


_IDX_CACHE: dict[int, np.ndarray] = {}


def _indices(dim):
    idx = _IDX_CACHE.get(dim)
    if idx is None:
        idx = _IDX_CACHE[dim] = np.arange(dim, dtype=np.int64)
    return idx


def pauli_sum_numpy(state, weights, x_masks, z_masks):
    idx = _indices(state.size)
    acc = 0j
    for w, xm, zm in zip(weights, x_masks, z_masks):
        signs = 1.0 - 2.0 * (np.bitwise_count(idx & zm) & 1)
        acc += w * np.sum(signs * np.conj(state[idx ^ xm]) * state)
    return complex(acc)


# ---------------------------------------------------------------- numba path

if HAVE_NUMBA:

    @njit(cache=True)
    def _apply_gate_nb(state, u, strides):
        k = strides.shape[0]
        m = 1 << k
        mask = 0
        for j in range(k):
            mask |= strides[j]
        offs = np.empty(m, np.int64)
        for a in range(m):
            off = 0
            for j in range(k):
                if (a >> (k - 1 - j)) & 1:
                    off |= strides[j]
            offs[a] = off
        buf = np.empty(m, np.complex128)
        for base in range(state.shape[0]):
            if base & mask:
                continue
            for a in range(m):
                buf[a] = state[base + offs[a]]
            for a in range(m):
                acc = 0.0 + 0.0j
                for b in range(m):
                    acc += u[a, b] * buf[b]
                state[base + offs[a]] = acc

    @njit(cache=True)
    def _prob_one_nb(state, stride):
        p = 0.0
        for b in range(state.shape[0]):
            if b & stride:
                a = state[b]
                p += a.real * a.real + a.imag * a.imag
        return p

    @njit(cache=True)
    def _collapse_nb(state, stride, outcome, prob):
        scale = 1.0 / np.sqrt(prob)
        for b in range(state.shape[0]):
            if ((b & stride) != 0) == (outcome == 1):
                state[b] *= scale
            else:
                state[b] = 0.0

    @njit(cache=True)
    def _reset_known_nb(state, stride, outcome):
        if outcome == 1:
            for b in range(state.shape[0]):
                if b & stride:
                    state[b & ~stride] = state[b]
                    state[b] = 0.0

    @njit(cache=True)
    def _pauli_sum_nb(state, weights, x_masks, z_masks):
        acc = 0.0 + 0.0j
        for t in range(weights.shape[0]):
            xm = x_masks[t]
            zm = z_masks[t]
            s = 0.0 + 0.0j
            for b in range(state.shape[0]):
                c = np.conj(state[b ^ xm]) * state[b]
                v = b & zm
                v ^= v >> 32
                v ^= v >> 16
                v ^= v >> 8
                v ^= v >> 4
                v ^= v >> 2
                v ^= v >> 1
                if v & 1:
                    s -= c
                else:
                    s += c
            acc += weights[t] * s
        return acc

    def apply_gate_numba(state, u, qubits, n):
        strides = np.array([1 << (n - 1 - q) for q in qubits], dtype=np.int64)
        _apply_gate_nb(state, np.ascontiguousarray(u), strides)

    def prob_one_numba(state, q, n):
        return _prob_one_nb(state, np.int64(1 << (n - 1 - q)))

    def collapse_numba(state, q, n, outcome, prob):
        _collapse_nb(state, np.int64(1 << (n - 1 - q)), outcome, prob)

    def reset_known_numba(state, q, n, outcome):
        _reset_known_nb(state, np.int64(1 << (n - 1 - q)), outcome)

    def pauli_sum_numba(state, weights, x_masks, z_masks):
        return complex(_pauli_sum_nb(state, weights, x_masks, z_masks))


IMPLEMENTATIONS = {"numpy": {
    "apply_gate": apply_gate_numpy,
    "prob_one": prob_one_numpy,
    "collapse": collapse_numpy,
    "reset_known": reset_known_numpy,
    "pauli_sum": pauli_sum_numpy,
}}
if HAVE_NUMBA:
    IMPLEMENTATIONS["numba"] = {
        "apply_gate": apply_gate_numba,
        "prob_one": prob_one_numba,
        "collapse": collapse_numba,
        "reset_known": reset_known_numba,
        "pauli_sum": pauli_sum_numba,
    }


def _default_backend():
    if os.environ.get("PEPSQC_PURE_NUMPY", "").strip().lower() in {"1", "true", "yes"}:
        return "numpy"
    return "numba" if HAVE_NUMBA else "numpy"


BACKEND = _default_backend()
_IMPL = IMPLEMENTATIONS[BACKEND]


def select_backend(name):
    """Switch kernel backend at runtime ("numba" or "numpy")."""
    global BACKEND, _IMPL
    if name not in IMPLEMENTATIONS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(IMPLEMENTATIONS)}")
    BACKEND = name
    _IMPL = IMPLEMENTATIONS[name]


def apply_gate(state, u, qubits, n):
    """Apply the 2**k x 2**k unitary `u` to `qubits` of `state`, in place."""
    _IMPL["apply_gate"](state, u, qubits, n)


def prob_one(state, q, n):
    """Probability that measuring qubit q yields 1."""
    return _IMPL["prob_one"](state, q, n)


def collapse(state, q, n, outcome, prob):
    """Project qubit q onto `outcome` and renormalize by sqrt(prob), in place."""
    _IMPL["collapse"](state, q, n, outcome, prob)


def reset_known(state, q, n, outcome):
    """Reset qubit q (known to be in |outcome>) to |0>, in place."""
    _IMPL["reset_known"](state, q, n, outcome)


def pauli_sum(state, weights, x_masks, z_masks):
    """Sum_t w_t * <state| P_t |state> for Pauli terms given as bit masks.

    P_t acts on basis state |b> as (-1)**popcount(b & z_masks[t]) |b ^ x_masks[t]>;
    Y factors contribute their i/-i phases through `weights`.
    """
    return _IMPL["pauli_sum"](state, weights, x_masks, z_masks)
