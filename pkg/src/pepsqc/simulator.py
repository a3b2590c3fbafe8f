"""Execute gate programs: shot sampling and exact branch enumeration.

A shot walks the event list on a statevector. Before each mid-circuit
measurement the basis-change rotation for that site's assigned Pauli is
applied (Z: none, X: Hadamard, Y: S-dagger then Hadamard); the outcome
is Born-sampled and the reset that follows projects the qubit back to
|0> using the known outcome, so the run stays a pure state throughout.

Exact evaluation enumerates every measurement branch depth-first,
pruning branches whose cumulative probability falls below 1e-14, and
returns the probability-weighted product of outcomes over the
observable's support. The optional depolarizing knob is uncalibrated:
it inserts X/Y/Z errors with probability p/3 per participating qubit
after each gate, in sampling mode only.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .compiler import GateEvent, GateProgram, MeasureEvent, with_noise
from .pauli import PauliString

BRANCH_PRUNE_THRESHOLD = 1e-14
MAX_EXACT_MEASURES = 20

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
_SDG = np.array([[1, 0], [0, -1j]], dtype=complex)
_BASIS_ROTATION = {"Z": None, "I": None, "X": _H, "Y": _H @ _SDG}
_PAULI_1Q = {
    0: np.array([[0, 1], [1, 0]], dtype=complex),
    1: np.array([[0, -1j], [1j, 0]], dtype=complex),
    2: np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class ShotRecord:
    outcomes: dict[int, int]   # site label -> +/-1
    basis: dict[int, str]      # site label -> measured Pauli basis
    product: int               # product of outcomes over non-identity sites

    def __post_init__(self):
        prod = 1
        for site, b in self.basis.items():
            if b != "I":
                prod *= self.outcomes[site]
        if prod != self.product:
            raise ValueError("product inconsistent with outcomes")


def _prepared(prog: GateProgram):
    """Realize gate matrices once per program walk."""
    ops = []
    for ev in prog.events:
        if isinstance(ev, GateEvent):
            ops.append(("gate", tuple(ev.spec.qubits), np.ascontiguousarray(ev.spec.realize())))
        elif isinstance(ev, MeasureEvent):
            ops.append(("measure", ev.qubit, ev.site))
        else:
            ops.append(("reset", ev.qubit, None))
    return ops


def _check_bases(prog: GateProgram, bases) -> dict[int, str]:
    sites = prog.measured_sites()
    full = {}
    for s in sites:
        if s not in bases:
            raise ValueError(f"bases must assign a Pauli (or I) to every measured site; missing {s}")
        b = bases[s]
        if b not in ("X", "Y", "Z", "I"):
            raise ValueError(f"unknown basis {b!r} for site {s}")
        full[s] = b
    return full


def _run_prepared(ops, bases, n, noise_p, rng):
    state = np.zeros(1 << n, dtype=np.complex128)
    state[0] = 1.0
    outcomes: dict[int, int] = {}
    last_outcome = {}
    for kind, a, b in ops:
        if kind == "gate":
            kernels.apply_gate(state, b, a, n)
            if noise_p > 0.0:
                for q in a:
                    if rng.random() < noise_p:
                        kernels.apply_gate(state, _PAULI_1Q[int(rng.integers(3))], (q,), n)
        elif kind == "measure":
            rot = _BASIS_ROTATION[bases[b]]
            if rot is not None:
                kernels.apply_gate(state, rot, (a,), n)
            p1 = kernels.prob_one(state, a, n)
            outcome = 1 if rng.random() < p1 else 0
            prob = p1 if outcome else 1.0 - p1
            kernels.collapse(state, a, n, outcome, prob)
            outcomes[b] = 1 - 2 * outcome
            last_outcome[a] = outcome
        else:
            kernels.reset_known(state, a, n, last_outcome.pop(a))
    return outcomes


def run_shot(prog: GateProgram, bases, rng) -> ShotRecord:
    """Simulate one shot; deterministic for a fixed rng seed."""
    rng = np.random.default_rng(rng)
    bases = _check_bases(prog, bases)
    outcomes = _run_prepared(_prepared(prog), bases, prog.n_qubits, prog.noise_p, rng)
    product = 1
    for site, basis in bases.items():
        if basis != "I":
            product *= outcomes[site]
    return ShotRecord(outcomes=outcomes, basis=bases, product=product)


def _bases_for(prog: GateProgram, obs: PauliString) -> dict[int, str]:
    ops = obs.ops
    return {s: ops.get(s, "I") for s in prog.measured_sites()}


def estimate_observable(prog: GateProgram, obs: PauliString, shots: int, rng_seed: int = 0):
    """Shot-sampled (mean, stderr) of the observable's outcome product.

    Each shot draws from an independent stream seeded by (rng_seed, index),
    so the estimate is reproducible and shots could run concurrently.
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    bases = _check_bases(prog, _bases_for(prog, obs))
    ops = _prepared(prog)
    support = [s for s, b in bases.items() if b != "I"]
    n = prog.n_qubits
    products = np.empty(shots)
    for i in range(shots):
        outcomes = _run_prepared(ops, bases, n, prog.noise_p, np.random.default_rng((rng_seed, i)))
        p = 1
        for s in support:
            p *= outcomes[s]
        products[i] = p
    mean = float(np.mean(products))
    stderr = float(np.std(products, ddof=1) / np.sqrt(shots)) if shots > 1 else 0.0
    return mean, stderr


def exact_observable(prog: GateProgram, obs: PauliString) -> float:
    """Infinite-shot value of the outcome product by branch enumeration."""
    if prog.noise_p > 0.0:
        raise ValueError("exact mode does not support noisy programs; sample instead")
    n_meas = len(prog.measured_sites())
    if n_meas > MAX_EXACT_MEASURES:
        raise ValueError(f"too many measurements for branch enumeration ({n_meas})")
    bases = _bases_for(prog, obs)
    support = {s for s, b in bases.items() if b != "I"}
    ops = _prepared(prog)
    n = prog.n_qubits
    state0 = np.zeros(1 << n, dtype=np.complex128)
    state0[0] = 1.0
    total = 0.0

    def walk(state, idx, prob, prod):
        nonlocal total
        i = idx
        while i < len(ops):
            kind, a, b = ops[i]
            if kind == "gate":
                kernels.apply_gate(state, b, a, n)
                i += 1
            elif kind == "measure":
                rot = _BASIS_ROTATION[bases[b]]
                if rot is not None:
                    kernels.apply_gate(state, rot, (a,), n)
                p1 = kernels.prob_one(state, a, n)
                for outcome, p in ((0, 1.0 - p1), (1, p1)):
                    branch_prob = prob * p
                    if branch_prob < BRANCH_PRUNE_THRESHOLD:
                        continue
                    child = state.copy()
                    kernels.collapse(child, a, n, outcome, p)
                    kernels.reset_known(child, a, n, outcome)
                    sign = -1 if (outcome == 1 and b in support) else 1
                    walk(child, i + 2, branch_prob, prod * sign)
                return
            else:
                i += 1
        total += prob * prod

    walk(state0, 0, 1.0, 1)
    return total


def apply_depolarizing(prog: GateProgram, p: float) -> GateProgram:
    """Decorate a program with uncalibrated per-gate depolarizing noise."""
    return with_noise(prog, p)


def write_shot_log(records, n_sites: int, path):
    """CSV export: shot_index, per-site outcomes, product."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["shot_index"] + [f"site_{s}" for s in range(1, n_sites + 1)] + ["product"])
        for i, rec in enumerate(records):
            writer.writerow([i] + [rec.outcomes[s] for s in range(1, n_sites + 1)] + [rec.product])
