"""Variational ground-state search over the block ansatz.

The objective is the Rayleigh quotient of the model Hamiltonian in the
classically contracted PEPs state (the unitary construction keeps the
norm at 1, but the denominator is kept as a guard against drift).

The default minimizer exploits the ansatz structure: every parameter is
a rotation angle entering exactly one gate, so the energy restricted to
one coordinate is a first-harmonic sinusoid a + b*cos(x) + c*sin(x)
whose exact minimizer follows from two probe evaluations. Sweeping the
coordinates with exact updates is derivative-free, strictly monotone in
the accepted objective, fully deterministic, and far more reliable here
than generic trust-region methods, which stall on the stabilizer
plateaus of this landscape. COBYLA and Nelder-Mead remain available via
options; all three honor the same contract (monotone accepted objective,
evaluation budget, stop tolerance on the objective change).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.optimize

from .compiler import LatticeShape, layout_parameter_count, tensors_from_parameters
from .pauli import expectation, magnetic_term, wen_hamiltonian
from .peps import contract_all

PAPER_G_VALUES = (0.0, 0.1, 0.2, 0.4, 0.6, 1.0)
PARAM_BOUND = 2.0 * np.pi

DEFAULT_OPTIONS = {
    "max_evaluations": 20000,
    "tol": 1e-7,
    "initial_step": 0.3,
    "method": "coordinate",
}


@dataclass(frozen=True)
class OptimizationResult:
    theta: np.ndarray
    energy: float
    evaluations: int
    converged: bool
    g: float
    trace: tuple[float, ...] = ()  # accepted (monotone) objective values


@lru_cache(maxsize=32)
def hamiltonian(rows: int, cols: int, g: float):
    h = wen_hamiltonian(rows, cols)
    if g != 0.0:
        h = h + magnetic_term(rows, cols, g)
    return h


def energy(theta, g: float, shape: LatticeShape = LatticeShape(3, 3, 1)) -> float:
    """Rayleigh quotient <psi(theta)|H(g)|psi(theta)> / <psi|psi>."""
    psi = contract_all(tensors_from_parameters(shape, theta))
    h = hamiltonian(shape.rows, shape.cols, float(g))
    num = expectation(psi, h).real
    den = float(np.real(np.vdot(psi, psi)))
    return num / den


def _minimize_coordinate(f, x0, max_evals, tol):
    """Exact sequential minimization of per-coordinate sinusoids."""
    x = np.clip(np.asarray(x0, dtype=float), -np.pi, np.pi)
    e = f(x)
    evals = 1
    trace = [e]
    converged = False
    while evals + 2 * x.size + 1 <= max_evals:
        sweep_start = e
        for i in range(x.size):
            th = x[i]
            xp = x.copy()
            xp[i] = th + np.pi / 2
            xm = x.copy()
            xm[i] = th - np.pi / 2
            ep, em = f(xp), f(xm)
            evals += 2
            a = 0.5 * (ep + em)
            u = e - a
            v = 0.5 * (ep - em)
            b = u * np.cos(th) - v * np.sin(th)
            c = u * np.sin(th) + v * np.cos(th)
            x[i] = np.arctan2(-c, -b)
            e = a - np.hypot(b, c)
        e = f(x)  # re-synchronize against accumulated roundoff
        evals += 1
        trace.append(e)
        if sweep_start - e < tol:
            converged = True
            break
    return x, e, evals, converged, trace


def minimize(
    g: float,
    theta_init,
    options: dict | None = None,
    shape: LatticeShape = LatticeShape(3, 3, 1),
) -> OptimizationResult:
    """Derivative-free local minimization of energy(theta, g).

    Evaluated points stay inside [-2pi, 2pi] per parameter (angles are
    periodic). Budget exhaustion is reported as converged=False, not an
    error, and the best evaluated point is always returned.
    """
    opts = {**DEFAULT_OPTIONS, **(options or {})}
    theta_init = np.asarray(theta_init, dtype=float)
    method = opts["method"].lower()
    max_evals = int(opts["max_evaluations"])
    tol = float(opts["tol"])

    if method == "coordinate":
        fun = lambda x: energy(np.clip(x, -PARAM_BOUND, PARAM_BOUND), g, shape)
        x, e, evals, converged, trace = _minimize_coordinate(fun, theta_init, max_evals, tol)
        return OptimizationResult(
            theta=x, energy=float(e), evaluations=evals, converged=converged,
            g=float(g), trace=tuple(trace),
        )

    n_evals = 0
    best_e = np.inf
    best_x = theta_init.copy()
    trace: list[float] = []

    def objective(x):
        nonlocal n_evals, best_e, best_x
        x = np.clip(x, -PARAM_BOUND, PARAM_BOUND)
        e = energy(x, g, shape)
        n_evals += 1
        if e < best_e:
            best_e = e
            best_x = x.copy()
            trace.append(e)
        return e

    if method == "cobyla":
        res = scipy.optimize.minimize(
            objective,
            theta_init,
            method="COBYLA",
            tol=tol,
            options={"rhobeg": opts["initial_step"], "maxiter": max_evals},
        )
    elif method == "nelder-mead":
        res = scipy.optimize.minimize(
            objective,
            theta_init,
            method="Nelder-Mead",
            options={"fatol": tol, "xatol": 1e-6, "maxfev": max_evals,
                     "initial_simplex": _simplex(theta_init, opts["initial_step"])},
        )
    else:
        raise ValueError(f"unknown method {opts['method']!r}")
    converged = bool(res.success) and n_evals < max_evals
    return OptimizationResult(
        theta=best_x, energy=float(best_e), evaluations=n_evals,
        converged=converged, g=float(g), trace=tuple(trace),
    )


def _simplex(x0, step):
    pts = [x0]
    for i in range(x0.size):
        p = x0.copy()
        p[i] += step
        pts.append(p)
    return np.array(pts)


def random_init(shape: LatticeShape, rng) -> np.ndarray:
    """Uniform draw in [-pi/4, pi/4] per parameter; keeps the start near a product state."""
    n = layout_parameter_count(shape)
    return rng.uniform(-np.pi / 4, np.pi / 4, size=n)


def sweep(
    g_list=PAPER_G_VALUES,
    restarts: int = 5,
    seed: int = 0,
    options: dict | None = None,
    shape: LatticeShape = LatticeShape(3, 3, 1),
) -> list[OptimizationResult]:
    """Best-of-restarts minimization per field value, warm-starting from the previous g."""
    g_list = list(g_list)
    if not g_list:
        raise ValueError("g_list must be nonempty")
    results = []
    previous = None
    for gi, g in enumerate(g_list):
        inits = [
            random_init(shape, np.random.default_rng((seed, gi, r)))
            for r in range(restarts)
        ]
        if previous is not None:
            inits.append(previous.theta)
        best = None
        for theta0 in inits:
            res = minimize(g, theta0, options=options, shape=shape)
            if best is None or res.energy < best.energy:
                best = res
        results.append(best)
        previous = best
    return results
