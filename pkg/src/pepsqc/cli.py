"""Command-line driver: ed, optimize, compile, run.

The full experiment is `ed` (exact-diagonalization baseline curve),
`optimize` (variational checkpoints per field value), then `run` per
checkpoint (compile, exact value, shot estimate, one CSV row each).
All randomness flows from explicit --seed flags; the default seed is 0.
Exit code is 0 on success and nonzero with a diagnostic on any
invariant breach.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import simulator, variational
from .compiler import (
    LatticeShape,
    compile_parameterized,
    is_qubit_efficient,
    qubit_count,
    tensors_from_parameters,
    to_json,
)
from .pauli import (
    boundary_loop,
    exact_ground,
    expectation,
    ground_curve,
    magnetic_term,
    wen_hamiltonian,
)
from .peps import contract_all

SWEEP_HEADER = "g,ed_value,tn_value,circuit_mean,circuit_stderr,shots,seed"
CROSS_CHECK_ATOL = 1e-8


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _shape_from_layout_id(layout_id: str) -> LatticeShape:
    # e.g. "zigzag-3x3-nb1-fused"
    try:
        _, grid, nb, _ = layout_id.split("-")
        rows, cols = grid.split("x")
        return LatticeShape(int(rows), int(cols), int(nb.removeprefix("nb")))
    except Exception as exc:
        raise ValueError(f"cannot parse layout id {layout_id!r}") from exc


def cmd_ed(args) -> int:
    rows, cols = args.rows, args.cols
    curve = ground_curve(
        wen_hamiltonian(rows, cols),
        magnetic_term(rows, cols, 1.0),
        np.linspace(args.g_min, args.g_max, args.steps + 1),
        rows * cols,
        boundary_loop(rows, cols),
    )
    lines = ["g,energy,loop_abs"]
    for g, energy_val, loop_abs in curve:
        lines.append(f"{_fmt(g)},{_fmt(energy_val)},{_fmt(loop_abs)}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {args.steps + 1} rows to {args.out}")
    return 0


def _checkpoint_path(out_dir: Path, g: float) -> Path:
    return out_dir / f"checkpoint_g{g:g}.json"


def cmd_optimize(args) -> int:
    if args.g is not None:
        g_list = [args.g]
    else:
        g_list = [float(x) for x in args.g_list.split(",")]
    options = {"max_evaluations": args.max_evals, "tol": args.tol}
    results = variational.sweep(g_list, restarts=args.restarts, seed=args.seed, options=options)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    shape = LatticeShape(3, 3, 1)
    for res in results:
        doc = {
            "g": res.g,
            "theta": [float(t) for t in res.theta],
            "energy": res.energy,
            "evaluations": res.evaluations,
            "seed": args.seed,
            "layout_id": f"zigzag-{shape.rows}x{shape.cols}-nb{shape.bond_qubits}-fused",
        }
        path = _checkpoint_path(out_dir, res.g)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"g={res.g:g}: energy={res.energy:.6f} evals={res.evaluations} -> {path}")
    return 0


def _load_checkpoint(path):
    doc = json.loads(Path(path).read_text())
    shape = _shape_from_layout_id(doc["layout_id"])
    theta = np.asarray(doc["theta"], dtype=float)
    return doc, shape, theta


def cmd_compile(args) -> int:
    _doc, shape, theta = _load_checkpoint(args.checkpoint)
    prog = compile_parameterized(shape, theta)
    Path(args.out).write_text(to_json(prog))
    print(f"n_qubits: {prog.n_qubits}")
    print(f"qubit-efficient: {str(is_qubit_efficient(shape)).lower()}")
    print(f"formula qubits: {qubit_count(shape)}; wrote {args.out}")
    return 0


def cmd_run(args) -> int:
    doc, shape, theta = _load_checkpoint(args.checkpoint)
    g = float(doc["g"])
    n_sites = shape.n_sites
    prog = compile_parameterized(shape, theta)
    obs = boundary_loop(shape.rows, shape.cols)

    tn_value = abs(simulator.exact_observable(prog, obs))
    psi = contract_all(tensors_from_parameters(shape, theta))
    psi = psi / np.linalg.norm(psi)
    contraction_value = abs(expectation(psi, obs))
    if abs(tn_value - contraction_value) > CROSS_CHECK_ATOL:
        print(
            f"internal cross-check failed: circuit {tn_value!r} vs contraction "
            f"{contraction_value!r}",
            file=sys.stderr,
        )
        return 1

    h = wen_hamiltonian(shape.rows, shape.cols) + magnetic_term(shape.rows, shape.cols, g)
    _e0, gs = exact_ground(h, n_sites)
    ed_value = abs(expectation(gs, obs))

    run_prog = simulator.apply_depolarizing(prog, args.noise_p) if args.noise_p > 0 else prog
    mean, stderr = simulator.estimate_observable(run_prog, obs, args.shots, args.seed)

    out = Path(args.out)
    row = ",".join(
        [_fmt(g), _fmt(ed_value), _fmt(tn_value), _fmt(mean), _fmt(stderr), str(args.shots), str(args.seed)]
    )
    if out.exists():
        out.write_text(out.read_text() + row + "\n")
    else:
        out.write_text(SWEEP_HEADER + "\n" + row + "\n")
    print(f"g={g:g}: ed={ed_value:.6f} tn={tn_value:.6f} circuit={mean:.6f}+-{stderr:.6f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pepsqc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ed", help="exact-diagonalization sweep to CSV")
    p.add_argument("--rows", type=int, default=3)
    p.add_argument("--cols", type=int, default=3)
    p.add_argument("--g-min", type=float, default=0.0)
    p.add_argument("--g-max", type=float, default=1.2)
    p.add_argument("--steps", type=int, default=120)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ed)

    p = sub.add_parser("optimize", help="variational sweep; one checkpoint JSON per g")
    p.add_argument("--g-list", default=",".join(str(g) for g in variational.PAPER_G_VALUES))
    p.add_argument("--g", type=float, default=None, help="single field value (overrides --g-list)")
    p.add_argument("--restarts", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-evals", type=int, default=variational.DEFAULT_OPTIONS["max_evaluations"])
    p.add_argument("--tol", type=float, default=variational.DEFAULT_OPTIONS["tol"])
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("compile", help="lower a checkpoint to the circuit JSON")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("run", help="simulate a checkpoint; append one sweep CSV row")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--shots", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise-p", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
