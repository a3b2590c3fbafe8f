"""Lower PEPs networks and parameterized block layouts to gate programs.

The zig-zag causal order walks the grid row by row, serpentine fashion;
every bond is emitted by exactly one earlier site and consumed by
exactly one later site. Each site becomes a unitary whose input rails
are its incoming bond registers plus fresh |0> qubits, and whose output
rails carry its outgoing bonds plus the physical leg, which is measured
and immediately reset so the register can be reassigned. The final row
is fused into one row-wide unitary by default (a flag keeps the zig-zag
going instead), which is what bounds the register count at
(rows + 1) * bond_qubits + 1 on square grids.

Register scheduling is deterministic: fresh rails always take the
lowest free indices, bond rails keep the registers their bonds were
produced on. Rail 0 is the most significant bit of a gate's matrix
index. For a single-site step the rail layout is [in-bonds..., fresh...]
with outputs [out-bonds..., phys]; for a fused final row the rails run
in column order and rail j measures column j's site.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import blocks
from .peps import PepsNetwork, present_roles
from .tensor import complete_isometry, unitarity_defect

COMPILE_ISOMETRY_ATOL = 1e-8

Edge = tuple[int, int]


class IsometryViolation(ValueError):
    """A tensor failed the causal isometry constraint during compilation."""

    def __init__(self, site, residual):
        self.site = site
        self.residual = residual
        super().__init__(
            f"tensor at site {site} is not isometric along the causal direction "
            f"(residual {residual:.3e} > {COMPILE_ISOMETRY_ATOL:g})"
        )


@dataclass(frozen=True)
class LatticeShape:
    rows: int
    cols: int
    bond_qubits: int = 1

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1 or self.bond_qubits < 1:
            raise ValueError("rows, cols and bond_qubits must all be >= 1")

    @property
    def n_sites(self) -> int:
        return self.rows * self.cols


def qubit_count(shape: LatticeShape) -> int:
    """(rows + 1) * bond_qubits + 1 registers for the zig-zag mapping."""
    return (shape.rows + 1) * shape.bond_qubits + 1


def is_qubit_efficient(shape: LatticeShape) -> bool:
    """True iff the compiled register count is strictly below the site count."""
    return qubit_count(shape) < shape.n_sites


def _site(row: int, col: int, cols: int) -> int:
    return row * cols + col + 1


def serpentine_sites(shape: LatticeShape) -> list[int]:
    order = []
    for r in range(shape.rows):
        cols = range(shape.cols) if r % 2 == 0 else range(shape.cols - 1, -1, -1)
        order.extend(_site(r, c, shape.cols) for c in cols)
    return order


def _edge(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


def _neighbors(site: int, shape: LatticeShape) -> dict[str, int]:
    r, c = divmod(site - 1, shape.cols)
    out = {}
    if r > 0:
        out["up"] = site - shape.cols
    if c > 0:
        out["left"] = site - 1
    if r < shape.rows - 1:
        out["down"] = site + shape.cols
    if c < shape.cols - 1:
        out["right"] = site + 1
    return out


_IN_ROLE_ORDER = ("up", "left", "right")
_OUT_ROLE_ORDER = ("left", "right", "down")


def zigzag_order(shape: LatticeShape):
    """Serpentine site enumeration with each site's in- and out-bonds.

    Returns [(site, in_edges, out_edges), ...]; every edge of the grid
    appears exactly once as an out-bond of an earlier site and once as an
    in-bond of a later site, and the first site has no in-bonds.
    """
    order = serpentine_sites(shape)
    pos = {s: i for i, s in enumerate(order)}
    result = []
    for s in order:
        nbrs = _neighbors(s, shape)
        ins = tuple(
            _edge(s, nbrs[role])
            for role in _IN_ROLE_ORDER
            if role in nbrs and pos[nbrs[role]] < pos[s]
        )
        outs = tuple(
            _edge(s, nbrs[role])
            for role in _OUT_ROLE_ORDER
            if role in nbrs and pos[nbrs[role]] > pos[s]
        )
        result.append((s, ins, outs))
    return result


# --------------------------------------------------------------- scheduling


@dataclass(frozen=True)
class SiteStep:
    site: int
    rails: tuple[int, ...]              # registers, rail 0 most significant
    in_roles: tuple[str, ...]           # per in-bond, rail-group order
    in_edges: tuple[Edge, ...]
    in_widths: tuple[int, ...]
    out_roles: tuple[str, ...]          # per out-bond, rail-group order
    out_edges: tuple[Edge, ...]
    out_widths: tuple[int, ...]

    @property
    def n_rails(self) -> int:
        return len(self.rails)

    @property
    def n_in_qubits(self) -> int:
        return int(sum(self.in_widths))

    @property
    def fresh_positions(self) -> tuple[int, ...]:
        return tuple(range(self.n_in_qubits, self.n_rails))

    @property
    def phys_rail(self) -> int:
        return self.rails[-1]


@dataclass(frozen=True)
class FusedRowStep:
    sites: tuple[int, ...]              # final row, left to right
    rails: tuple[int, ...]
    in_edges: tuple[Edge | None, ...]   # per column (None when no bond qubits)
    in_widths: tuple[int, ...]          # per column
    fresh_positions: tuple[int, ...]    # rail positions clamped to |0>

    @property
    def n_rails(self) -> int:
        return len(self.rails)


@dataclass(frozen=True)
class Plan:
    shape: LatticeShape
    steps: tuple
    n_qubits: int
    fused: bool


def _width(dim: int, edge: Edge) -> int:
    w = dim.bit_length() - 1
    if (1 << w) != dim:
        raise ValueError(
            f"bond {edge} has dimension {dim}; compilation requires power-of-two bond dimensions"
        )
    return w


def _schedule(shape: LatticeShape, edge_dims, fuse_final: bool) -> Plan:
    """Walk the zig-zag order allocating registers; returns the step plan."""
    order = zigzag_order(shape)
    final_row_sites = set(
        _site(shape.rows - 1, c, shape.cols) for c in range(shape.cols)
    )
    edge_regs: dict[Edge, tuple[int, ...]] = {}
    free: list[int] = []
    next_reg = 0
    used = 0

    def alloc(k: int) -> list[int]:
        nonlocal next_reg, used
        regs = []
        for _ in range(k):
            if free:
                regs.append(heapq.heappop(free))
            else:
                regs.append(next_reg)
                next_reg += 1
        used = max(used, next_reg)
        return regs

    steps = []
    for site, ins, outs in order:
        if fuse_final and site in final_row_sites:
            continue
        nbrs = _neighbors(site, shape)
        edge_role = {_edge(site, nbr): role for role, nbr in nbrs.items()}
        in_triplets = [(edge_role[e], e, _width(edge_dims[e], e)) for e in ins]
        out_triplets = [(edge_role[e], e, _width(edge_dims[e], e)) for e in outs]
        in_triplets = [t for t in in_triplets if t[2] > 0]
        out_triplets = [t for t in out_triplets if t[2] > 0]
        n_in = sum(t[2] for t in in_triplets)
        n_rails = sum(t[2] for t in out_triplets) + 1
        if n_rails < n_in:
            raise IsometryViolation(site, float("inf"))
        rails = []
        for _, e, _w in in_triplets:
            rails.extend(edge_regs.pop(e))
        rails.extend(alloc(n_rails - n_in))
        pos = 0
        for _, e, w in out_triplets:
            edge_regs[e] = tuple(rails[pos : pos + w])
            pos += w
        steps.append(
            SiteStep(
                site=site,
                rails=tuple(rails),
                in_roles=tuple(t[0] for t in in_triplets),
                in_edges=tuple(t[1] for t in in_triplets),
                in_widths=tuple(t[2] for t in in_triplets),
                out_roles=tuple(t[0] for t in out_triplets),
                out_edges=tuple(t[1] for t in out_triplets),
                out_widths=tuple(t[2] for t in out_triplets),
            )
        )
        heapq.heappush(free, rails[-1])  # phys register frees after measure+reset

    if fuse_final:
        r = shape.rows - 1
        sites = tuple(_site(r, c, shape.cols) for c in range(shape.cols))
        col_edges: list[Edge | None] = []
        col_widths = []
        for c, s in enumerate(sites):
            if r > 0:
                e = _edge(s, s - shape.cols)
                w = _width(edge_dims[e], e)
            else:
                e, w = None, 0
            col_edges.append(e if w > 0 else None)
            col_widths.append(w)
        n_in = sum(col_widths)
        if n_in > len(sites):
            raise ValueError(
                "fused final row needs total incoming bond qubits <= row width; "
                "compile with final_row='zigzag' instead"
            )
        rails: list[int] = []
        fresh_positions = []
        if all(w <= 1 for w in col_widths):
            # rail j <-> column j: bond registers in place, fresh where no bond
            for c, e in enumerate(col_edges):
                if e is not None:
                    rails.extend(edge_regs.pop(e))
                else:
                    fresh_positions.append(len(rails))
                    rails.extend(alloc(1))
        else:
            for e in col_edges:
                if e is not None:
                    rails.extend(edge_regs.pop(e))
            fresh_positions = list(range(len(rails), len(sites)))
            rails.extend(alloc(len(sites) - n_in))
        steps.append(
            FusedRowStep(
                sites=sites,
                rails=tuple(rails),
                in_edges=tuple(col_edges),
                in_widths=tuple(col_widths),
                fresh_positions=tuple(fresh_positions),
            )
        )

    if edge_regs:
        raise AssertionError(f"unconsumed bonds after scheduling: {sorted(edge_regs)}")
    if shape.rows == shape.cols and used > qubit_count(shape):
        raise AssertionError("scheduler exceeded the qubit budget")
    return Plan(shape=shape, steps=tuple(steps), n_qubits=used, fused=fuse_final)


def _dropped_final_bond(shape: LatticeShape) -> Edge | None:
    """The final row's middle column takes a fresh |0> instead of a bond.

    On the 3x3 grid this is the 5-8 edge, which is what makes the fused
    final-row unitary a map from two bond qubits plus one fresh qubit and
    brings the raw parameter total to 144.
    """
    if shape.rows < 2 or shape.cols < 3:
        return None
    c = (shape.cols - 1) // 2
    s = _site(shape.rows - 1, c, shape.cols)
    return _edge(s, s - shape.cols)


def _layout_dims(shape: LatticeShape) -> dict[Edge, int]:
    dims = {}
    for site, _ins, outs in zigzag_order(shape):
        for e in outs:
            dims[e] = 1 << shape.bond_qubits
    dropped = _dropped_final_bond(shape)
    if dropped is not None:
        dims[dropped] = 1
    return dims


_PLAN_CACHE: dict[LatticeShape, Plan] = {}


def _layout_plan(shape: LatticeShape) -> Plan:
    plan = _PLAN_CACHE.get(shape)
    if plan is None:
        plan = _PLAN_CACHE[shape] = _schedule(shape, _layout_dims(shape), fuse_final=True)
    return plan


# ------------------------------------------------------------ gate program


GATE_KINDS = ("U3", "MS", "TwoQubitBlock", "ThreeQubitBlock", "CustomUnitary")
PARAM_COUNTS = {"U3": 3, "MS": 0, "TwoQubitBlock": 12, "ThreeQubitBlock": 24}


@dataclass(frozen=True, eq=False)
class GateSpec:
    kind: str
    params: tuple[float, ...]
    qubits: tuple[int, ...]
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if self.kind != "CustomUnitary" and len(self.params) != PARAM_COUNTS[self.kind]:
            raise ValueError(
                f"{self.kind} takes {PARAM_COUNTS[self.kind]} parameters, got {len(self.params)}"
            )
        if len(set(self.qubits)) != len(self.qubits):
            raise ValueError("gate qubits must be distinct")

    def realize(self) -> np.ndarray:
        if self.kind == "U3":
            return blocks.u3(*self.params)
        if self.kind == "MS":
            return blocks.ms_gate()
        if self.kind == "TwoQubitBlock":
            return blocks.two_qubit_block(self.params)
        if self.kind == "ThreeQubitBlock":
            return blocks.three_qubit_block(self.params)
        return np.asarray(self.matrix, dtype=complex)


@dataclass(frozen=True)
class GateEvent:
    spec: GateSpec


@dataclass(frozen=True)
class MeasureEvent:
    qubit: int
    site: int
    basis: str = "Z"


@dataclass(frozen=True)
class ResetEvent:
    qubit: int


@dataclass(frozen=True, eq=False)
class GateProgram:
    n_qubits: int
    events: tuple
    site_map: dict[int, int] = field(repr=False)  # measure ordinal -> site label
    layout_id: str = ""
    noise_p: float = 0.0

    def measured_sites(self) -> tuple[int, ...]:
        return tuple(e.site for e in self.events if isinstance(e, MeasureEvent))

    def validate(self):
        """Check the measure-and-reuse invariants; raises ValueError on breach."""
        measures = 0
        for i, ev in enumerate(self.events):
            if isinstance(ev, GateEvent):
                if any(not 0 <= q < self.n_qubits for q in ev.spec.qubits):
                    raise ValueError(f"event {i}: gate qubit out of range")
            elif isinstance(ev, MeasureEvent):
                if not 0 <= ev.qubit < self.n_qubits:
                    raise ValueError(f"event {i}: measured qubit out of range")
                nxt = self.events[i + 1] if i + 1 < len(self.events) else None
                if not (isinstance(nxt, ResetEvent) and nxt.qubit == ev.qubit):
                    raise ValueError(
                        f"event {i}: measure of qubit {ev.qubit} not followed by its reset"
                    )
                if self.site_map.get(measures) != ev.site:
                    raise ValueError(f"site_map mismatch at measure ordinal {measures}")
                measures += 1
        sites = self.measured_sites()
        if len(self.site_map) != measures or sorted(sites) != sorted(set(sites)):
            raise ValueError("site_map is not a bijection over the measured sites")
        if sorted(sites) != list(range(1, measures + 1)):
            raise ValueError("measured sites do not cover 1..n_sites exactly once")


# ------------------------------------------------- parameterized compilation


def _step_blocks(step) -> list[tuple[str, int, tuple[int, ...]]]:
    """(kind, n_params, rail positions) for the gates realizing one step.

    Site unitaries are single two- or three-qubit blocks. The fused final
    row is a staggered ladder of two-qubit blocks on rail pairs
    (j mod (k-1), j mod (k-1) + 1): depth k when the row's middle column
    takes a fresh qubit (the 3x3 case: 36 raw parameters), depth k-1
    otherwise.
    """
    k = step.n_rails
    if k == 1:
        return [("U3", 3, (0,))]
    if isinstance(step, SiteStep):
        if k == 2:
            return [("TwoQubitBlock", 12, (0, 1))]
        if k == 3:
            return [("ThreeQubitBlock", 24, (0, 1, 2))]
        n_blocks = k - 1
    else:
        n_blocks = k if step.fresh_positions and len(step.sites) >= 3 else k - 1
    return [("TwoQubitBlock", 12, (j % (k - 1), j % (k - 1) + 1)) for j in range(n_blocks)]


def layout_parameter_count(shape: LatticeShape) -> int:
    """Raw ansatz parameter count for the shape's block layout."""
    plan = _layout_plan(shape)
    return sum(n for step in plan.steps for _, n, _ in _step_blocks(step))


def layout_id_for(shape: LatticeShape, fused: bool = True) -> str:
    tag = "fused" if fused else "zigzag"
    return f"zigzag-{shape.rows}x{shape.cols}-nb{shape.bond_qubits}-{tag}"


def _check_parameterized(shape: LatticeShape, theta) -> np.ndarray:
    if shape.bond_qubits != 1:
        raise ValueError("the parameterized block layout is defined for bond_qubits = 1")
    theta = np.asarray(theta, dtype=float)
    expected = layout_parameter_count(shape)
    if theta.shape != (expected,):
        raise ValueError(
            f"parameter vector has length {theta.size}, layout requires {expected}"
        )
    if shape.rows == 3 and shape.cols == 3:
        assert expected == 144
    return theta


def compile_parameterized(shape: LatticeShape, theta) -> GateProgram:
    """Lower the block ansatz at parameters `theta` to a measure-and-reuse program."""
    theta = _check_parameterized(shape, theta)
    plan = _layout_plan(shape)
    events = []
    site_map = {}
    measures = 0
    offset = 0
    for step in plan.steps:
        for kind, n_par, rail_pos in _step_blocks(step):
            qubits = tuple(step.rails[p] for p in rail_pos)
            events.append(
                GateEvent(GateSpec(kind, tuple(theta[offset : offset + n_par]), qubits))
            )
            offset += n_par
        if isinstance(step, SiteStep):
            phys = [(step.phys_rail, step.site)]
        else:
            phys = [(step.rails[j], s) for j, s in enumerate(step.sites)]
        for q, s in phys:
            events.append(MeasureEvent(q, s))
            events.append(ResetEvent(q))
            site_map[measures] = s
            measures += 1
    prog = GateProgram(
        n_qubits=plan.n_qubits,
        events=tuple(events),
        site_map=site_map,
        layout_id=layout_id_for(shape),
    )
    prog.validate()
    return prog


def _step_unitary(step, theta, offset):
    """Realize one step's full unitary from its parameter slice."""
    k = step.n_rails
    u = None
    for kind, n_par, rail_pos in _step_blocks(step):
        p = theta[offset : offset + n_par]
        offset += n_par
        if kind == "U3":
            m = blocks.u3(*p)
        elif kind == "ThreeQubitBlock":
            m = blocks.three_qubit_block(p)
        else:
            m = blocks.two_qubit_block(p)
            if k > 2:
                lo = rail_pos[0]
                m = np.kron(np.kron(np.eye(1 << lo), m), np.eye(1 << (k - 2 - lo)))
        u = m if u is None else m @ u
    return u, offset


_PEPS_AXIS_ORDER = ("phys", "up", "left", "down", "right")


def _widen_axes(t, have_roles, need_roles):
    """Insert size-1 axes so `t` covers `need_roles` (both lists in PEPs order)."""
    new_shape = []
    ai = 0
    for role in need_roles:
        if role in have_roles:
            new_shape.append(t.shape[ai])
            ai += 1
        else:
            new_shape.append(1)
    return t.reshape(new_shape)


def tensors_from_parameters(shape: LatticeShape, theta) -> PepsNetwork:
    """The PEPs network whose contraction equals the compiled program's state.

    Bonds the layout leaves out (the final row's middle column) appear as
    dimension-1 axes so the network keeps the uniform grid structure.
    """
    theta = _check_parameterized(shape, theta)
    plan = _layout_plan(shape)
    grid = [[None] * shape.cols for _ in range(shape.rows)]
    offset = 0
    for step in plan.steps:
        u, offset = _step_unitary(step, theta, offset)
        if isinstance(step, SiteStep):
            t = blocks.unitary_to_tensor(u, step.fresh_positions)
            # axes: in-bonds (rail order), then outputs (out-bonds..., phys)
            roles = list(step.in_roles) + list(step.out_roles) + ["phys"]
            have = [role for role in _PEPS_AXIS_ORDER if role in roles]
            t = np.transpose(t, [roles.index(role) for role in have])
            r, c = divmod(step.site - 1, shape.cols)
            need = ["phys"] + list(present_roles(shape.rows, shape.cols, r, c))
            grid[r][c] = np.ascontiguousarray(_widen_axes(t, have, need))
        else:
            parts = blocks.split_final_row(u, step.fresh_positions)
            r = shape.rows - 1
            for c, part in enumerate(parts):
                have = ["phys"]
                if step.in_widths[c] > 0 and r > 0:
                    have.append("up")
                if c > 0:
                    have.append("left")
                if c < shape.cols - 1:
                    have.append("right")
                need = ["phys"] + list(present_roles(shape.rows, shape.cols, r, c))
                grid[r][c] = np.ascontiguousarray(_widen_axes(part, have, need))
    net = PepsNetwork(shape.rows, shape.cols, grid, chi=1 << shape.bond_qubits)
    return net


# ------------------------------------------------------ tensor compilation


def _nearest_isometry(m: np.ndarray) -> np.ndarray:
    u, _, vh = np.linalg.svd(m, full_matrices=False)
    return u @ vh


def _embed_unitary(iso: np.ndarray, n_rails: int, fresh_positions) -> np.ndarray:
    """Complete an isometry to a unitary whose clamped-rail-zero columns equal it.

    `iso` has 2**n_rails rows and one column per joint state of the
    non-clamped rails (rail bit order preserved). Completion columns fill
    the remaining column indices in increasing order, using the canonical
    Gram-Schmidt completion.
    """
    dim = 1 << n_rails
    clamp_mask = 0
    for p in fresh_positions:
        clamp_mask |= 1 << (n_rails - 1 - p)
    valid = [c for c in range(dim) if not (c & clamp_mask)]
    if iso.shape != (dim, len(valid)):
        raise ValueError(f"isometry shape {iso.shape} does not match rail layout")
    u0 = complete_isometry(iso)
    u = np.empty((dim, dim), dtype=complex)
    u[:, valid] = u0[:, : len(valid)]
    u[:, [c for c in range(dim) if c & clamp_mask]] = u0[:, len(valid) :]
    return u


def _site_matrix(net: PepsNetwork, step: SiteStep):
    """Reshape a site tensor to its (outputs x inputs) causal matrix."""
    r, c = divmod(step.site - 1, net.cols)
    t = net.tensors[r][c]
    roles = ["phys"] + list(present_roles(net.rows, net.cols, r, c))
    order = []
    for role in step.out_roles:
        order.append(roles.index(role))
    order.append(0)  # phys is the last output rail
    for role in step.in_roles:
        order.append(roles.index(role))
    # dim-1 axes (absent rails) fold into the reshape transparently
    leftover = [i for i in range(t.ndim) if i not in order]
    if any(t.shape[i] != 1 for i in leftover):
        raise AssertionError(f"unscheduled bond axis of size > 1 at site {step.site}")
    t = np.transpose(t, order + leftover)
    out_dim = 1 << step.n_rails
    return t.reshape(out_dim, -1)


def compile_tensors(net: PepsNetwork, final_row: str = "fused") -> GateProgram:
    """Embed each tensor of an isometric PEPs network into a unitary program.

    Every tensor must be isometric from its in-bonds to its out-bonds
    plus the physical leg within 1e-8 under the zig-zag orientation
    (IsometryViolation reports the offending site and residual). Bond
    dimensions must be powers of two; dimension-1 bonds use no register.
    """
    if final_row not in ("fused", "zigzag"):
        raise ValueError("final_row must be 'fused' or 'zigzag'")
    shape = LatticeShape(net.rows, net.cols, max(1, (net.chi - 1).bit_length()))
    dims = _edge_dims(net)
    fuse = final_row == "fused" and _worth_fusing(net, dims)
    plan = _schedule(shape, dims, fuse_final=fuse)
    events = []
    site_map = {}
    measures = 0
    for step in plan.steps:
        if isinstance(step, SiteStep):
            m = _site_matrix(net, step)
            residual = unitarity_defect(m)
            if residual > COMPILE_ISOMETRY_ATOL:
                raise IsometryViolation(step.site, residual)
            u = _embed_unitary(_nearest_isometry(m), step.n_rails, step.fresh_positions)
            events.append(GateEvent(GateSpec("CustomUnitary", (), step.rails, matrix=u)))
            phys = [(step.phys_rail, step.site)]
        else:
            m = _row_operator(net, step)
            residual = unitarity_defect(m)
            if residual > COMPILE_ISOMETRY_ATOL:
                raise IsometryViolation(step.sites[0], residual)
            u = _embed_unitary(_nearest_isometry(m), step.n_rails, step.fresh_positions)
            events.append(GateEvent(GateSpec("CustomUnitary", (), step.rails, matrix=u)))
            phys = [(step.rails[j], s) for j, s in enumerate(step.sites)]
        for q, s in phys:
            events.append(MeasureEvent(q, s))
            events.append(ResetEvent(q))
            site_map[measures] = s
            measures += 1
    prog = GateProgram(
        n_qubits=plan.n_qubits,
        events=tuple(events),
        site_map=site_map,
        layout_id=layout_id_for(shape, fused=fuse),
    )
    prog.validate()
    return prog


def _edge_dims(net: PepsNetwork) -> dict[Edge, int]:
    dims = {}
    for r in range(net.rows):
        for c in range(net.cols):
            s = _site(r, c, net.cols)
            if c + 1 < net.cols:
                dims[_edge(s, s + 1)] = net.bond_dim(r, c, "right")
            if r + 1 < net.rows:
                dims[_edge(s, s + net.cols)] = net.bond_dim(r, c, "down")
    return dims


def _worth_fusing(net: PepsNetwork, dims) -> bool:
    """Fuse the final row only if some of its horizontal bonds are nontrivial."""
    if net.rows == net.cols == 1:
        return True
    r = net.rows - 1
    return any(
        dims[_edge(_site(r, c, net.cols), _site(r, c + 1, net.cols))] > 1
        for c in range(net.cols - 1)
    ) or net.cols == 1


def _row_operator(net: PepsNetwork, step: FusedRowStep) -> np.ndarray:
    """Contract the final row to its (output bits x input bits) matrix."""
    r = net.rows - 1
    n = net.cols
    args = []
    phys_ids = list(range(n))
    up_ids = [n + c for c in range(n)]
    bond_base = 2 * n
    for c in range(n):
        t = net.tensors[r][c]
        roles = ["phys"] + list(present_roles(net.rows, net.cols, r, c))
        subs = [phys_ids[c]]
        for role in roles[1:]:
            if role == "up":
                subs.append(up_ids[c])
            elif role == "left":
                subs.append(bond_base + c - 1)
            elif role == "right":
                subs.append(bond_base + c)
        args.extend([t, subs])
    out_subs = phys_ids + [up_ids[c] for c in range(n) if step.in_widths[c] > 0]
    fused = np.einsum(*args, out_subs, optimize="greedy")
    return fused.reshape(1 << n, -1)


# ---------------------------------------------------------------- JSON form


def _event_to_dict(ev) -> dict:
    if isinstance(ev, GateEvent):
        d = {
            "type": "gate",
            "kind": ev.spec.kind,
            "params": list(ev.spec.params),
            "qubits": list(ev.spec.qubits),
        }
        if ev.spec.kind == "CustomUnitary":
            m = np.asarray(ev.spec.matrix)
            d["matrix"] = [[float(x.real), float(x.imag)] for x in m.reshape(-1)]
        return d
    if isinstance(ev, MeasureEvent):
        return {"type": "measure", "qubit": ev.qubit, "site": ev.site, "basis": ev.basis}
    return {"type": "reset", "qubit": ev.qubit}


def _event_from_dict(d):
    if d["type"] == "gate":
        matrix = None
        if d["kind"] == "CustomUnitary":
            flat = np.array([complex(re, im) for re, im in d["matrix"]])
            dim = int(round(np.sqrt(flat.size)))
            matrix = flat.reshape(dim, dim)
        return GateEvent(
            GateSpec(d["kind"], tuple(d["params"]), tuple(d["qubits"]), matrix=matrix)
        )
    if d["type"] == "measure":
        return MeasureEvent(d["qubit"], d["site"], d.get("basis", "Z"))
    return ResetEvent(d["qubit"])


def to_json(prog: GateProgram) -> str:
    doc = {
        "n_qubits": prog.n_qubits,
        "events": [_event_to_dict(ev) for ev in prog.events],
        "site_map": {str(k): v for k, v in sorted(prog.site_map.items())},
        "layout_id": prog.layout_id,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def from_json(text: str) -> GateProgram:
    doc = json.loads(text)
    prog = GateProgram(
        n_qubits=doc["n_qubits"],
        events=tuple(_event_from_dict(d) for d in doc["events"]),
        site_map={int(k): v for k, v in doc["site_map"].items()},
        layout_id=doc["layout_id"],
    )
    prog.validate()
    return prog


def with_noise(prog: GateProgram, p: float) -> GateProgram:
    if not 0.0 <= p <= 1.0:
        raise ValueError("depolarizing probability must lie in [0, 1]")
    return replace(prog, noise_p=float(p))
