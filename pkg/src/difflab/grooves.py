"""Lower a counter-machine run into a groove force field (the "pinball").

State space is R^(k+3): k register axes, one head axis, one program-counter
axis and one jump-lane axis.  A machine state (registers, head, pc) sits in
the cell (registers, head, pc, 0).  Every (instruction p, jump target p')
pair that occurs in the run owns a bay b >= 1 on the negative pc axis; bays
are numbered by target first, then source.  One machine step is drawn as a
chain of unit lattice moves:

    1. lane 0 -> +p                     (leave the state cell)
    2. pc p -> -b        at lane p      (enter the bay)
    3. all but the last register/head move at lane p
    4. lane p -> p-1
    5. the last register/head move at lane p-1
    6. lane p-1 -> -b    at pc -b
    7. pc -b -> p'       at lane -b
    8. lane -b -> 0      at pc p'       (arrive in the successor's cell)

Departures climb into positive lanes and arrivals come up from negative
lanes, so a state cell is never entered and left along the same wire.  The
chain is checked to be self-avoiding; a revisited cell raises GrooveCollision.

The field is  f(x) = -x/2 + tangential(x) + confinement(x)  where both parts
are measured from the nearest point of the smoothed centreline (corners
filleted by quarter arcs of radius L/2).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .counter_machine import ExecResult, MachineState, Program, initial_state, step, tape_of

SCHEMA_VERSION = 1


class CompileError(ValueError):
    pass


class GrooveCollision(CompileError):
    """Two parts of the groove path claim the same lattice cell."""


Cell = tuple[int, ...]


@dataclass(frozen=True)
class PathSegment:
    start: Cell
    end: Cell

    def __post_init__(self):
        if len(self.start) != len(self.end) or sum(abs(b - a) for a, b in zip(self.start, self.end)) != 1:
            raise ValueError(f"not a unit lattice step: {self.start} -> {self.end}")

    @property
    def axis(self) -> int:
        return next(i for i, (a, b) in enumerate(zip(self.start, self.end)) if a != b)

    @property
    def sign(self) -> int:
        i = self.axis
        return self.end[i] - self.start[i]


@dataclass(frozen=True)
class GrooveGraph:
    """A single self-avoiding chain of cells from START to a HALT cell."""

    registers: int
    cells: tuple[Cell, ...]
    # position in ``cells`` of each machine state along the run
    state_positions: tuple[int, ...]
    verdict: str
    # length of the source program (0 when unknown)
    instructions: int = 0

    @property
    def dim(self) -> int:
        return self.registers + 3

    @property
    def start(self) -> Cell:
        return self.cells[0]

    @property
    def terminal(self) -> Cell:
        return self.cells[-1]

    @property
    def segments(self) -> list[PathSegment]:
        return [PathSegment(a, b) for a, b in zip(self.cells, self.cells[1:])]

    def successors(self) -> dict[Cell, list[Cell]]:
        out: dict[Cell, list[Cell]] = {}
        for seg in self.segments:
            out.setdefault(seg.start, []).append(seg.end)
        return out

    def walk(self, limit: int | None = None) -> list[Cell]:
        """Follow groove directions from START until no outgoing groove."""
        succ = self.successors()
        limit = limit or len(self.cells) + 1
        path = [self.start]
        while len(path) <= limit:
            nxt = succ.get(path[-1])
            if not nxt:
                break
            if len(nxt) > 1:
                raise GrooveCollision(f"cell {path[-1]} has {len(nxt)} outgoing grooves")
            path.append(nxt[0])
        return path

    @property
    def state_cells(self) -> list[Cell]:
        return [self.cells[i] for i in self.state_positions]


def state_cell(s: MachineState) -> Cell:
    return tuple(s.registers) + (s.head, s.pc, 0)


def transit(pre: MachineState, post: MachineState, k: int, bay: int) -> list[Cell]:
    """Cells visited after ``pre``'s cell, ending with ``post``'s cell."""
    head, pc, lane = k, k + 1, k + 2
    cur = list(state_cell(pre))
    out: list[Cell] = []

    def move(axis: int, sign: int, count: int = 1):
        for _ in range(count):
            cur[axis] += sign
            out.append(tuple(cur))

    p, p2 = pre.pc, post.pc
    moves = [(i, post.registers[i] - pre.registers[i]) for i in range(k)]
    moves = [(i, d) for i, d in moves if d]
    if post.head != pre.head:
        moves.append((head, post.head - pre.head))

    move(lane, +1, p)
    move(pc, -1, p + bay)
    for axis, sign in moves[:-1]:
        move(axis, sign)
    move(lane, -1)
    if moves:
        move(*moves[-1])
    move(lane, -1, p - 1 + bay)
    move(pc, +1, bay + p2)
    move(lane, +1, bay)
    assert tuple(cur) == state_cell(post)
    return out


def assign_bays(states: Sequence[MachineState]) -> dict[tuple[int, int], int]:
    pairs = {(a.pc, b.pc) for a, b in zip(states, states[1:])}
    return {pair: n for n, pair in enumerate(sorted(pairs, key=lambda t: (t[1], t[0])), start=1)}


def reachable_run(p: Program, word, max_steps: int) -> tuple[list[MachineState], str]:
    tape = tape_of(p, word)
    s = initial_state(p)
    states = [s]
    for _ in range(max_steps):
        r = step(p, s, tape)
        if isinstance(r, ExecResult):
            return states, r.verdict
        s = r
        states.append(s)
    raise CompileError(f"program did not halt within {max_steps} steps on {''.join(word)!r}")


def compile_graph(p: Program, word, max_steps: int = 10_000) -> GrooveGraph:
    states, verdict = reachable_run(p, word, max_steps)
    k = p.registers
    cells: list[Cell] = [state_cell(states[0])]
    positions = [0]
    owner: dict[Cell, int] = {cells[0]: 0}
    bays = assign_bays(states)
    for n, (a, b) in enumerate(zip(states, states[1:]), start=1):
        for c in transit(a, b, k, bays[(a.pc, b.pc)]):
            if c in owner:
                raise GrooveCollision(
                    f"cell {c} is used by step {owner[c]} and again by step {n} "
                    f"(instruction {a.pc}); the groove layout cannot separate them"
                )
            owner[c] = n
            cells.append(c)
        positions.append(len(cells) - 1)
    return GrooveGraph(k, tuple(cells), tuple(positions), verdict, len(p))


@dataclass
class ForceFieldSpec:
    graph: GrooveGraph
    L: float = 6.0
    r: float | None = None
    kappa: float = 4.0
    v: float = 1.0
    s: float | None = None
    # derived geometry (numba-friendly arrays)
    arrays: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.r is None:
            self.r = self.L / 4
        if self.s is None:
            self.s = self.L / 8
        if not self.L > 0:
            raise ValueError("L must be > 0")
        if not 0 < self.r < self.L / 2:
            raise ValueError("need 0 < r < L/2")
        if not 0 < self.s <= self.r:
            raise ValueError("need 0 < s <= r")
        if not (self.kappa > 0 and self.v > 0):
            raise ValueError("kappa and v must be > 0")
        self.arrays = _build_arrays(self.graph, self.L)
        self.arrays["prm"] = np.array(
            [self.L, self.r, self.kappa, self.v, self.s, self.arrays["total"],
             self.leak_radius, self.halt_radius]
        )

    @property
    def dim(self) -> int:
        return self.graph.dim

    @property
    def fillet(self) -> float:
        return self.L / 2

    @property
    def leak_radius(self) -> float:
        return self.L / 2

    @property
    def halt_radius(self) -> float:
        return self.r / 2

    @property
    def start_point(self) -> np.ndarray:
        return self.L * np.asarray(self.graph.start, dtype=float)

    @property
    def terminal_point(self) -> np.ndarray:
        return self.L * np.asarray(self.graph.terminal, dtype=float)

    @property
    def path_length(self) -> float:
        return float(self.arrays["total"])

    def with_L(self, L: float) -> "ForceFieldSpec":
        """Same geometry and constants at a new cell size (r, s keep their ratio to L)."""
        return ForceFieldSpec(self.graph, L, self.r * L / self.L, self.kappa, self.v, self.s * L / self.L)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": SCHEMA_VERSION,
                "registers": self.graph.registers,
                "verdict": self.graph.verdict,
                "segments": [[list(a.start), list(a.end)] for a in self.graph.segments],
                "start": list(self.graph.start),
                "state_positions": list(self.graph.state_positions),
                "instructions": self.graph.instructions,
                "L": self.L,
                "r": self.r,
                "kappa": self.kappa,
                "v": self.v,
                "s": self.s,
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "ForceFieldSpec":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {doc.get('schema_version')}")
        cells = [tuple(doc["start"])]
        for a, b in doc["segments"]:
            if tuple(a) != cells[-1]:
                raise ValueError("segments do not form a chain from start")
            PathSegment(tuple(a), tuple(b))
            cells.append(tuple(b))
        graph = GrooveGraph(doc["registers"], tuple(cells), tuple(doc["state_positions"]), doc["verdict"],
                             doc.get("instructions", 0))
        return cls(graph, doc["L"], doc["r"], doc["kappa"], doc["v"], doc["s"])


def compile(p: Program, word, *, L: float = 6.0, r=None, kappa=4.0, v=1.0, s=None,
            max_steps: int = 10_000) -> ForceFieldSpec:
    """Compile (program, input word) into a force-field description."""
    return ForceFieldSpec(compile_graph(p, word, max_steps), L, r, kappa, v, s)


def _corners(cells: Sequence[Cell]) -> tuple[list[np.ndarray], list[np.ndarray]]:
    pts = [np.asarray(cells[0], dtype=float)]
    dirs: list[np.ndarray] = []
    for a, b in zip(cells, cells[1:]):
        u = np.asarray(b, dtype=float) - np.asarray(a, dtype=float)
        if dirs and np.array_equal(u, dirs[-1]):
            pts[-1] = np.asarray(b, dtype=float)
        else:
            dirs.append(u)
            pts.append(np.asarray(b, dtype=float))
    return pts, dirs


def _build_arrays(graph: GrooveGraph, L: float) -> dict:
    D = graph.dim
    R = L / 2
    pts, dirs = _corners(graph.cells)
    pts = [L * p for p in pts]
    prims = []  # (kind, P, U, W, par)
    if not dirs:
        prims.append((K.POINT, pts[0], np.zeros(D), np.zeros(D), 0.0))
    for i, u in enumerate(dirs):
        a = pts[i] + (R * u if i > 0 else 0.0)
        b = pts[i + 1] - (R * u if i < len(dirs) - 1 else 0.0)
        length = float(np.dot(b - a, u))
        if length > 1e-12 * L:
            prims.append((K.SEG, a, u, np.zeros(D), length))
        if i < len(dirs) - 1:
            w = dirs[i + 1]
            centre = pts[i + 1] - R * u + R * w
            prims.append((K.ARC, centre, -w, u, R))

    n = len(prims)
    kind = np.array([p[0] for p in prims], dtype=np.int64)
    P = np.array([p[1] for p in prims], dtype=float).reshape(n, D)
    U = np.array([p[2] for p in prims], dtype=float).reshape(n, D)
    W = np.array([p[3] for p in prims], dtype=float).reshape(n, D)
    par = np.array([p[4] for p in prims], dtype=float)
    plen = np.where(kind == K.SEG, par, np.where(kind == K.ARC, 0.5 * math.pi * par, 0.0))
    s0 = np.concatenate([[0.0], np.cumsum(plen)[:-1]])
    total = float(plen.sum())

    lo = np.empty((n, D))
    hi = np.empty((n, D))
    for j in range(n):
        if kind[j] == K.SEG:
            ends = np.stack([P[j], P[j] + par[j] * U[j]])
        elif kind[j] == K.ARC:
            ends = np.stack([P[j] + par[j] * U[j], P[j] + par[j] * W[j]])
        else:
            ends = P[j][None, :]
        lo[j], hi[j] = ends.min(0), ends.max(0)
    # neighbour lists: primitives whose boxes come within 1.5 L of each other
    gap = np.maximum(0.0, np.maximum(lo[:, None, :] - hi[None, :, :], lo[None, :, :] - hi[:, None, :]))
    close = np.sqrt((gap**2).sum(-1)) <= 1.5 * L
    near_ptr = np.zeros(n + 1, dtype=np.int64)
    near_idx = []
    for j in range(n):
        idx = np.flatnonzero(close[j])
        near_idx.extend(idx.tolist())
        near_ptr[j + 1] = len(near_idx)

    arrays = dict(kind=kind, P=P, U=U, W=W, par=par, s0=s0, total=total,
                  near_ptr=near_ptr, near_idx=np.array(near_idx, dtype=np.int64), plen=plen,
                  lo=lo, hi=hi)
    states = L * np.asarray(graph.state_cells, dtype=float).reshape(-1, D)
    _, dist, s_at = _field_raw(arrays, states, np.array([L, L / 4, 1.0, 1.0, L / 8, total, L / 2, L / 8]))
    if np.any(dist > 1e-9 * L):
        raise CompileError("state cell is off the smoothed groove")
    arrays["state_s"] = s_at
    return arrays


def _field_raw(arrays, X, prm):
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=float)
    n, D = X.shape
    tang = np.empty((n, D))
    conf = np.empty((n, D))
    dist = np.empty(n)
    s = np.empty(n)
    K.field_batch(X, arrays["kind"], arrays["P"], arrays["U"], arrays["W"], arrays["par"],
                  arrays["s0"], prm, tang, conf, dist, s)
    return (tang, conf), dist, s


def field_parts(spec: ForceFieldSpec, X) -> tuple[np.ndarray, np.ndarray]:
    """Tangential and confinement parts at points X, shape (n, D) each."""
    X = np.asarray(X, dtype=float)
    (tang, conf), _, _ = _field_raw(spec.arrays, X, spec.arrays["prm"])
    if X.ndim == 1:
        return tang[0], conf[0]
    return tang, conf


def distance_to_groove(spec: ForceFieldSpec, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    _, dist, _ = _field_raw(spec.arrays, X, spec.arrays["prm"])
    return dist[0] if X.ndim == 1 else dist


def eval_force(spec: ForceFieldSpec, x) -> np.ndarray:
    """f(x) = -x/2 + tangential(x) + confinement(x); accepts one point or a batch."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != spec.dim:
        raise ValueError(f"expected points in R^{spec.dim}, got shape {x.shape}")
    tang, conf = field_parts(spec, x)
    return -0.5 * x + tang + conf


def lipschitz_bound(spec: ForceFieldSpec) -> float:
    """Analytic Lipschitz bound of tangential + confinement inside the corridor.

    Confinement is the gradient of a potential whose Hessian eigenvalues are
    at most kappa.  The tangential part turns at rate v / (L/2 - r) on the
    inner edge of a fillet and ramps down over the last L/2 of the path
    (slope 3v/L).  With the default r = L/4, s = L/8 this is
    kappa + (7/8) v / s.
    """
    return spec.kappa + spec.v / (spec.L / 2 - spec.r) + 3 * spec.v / spec.L


def sample_corridor(spec: ForceFieldSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points within distance r of the centreline.

    The draws depend only on the graph and rng, so two specs that differ only
    in L get geometrically matched samples.
    """
    a = spec.arrays
    D = spec.dim
    plen = a["plen"]
    total = plen.sum()
    if total == 0.0:
        centre = np.repeat(a["P"][:1], n, axis=0)
        tang = np.zeros((n, D))
    else:
        s = rng.uniform(0.0, total, size=n)
        j = np.minimum(np.searchsorted(np.cumsum(plen), s, side="right"), len(plen) - 1)
        u = s - a["s0"][j]
        centre = np.empty((n, D))
        tang = np.empty((n, D))
        for m in range(n):
            jj = j[m]
            if a["kind"][jj] == K.SEG:
                centre[m] = a["P"][jj] + u[m] * a["U"][jj]
                tang[m] = a["U"][jj]
            elif a["kind"][jj] == K.ARC:
                th = u[m] / a["par"][jj]
                centre[m] = a["P"][jj] + a["par"][jj] * (np.cos(th) * a["U"][jj] + np.sin(th) * a["W"][jj])
                tang[m] = -np.sin(th) * a["U"][jj] + np.cos(th) * a["W"][jj]
            else:
                centre[m] = a["P"][jj]
                tang[m] = 0.0
    g = rng.standard_normal((n, D))
    g -= (g * tang).sum(1, keepdims=True) * tang
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radius = spec.r * rng.uniform(0.0, 1.0, size=n)
    return centre + radius[:, None] * g


def local_lipschitz(spec: ForceFieldSpec, X, Y, part: str = "all") -> np.ndarray:
    """|f(x) - f(y)| / |x - y| per pair, without the -x/2 term."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    tx, cx = field_parts(spec, X)
    ty, cy = field_parts(spec, Y)
    if part == "all":
        fx, fy = tx + cx, ty + cy
    elif part == "tangential":
        fx, fy = tx, ty
    elif part == "confinement":
        fx, fy = cx, cy
    else:
        raise ValueError(f"unknown part {part!r}")
    return np.linalg.norm(fx - fy, axis=1) / np.linalg.norm(X - Y, axis=1)


def lipschitz_estimate(spec: ForceFieldSpec, samples: int = 20_000, seed: int = 0,
                       part: str = "all", rel_step: float = 1e-4) -> float:
    """Empirical sup of |f(x)-f(y)|/|x-y| over close pairs in the corridor."""
    if samples < 2:
        raise ValueError("samples must be >= 2")
    rng = np.random.default_rng(seed)
    X = sample_corridor(spec, samples, rng)
    dirs = rng.standard_normal(X.shape)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    Y = X + rel_step * spec.L * dirs
    inside = distance_to_groove(spec, Y) <= spec.r
    ratios = local_lipschitz(spec, X[inside], Y[inside], part)
    return float(ratios.max()) if ratios.size else 0.0
