"""Counter machines with a read-only input tape.

A program is a numbered list of instructions.  Each non-HALT instruction is a
dense branch table keyed by (symbol under the read head, zero/nonzero pattern
of the registers); a branch adds a delta in {-1, 0, +1} to every register,
moves the head by at most one cell and jumps.

Assembly format, one instruction row per line::

    .alphabet ab
    .registers 2
    1: CASE a ** -> (+1,0) HEAD +1 JUMP 1
    1: CASE b ** -> (0,0) HEAD 0 JUMP 2
    ...
    3: HALT accept

``*`` is a wildcard in both the symbol and the zero-pattern field (a lone
``*`` zero-pattern covers every register).  ``z``/``n`` mark a register as
zero/nonzero.  Rows that overlap are rejected, and the expanded table must be
total.  ``#`` starts a comment.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

BEGIN = "^"
END = "$"
ZERO = "z"
NONZERO = "n"

ACCEPT = "accept"
REJECT = "reject"
STEP_LIMIT = "step-limit-exceeded"


class ProgramError(ValueError):
    """Malformed or inconsistent program source."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MachineError(RuntimeError):
    """Raised when a program drives the read head off the tape."""


@dataclass(frozen=True)
class Branch:
    deltas: tuple[int, ...]
    head_move: int
    jump: int


@dataclass(frozen=True)
class Instruction:
    number: int
    halt: str | None = None
    # (symbol, zero-pattern) -> Branch; zero-pattern is a string over {z, n}
    table: dict[tuple[str, str], Branch] = field(default_factory=dict, compare=False)

    @property
    def is_halt(self) -> bool:
        return self.halt is not None


@dataclass(frozen=True)
class Program:
    instructions: tuple[Instruction, ...]
    registers: int
    alphabet: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.instructions)

    def __getitem__(self, number: int) -> Instruction:
        if not 1 <= number <= len(self.instructions):
            raise IndexError(f"no instruction {number}")
        return self.instructions[number - 1]

    @property
    def tape_symbols(self) -> tuple[str, ...]:
        return self.alphabet + (BEGIN, END)


@dataclass(frozen=True)
class MachineState:
    registers: tuple[int, ...]
    head: int
    pc: int
    step_count: int = 0

    def key(self) -> tuple:
        """(registers, head, pc) without the step counter."""
        return (self.registers, self.head, self.pc)


@dataclass(frozen=True)
class ExecResult:
    verdict: str
    steps: int
    trace: tuple[MachineState, ...] = ()
    final: MachineState | None = None

    @property
    def halted(self) -> bool:
        return self.verdict in (ACCEPT, REJECT)


def zero_patterns(k: int) -> list[str]:
    return ["".join(p) for p in itertools.product((ZERO, NONZERO), repeat=k)]


def zero_pattern_of(registers: Sequence[int]) -> str:
    return "".join(ZERO if r == 0 else NONZERO for r in registers)


_HALT_RE = re.compile(r"^(\d+)\s*:\s*HALT\s+(\w+)$", re.IGNORECASE)
_CASE_RE = re.compile(
    r"^(\d+)\s*:\s*CASE\s+(\S+)\s+(\S+)\s*->\s*\(([^)]*)\)\s*"
    r"HEAD\s+([+\-−]?\d+)\s+JUMP\s+(\d+)$",
    re.IGNORECASE,
)


def _to_int(text: str, line: int) -> int:
    text = text.strip().replace("−", "-")
    try:
        return int(text)
    except ValueError:
        raise ProgramError(f"not an integer: {text!r}", line) from None


def parse_program(text: str) -> Program:
    """Parse and validate program source."""
    alphabet: list[str] | None = None
    k: int | None = None
    halts: dict[int, tuple[str, int]] = {}
    rows: dict[int, list[tuple[int, str, str, tuple[int, ...], int, int]]] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("."):
            name, _, value = line.partition(" ")
            value = value.strip()
            if name == ".alphabet":
                alphabet = list(value.replace(",", " ").split()) if " " in value or "," in value else list(value)
            elif name == ".registers":
                k = _to_int(value, lineno)
                if k < 0:
                    raise ProgramError("register count must be >= 0", lineno)
            else:
                raise ProgramError(f"unknown directive {name}", lineno)
            continue
        m = _HALT_RE.match(line)
        if m:
            num, verdict = int(m.group(1)), m.group(2).lower()
            if verdict not in (ACCEPT, REJECT):
                raise ProgramError(f"HALT verdict must be accept or reject, got {verdict!r}", lineno)
            if num in halts or num in rows:
                raise ProgramError(f"instruction {num} defined twice", lineno)
            halts[num] = (verdict, lineno)
            continue
        m = _CASE_RE.match(line)
        if not m:
            raise ProgramError(f"syntax error: {raw.strip()!r}", lineno)
        num = int(m.group(1))
        if num in halts:
            raise ProgramError(f"instruction {num} defined twice", lineno)
        deltas_text = m.group(4).strip()
        deltas = tuple(_to_int(d, lineno) for d in deltas_text.split(",")) if deltas_text else ()
        head = _to_int(m.group(5), lineno)
        rows.setdefault(num, []).append(
            (lineno, m.group(2), m.group(3), deltas, head, int(m.group(6)))
        )

    if k is None:
        widths = {len(r[3]) for rs in rows.values() for r in rs}
        if len(widths) > 1:
            raise ProgramError("inconsistent register delta widths")
        k = widths.pop() if widths else 0
    if alphabet is None:
        alphabet = sorted(
            {r[1] for rs in rows.values() for r in rs} - {"*", BEGIN, END}
        )
    return build_program(k, alphabet, halts, rows)


def build_program(k, alphabet, halts, rows) -> Program:
    alphabet = tuple(alphabet)
    if len(set(alphabet)) != len(alphabet):
        raise ProgramError("duplicate alphabet symbol")
    if BEGIN in alphabet or END in alphabet or "*" in alphabet:
        raise ProgramError("alphabet may not contain ^, $ or *")
    numbers = sorted(set(halts) | set(rows))
    if not numbers:
        raise ProgramError("empty program")
    if numbers != list(range(1, len(numbers) + 1)):
        raise ProgramError(f"instructions must be numbered 1..N, got {numbers}")
    n_instr = len(numbers)
    symbols = alphabet + (BEGIN, END)
    patterns = zero_patterns(k)

    instructions = []
    for num in numbers:
        if num in halts:
            instructions.append(Instruction(num, halt=halts[num][0]))
            continue
        table: dict[tuple[str, str], Branch] = {}
        origin: dict[tuple[str, str], int] = {}
        for lineno, sym, zpat, deltas, head, jump in rows[num]:
            if len(deltas) != k:
                raise ProgramError(f"expected {k} register deltas, got {len(deltas)}", lineno)
            if any(d not in (-1, 0, 1) for d in deltas):
                raise ProgramError("register deltas must be in {-1, 0, +1}", lineno)
            if head not in (-1, 0, 1):
                raise ProgramError("head move must be in {-1, 0, +1}", lineno)
            if not 1 <= jump <= n_instr:
                raise ProgramError(f"dangling jump target {jump}", lineno)
            if sym != "*" and sym not in symbols:
                raise ProgramError(f"unknown symbol {sym!r}", lineno)
            if zpat == "*":
                zpat = "*" * k
            elif zpat == "-" and k == 0:
                zpat = ""
            if len(zpat) != k or any(c not in "zn*" for c in zpat):
                raise ProgramError(f"bad zero-pattern {zpat!r} for {k} registers", lineno)
            branch = Branch(deltas, head, jump)
            for s in symbols if sym == "*" else (sym,):
                for z in patterns:
                    if all(p in ("*", c) for p, c in zip(zpat, z)):
                        if (s, z) in table:
                            raise ProgramError(
                                f"row overlaps line {origin[(s, z)]} on ({s}, {z or '-'})", lineno
                            )
                        table[(s, z)] = branch
                        origin[(s, z)] = lineno
        missing = [(s, z) for s in symbols for z in patterns if (s, z) not in table]
        if missing:
            s, z = missing[0]
            raise ProgramError(
                f"instruction {num}: branch table not total, missing ({s}, {z or '-'})"
                + (f" and {len(missing) - 1} more" if len(missing) > 1 else "")
            )
        instructions.append(Instruction(num, table=table))
    return Program(tuple(instructions), k, alphabet)


def format_program(p: Program) -> str:
    """Render a program back to (fully expanded) assembly source."""
    out = [".alphabet " + " ".join(p.alphabet), f".registers {p.registers}"]
    for ins in p.instructions:
        if ins.is_halt:
            out.append(f"{ins.number}: HALT {ins.halt}")
            continue
        for (sym, z), b in ins.table.items():
            deltas = ",".join(f"{d:+d}" if d else "0" for d in b.deltas)
            out.append(
                f"{ins.number}: CASE {sym} {z or '-'} -> ({deltas}) HEAD {b.head_move:+d} JUMP {b.jump}"
            )
    return "\n".join(out) + "\n"


def tape_of(p: Program, word: str | Sequence[str]) -> tuple[str, ...]:
    word = tuple(word)
    bad = [c for c in word if c not in p.alphabet]
    if bad:
        raise ValueError(f"input symbol {bad[0]!r} not in alphabet {p.alphabet}")
    return (BEGIN,) + word + (END,)


def initial_state(p: Program) -> MachineState:
    return MachineState(registers=(0,) * p.registers, head=1, pc=1)


def branch_for(p: Program, s: MachineState, tape: Sequence[str]) -> Branch:
    return p[s.pc].table[(tape[s.head], zero_pattern_of(s.registers))]


def step(p: Program, s: MachineState, word) -> MachineState | ExecResult:
    """Execute the instruction at ``s.pc``.

    Returns the successor state, or an ExecResult when ``s.pc`` is a HALT.
    """
    tape = word if isinstance(word, tuple) and word[:1] == (BEGIN,) else tape_of(p, word)
    ins = p[s.pc]
    if ins.is_halt:
        return ExecResult(ins.halt, s.step_count, final=s)
    b = ins.table[(tape[s.head], zero_pattern_of(s.registers))]
    head = s.head + b.head_move
    if not 0 <= head <= len(tape) - 1:
        raise MachineError(
            f"instruction {s.pc} moves the head to {head}, off the tape [0, {len(tape) - 1}]"
        )
    regs = tuple(r + d for r, d in zip(s.registers, b.deltas))
    return MachineState(regs, head, b.jump, s.step_count + 1)


def run(p: Program, word, step_limit: int, record_trace: bool = True) -> ExecResult:
    """Run from the initial state until HALT or ``step_limit`` step() calls."""
    if step_limit < 0:
        raise ValueError("step_limit must be >= 0")
    tape = tape_of(p, word)
    s = initial_state(p)
    trace = [s] if record_trace else []
    for _ in range(step_limit):
        r = step(p, s, tape)
        if isinstance(r, ExecResult):
            return replace(r, trace=tuple(trace))
        s = r
        if record_trace:
            trace.append(s)
    return ExecResult(STEP_LIMIT, s.step_count, tuple(trace), final=s)


def all_words(alphabet: Iterable[str], max_len: int):
    alphabet = tuple(alphabet)
    for n in range(max_len + 1):
        for w in itertools.product(alphabet, repeat=n):
            yield "".join(w)
