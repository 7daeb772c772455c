import re

import pytest
from hypothesis import given, strategies as st

from difflab.counter_machine import (
    ACCEPT, REJECT, STEP_LIMIT, Branch, ExecResult, Instruction, MachineError, MachineState,
    Program, ProgramError, all_words, format_program, initial_state, parse_program, run, step,
    zero_patterns,
)

# instruction 32 of a 34-line program: r1 == 0 -> r2 += 1, jump 23; else jump 33
JUMP_EXAMPLE = "\n".join(
    [".alphabet a", ".registers 2"]
    + [f"{i}: HALT reject" for i in range(1, 32)]
    + ["32: CASE * z* -> (0,+1) HEAD 0 JUMP 23", "32: CASE * n* -> (0,0) HEAD 0 JUMP 33",
       "33: HALT reject", "34: HALT accept"]
)


def test_single_halt_program():
    p = parse_program("1: HALT accept")
    assert len(p) == 1 and p.registers == 0
    assert run(p, "", 10).verdict == ACCEPT


def test_fixture_shapes(anbn, parity):
    assert anbn.registers == 2 and len(anbn) == 4
    assert parity.registers == 1 and parity.alphabet == ("a",)


def test_dangling_jump_reports_line():
    src = "1: CASE * - -> () HEAD 0 JUMP 99\n2: HALT accept\n3: HALT reject"
    with pytest.raises(ProgramError, match="dangling jump target 99") as e:
        parse_program(".registers 0\n.alphabet a\n" + src)
    assert e.value.line == 3


def test_non_total_table():
    with pytest.raises(ProgramError, match="not total"):
        parse_program(".alphabet a\n.registers 1\n1: CASE a z -> (0) HEAD 0 JUMP 2\n2: HALT accept")


def test_overlapping_rows_rejected():
    src = ".alphabet a\n.registers 1\n1: CASE * * -> (0) HEAD 0 JUMP 2\n1: CASE a z -> (1) HEAD 0 JUMP 2\n2: HALT accept"
    with pytest.raises(ProgramError, match="overlaps line 3"):
        parse_program(src)


@pytest.mark.parametrize(
    "src, msg",
    [
        ("1: HALT maybe", "accept or reject"),
        ("1: JUMP 2", "syntax error"),
        (".registers 1\n1: CASE * * -> (2) HEAD 0 JUMP 1", r"\{-1, 0, \+1\}"),
        (".registers 1\n1: CASE * * -> (0) HEAD 2 JUMP 1", "head move"),
        ("2: HALT accept", "numbered 1..N"),
        (".bogus 1", "unknown directive"),
    ],
)
def test_parse_errors(src, msg):
    with pytest.raises(ProgramError, match=msg):
        parse_program(src)


def test_jump_example_zero_branch():
    p = parse_program(JUMP_EXAMPLE)
    s = step(p, MachineState((0, 4), 1, 32), "a")
    assert s.registers == (0, 5) and s.pc == 23 and s.head == 1


def test_jump_example_nonzero_branch():
    p = parse_program(JUMP_EXAMPLE)
    s = step(p, MachineState((5, 4), 1, 32), "a")
    assert s.registers == (5, 4) and s.pc == 33


def test_halt_step_returns_result(anbn):
    r = step(anbn, MachineState((0, 0), 1, 3), "ab")
    assert isinstance(r, ExecResult) and r.verdict == ACCEPT


def test_run_examples(anbn):
    assert run(anbn, "aabb", 100).verdict == ACCEPT
    assert run(anbn, "aab", 100).verdict == REJECT
    assert run(anbn, "aabb", 0).verdict == STEP_LIMIT


def test_trace_of_aaabbb(anbn):
    r = run(anbn, "aaabbb", 100)
    assert r.steps == 8 and len(r.trace) == 9
    assert r.trace[0] == initial_state(anbn)
    assert r.trace[3].registers == (3, 0) and r.trace[-1].registers == (0, 3)


def test_head_leaving_tape_is_an_error():
    p = parse_program(".alphabet a\n.registers 0\n1: CASE * - -> () HEAD -1 JUMP 1")
    with pytest.raises(MachineError, match="off the tape"):
        run(p, "a", 10)


def test_registers_may_go_negative():
    p = parse_program(".alphabet a\n.registers 1\n1: CASE * z -> (-1) HEAD 0 JUMP 2\n1: CASE * n -> (0) HEAD 0 JUMP 2\n2: HALT accept")
    r = run(p, "", 5)
    assert r.trace[-1].registers == (-1,)


def test_anbn_exhaustive(anbn):
    # independent oracle: a block of a's then an equal block of b's
    pat = re.compile(r"^(a*)(b*)$")
    accepted = set()
    for w in all_words("ab", 16):
        verdict = run(anbn, w, 1000).verdict
        m = pat.match(w)
        expect = ACCEPT if m and len(m.group(1)) == len(m.group(2)) else REJECT
        assert verdict == expect, w
        if verdict == ACCEPT:
            accepted.add(w)
    assert accepted == {"a" * n + "b" * n for n in range(9)}


def test_parity_exhaustive(parity):
    for n in range(30):
        assert run(parity, "a" * n, 1000).verdict == (ACCEPT if n % 2 == 0 else REJECT)


def test_format_round_trip(anbn):
    again = parse_program(format_program(anbn))
    for w in all_words("ab", 6):
        assert run(again, w, 100) == run(anbn, w, 100)


@st.composite
def programs(draw):
    k = draw(st.integers(0, 2))
    n = draw(st.integers(2, 5))
    alphabet = ("a", "b")
    instrs = []
    for num in range(1, n + 1):
        if num == n or draw(st.booleans()) and num > 1:
            instrs.append(Instruction(num, halt=draw(st.sampled_from([ACCEPT, REJECT]))))
            continue
        table = {}
        for sym in alphabet + ("^", "$"):
            moves = [0, 1] if sym == "^" else [-1, 0] if sym == "$" else [-1, 0, 1]
            for z in zero_patterns(k):
                deltas = tuple(draw(st.sampled_from([-1, 0, 1])) for _ in range(k))
                table[(sym, z)] = Branch(deltas, draw(st.sampled_from(moves)), draw(st.integers(1, n)))
        instrs.append(Instruction(num, table=table))
    return Program(tuple(instrs), k, alphabet)


@given(programs(), st.text("ab", max_size=5))
def test_steps_are_unit_moves(p, w):
    r = run(p, w, 60)
    for a, b in zip(r.trace, r.trace[1:]):
        assert all(abs(x - y) <= 1 for x, y in zip(a.registers, b.registers))
        assert abs(a.head - b.head) <= 1
        assert 0 <= b.head <= len(w) + 1
        assert b.step_count == a.step_count + 1


@given(programs(), st.text("ab", max_size=5))
def test_run_is_deterministic(p, w):
    assert run(p, w, 60) == run(p, w, 60)


@given(programs(), st.text("ab", max_size=4))
def test_halted_iff_verdict(p, w):
    r = run(p, w, 40)
    assert r.halted == (r.verdict in (ACCEPT, REJECT))
    if r.halted:
        assert p[r.final.pc].halt == r.verdict
