"""Shipped fixture programs and advice files."""

from importlib import resources

from ..counter_machine import Program, parse_program

PROGRAMS = ("anbn", "parity")


def program_source(name: str) -> str:
    if name not in PROGRAMS:
        raise KeyError(f"unknown fixture program {name!r}; have {PROGRAMS}")
    return resources.files(__package__).joinpath(f"{name}.cm").read_text(encoding="utf-8")


def load_program(name: str) -> Program:
    return parse_program(program_source(name))


def read_text(filename: str) -> str:
    return resources.files(__package__).joinpath(filename).read_text(encoding="utf-8")
