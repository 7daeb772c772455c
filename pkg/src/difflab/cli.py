"""difflab command line: one subcommand per experiment kind."""

from __future__ import annotations

import json
import logging
import sys

import click

from . import experiments as E

# subcommand path -> config kind
COMMANDS = {
    ("cm", "run"): "cm-run",
    ("pinball", "simulate"): "pinball",
    ("pinball", "leakage"): "leakage",
    ("diffusion", "converge"): "converge",
    ("diffusion", "prefix"): "prefix",
    ("diffusion", "derandomize"): "derandomize",
    ("circuit", "eval"): "circuit",
}

# which parameter --trials overrides, per kind
TRIALS_KEY = {"pinball": "trials", "leakage": "trials", "converge": "trials", "prefix": "samples",
              "derandomize": "samples"}


def _execute(kind: str, config, seed, out, dry_run, trials, quiet, workers):
    try:
        cfg = E.load_config(config)
        if cfg.kind != kind:
            raise E.ConfigError(f"config kind {cfg.kind!r} does not match this command ({kind!r})")
        if seed is not None:
            cfg.seed = seed
        if out is not None:
            cfg.out = out
        if trials is not None:
            if kind not in TRIALS_KEY:
                raise E.ConfigError(f"--trials does not apply to {kind}")
            cfg.params[TRIALS_KEY[kind]] = trials
        if dry_run:
            rep = E.describe(cfg)
            click.echo(E.format_report(rep))
            return 0
        status, outcome = E.run_experiment(cfg, workers=workers)
    except E.ConfigError as e:
        click.echo(f"error: {e}", err=True)
        return 2
    except Exception as e:  # noqa: BLE001 - any runtime failure maps to status 1
        logging.getLogger("difflab").debug("run failed", exc_info=True)
        click.echo(f"error: {type(e).__name__}: {e}", err=True)
        return 1
    if not quiet:
        click.echo(("PASS " if status == 0 else "FAIL ") + outcome.line)
    return status


def _command(kind: str, help_text: str):
    @click.command(help=help_text)
    @click.option("--config", "config", required=True, type=click.Path(dir_okay=False),
                  help="TOML experiment config.")
    @click.option("--seed", type=click.IntRange(0, 2**64 - 1), default=None, help="Master seed override.")
    @click.option("--out", type=click.Path(file_okay=False), default=None, help="Output directory override.")
    @click.option("--dry-run", is_flag=True, help="Print the resolved plan and exit.")
    @click.option("--trials", type=click.IntRange(1), default=None, help="Trial/sample count override.")
    @click.option("--quiet", is_flag=True, help="No one-line summary.")
    @click.option("--workers", type=click.IntRange(1), default=1, show_default=True,
                  help="Worker processes for independent trials.")
    def cmd(config, seed, out, dry_run, trials, quiet, workers):
        sys.exit(_execute(kind, config, seed, out, dry_run, trials, quiet, workers))

    return cmd


@click.group()
@click.option("-v", "--verbose", count=True, help="More logging.")
def main(verbose):
    """Reproducible pinball, diffusion and threshold-circuit experiments."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@main.group()
def cm():
    """Counter-machine interpreter."""


@main.group()
def pinball():
    """Counter machine compiled into a stochastic force field."""


@main.group()
def diffusion():
    """Exact-score diffusion sampling."""


@main.group()
def circuit():
    """Threshold circuits."""


cm.add_command(_command("cm-run", "Run the interpreter on one or more inputs."), "run")
pinball.add_command(_command("pinball", "Simulate pinball trials for one input."), "simulate")
pinball.add_command(_command("leakage", "Success rate against cell size L."), "leakage")
diffusion.add_command(_command("converge", "TV against reverse step count."), "converge")
diffusion.add_command(_command("prefix", "Per-prefix token frequencies and margins."), "prefix")
diffusion.add_command(_command("derandomize", "Majority vote with an advice seed."), "derandomize")
circuit.add_command(_command("circuit", "Evaluate a threshold circuit."), "eval")


@main.command("kinds")
def kinds():
    """List experiment kinds and their commands."""
    for path, kind in COMMANDS.items():
        click.echo(f"{kind:12s} difflab {' '.join(path)}")


if __name__ == "__main__":
    main()
