#!/usr/bin/env python3
"""
propp toolkit CLI

Finite p-groups with involution: classification, cohomology, property
suites over a generated corpus, and the finiteness verdict calculus.
JSON reports go to stdout, diagnostics to stderr.
"""

import sys
import time
from contextlib import contextmanager
from functools import wraps
from pathlib import Path
from typing import Dict, Optional, Tuple

import click
import structlog
from pydantic import ValidationError
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / "src"))

from propp_toolkit.core.cohomology import compute_cohomology
from propp_toolkit.core.corpus import CorpusSpec, Family, InvolutionPolicy
from propp_toolkit.core.involution import (
    InvolutionAction,
    eigen_ranks,
    frattini_action,
    layer_splits,
    validate_involution,
)
from propp_toolkit.core.pc_engine import GroupTable, PcPresentation, build_table, ensure_consistent
from propp_toolkit.core.structure import analyze_structure
from propp_toolkit.core.verdicts import FmInput, FmVerdict, fm_verdict
from propp_toolkit.core.verification import Suite, SuiteSummary, run_suite
from propp_toolkit.errors import InputError, InternalFault
from propp_toolkit.io.presentation_file import format_presentation, parse_presentation
from propp_toolkit.io.report import JsonReport, MetaBlock, StructureBlock
from propp_toolkit.utils.config import ToolkitSettings, load_settings
from propp_toolkit.utils.logger import bind_run_context, setup_logging

console = Console(stderr=True)
logger = structlog.get_logger("propp")

EXIT_VIOLATION = 1
EXIT_INPUT = 2

SUITE_MAX_ORDER_EXP = {
    Suite.KUNNETH: 3,
    Suite.PROP21: 4,
    Suite.PROP22: 3,
    Suite.ORACLE: 4,
    Suite.HERBRAND: 0,
}


class Stopwatch:
    """Stage timings, reported only when requested"""

    def __init__(self, enabled: bool):
        self.enabled = enabled
        self.timings: Dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        start = time.perf_counter()
        yield
        if self.enabled:
            self.timings[name] = round(time.perf_counter() - start, 6)

    def report(self) -> Optional[Dict[str, float]]:
        return self.timings if self.enabled else None


def common_options(func):
    """--config, --debug, --verbose and --timings for every command"""
    func = click.option("--timings", is_flag=True, help="Include stage timings in meta")(func)
    func = click.option("--verbose", "-v", is_flag=True, help="Print tables and reasoning to stderr")(func)
    func = click.option("--debug", is_flag=True, help="Enable debug logging")(func)
    func = click.option("--config", default="config/settings.yaml", help="Config file path")(func)
    return func


def guarded(func):
    """Map toolkit errors to exit codes: input errors 2, internal faults 1"""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (InputError, ValidationError) as e:
            logger.error("input_rejected", error=str(e), kind=type(e).__name__)
            console.print(f"[bold red]Error:[/bold red] {escape(str(e))}", soft_wrap=True)
            sys.exit(EXIT_INPUT)
        except InternalFault as e:
            logger.error("internal_fault", error=str(e), kind=type(e).__name__)
            console.print(f"[bold red]Internal inconsistency:[/bold red] {escape(str(e))}", soft_wrap=True)
            sys.exit(EXIT_VIOLATION)
        except MemoryError:
            logger.error("out_of_memory")
            console.print("[bold red]Error:[/bold red] out of memory; lower --max-order or --max-table", soft_wrap=True)
            sys.exit(EXIT_INPUT)

    return wrapper


def _settings(command: str, config: str, debug: bool, context: Optional[dict] = None, **overrides) -> ToolkitSettings:
    settings = load_settings(config).with_overrides(**overrides)
    if debug:
        settings = settings.with_overrides(log_level="DEBUG")
    setup_logging(log_level=settings.log_level, log_dir=settings.log_dir, format_type=settings.log_format)
    bind_run_context(command, **(context or {}))
    return settings


def _load(file: str) -> Tuple[PcPresentation, Optional[list], str]:
    text = Path(file).read_text(encoding="utf-8")
    parsed = parse_presentation(text)
    echo = format_presentation(parsed.presentation, parsed.sigma)
    return parsed.presentation, parsed.sigma, echo


def _materialize(pres: PcPresentation, sigma, cap: int) -> Tuple[Optional[GroupTable], Optional[InvolutionAction]]:
    if pres.order <= cap:
        table = build_table(pres, cap)
    else:
        ensure_consistent(pres)
        table = None
    act = validate_involution(pres, sigma, table=table, cap=cap) if sigma is not None else None
    return table, act


def _structure_block(pres: PcPresentation, table: Optional[GroupTable], act: Optional[InvolutionAction]) -> StructureBlock:
    if table is None:
        images = [pres.generator(i) for i in range(pres.n)] if act is None else act.images
        d = frattini_action(pres, images).rows
        block = StructureBlock(order=pres.order, order_exponent=pres.n, d=d, validation_level="relations")
    else:
        report = analyze_structure(table)
        block = StructureBlock(
            order=report.order,
            order_exponent=report.order_exponent,
            d=report.d,
            powerful=report.is_powerful,
            abelian=report.is_abelian,
            layer_ranks=report.layer_ranks,
            layer_regular_depth=report.layer_regular_depth,
            uniform_quotient_candidate=report.uniform_quotient_candidate,
            powerful_witness=report.powerful_witness,
        )
    if act is not None:
        first = eigen_ranks(act, 1)
        block = block.model_copy(
            update=dict(
                d_plus=first.d_plus,
                d_minus=first.d_minus,
                layer_splits=layer_splits(act),
                validation_level=act.validation_level,
            )
        )
    return block


def print_structure(block: StructureBlock):
    table = Table(title="Structure", show_header=True, header_style="bold magenta")
    table.add_column("Invariant", style="cyan")
    table.add_column("Value", style="green")
    table.add_row("Order", f"{block.order}")
    table.add_row("d(G)", str(block.d))
    if block.d_plus is not None:
        table.add_row("d+ / d-", f"{block.d_plus} / {block.d_minus}")
    table.add_row("Powerful", str(block.powerful))
    table.add_row("Abelian", str(block.abelian))
    table.add_row("Layer ranks", " ".join(map(str, block.layer_ranks)) or "-")
    for i, split in enumerate(block.layer_splits, start=1):
        table.add_row(f"Layer {i} split", f"({split.d_plus}, {split.d_minus})")
    console.print(table)


def print_reasoning(verdict: FmVerdict):
    table = Table(title=f"Reasoning ({verdict.galois_group})", show_header=True, header_style="bold yellow")
    table.add_column("Rule", style="cyan")
    table.add_column("Anchor")
    table.add_column("Holds", justify="center")
    for step in verdict.reasoning_chain:
        anchor = step.anchor + (f"\n{step.note}" if step.note else "")
        table.add_row(step.rule, escape(anchor), "yes" if step.satisfied else "no")
    console.print(table)
    console.print(Panel(verdict.conclusion.value, title="Conclusion", border_style="green"))


def print_summary(summary: SuiteSummary):
    table = Table(title=f"Suite {summary.suite.value}", show_header=True, header_style="bold magenta")
    table.add_column("Instance", style="cyan")
    table.add_column("Result")
    for result in summary.results:
        status = "skipped" if result.skipped else ("pass" if result.ok else "[red]FAIL[/red]")
        table.add_row(escape(result.tag), status)
    console.print(table)
    for note in summary.notes:
        console.print(f"  • {escape(note)}")


@click.group()
def cli():
    """propp toolkit: finite p-groups with involution"""
    pass


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-table", type=click.IntRange(min=1), default=None, help="Table cap (default p^7)")
@common_options
@guarded
def classify(file: str, max_table: Optional[int], config: str, debug: bool, verbose: bool, timings: bool):
    """Structure, powerfulness and eigen splits of a presentation file"""
    settings = _settings("classify", config, debug, {"file": file}, max_table=max_table)
    watch = Stopwatch(timings)
    with watch.stage("parse"):
        pres, sigma, echo = _load(file)
    cap = settings.table_cap(pres.p)
    with watch.stage("table"):
        table, act = _materialize(pres, sigma, cap)
    with watch.stage("structure"):
        block = _structure_block(pres, table, act)
    report = JsonReport(
        command="classify",
        structure=block,
        meta=MetaBlock(caps={"max_table": cap}, timings=watch.report()),
        echo=echo,
    )
    if verbose:
        print_structure(block)
    click.echo(report.to_json())


@cli.command()
@click.argument("file", type=click.Path(exists=True, dir_okay=False))
@click.option("--max-order", type=click.IntRange(min=1), default=None, help="Cocycle system cap (default 256)")
@click.option("--max-table", type=click.IntRange(min=1), default=None, help="Table cap (default p^7)")
@common_options
@guarded
def cohomology(
    file: str,
    max_order: Optional[int],
    max_table: Optional[int],
    config: str,
    debug: bool,
    verbose: bool,
    timings: bool,
):
    """H^1, H^2 and their eigen splits by brute force"""
    settings = _settings("cohomology", config, debug, {"file": file}, max_table=max_table, brute_cap=max_order)
    watch = Stopwatch(timings)
    with watch.stage("parse"):
        pres, sigma, echo = _load(file)
    cap = settings.table_cap(pres.p)
    with watch.stage("table"):
        table, act = _materialize(pres, sigma, cap)
    if table is None:
        raise InputError(f"cohomology needs the multiplication table: order {pres.order} > table cap {cap}")
    with watch.stage("cocycles"):
        result = compute_cohomology(table, act, settings.brute_cap)
    report = JsonReport(
        command="cohomology",
        cohomology=result,
        meta=MetaBlock(caps={"max_table": cap, "brute_cap": settings.brute_cap}, timings=watch.report()),
        echo=echo,
    )
    if verbose:
        table_view = Table(title="Cohomology", show_header=True, header_style="bold magenta")
        table_view.add_column("Degree", style="cyan")
        table_view.add_column("dim", justify="right")
        table_view.add_column("+", justify="right")
        table_view.add_column("-", justify="right")
        table_view.add_row("H^1", str(result.h1), str(result.h1_plus), str(result.h1_minus))
        table_view.add_row("H^2", str(result.h2), str(result.h2_plus), str(result.h2_minus))
        table_view.add_row(
            "pH^2(Q_p/Z_p)", str(result.p_h2_qpzp), str(result.p_h2_qpzp_plus), str(result.p_h2_qpzp_minus)
        )
        console.print(table_view)
    click.echo(report.to_json())


@cli.command()
@click.argument("suite", type=click.Choice([s.value for s in Suite]))
@click.option("--p", "prime", type=int, default=None, help="Prime (default from settings, 3)")
@click.option("--max-rank", type=click.IntRange(min=0), default=None, help="Largest elementary abelian rank")
@click.option("--max-order-exp", type=click.IntRange(min=0), default=None, help="Largest order exponent")
@click.option("--families", multiple=True, type=click.Choice([f.value for f in Family]), help="Corpus families")
@click.option("--policy", type=click.Choice([p.value for p in InvolutionPolicy]), default="all_diagonal")
@click.option("--samples", type=click.IntRange(min=0), default=None, help="Random samples")
@click.option("--seed", type=int, default=0, help="Corpus seed")
@click.option("--jobs", type=click.IntRange(min=1), default=None, help="Worker processes")
@click.option("--max-order", type=click.IntRange(min=1), default=None, help="Cocycle system cap")
@click.option("--max-table", type=click.IntRange(min=1), default=None, help="Table cap for corpus members (default p^7)")
@common_options
@guarded
def verify(
    suite: str,
    prime: Optional[int],
    max_rank: Optional[int],
    max_order_exp: Optional[int],
    families: Tuple[str, ...],
    policy: str,
    samples: Optional[int],
    seed: int,
    jobs: Optional[int],
    max_order: Optional[int],
    max_table: Optional[int],
    config: str,
    debug: bool,
    verbose: bool,
    timings: bool,
):
    """Check a property over the corpus; exit 1 on any violation"""
    settings = _settings(
        "verify", config, debug, {"suite": suite}, jobs=jobs, brute_cap=max_order, max_table=max_table
    )
    chosen = Suite(suite)
    top = max_rank if chosen == Suite.KUNNETH and max_rank is not None else max_order_exp
    if top is None:
        top = SUITE_MAX_ORDER_EXP[chosen]
    if samples is None:
        samples = 100 if chosen == Suite.HERBRAND else 20
    p = prime if prime is not None else settings.default_prime
    spec = CorpusSpec(
        p=p,
        max_order_exponent=top,
        families=[Family(f) for f in families] or list(Family),
        involution_policy=InvolutionPolicy(policy),
        seed=seed,
        random_samples=samples,
        max_table=settings.table_cap(p),
    )
    watch = Stopwatch(timings)
    with watch.stage(chosen.value):
        summary = run_suite(chosen, spec, settings.jobs, settings.brute_cap, settings.tate_cap)
    report = JsonReport(
        command="verify",
        verification=summary,
        meta=MetaBlock(
            caps={
                "brute_cap": settings.brute_cap,
                "tate_cap": settings.tate_cap,
                "max_table": spec.table_cap,
                "max_order_exponent": top,
            },
            seed=seed,
            timings=watch.report(),
        ),
    )
    if verbose:
        print_summary(summary)
    click.echo(report.to_json())
    if not summary.passed:
        logger.warning("suite_violations", suite=chosen.value, violations=summary.violations)
        sys.exit(EXIT_VIOLATION)


@cli.command()
@click.option("--d-plus", type=click.IntRange(min=0), required=True, help="dim (Cl(k)/p)^+")
@click.option("--d-minus", type=click.IntRange(min=0), default=None, help="dim (Cl(k)/p)^-")
@click.option("--mu-p", type=click.BOOL, required=True, help="Whether mu_p lies in k")
@click.option("--first-layer-unramified", type=click.BOOL, default=None, help="Whether k_1|k is unramified")
@click.option("--mu-invariant-zero", type=click.BOOL, default=None, help="Iwasawa mu-invariant vanishes")
@click.option("--n-large", type=click.BOOL, default=None, help="n >= n0 (declared)")
@click.option("--s-variant", is_flag=True, help="Label for the S-ramified variant")
@common_options
@guarded
def verdict(
    d_plus: int,
    d_minus: Optional[int],
    mu_p: bool,
    first_layer_unramified: Optional[bool],
    mu_invariant_zero: Optional[bool],
    n_large: Optional[bool],
    s_variant: bool,
    config: str,
    debug: bool,
    verbose: bool,
    timings: bool,
):
    """Finiteness verdict from declared class-group data"""
    _settings("verdict", config, debug)
    watch = Stopwatch(timings)
    inp = FmInput(
        d_plus=d_plus,
        d_minus=d_minus,
        mu_p_in_k=mu_p,
        first_layer_unramified=first_layer_unramified,
        mu_invariant_zero=mu_invariant_zero,
        n_at_least_n0=n_large,
        s_variant=s_variant,
    )
    with watch.stage("verdict"):
        result = fm_verdict(inp)
    report = JsonReport(command="verdict", verdict=result, meta=MetaBlock(timings=watch.report()))
    if verbose:
        print_reasoning(result)
    click.echo(report.to_json())


if __name__ == "__main__":
    cli()
