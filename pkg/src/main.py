"""
ICP search: command-line orchestrator.

Pipeline:  Load KB → Bound c_n → Deduce forced factors → Symmetric working
problem → Branch / enumerate → Certify on [0,1] → Save run record → Notify

Subcommands: ``verify``, ``bound``, ``factors``, ``search``.
"""

from __future__ import annotations

import argparse
import asyncio
import logging
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path
from typing import Sequence

from pydantic import ValidationError

from src.config import (
    CHECKPOINT_INTERVAL,
    FACTORS_FILE,
    KNOWN_ICPS_FILE,
    RUNS_DIR,
    SMALL_ICPS_FILE,
    T_DECIMALS,
)
from src.factor_kb import (
    FactorKB,
    FactorState,
    InconsistentFactorsError,
    NoSplitError,
    deduce_forced_factors,
    factor_over_kb,
    resolve_upper_bound,
    verify_table,
)
from src.norm import UNIT, format_t, nth_root_enclosure, sup_norm
from src.poly import FactoredPoly, IntPoly, NotSymmetricError, UnknownFactorError, desymmetrize
from src.records import (
    Checkpoint,
    EnclosureRecord,
    FactorStateFile,
    RecordError,
    RunRecord,
    SearchConfig,
    load_model,
    save_model,
)
from src.search.base import SearchResult, WorkingProblem
from src.search.bnb import BranchAndBound, InvalidBoundError
from src.search.combined import combined_search
from src.search.resultant import (
    BadPointsError,
    EmptySearchError,
    PoolExhaustedError,
    ResultantSearch,
)
from src.telegram_notifier import send_run_report

# 1 - 4y = (2x - 1)^2 with y = x(1 - x)
ONE_MINUS_4Y = IntPoly((1, -4))

logger = logging.getLogger("icp")


# ── Logging ──────────────────────────────────────────────────────────────────

def configure_logging(verbose: bool = False) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s  %(levelname)-8s  %(name)s  %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stdout,
    )
    logging.getLogger().setLevel(logging.DEBUG if verbose else logging.INFO)


# ── Problem setup ────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PreparedSearch:
    state: FactorState          # F·G on [0,1] after deduction
    problem: WorkingProblem     # the same search written in y = x(1-x)
    c0: Fraction


def initial_factor(config: SearchConfig, kb: FactorKB) -> IntPoly:
    if config.coefficients is not None:
        return IntPoly(tuple(config.coefficients))
    if config.factors:
        return kb.expand(FactoredPoly.parse(config.factors))
    return IntPoly.constant(1)


def symmetric_problem(F: IntPoly, n: int) -> WorkingProblem:
    """Rewrite p = F·G of degree n on [0,1] as a problem in y = x(1-x).

    Odd n: p = (2x-1)·q(x(1-x)), whether or not F already holds 2x-1.
    Even n with 2x-1 in F: its square 1-4y must divide q.
    """
    try:
        F_y, has_h2 = desymmetrize(F)
    except NotSymmetricError as exc:
        raise InconsistentFactorsError(f"known factor is not symmetric: {exc}") from exc
    odd = n % 2 == 1
    if not odd and has_h2:
        F_y = F_y * ONE_MINUS_4Y
    g = (n - (1 if odd else 0)) // 2 - F_y.degree()
    if g < 0:
        raise InconsistentFactorsError(f"known factors exceed degree {n}")
    return WorkingProblem.symmetric_form(F_y, g, odd)


def prepare(config: SearchConfig, kb: FactorKB) -> PreparedSearch:
    F = initial_factor(config, kb)
    g = config.n - F.degree()
    if g < 0:
        raise InconsistentFactorsError(f"deg F = {F.degree()} exceeds n = {config.n}")
    c0 = config.c0 if config.c0 is not None else resolve_upper_bound(config.n, kb, config.rel_tol).value
    state = FactorState(F=F, g=g, c_n=c0, interval=UNIT)
    if config.deduce:
        state = deduce_forced_factors(state)
    problem = symmetric_problem(state.F, config.n)
    logger.info("Degree %d: F_y of degree %d, %d unknown coefficients, %s form.",
                config.n, problem.known.degree(), problem.g + 1,
                "odd" if problem.odd else "even")
    return PreparedSearch(state=state, problem=problem, c0=c0)


# ── Search pipeline ──────────────────────────────────────────────────────────

async def pipeline(
    config: SearchConfig,
    kb: FactorKB,
    out_path: Path | None = None,
    checkpoint_path: Path | None = None,
    resume_path: Path | None = None,
    notify: bool = False,
) -> RunRecord:
    """Execute the full bound → deduce → search → certify pipeline."""

    # 1. Bound and forced factors ──────────────────────────────────────────
    logger.info("═══ ICP search — degree %d (%s) ═══", config.n, config.mode)
    started = time.monotonic()
    prepared = prepare(config, kb)
    problem = prepared.problem
    resume = load_model(resume_path, Checkpoint) if resume_path is not None else None

    # 2. Search ─────────────────────────────────────────────────────────────
    executor = ProcessPoolExecutor(max_workers=config.worker_count) if config.worker_count > 1 else None
    try:
        result = await _run_mode(config, prepared, executor, checkpoint_path, resume)
    finally:
        if executor is not None:
            executor.shutdown()

    # 3. Certify on [0,1] and record ─────────────────────────────────────────
    record = build_record(config, kb, prepared, result, time.monotonic() - started)
    target = out_path or RUNS_DIR / f"icp_{config.n}_{datetime.now(timezone.utc):%Y%m%dT%H%M%S}.json"
    save_model(target, record)

    # 4. Notify ──────────────────────────────────────────────────────────────
    if notify:
        await send_run_report(record)

    logger.info("═══ Degree %d done — t = %s (%s) ═══", config.n, record.t, record.factored)
    return record


async def _run_mode(config: SearchConfig, prepared: PreparedSearch,
                    executor: ProcessPoolExecutor | None,
                    checkpoint_path: Path | None,
                    resume: Checkpoint | None) -> SearchResult:
    problem, c0 = prepared.problem, prepared.c0
    if config.mode == "combined":
        return await combined_search(
            problem, c0, config.handoff_remaining,
            worker_count=config.worker_count, executor=executor,
            rel_tol=config.rel_tol, cut_eps=config.cut_eps, inflation=config.c0_inflation,
            max_denominator=config.pool_denominator,
            checkpoint_path=checkpoint_path, resume=resume,
        )
    if config.mode == "bnb":
        search = BranchAndBound(problem, c0, rel_tol=config.rel_tol, cut_eps=config.cut_eps,
                                inflation=config.c0_inflation,
                                map_fn=executor.map if executor is not None else map,
                                checkpoint_path=checkpoint_path,
                                checkpoint_interval=CHECKPOINT_INTERVAL)
        if resume is not None:
            search.restore(resume)
        return search.run()
    search = ResultantSearch(problem, c0, rel_tol=config.rel_tol, inflation=config.c0_inflation,
                             max_denominator=config.pool_denominator)
    return search.run()


def build_record(config: SearchConfig, kb: FactorKB, prepared: PreparedSearch,
                 result: SearchResult, wall_time: float) -> RunRecord:
    problem = prepared.problem
    if result.best is None:
        raise EmptySearchError(f"no integer polynomial has norm below {float(prepared.c0):.6e}")
    G = result.best.G
    p = problem.full_polynomial(G)
    if p.degree() != config.n:
        raise InconsistentFactorsError(f"result has degree {p.degree()}, expected {config.n}")
    norm = sup_norm(p, UNIT, config.rel_tol)
    t = nth_root_enclosure(norm.lo, norm.hi, config.n)
    factored, cofactor = factor_over_kb(p, kb)
    return RunRecord(
        config=config,
        degree=config.n,
        forced=[f"{a}x - {b}" for a, b in prepared.state.forced],
        odd=problem.odd,
        known_factor=list(problem.known.coeffs),
        missing_factor=list(G.coeffs),
        factored=str(factored),
        cofactor=list(cofactor.coeffs),
        coefficients=list(p.coeffs),
        norm=EnclosureRecord(lo=norm.lo, hi=norm.hi),
        t=format_t(t.mid, T_DECIMALS),
        t_enclosure=EnclosureRecord(lo=t.lo, hi=t.hi),
        stats=result.stats,
        wall_time=wall_time,
    )


def verify_record(record: RunRecord) -> bool:
    """Recompute the certified norm of a stored result and compare exactly."""
    p = IntPoly(tuple(record.coefficients))
    norm = sup_norm(p, UNIT, record.config.rel_tol)
    ok = norm.lo == record.norm.lo and norm.hi == record.norm.hi
    logger.log(logging.INFO if ok else logging.WARNING, "Record for degree %d: %s",
               record.degree, "reproduced" if ok else "enclosure differs")
    return ok


# ── Commands ─────────────────────────────────────────────────────────────────

def _load_kb(args: argparse.Namespace) -> FactorKB:
    icps = args.icps if getattr(args, "icps", None) else (KNOWN_ICPS_FILE, SMALL_ICPS_FILE)
    return FactorKB.load(args.factors, icps)


def cmd_verify(args: argparse.Namespace) -> int:
    if args.record is not None:
        return 0 if verify_record(load_model(args.record, RunRecord)) else 1
    kb = FactorKB.load(args.factors, args.icps or (KNOWN_ICPS_FILE,))
    report = verify_table(kb)
    print(f"{'n':>5}  {'printed':>11}  {'computed':>11}  status")
    for row in report.rows:
        status = f"{row.status} {row.detail}".rstrip()
        print(f"{row.degree:>5}  {row.printed:>11}  {row.computed or '-':>11}  {status}")
    matched = sum(row.match for row in report.rows)
    errata = f", {len(report.errata)} known erratum" if report.errata else ""
    print(f"{matched}/{len(report.rows)} rows match{errata}.")
    return 0 if report.all_match else 1


def cmd_bound(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    bound = resolve_upper_bound(args.degree, kb)
    t = nth_root_enclosure(bound.value, bound.value, args.degree)
    split = f"{bound.split[0]} + {bound.split[1]}" if bound.split else bound.method
    print(f"c_{args.degree} <= {float(bound.value):.12e}  (t <= {format_t(t.hi, T_DECIMALS, round_up=True)}, {split})")
    return 0


def cmd_factors(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    config = _config_from_args(args)
    prepared = prepare(config, kb)
    problem = prepared.problem
    print(f"c_{config.n} <= {float(prepared.c0):.12e}")
    print("forced: " + (", ".join(f"{a}x - {b}" for a, b in prepared.state.forced) or "none"))
    print(f"F on [0,1]: degree {prepared.state.F.degree()}, unknown degree {prepared.state.g}")
    print(f"F_y = {problem.known}  ({'odd' if problem.odd else 'even'}), g = {problem.g}")
    return 0


def cmd_search(args: argparse.Namespace) -> int:
    kb = _load_kb(args)
    config = _config_from_args(args)
    record = asyncio.run(pipeline(config, kb, args.out, args.checkpoint, args.resume, args.notify))
    print(f"n = {record.degree}  t = {record.t}  "
          f"[{float(record.t_enclosure.lo):.10f}, {float(record.t_enclosure.hi):.10f}]")
    print(f"p = {record.factored}" + ("" if record.cofactor == [1] else f" * ({IntPoly(tuple(record.cofactor))})"))
    return 0


def _config_from_args(args: argparse.Namespace) -> SearchConfig:
    fields: dict = {"n": args.degree}
    if args.factors_state is not None:
        state = load_model(args.factors_state, FactorStateFile)
        if state.degree != args.degree:
            raise RecordError(f"{args.factors_state} is for degree {state.degree}, not {args.degree}")
        fields.update(factors=state.factors, coefficients=state.coefficients, c0=state.c0)
    if args.known:
        fields["factors"] = args.known
    if args.c0 is not None:
        fields["c0"] = args.c0
    for name in ("mode", "handoff_remaining", "worker_count", "pool_denominator"):
        value = getattr(args, name, None)
        if value is not None:
            fields[name] = value
    fields["deduce"] = not args.no_deduce
    return SearchConfig.model_validate(fields)


# ── Entry point ──────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="icp", description="Integer Chebyshev polynomial search.")
    parser.add_argument("--verbose", action="store_true", help="debug logging")
    parser.add_argument("--factors", type=Path, default=FACTORS_FILE, help="factor DB (JSON)")
    sub = parser.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="recompute the known table or a run record")
    verify.add_argument("--icps", type=Path, action="append", help="ICP DB (repeatable)")
    verify.add_argument("--record", type=Path, help="re-verify a stored run record instead")
    verify.set_defaults(handler=cmd_verify)

    bound = sub.add_parser("bound", help="upper bound c_n from known polynomials")
    bound.add_argument("--degree", type=int, required=True)
    bound.add_argument("--icps", type=Path, action="append")
    bound.set_defaults(handler=cmd_bound)

    for name, handler, text in (("factors", cmd_factors, "forced-factor deduction only"),
                                ("search", cmd_search, "search for the ICP of one degree")):
        p = sub.add_parser(name, help=text)
        p.add_argument("--degree", type=int, required=True)
        p.add_argument("--icps", type=Path, action="append")
        p.add_argument("--factors-state", type=Path, help="precomputed known factors (JSON)")
        p.add_argument("--known", help='known factor F, e.g. "h1^2 h3"')
        p.add_argument("--c0", help='upper bound override, e.g. "1/16"')
        p.add_argument("--no-deduce", action="store_true", help="skip forced-factor deduction")
        p.set_defaults(handler=handler)
        if name == "search":
            p.add_argument("--mode", choices=("combined", "bnb", "resultant"))
            p.add_argument("--handoff", dest="handoff_remaining", type=int)
            p.add_argument("--workers", dest="worker_count", type=int)
            p.add_argument("--pool-denominator", dest="pool_denominator", type=int)
            p.add_argument("--out", type=Path)
            p.add_argument("--checkpoint", type=Path)
            p.add_argument("--resume", type=Path)
            p.add_argument("--notify", action="store_true", help="send a Telegram run report")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)
    try:
        return args.handler(args)
    except ValidationError as exc:
        logger.error("Invalid configuration: %s", exc)
        return 2
    except (RecordError, UnknownFactorError, NoSplitError, InconsistentFactorsError,
            InvalidBoundError, EmptySearchError, PoolExhaustedError, BadPointsError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
