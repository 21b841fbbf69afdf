"""Command-line surface: reproducible batch experiments, no interactivity.

Subcommands:

  tournament   round robin over a roster, ranking CSV plus optional
               history dump and cooperation report
  evolve       evolutionary search, streaming generation log
  prune        drop unreachable states from an FSM file
  equiv        exact behavioral-equivalence check of two FSM files
  trace        per-turn action/state table of one match
  rates        cooperation-rate profile from a history dump

Exit codes: 0 success, 1 usage error, 2 data or validation error.
Every run prints its resolved configuration as `# key = value` lines so
an artifact can always be traced back to the flags that made it.
Result files are written to a temp name and renamed on success; the
only exception is the evolve --log stream, which is flushed line by
line so crashed runs can resume from it.
"""

import argparse
import os
import sys
from dataclasses import dataclass, replace

from .evolution import (
    EvolutionParams,
    evolve,
    generation_deltas,
    read_generation_log,
    render_generation_line,
)
from .fsm import (
    FsmValidationError,
    behaviorally_equivalent,
    load_fsm_file,
    prune_unreachable,
    reachable_states,
    serialize_fsm,
    serialize_fsm_line,
    validate_fsm,
)
from .game import MatchConfig, trace_match
from .kernels import active_backend
from .strategies import UnknownStrategyError, default_registry, roster_default
from .tournament import (
    CONTEXTS,
    TournamentConfig,
    cooperation_rates,
    read_history_dump,
    render_history_dump,
    render_ranking_csv,
    run_tournament,
)


@dataclass(frozen=True)
class CommandOutcome:
    exit_code: int
    artifacts: tuple = ()


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse, but usage problems raise instead of exiting with code 2."""

    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def build_parser() -> _Parser:
    parser = _Parser(prog="ipdlab", description=__doc__,
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    t = sub.add_parser("tournament", help="play a round robin and rank by median score")
    t.add_argument("--roster", default="default",
                   help="comma-separated names, 'default', or @file.fsm entries")
    t.add_argument("--turns", type=int, default=200)
    t.add_argument("--reps", type=int, default=10)
    t.add_argument("--noise", type=float, default=0.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--out", help="ranking CSV destination (stdout when omitted)")
    t.add_argument("--coop-report", help="per-player cooperation-rate CSV destination")
    t.add_argument("--histories", help="full match-history dump destination")
    t.add_argument("--self-matches", action="store_true",
                   help="also play each entrant against itself")

    e = sub.add_parser("evolve", help="evolve FSM genomes against a fixed roster")
    e.add_argument("--generations", type=int, required=True)
    e.add_argument("--num-states", type=int, default=10)
    e.add_argument("--population-size", type=int, default=40)
    e.add_argument("--bottleneck", type=int, default=10)
    e.add_argument("--mutation-rate", type=float, default=0.1)
    e.add_argument("--turns", type=int, default=20)
    e.add_argument("--repetitions", type=int, default=10)
    e.add_argument("--noise", type=float, default=0.0)
    e.add_argument("--roster", default="default")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--seed-fsm", action="append", default=[],
                   help="FSM file to seed the population with (repeatable)")
    e.add_argument("--log", help="generation log destination, streamed per generation")
    e.add_argument("--out", help="write the best genome here as FSM text")
    e.add_argument("--resume", action="store_true",
                   help="continue from the last record of --log if it exists")
    e.add_argument("--jump-threshold", type=float, default=None,
                   help="after the run, report mean-fitness jumps >= this value")

    p = sub.add_parser("prune", help="remove unreachable states from an FSM file")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", dest="out_path", required=True)
    p.add_argument("--name", help="rename the machine in the output file")

    q = sub.add_parser("equiv", help="exact behavioral equivalence of two FSM files")
    q.add_argument("--a", dest="a_path", required=True)
    q.add_argument("--b", dest="b_path", required=True)
    q.add_argument("--horizon", type=int, default=None,
                   help="limit the check to opponent sequences of this length")

    r = sub.add_parser("trace", help="print one match turn by turn")
    r.add_argument("--a", dest="a_name", required=True,
                   help="strategy name, or @file.fsm")
    r.add_argument("--b", dest="b_name", required=True)
    r.add_argument("--turns", type=int, default=20)
    r.add_argument("--seed", type=int, default=0)

    c = sub.add_parser("rates", help="cooperation rates by memory-one context")
    c.add_argument("--in", dest="in_path", required=True, help="history dump file")
    c.add_argument("--player", required=True)

    return parser


# ── shared helpers ───────────────────────────────────────────────────


def _print_header(command: str, settings):
    print(f"# ipdlab {command}")
    for key, value in settings:
        print(f"# {key} = {value}")


def _atomic_write_all(staged):
    """Write every (path, text) pair via temp-and-rename, all or nothing."""
    temps = []
    try:
        for path, text in staged:
            tmp = f"{path}.tmp{os.getpid()}"
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            temps.append((tmp, path))
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    for tmp, path in temps:
        os.replace(tmp, path)
    return tuple(path for path, _ in staged)


def _resolve_roster(roster_arg: str, registry):
    """Expand a --roster value into (registry, canonical name list)."""
    reg = registry
    names = []
    for token in roster_arg.split(","):
        token = token.strip()
        if not token:
            continue
        if token.lower() == "default":
            names.extend(sid.name for sid in roster_default())
        elif token.startswith("@"):
            spec = load_fsm_file(token[1:])
            reg = reg.with_fsm(spec)
            names.append(spec.name)
        else:
            names.append(reg.get(token).id.name)
    if not names:
        raise ValueError(f"--roster {roster_arg!r} names no strategies")
    return reg, names


def _resolve_player(token: str, registry):
    if token.startswith("@"):
        from .strategies import FsmStrategy

        return FsmStrategy(load_fsm_file(token[1:]))
    return registry.get(token).make()


def _fmt(value: float) -> str:
    return f"{value:.9f}"


# ── subcommands ──────────────────────────────────────────────────────


def _cmd_tournament(args) -> CommandOutcome:
    reg, names = _resolve_roster(args.roster, default_registry())
    config = TournamentConfig(
        roster=tuple(names),
        turns=args.turns,
        repetitions=args.reps,
        noise=args.noise,
        master_seed=args.seed,
        include_self_matches=args.self_matches,
    )
    _print_header("tournament", [
        ("roster", ",".join(names)),
        ("turns", config.turns),
        ("reps", config.repetitions),
        ("noise", config.noise),
        ("seed", config.master_seed),
        ("self_matches", config.include_self_matches),
        ("backend", active_backend()),
    ])
    result = run_tournament(config, reg)

    staged = []
    if args.out:
        staged.append((args.out, render_ranking_csv(result)))
    if args.histories:
        staged.append((args.histories, render_history_dump(result)))
    if args.coop_report:
        lines = ["Name,Context,Count,Rate"]
        for name in result.roster:
            report = cooperation_rates(result.histories, name)
            for label in CONTEXTS:
                stats = report.contexts.get(label)
                if stats is not None:
                    lines.append(f"{name},{label},{stats.count},{_fmt(stats.rate)}")
        staged.append((args.coop_report, "\n".join(lines) + "\n"))
    artifacts = _atomic_write_all(staged)

    if not args.out:
        sys.stdout.write(render_ranking_csv(result))
    for path in artifacts:
        print(f"# wrote {path}")
    return CommandOutcome(0, artifacts)


def _cmd_evolve(args) -> CommandOutcome:
    reg, roster_names = _resolve_roster(args.roster, default_registry())
    params = EvolutionParams(
        generations=args.generations,
        num_states=args.num_states,
        population_size=args.population_size,
        bottleneck=args.bottleneck,
        mutation_rate=args.mutation_rate,
        turns=args.turns,
        repetitions=args.repetitions,
        noise=args.noise,
        opponent_roster=tuple(roster_names),
        seed=args.seed,
    )
    seeds = [load_fsm_file(path) for path in args.seed_fsm]

    first_index = 0
    log_mode = "w"
    if args.resume:
        if not args.log:
            raise ValueError("--resume needs --log to know where the old run lives")
        if os.path.exists(args.log) and os.path.getsize(args.log) > 0:
            records = read_generation_log(args.log)
            last = records[-1]
            if last.index >= params.generations:
                _print_header("evolve", [("resume", args.log)])
                print(f"# log already reaches generation {last.index}; nothing to do")
                return CommandOutcome(0)
            seeds = [last.best_genome]
            first_index = last.index + 1
            params = replace(params, generations=params.generations - first_index)
            log_mode = "a"

    _print_header("evolve", [
        ("generations", args.generations),
        ("num_states", params.num_states),
        ("population_size", params.population_size),
        ("bottleneck", params.bottleneck),
        ("mutation_rate", params.mutation_rate),
        ("turns", params.turns),
        ("repetitions", params.repetitions),
        ("noise", params.noise),
        ("roster", ",".join(params.opponent_roster)),
        ("seed", params.seed),
        ("seed_fsm", ",".join(spec.name for spec in seeds) or "-"),
        ("first_generation", first_index),
        ("moran_processes_stub", params.moran_processes),
        ("backend", active_backend()),
    ])

    log_stream = open(args.log, log_mode, encoding="utf-8", newline="") if args.log else None
    try:
        best, records = evolve(seeds, params, reg, log_stream, first_index)
    finally:
        if log_stream is not None:
            log_stream.close()

    artifacts = []
    if args.out:
        artifacts = list(_atomic_write_all([(args.out, serialize_fsm(best))]))
    if args.log:
        artifacts.append(args.log)

    final = records[-1]
    print(f"# final {render_generation_line(final)}")
    print(f"# best fitness {_fmt(max(r.best_fitness for r in records))}")
    print(f"# best genome {serialize_fsm_line(best)}")
    if args.jump_threshold is not None and len(records) >= 2:
        for pos, delta in generation_deltas(records, args.jump_threshold):
            print(f"# jump at generation {records[pos].index}: {_fmt(delta)}")
    for path in artifacts:
        print(f"# wrote {path}")
    return CommandOutcome(0, tuple(artifacts))


def _cmd_prune(args) -> CommandOutcome:
    spec = load_fsm_file(args.in_path)
    report = reachable_states(spec)
    pruned = prune_unreachable(spec)
    if args.name:
        pruned = replace(pruned, name=args.name)
        violations = validate_fsm(pruned)
        if violations:
            raise FsmValidationError(violations)
    _print_header("prune", [
        ("in", args.in_path),
        ("out", args.out_path),
        ("kept", ",".join(str(s) for s in sorted(report.reachable))),
        ("removed", ",".join(str(s) for s in sorted(report.unreachable)) or "-"),
    ])
    artifacts = _atomic_write_all([(args.out_path, serialize_fsm(pruned))])
    print(f"# wrote {args.out_path}")
    return CommandOutcome(0, artifacts)


def _cmd_equiv(args) -> CommandOutcome:
    spec_a = load_fsm_file(args.a_path)
    spec_b = load_fsm_file(args.b_path)
    _print_header("equiv", [
        ("a", f"{args.a_path} ({spec_a.name})"),
        ("b", f"{args.b_path} ({spec_b.name})"),
        ("horizon", args.horizon if args.horizon is not None else "exact"),
    ])
    same = behaviorally_equivalent(spec_a, spec_b, horizon=args.horizon)
    print("equivalent" if same else "not equivalent")
    return CommandOutcome(0)


def _cmd_trace(args) -> CommandOutcome:
    reg = default_registry()
    strat_a = _resolve_player(args.a_name, reg)
    strat_b = _resolve_player(args.b_name, reg)
    config = MatchConfig(turns=args.turns, noise=0.0, seed=args.seed)
    _print_header("trace", [
        ("a", strat_a.name),
        ("b", strat_b.name),
        ("turns", config.turns),
        ("seed", config.seed),
    ])
    trace = trace_match(strat_a, strat_b, config)
    record = trace.record
    print("turn action_a action_b state_a state_b")
    for i in range(config.turns):
        sa = trace.states_a[i] if trace.states_a[i] is not None else "-"
        sb = trace.states_b[i] if trace.states_b[i] is not None else "-"
        print(f"{i + 1:4d} {record.actions_a[i].name:>8s} {record.actions_b[i].name:>8s} "
              f"{str(sa):>7s} {str(sb):>7s}")
    print(f"# payoffs {record.payoff_a:g} {record.payoff_b:g}")
    return CommandOutcome(0)


def _cmd_rates(args) -> CommandOutcome:
    histories = read_history_dump(args.in_path)
    report = cooperation_rates(histories, args.player)
    _print_header("rates", [
        ("in", args.in_path),
        ("player", args.player),
        ("matches", sum(1 for (a, b, _) in histories if args.player in (a, b))),
    ])
    print("context count rate")
    for label in CONTEXTS:
        stats = report.contexts.get(label)
        if stats is None:
            print(f"{label:>7s} absent")
        else:
            print(f"{label:>7s} {stats.count:5d} {_fmt(stats.rate)}")
    return CommandOutcome(0)


_COMMANDS = {
    "tournament": _cmd_tournament,
    "evolve": _cmd_evolve,
    "prune": _cmd_prune,
    "equiv": _cmd_equiv,
    "trace": _cmd_trace,
    "rates": _cmd_rates,
}


def cli_main(argv) -> CommandOutcome:
    """Parse and run one command; never raises for user-level problems."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(str(exc), file=sys.stderr)
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return CommandOutcome(1)

    if args.command is None:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        return CommandOutcome(1)

    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError, UnknownStrategyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return CommandOutcome(2)


def main(argv=None) -> int:
    try:
        outcome = cli_main(sys.argv[1:] if argv is None else list(argv))
    except SystemExit as exc:  # argparse --help paths
        code = exc.code if isinstance(exc.code, int) else 0
        return code
    return outcome.exit_code


def entry():
    sys.exit(main())
