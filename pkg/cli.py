#!/usr/bin/env python3
import argparse
import logging
import sys
from pathlib import Path

from tqdm import tqdm

from libs.formula_parser import parse_formula, parse_substitution
from libs.kb_utils import ProblemFileError, load_config, load_problem, save_report, setup_logging
from libs.logic import MAX_UNIVERSE, LogicError, ProfileError, conjoin, consistent_with, entails
from libs.merge import MergeConfig, MergeError, Substitution, merge
from libs.scenario import BatchSummary, ScenarioError, run_batch
from libs.similarity import SimilarityError, rank_renaming_pair
from libs.transforms import MISTAKE_KINDS, TransformError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_NO_HYPOTHESIS = 2

ENGINE_ERRORS = (LogicError, TransformError, SimilarityError, MergeError, ScenarioError, ProblemFileError)


# flag dest -> MergeConfig setting
FLAG_SETTINGS = {
    "operator": "operator",
    "delta_mode": "delta_mode",
    "budget": "budget_per_base",
    "renaming_budget": "renaming_budget",
    "ranking": "ranking",
    "candidates": "candidate_kinds",
    "candidate_mode": "candidate_mode",
    "rank_scope": "rank_scope",
    "minimality": "minimality",
    "max_universe": "max_universe",
}


def build_config(args: argparse.Namespace) -> MergeConfig:
    """Defaults, then the --config file, then explicit flags."""
    settings = dict(load_config(Path(args.config))) if args.config else {}
    for flag, name in FLAG_SETTINGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            settings.pop(name.replace("_", "-"), None)
            settings[name] = value
    return MergeConfig.from_mapping(settings)


def cmd_merge(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    problem = load_problem(Path(args.file))
    profile = problem.profile(cap=cfg.max_universe)
    logger.info("Merging %d bases with the %s operator", profile.n, cfg.operator.value)
    outcome = merge(profile, cfg)

    print(outcome.result)
    if args.explain:
        for index, disjunct in enumerate(outcome.disjuncts, 1):
            print(f"[{index}] {disjunct.formula}  score={disjunct.score}")
            for provenance in disjunct.provenance:
                print(f"    <- {provenance}")
    query = parse_formula(args.query) if args.query else problem.query
    if query is not None:
        print(f"entails {query}: {'yes' if outcome.entails(query) else 'no'}")

    if outcome.no_admissible_hypothesis:
        logger.error("❌ No admissible mistake hypothesis")
        return EXIT_NO_HYPOTHESIS
    logger.info("✅ %d disjuncts", len(outcome.disjuncts))
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    bar = tqdm(total=args.runs, desc="Simulating")
    try:
        reports = run_batch(args.seed, args.runs, args.vars, args.sources, args.mistakes, kinds, cfg,
                            progress=lambda _: bar.update())
    finally:
        bar.close()

    lines = [r.to_record() for r in reports]
    summary = BatchSummary.of(reports)
    lines += ["", summary.to_table()]
    print("\n".join(lines))
    if args.output:
        save_report(Path(args.output), lines)
        logger.info("Saved report: %s", args.output)
    logger.info("✅ %d runs, admissible rate %.4f", summary.runs, summary.rate(summary.admissible))
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    problem = load_problem(Path(args.file))
    try:
        profile = problem.profile(cap=args.max_universe or MAX_UNIVERSE)
    except ProfileError as exc:
        for violation in exc.violations:
            print(f"error: {violation}")
        logger.error("❌ %d violated preconditions", len(exc.violations))
        return EXIT_INPUT_ERROR
    print(f"ok: {profile.n} bases over {len(profile.alphabet)} variables")
    return EXIT_OK


def _parse_pair(text: str) -> tuple[Substitution, Substitution]:
    parts = text.split(";")
    if len(parts) != 2:
        raise MergeError(f"a pair is written 'Y;Z', got {text!r}")
    return Substitution.of(parse_substitution(parts[0])), Substitution.of(parse_substitution(parts[1]))


def cmd_rank(args: argparse.Namespace) -> int:
    cfg = build_config(args)
    problem = load_problem(Path(args.file))
    profile = problem.profile(cap=cfg.max_universe)
    if profile.n != 2:
        raise MergeError(f"rank scores substitution pairs for exactly two bases, got {profile.n}")
    k1, k2 = profile.bases
    u = profile.merge_universe(cfg.max_fresh_primes, cap=cfg.max_universe)
    primes = profile.fresh_primes(cfg.max_fresh_primes)
    for text in args.pair:
        y_sub, z_sub = _parse_pair(text)
        y_sub.check_permitted(profile.alphabet, primes)
        z_sub.check_permitted(profile.alphabet, primes)
        score = rank_renaming_pair(y_sub, z_sub, k1, k2, profile, cfg.delta_mode, universe=u)
        merged = conjoin((y_sub.apply(k1), z_sub.apply(k2)))
        ok = entails(merged, profile.upper, u) and consistent_with(merged, profile.lower, u)
        print(f"K1{y_sub} K2{z_sub}  score={score}  admissible={'yes' if ok else 'no'}")
    return EXIT_OK


def cmd_parse(args: argparse.Namespace) -> int:
    print(parse_formula(args.formula))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--debug', action='store_true', help="Enable debug mode")
    common.add_argument('--max-universe', type=int,
                        help="Largest universe the brute-force semantics may enumerate (default 16)")
    common.add_argument('--config', help="JSON file with engine settings")

    engine = argparse.ArgumentParser(add_help=False)
    engine.add_argument('--operator', choices=['rmel', 'rm', 'general', 'dalal'], help="Merging operator (default rmel)")
    engine.add_argument('--delta-mode', choices=['linear', 'quotient', 'restricted'], help="Similarity measure")
    engine.add_argument('--budget', type=int, help="Transformations per base for the general operator")
    engine.add_argument('--renaming-budget', type=int, help="Renamings per base for rmel/rm (default: all)")
    engine.add_argument('--ranking', choices=['equal', 'heuristic'], help="Ranking for the general operator")
    engine.add_argument('--candidates', help="Comma-separated mistake kinds: " + ", ".join(MISTAKE_KINDS))
    engine.add_argument('--candidate-mode', choices=['inverse', 'permitted'], help="Candidate corrections")
    engine.add_argument('--rank-scope', choices=['minimal-size', 'all'], help="Rank within the minimal size or across sizes")
    engine.add_argument('--minimality', choices=['combined', 'pareto', 'inclusion'], help="Minimality rule")

    parser = argparse.ArgumentParser(description="Merge inconsistent knowledge bases by undoing hypothesized mistakes.")
    commands = parser.add_subparsers(dest='command', required=True)

    p = commands.add_parser('merge', parents=[common, engine], help="Merge the bases of a problem file")
    p.add_argument('file', help="Problem file")
    p.add_argument('--explain', action='store_true', help="Show provenance and score of each disjunct")
    p.add_argument('--query', help="Formula to test against the merged result")
    p.set_defaults(handler=cmd_merge)

    p = commands.add_parser('simulate', parents=[common, engine], help="Inject known mistakes and measure recovery")
    p.add_argument('--seed', type=int, default=0, help="First scenario seed")
    p.add_argument('--vars', type=int, default=4, help="Universe size")
    p.add_argument('--sources', type=int, default=2, help="Number of sources")
    p.add_argument('--mistakes', type=int, default=1, help="Mistake budget per source")
    p.add_argument('--kinds', default='renaming', help="Comma-separated mistake kinds to inject")
    p.add_argument('--runs', type=int, default=10, help="Number of scenarios")
    p.add_argument('-o', '--output', help="Also write the report to this file")
    p.set_defaults(handler=cmd_simulate)

    p = commands.add_parser('check', parents=[common], help="Validate the bounds of a problem file")
    p.add_argument('file', help="Problem file")
    p.set_defaults(handler=cmd_check)

    p = commands.add_parser('rank', parents=[common, engine], help="Score explicit substitution pairs")
    p.add_argument('file', help="Problem file with two bases")
    p.add_argument('--pair', action='append', required=True,
                   help="Substitution pair 'Y;Z', each a comma-separated list of x->y (repeatable)")
    p.set_defaults(handler=cmd_rank)

    p = commands.add_parser('parse', parents=[common], help="Print the canonical form of a formula")
    p.add_argument('formula', help="Formula text")
    p.set_defaults(handler=cmd_parse)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.debug)
    try:
        return args.handler(args)
    except ENGINE_ERRORS as e:
        logger.error("❌ %s", e)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == '__main__':
    sys.exit(main())
