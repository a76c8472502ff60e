# src/commands/gradcheck.py
import logging

from commands import write_csv
from config import EXIT_FAILURE, EXIT_OK
from errors import ValidationError
from gradcheck import LEVELS, run_gradcheck, summarize

logger = logging.getLogger(__name__)


def run_gradcheck_command(args):
    unknown = [level for level in args.levels if level not in LEVELS]
    if unknown or not args.levels:
        raise ValidationError(f"--levels must be a non-empty subset of {LEVELS}, got {args.levels}")
    if args.cases < 1:
        raise ValidationError(f"--cases must be >= 1, got {args.cases}")
    report = run_gradcheck(
        kinds=args.transform, cases=args.cases, seed=args.seed, eig_solver=args.eig_solver, levels=tuple(args.levels)
    )
    write_csv(report, args.out, "gradcheck.csv")
    for row in summarize(report).itertuples():
        logger.info("%-5s max relative error %.3e  %s", row.transform, row.max_rel_error, "ok" if row.passed else "FAILED")
    return EXIT_OK if report["passed"].all() else EXIT_FAILURE
