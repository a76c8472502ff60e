# src/commands/estimate.py
import logging
from pathlib import Path

from charts import estimation_chart
from commands import data_source, whitening_spec, write_csv
from config import EXIT_OK
from errors import ValidationError
from harness import estimation_compare

logger = logging.getLogger(__name__)


def run_estimate_command(args):
    if args.replicates < 1:
        raise ValidationError(f"--replicates must be >= 1, got {args.replicates}")
    if not (args.widths and args.batches and args.lrs and args.transform):
        raise ValidationError("estimation sweep is empty; give at least one width, batch, lr and transform")
    base_spec = whitening_spec(args, args.transform[0])
    frame, summary = estimation_compare(
        data_source(args),
        widths=args.widths,
        batches=args.batches,
        kinds=args.transform,
        lrs=args.lrs,
        seeds=[args.seed + r for r in range(args.replicates)],
        epochs=args.epochs,
        hidden_layers=args.layers,
        base_spec=base_spec,
        jobs=args.jobs,
    )
    write_csv(frame, args.out, "estimate.csv")
    write_csv(summary, args.out, "estimate_summary.csv")
    estimation_chart(summary, Path(args.out) / "estimate.svg")
    diverged = int(frame["diverged"].sum())
    if diverged:
        logger.warning("%d of %d replicates had a diverged arm", diverged, len(frame))
    return EXIT_OK
