# src/commands/diversity.py
import logging
from pathlib import Path

import pandas as pd

from charts import diversity_chart
from checkpoint import load_sequence
from commands import write_csv
from commands.train import run_training, save_sequences
from config import EXIT_OK
from errors import MissingDataError, ValidationError
from stochasticity import diversity_frame, sequence_diversity

logger = logging.getLogger(__name__)


def _load_saved(directory):
    directory = Path(directory) / "sequences"
    paths = [directory / "sigma.bws", directory / "w.bws"]
    missing = [str(p) for p in paths if not p.exists()]
    if missing:
        raise MissingDataError(f"recorded sequences not found: {', '.join(missing)}")
    return [load_sequence(p)[1] for p in paths]


def run_diversity_command(args):
    """δ and δ̃ histograms of the Σ_t and W_t sequences of one training run."""
    if args.from_dir is not None:
        sigmas, ws = _load_saved(args.from_dir)
    else:
        if args.norm == "none":
            raise ValidationError("diversity needs a whitening layer; pass --norm other than none")
        result, _ = run_training(args)
        sigmas, ws = result.sequences.sigmas, result.sequences.ws
        if sigmas:
            save_sequences(result.sequences, args.out)

    reports = {
        "sigma": sequence_diversity(sigmas, bins=args.bins),
        "whitening": sequence_diversity(ws, bins=args.bins),
    }
    frame = diversity_frame(reports)
    write_csv(frame, args.out, "diversity.csv")
    summary = pd.DataFrame(
        [
            {
                "statistic": name,
                "steps": len(sigmas),
                "mean_std": report.mean_std,
                "mean_normalized_std": report.mean_normalized_std,
                "skipped": report.skipped,
            }
            for name, report in reports.items()
        ]
    )
    write_csv(summary, args.out, "diversity_summary.csv")
    diversity_chart(frame, Path(args.out) / "diversity.svg")
    for row in summary.itertuples():
        logger.info("%s: mean δ %.4g, mean δ̃ %.4g", row.statistic, row.mean_std, row.mean_normalized_std)
    return EXIT_OK
