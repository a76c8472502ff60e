# src/commands/snd.py
import logging

import pandas as pd

from arguments import SWEEP_CHOICES
from charts import snd_chart
from commands import whitening_spec, write_csv
from config import EXIT_OK
from data_loader import SamplerFactory
from errors import ValidationError
from stochasticity import snd, snd_frame, snd_sweep

logger = logging.getLogger(__name__)


def run_snd_command(args):
    """SND of each requested transform, at one setting or along one swept axis."""
    if (args.sweep is None) != (args.values is None):
        raise ValidationError("--sweep and --values must be given together")
    if args.values is not None and not args.values:
        raise ValidationError("--values is empty")
    factory = SamplerFactory(seed=args.seed)
    frames = []
    for kind in args.transform:
        spec = whitening_spec(args, kind)
        if args.sweep is None:
            report = snd(
                factory(args.dim), spec, args.batch, args.num_batches, args.points, args.seed, args.probe_in_batch
            )
            frames.append(snd_frame([report], [args.dim]))
            logger.info("%s: SND %.4f (std over points %.4f)", spec.label, report.snd, report.std_over_points)
            continue
        reports = snd_sweep(
            SWEEP_CHOICES[args.sweep],
            args.values,
            spec,
            factory,
            args.dim,
            args.batch,
            args.num_batches,
            args.points,
            args.seed,
            probe_in_batch=args.probe_in_batch,
            jobs=args.jobs,
        )
        frames.append(snd_frame(reports, args.values))
    frame = pd.concat(frames, ignore_index=True)
    write_csv(frame, args.out, "snd.csv")
    snd_chart(frame, f"{args.out}/snd.svg", x_label=args.sweep or "dim")
    return EXIT_OK
