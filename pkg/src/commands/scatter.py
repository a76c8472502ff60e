# src/commands/scatter.py
import logging

import pandas as pd

from charts import scatter_chart
from commands import whitening_spec, write_csv
from config import EXIT_OK
from data_loader import SamplerFactory
from errors import ValidationError
from stochasticity import scatter_probe

logger = logging.getLogger(__name__)


def run_scatter_command(args):
    i, j = args.axes
    if max(i, j) > args.dim:
        raise ValidationError(f"--axes {i},{j} exceed the dimension {args.dim}")
    sampler = SamplerFactory(seed=args.seed)(args.dim)
    points, spreads = [], []
    for kind in args.transform:
        spec = whitening_spec(args, kind)
        result = scatter_probe(
            sampler, spec, args.batch, args.trials, (i - 1, j - 1), args.seed, probe_in_batch=args.probe_in_batch
        )
        frame = result.frame()
        frame.insert(0, "transform", spec.label)
        points.append(frame)
        std_x, std_y = result.normalized_std
        spreads.append({"transform": spec.label, "std_x": std_x, "std_y": std_y})
        logger.info("%s: normalized probe std (%.4f, %.4f)", spec.label, std_x, std_y)
        scatter_chart(frame, f"{args.out}/scatter_{kind.value}.svg", spec.label, (f"dim {i}", f"dim {j}"))
    write_csv(pd.concat(points, ignore_index=True), args.out, "scatter.csv")
    write_csv(pd.DataFrame(spreads, columns=["transform", "std_x", "std_y"]), args.out, "scatter_std.csv")
    return EXIT_OK
