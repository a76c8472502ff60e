# src/commands/spectrum.py
import logging

import numpy as np
import pandas as pd

from charts import spectrum_chart
from commands import whitening_spec, write_csv
from config import EXIT_OK
from data_loader import SamplerFactory
from transforms import output_spectrum

logger = logging.getLogger(__name__)


def run_spectrum_command(args):
    """Output covariance spectrum of one Gaussian batch for each group size."""
    x = SamplerFactory(seed=args.seed)(args.dim).draw(np.random.default_rng([args.seed, 0]), args.batch)
    frames = []
    for kind in args.transform:
        for group in args.groups:
            spec = whitening_spec(args, kind, group_size=group)
            eigenvalues = output_spectrum(x, spec)
            frames.append(
                pd.DataFrame(
                    {
                        "transform": spec.label.split("-")[0],
                        "group": group,
                        "index": np.arange(eigenvalues.size),
                        "eigenvalue": eigenvalues,
                    }
                )
            )
            logger.info("%s: largest output eigenvalue %.4f", spec.label, eigenvalues[0])
    frame = pd.concat(frames, ignore_index=True)
    write_csv(frame, args.out, "spectrum.csv")
    spectrum_chart(frame, f"{args.out}/spectrum.svg")
    return EXIT_OK
