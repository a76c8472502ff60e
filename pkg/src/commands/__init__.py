# src/commands/__init__.py
"""One module per subcommand; each exposes `run_<name>_command(args) -> exit code`."""
import logging
from pathlib import Path

from data_loader import GaussianSource, MnistSource
from transforms import WhiteningSpec

logger = logging.getLogger(__name__)


def whitening_spec(args, kind, **overrides):
    """WhiteningSpec from the shared whitening and run flags."""
    fields = dict(
        kind=kind,
        group_size=args.group,
        epsilon=args.eps,
        itn_iterations=args.itn_t,
        eig_solver=args.eig_solver,
        clamp_eigengap=args.clamp_eigengap,
    )
    fields.update(overrides)
    return WhiteningSpec(**fields)


def data_source(args):
    if args.dataset == "mnist":
        return MnistSource(str(args.mnist_dir))
    return GaussianSource(args.gaussian_dim, args.train_size, args.test_size, args.seed)


def write_csv(frame, out_dir, name):
    path = Path(out_dir) / name
    frame.to_csv(path, index=False)
    logger.info("Wrote %s (%d rows)", path, len(frame))
    return path
