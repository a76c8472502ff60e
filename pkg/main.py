# main.py
import logging
import os
import sys
from pathlib import Path

# Add src directory to Python path
script_dir = os.path.dirname(os.path.abspath(__file__))
src_dir = os.path.join(script_dir, "src")
if src_dir not in sys.path:
    sys.path.insert(0, src_dir)

from arguments import build_parser, flag_details # noqa: E402
from commands.diversity import run_diversity_command # noqa: E402
from commands.estimate import run_estimate_command # noqa: E402
from commands.gradcheck import run_gradcheck_command # noqa: E402
from commands.scatter import run_scatter_command # noqa: E402
from commands.snd import run_snd_command # noqa: E402
from commands.spectrum import run_spectrum_command # noqa: E402
from commands.train import run_train_command # noqa: E402
from config import EXIT_FAILURE, EXIT_MISSING_DATA, EXIT_USAGE, MNIST_HINT # noqa: E402
from errors import BwLabError, MissingDataError, ValidationError # noqa: E402
from manifest import RunManifest # noqa: E402

logger = logging.getLogger("bwlab")

COMMANDS = {
    "snd": run_snd_command,
    "scatter": run_scatter_command,
    "spectrum": run_spectrum_command,
    "train": run_train_command,
    "estimate": run_estimate_command,
    "diversity": run_diversity_command,
    "gradcheck": run_gradcheck_command,
}

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(name)s: %(message)s"


def configure_logging(out_dir, level):
    """Console plus `run.log` in the output directory; replaces handlers from earlier runs."""
    logging.basicConfig(
        level=getattr(logging, level),
        format=LOG_FORMAT,
        handlers=[logging.StreamHandler(), logging.FileHandler(Path(out_dir) / "run.log", mode="w", encoding="utf-8")],
        force=True,
    )
    logging.getLogger("matplotlib").setLevel(logging.WARNING)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    configure_logging(out_dir, args.log_level)
    if args.jobs < 1:
        logger.error("--jobs must be >= 1, got %d", args.jobs)
        return EXIT_USAGE

    manifest = RunManifest(command=args.command, flags=flag_details(args), seed=args.seed, out_dir=str(out_dir))
    manifest.write(out_dir)
    try:
        code = COMMANDS[args.command](args)
    except MissingDataError as e:
        logger.error("%s", e)
        if getattr(args, "dataset", None) == "mnist":
            logger.error(MNIST_HINT)
        code = EXIT_MISSING_DATA
    except ValidationError as e:
        logger.error("%s", e)
        parser.print_usage(sys.stderr)
        code = EXIT_USAGE
    except BwLabError as e:
        logger.error("%s: %s", type(e).__name__, e)
        code = EXIT_FAILURE
    manifest.finish(out_dir, code)
    logger.info("Done (%s); outputs in %s", args.command, out_dir)
    return code


if __name__ == "__main__":
    sys.exit(main())
