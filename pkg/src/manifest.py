# src/manifest.py
import logging
import shlex
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from config import VERSION

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.txt"


def _now():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class RunManifest:
    """What was run, with which flags, by which code version, and when."""

    command: str
    flags: dict
    seed: int
    out_dir: str
    version: str = VERSION
    started: str = field(default_factory=_now)
    finished: str | None = None
    exit_code: int | None = None

    def command_line(self):
        """Flags that reproduce the run when passed back to the CLI."""
        parts = [self.command]
        for key, value in self.flags.items():
            if key == "command" or value is None or value is False:
                continue
            flag = "--" + {"num_batches": "s", "from_dir": "from"}.get(key, key.replace("_", "-"))
            parts.append(flag if value is True else f"{flag} {shlex.quote(str(value))}")
        return " ".join(parts)

    def render(self):
        lines = [
            f"command: {self.command}",
            f"version: {self.version}",
            f"seed: {self.seed}",
            f"out_dir: {self.out_dir}",
            f"started: {self.started}",
            f"finished: {self.finished or '-'}",
            f"exit_code: {'-' if self.exit_code is None else self.exit_code}",
            f"reproduce: bwlab {self.command_line()}",
            "flags:",
        ]
        lines.extend(f"  {key} = {value}" for key, value in self.flags.items())
        return "\n".join(lines) + "\n"

    def write(self, directory):
        path = Path(directory) / MANIFEST_NAME
        path.write_text(self.render(), encoding="utf-8")
        return path

    def finish(self, directory, exit_code):
        self.finished = _now()
        self.exit_code = exit_code
        path = self.write(directory)
        logger.debug("Manifest updated at %s", path)
        return path
