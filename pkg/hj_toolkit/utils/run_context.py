"""
Run manifests and run directories for capturing and storing run information
"""

import json
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional

from .. import __version__


@dataclass
class RunManifest:
    """Everything needed to reproduce one invocation

    Attributes:
        command: Subcommand name
        system: Built-in name or path of the system definition
        parameters: Parameter bindings and command-specific inputs
        integrator: Integrator settings as a table
        output: Output path, or "-" for stdout
        seed: Seed for random draws
    """
    command: str
    system: str = ""
    parameters: Dict[str, Any] = field(default_factory=dict)
    integrator: Dict[str, Any] = field(default_factory=dict)
    output: str = "-"
    seed: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def to_json(self) -> str:
        """Canonical single-line JSON (sorted keys) so equal manifests print equally"""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def header_lines(self) -> List[str]:
        """Comment lines that open every CSV output"""
        return [
            f"# hj-toolkit {__version__}",
            f"# seed: {self.seed}",
            f"# manifest: {self.to_json()}",
        ]


class TeeOutput:
    """Duplicates a text stream into a log file"""

    def __init__(self, stream, log_file):
        self.terminal = stream
        self.log = open(log_file, "w", encoding="utf-8")

    def write(self, message):
        self.terminal.write(message)
        self.log.write(message)
        self.log.flush()
        return len(message)

    def flush(self):
        self.terminal.flush()
        self.log.flush()

    def isatty(self) -> bool:
        return False

    def close(self):
        self.log.close()


class RunContext:
    """A run directory <log_dir>/<timestamp> holding output.log and manifest.json

    Status output (stderr) is teed into output.log until cleanup().
    """

    def __init__(self, log_dir: str):
        self.timestamp = datetime.now().strftime("%Y%m%d_%H%M%S_%f")
        self.run_dir = Path(log_dir) / self.timestamp
        self.run_dir.mkdir(parents=True, exist_ok=True)
        self.log_file = self.run_dir / "output.log"
        self.manifest_file = self.run_dir / "manifest.json"
        self._stderr = sys.stderr
        self.tee = TeeOutput(self._stderr, self.log_file)
        sys.stderr = self.tee
        print(f"📝 Run started at: {self.timestamp}", file=sys.stderr)
        print(f"📝 Status being logged to: {self.log_file}", file=sys.stderr)

    def save_manifest(self, manifest: RunManifest) -> Path:
        with open(self.manifest_file, "w", encoding="utf-8") as f:
            json.dump(manifest.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        return self.manifest_file

    def cleanup(self) -> None:
        """Restore stderr and close the log"""
        sys.stderr = self._stderr
        self.tee.close()
        print(f"✅ Run completed. Status saved to: {self.log_file}", file=sys.stderr)


def open_run_context(log_dir: Optional[str]) -> Optional[RunContext]:
    return RunContext(log_dir) if log_dir else None
