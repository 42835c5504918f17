"""Plain-text run manifests: what a command produced, from which inputs."""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import cdmscan


@dataclass
class RunManifest:
    """Config snapshot, seeds and the files a run wrote.

    Every listed output must exist on disk when the manifest is written;
    `write` enforces that so a manifest always describes a finished run.
    """

    command: str
    seed: int | None = None
    config_path: str | None = None
    settings: dict[str, object] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)

    def add_output(self, path) -> None:
        self.outputs.append(str(path))

    def write(self, path) -> None:
        missing = [out for out in self.outputs if not Path(out).exists()]
        if missing:
            raise FileNotFoundError(f"manifest lists outputs that do not exist: {missing}")
        lines = [
            "# cdmscan run manifest",
            f"tool = cdmscan {cdmscan.__version__}",
            f"command = {self.command}",
            f"created_utc = {datetime.now(timezone.utc).isoformat()}",
        ]
        if self.seed is not None:
            lines.append(f"seed = {self.seed}")
        lines.append(f"config_file = {self.config_path if self.config_path else '(defaults)'}")
        for key in sorted(self.settings):
            lines.append(f"setting.{key} = {self.settings[key]}")
        for out in self.outputs:
            lines.append(f"output = {out}")
        Path(path).write_text("\n".join(lines) + "\n")
