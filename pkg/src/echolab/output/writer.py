"""Single writer that renders and stores a command's artifacts once it is done."""

from __future__ import annotations

from pathlib import Path
from typing import Callable, Literal, Sequence

import structlog

from ..models import RunManifest
from .manifest import header_lines

logger = structlog.get_logger(__name__)

OutputFormat = Literal["csv", "svg", "both"]
Renderer = Callable[[Sequence[str]], str]


class ArtifactWriter:
    """Collects renderers and writes every file in :meth:`flush`.

    The manifest's ``outputs`` is filled with the final file names before any
    header is rendered, so each file names all of its siblings.
    """

    def __init__(self, out_dir: Path, manifest: RunManifest, fmt: OutputFormat = "both") -> None:
        self.out_dir = Path(out_dir)
        self.manifest = manifest
        self.fmt = fmt
        self._pending: list[tuple[str, Renderer, tuple[str, ...]]] = []

    def wants(self, kind: Literal["csv", "svg"]) -> bool:
        return self.fmt in (kind, "both")

    def add(self, filename: str, render: Renderer, notes: Sequence[str] = ()) -> None:
        kind = "svg" if filename.endswith(".svg") else "csv"
        if self.wants(kind):
            self._pending.append((filename, render, tuple(notes)))

    def flush(self) -> list[Path]:
        names = [name for name, _, _ in self._pending]
        manifest = self.manifest.model_copy(update={"outputs": names})
        self.out_dir.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []
        for name, render, notes in self._pending:
            path = self.out_dir / name
            path.write_text(render(header_lines(manifest, notes)), encoding="utf-8")
            written.append(path)
        self._pending.clear()
        self.manifest = manifest
        logger.info("artifacts written", out_dir=str(self.out_dir), files=names)
        return written
