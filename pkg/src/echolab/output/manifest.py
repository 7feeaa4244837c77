"""Provenance header written at the top of every artifact."""

from __future__ import annotations

import hashlib
from typing import Iterable

from ..models import RunManifest

SHIFT_SIGN_NOTE = "shift = f_p(C_L) - f_p(0); negative when the load lowers f_p"


def input_digest(*parts: str | bytes) -> str:
    """SHA-256 over the command inputs, in order."""

    digest = hashlib.sha256()
    for part in parts:
        digest.update(part.encode() if isinstance(part, str) else part)
        digest.update(b"\0")
    return digest.hexdigest()


def manifest_digest(manifest: RunManifest) -> str:
    """Hash of everything in the manifest except its timestamp."""

    payload = manifest.model_dump_json(exclude={"created_at"})
    return hashlib.sha256(payload.encode()).hexdigest()


def header_lines(manifest: RunManifest, notes: Iterable[str] = ()) -> list[str]:
    overrides = ",".join(f"{k}={v}" for k, v in sorted(manifest.overrides.items()))
    lines = [
        f"echolab {manifest.tool_version}",
        f"command: {manifest.command}",
        f"presets: {','.join(manifest.presets)}",
        f"overrides: {overrides}",
        f"outputs: {','.join(manifest.outputs)}",
        f"input_hash: {manifest.input_hash}",
        f"manifest_hash: {manifest_digest(manifest)}",
        f"created_at: {manifest.created_at.isoformat()}",
    ]
    lines.extend(notes)
    return lines
