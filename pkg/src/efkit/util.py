"""Small shared helpers: digests and run manifests."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(
    manifest_path,
    command: str,
    config: dict,
    master_seed,
    inputs: list,
    outputs: list,
) -> None:
    """Record what produced a set of artifacts; same manifest content means
    byte-identical outputs."""
    from . import __version__

    payload = {
        "command": command,
        "config": config,
        "master_seed": master_seed,
        "tool_version": __version__,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }
    Path(manifest_path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
