"""Run manifests: what a command read, wrote, and with which settings.

Every artifact is listed with its content hash, so rerunning a command on
equal inputs can be verified by comparing manifests. Paths are stored
relative to the manifest's own directory and the timestamp honours
SOURCE_DATE_EPOCH, which makes manifests byte-reproducible when that
variable is pinned.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

from .fingerprint import file_sha256

MANIFEST_SUFFIX = ".manifest.json"


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def _entry(base: Path, path) -> dict:
    p = Path(path)
    try:
        rel = p.resolve().relative_to(base.resolve())
        shown = str(rel)
    except ValueError:
        shown = p.name
    return {"path": shown, "sha256": file_sha256(p)}


def write_manifest(primary_output, command: str, params: dict, seeds: dict,
                   inputs: dict, outputs: dict) -> Path:
    """Write <primary_output>.manifest.json and return its path.

    inputs/outputs map artifact names to file paths that must exist.
    params should contain only resolved, path-free settings.
    """
    primary = Path(primary_output)
    manifest_path = primary.parent / (primary.name + MANIFEST_SUFFIX)
    base = manifest_path.parent
    doc = {
        "command": command,
        "params": params,
        "seeds": seeds,
        "inputs": {k: _entry(base, v) for k, v in sorted(inputs.items())},
        "outputs": {k: _entry(base, v) for k, v in sorted(outputs.items())},
        "timestamp": _timestamp(),
    }
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path
