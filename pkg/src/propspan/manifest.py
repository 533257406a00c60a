"""Run manifests: config hash, seed and input digests next to outputs.

Manifests contain no timestamps, so identical manifests imply
byte-identical outputs for every deterministic command.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dir_digest(path: str | Path) -> str:
    """Digest of a directory: file names and contents, sorted."""
    h = hashlib.sha256()
    for entry in sorted(Path(path).iterdir()):
        if entry.is_file():
            h.update(entry.name.encode())
            h.update(bytes.fromhex(file_digest(entry)))
    return h.hexdigest()


def config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def write_manifest(
    out_dir: str | Path,
    command: str,
    config: dict,
    inputs: dict[str, str | Path],
    outputs: list[str],
) -> Path:
    entries = {}
    for name, path in inputs.items():
        p = Path(path)
        entries[name] = {
            "path": str(p),
            "sha256": dir_digest(p) if p.is_dir() else file_digest(p),
        }
    manifest = {
        "command": command,
        "config_hash": config_hash(config),
        "config": config,
        "inputs": entries,
        "outputs": outputs,
    }
    path = Path(out_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
