"""Report serialization: canonical JSON, CSV tables, and hashed manifests.

Reports are reproducible bit for bit given (config, seed, version), except
for wall-clock metadata, which lives in a single ``meta`` object that the
hashes skip. The manifest lists every artifact of a run with its content
hash: normalized (meta-stripped) for JSON reports, raw bytes otherwise.
"""

from __future__ import annotations

import csv
import hashlib
import json
import time
from pathlib import Path

__all__ = [
    "canonical_json",
    "write_json",
    "write_csv",
    "report_content_hash",
    "file_hash",
    "write_manifest",
    "now_meta",
]


def canonical_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True)


def write_json(payload: dict, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(canonical_json(payload) + "\n")
    return path


def write_csv(rows, header, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)
    return path


def report_content_hash(payload: dict) -> str:
    """Hash of a report with wall-clock metadata stripped."""
    body = {k: v for k, v in payload.items() if k != "meta"}
    return hashlib.sha256(canonical_json(body).encode()).hexdigest()


def file_hash(path: Path) -> str:
    path = Path(path)
    if path.suffix == ".json":
        try:
            return report_content_hash(json.loads(path.read_text()))
        except (json.JSONDecodeError, UnicodeDecodeError):
            pass
    return hashlib.sha256(path.read_bytes()).hexdigest()


def write_manifest(out_dir: Path, files) -> Path:
    out_dir = Path(out_dir)
    entries = [
        {"path": str(Path(f).relative_to(out_dir)), "sha256": file_hash(f)}
        for f in sorted(map(Path, files))
    ]
    return write_json({"files": entries}, out_dir / "manifest.json")


def now_meta(runtime_s: float | None = None) -> dict:
    meta = {"generated_at": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())}
    if runtime_s is not None:
        meta["runtime_s"] = round(runtime_s, 3)
    return meta
