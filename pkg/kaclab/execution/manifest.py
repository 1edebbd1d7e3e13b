"""Run manifests: parameters, seed and digests of emitted files."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable

from .. import __version__
from ..config import DEFAULT_CONFIG
from ..data.records import write_json

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def file_digest(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(slots=True)
class RunManifest:
    command: str
    parameters: dict[str, Any]
    seed: int
    version: str = __version__
    schema_version: int = DEFAULT_CONFIG.schema_version
    started_at: str = field(default_factory=utc_timestamp)
    finished_at: str | None = None
    digests: dict[str, str] = field(default_factory=dict)

    def record_outputs(self, paths: Iterable[Path], root: Path) -> None:
        for path in paths:
            self.digests[Path(path).relative_to(root).as_posix()] = file_digest(path)
        self.finished_at = utc_timestamp()

    def verify_digests(self, root: Path) -> list[str]:
        """Names of recorded files that are missing or whose contents changed."""

        mismatched = []
        for name, digest in sorted(self.digests.items()):
            target = Path(root) / name
            if not target.exists() or file_digest(target) != digest:
                mismatched.append(name)
        return mismatched

    def purge(self, root: Path, force: bool = False) -> tuple[list[Path], list[Path]]:
        """Delete the recorded outputs below *root*; return (removed, kept).

        Files whose contents no longer match their digest are kept unless
        *force* is set. The manifest itself goes only once nothing is kept.
        """

        changed = set(self.verify_digests(root))
        removed: list[Path] = []
        kept: list[Path] = []
        for name in sorted(self.digests):
            target = Path(root) / name
            if not target.exists():
                continue
            if name in changed and not force:
                logger.warning("Keeping %s: contents differ from the recorded digest", target)
                kept.append(target)
                continue
            target.unlink()
            removed.append(target)
        manifest_path = Path(root) / MANIFEST_NAME
        if not kept and manifest_path.exists():
            manifest_path.unlink()
            removed.append(manifest_path)
        return removed, kept

    def write(self, path: Path) -> Path:
        return write_json(asdict(self), path)

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        payload = json.loads(Path(path).read_text())
        missing = {"command", "parameters", "seed"}.difference(payload)
        if missing:
            raise KeyError(f"Manifest is missing fields: {sorted(missing)}")
        return cls(**payload)
