from .cli import ORACLES, build_parser, cmd_clean, cmd_couple, cmd_phi, cmd_verify, cmd_walk, main
from .manifest import MANIFEST_NAME, RunManifest, file_digest
from .runner import run_replicates
from .streams import replicate_stream, tag_key

__all__ = [
    "MANIFEST_NAME",
    "ORACLES",
    "RunManifest",
    "build_parser",
    "cmd_clean",
    "cmd_couple",
    "cmd_phi",
    "cmd_verify",
    "cmd_walk",
    "file_digest",
    "main",
    "replicate_stream",
    "run_replicates",
    "tag_key",
]
