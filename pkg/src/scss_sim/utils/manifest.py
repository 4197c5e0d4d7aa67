"""Run manifests written next to every CLI artifact."""

import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from .. import __version__
from ..core.exceptions import DataFormatError
from ..core.loader import loader, sha256_file

MANIFEST_SUFFIX = ".manifest.json"


def manifest_path(output: Union[str, Path]) -> Path:
    output = Path(output)
    return output.with_name(output.name + MANIFEST_SUFFIX)


@dataclass
class RunManifest:
    """What produced an artifact: command, resolved profile, seed, files, timing."""

    command: str
    profile: Optional[str] = None
    seed: Optional[int] = None
    argv: List[str] = field(default_factory=list)
    parameters: Dict[str, Any] = field(default_factory=dict)
    inputs: List[Dict[str, str]] = field(default_factory=list)
    outputs: List[Dict[str, str]] = field(default_factory=list)
    version: str = __version__
    created_utc: str = ""
    duration_s: float = 0.0
    _started: float = field(default_factory=time.perf_counter, repr=False)

    def add_input(self, path: Union[str, Path]) -> None:
        path = Path(path)
        self.inputs.append({"path": str(path), "sha256": sha256_file(path)})

    def add_output(self, path: Union[str, Path], schema: str) -> None:
        path = Path(path)
        self.outputs.append({"path": str(path), "schema": schema, "sha256": sha256_file(path)})

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("_started")
        return data

    def write(self, primary_output: Union[str, Path]) -> Path:
        self.duration_s = round(time.perf_counter() - self._started, 3)
        self.created_utc = datetime.now(timezone.utc).isoformat(timespec="seconds")
        return loader.write_json(self.to_dict(), manifest_path(primary_output))


def verify_manifest(output: Union[str, Path]) -> List[str]:
    """Problems found when re-checking an artifact against its manifest (empty if clean)."""
    output = Path(output)
    path = manifest_path(output)
    if not output.exists():
        return [f"missing artifact {output}"]
    if not path.exists():
        return [f"missing manifest {path}"]
    try:
        data = loader.read_json(path)
    except DataFormatError as e:
        return [str(e)]

    problems = []
    for entry in data.get("outputs", []):
        target = Path(entry.get("path", ""))
        if not target.exists():
            problems.append(f"missing output {target}")
        elif sha256_file(target) != entry.get("sha256"):
            problems.append(f"checksum mismatch for {target}")
    if not data.get("outputs"):
        problems.append(f"manifest {path} lists no outputs")
    return problems
