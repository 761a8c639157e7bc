"""Figure specs and the stale-data guard."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

KINDS = ("trajectory_fan", "density_heatmap", "relaxation_curve",
         "occupation_compare", "velocity_field")


class SpecError(ValueError):
    """Invalid figure spec."""


class StaleInputError(RuntimeError):
    """Input checksum disagrees with the run manifest."""


class EmptyInputError(RuntimeError):
    """Input file carries no data rows."""


@dataclass
class FigureSpec:
    kind: str
    inputs: dict          # role -> csv path
    output: str           # stem; .png/.svg/.json are appended
    manifest: str | None = None
    style: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SpecError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        if not self.inputs:
            raise SpecError("inputs must name at least one file")
        self.inputs = {k: Path(v) for k, v in self.inputs.items()}
        for role, path in self.inputs.items():
            if not path.exists():
                raise SpecError(f"input {role} does not exist: {path}")
        if self.manifest is None:
            self.manifest = next(iter(self.inputs.values())).parent / "manifest.json"
        else:
            self.manifest = Path(self.manifest)

    @classmethod
    def from_json(cls, text: str) -> "FigureSpec":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SpecError(f"spec is not valid JSON: {exc}")
        unknown = set(raw) - {"kind", "inputs", "output", "manifest", "style"}
        if unknown:
            raise SpecError(f"unknown spec keys: {sorted(unknown)}")
        for req in ("kind", "inputs", "output"):
            if req not in raw:
                raise SpecError(f"spec missing required key {req!r}")
        return cls(raw["kind"], raw["inputs"], raw["output"],
                   raw.get("manifest"), raw.get("style", {}))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def verify_inputs(spec: FigureSpec) -> None:
    """Every input must appear in the manifest with a matching sha256."""
    if not Path(spec.manifest).exists():
        raise StaleInputError(f"no manifest found at {spec.manifest}")
    listed = json.loads(Path(spec.manifest).read_text()).get("files", {})
    for role, path in spec.inputs.items():
        name = path.name
        if name not in listed:
            raise StaleInputError(f"{name} is not listed in the run manifest")
        if _sha256(path) != listed[name]:
            raise StaleInputError(
                f"{name} does not match its manifest checksum (stale or edited)")


def read_columns(path: Path) -> dict:
    """CSV -> dict of column lists (strings; callers convert)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path} is empty")
        cols = {name: [] for name in header}
        for row in reader:
            for name, val in zip(header, row):
                cols[name].append(val)
    if not cols or not next(iter(cols.values())):
        raise EmptyInputError(f"{path} has a header but no data rows")
    return cols
