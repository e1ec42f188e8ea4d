# distress_transfer/manifest.py
"""
Run manifests tie a run to its configuration, library versions, seeds,
stage timings and output digests; reports compare manifests side by side.
"""
import hashlib
import json
import logging
import platform
from dataclasses import asdict, dataclass, field
from importlib import metadata
from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd

from . import __version__
from .errors import ReportError

logger = logging.getLogger(__name__)

MANIFEST_VERSION = 1
TRACKED_PACKAGES = (
    "numpy",
    "pandas",
    "scipy",
    "scikit-learn",
    "nltk",
    "matplotlib",
    "click",
    "pytz",
    "python-dotenv",
)
# Keys that may differ between manifests of one comparison
CONDITION_KEYS = ("weighted", "out_dir", "threads", "target_ratio")
METRIC_COLUMNS = ["condition", "model", "data", "accuracy", "specificity", "sensitivity"]


def file_digest(path: Path) -> str:
    """Hex SHA-256 of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def module_versions() -> Dict[str, str]:
    versions = {"python": platform.python_version(), "distress_transfer": __version__}
    for package in TRACKED_PACKAGES:
        try:
            versions[package] = metadata.version(package)
        except metadata.PackageNotFoundError:
            versions[package] = "unknown"
    return versions


def comparison_key(config: Dict[str, Any]) -> str:
    """Hash of the configuration minus the keys a condition is allowed to change."""
    shared = {k: v for k, v in config.items() if k not in CONDITION_KEYS}
    canonical = json.dumps(shared, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RunManifest:
    run_id: str
    condition: str
    config: Dict[str, Any]
    config_hash: str
    seeds: Dict[str, int]
    selected: str
    metrics: List[Dict[str, Any]]
    timings: Dict[str, float] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)
    module_versions: Dict[str, str] = field(default_factory=module_versions)
    details: Dict[str, Any] = field(default_factory=dict)
    manifest_version: int = MANIFEST_VERSION

    def record_outputs(self, paths: Sequence[Path]) -> None:
        for path in paths:
            self.outputs[Path(path).name] = file_digest(path)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def write(self, path: Path) -> Path:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True, default=str)
            handle.write("\n")
        return Path(path)

    @classmethod
    def load(cls, path: Path) -> "RunManifest":
        try:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
        except (OSError, json.JSONDecodeError) as e:
            raise ReportError(f"Cannot read manifest {path}: {e}") from e
        if data.get("manifest_version") != MANIFEST_VERSION:
            raise ReportError(f"Unsupported manifest version in {path}: {data.get('manifest_version')!r}")
        try:
            return cls(**data)
        except TypeError as e:
            raise ReportError(f"Malformed manifest {path}: {e}") from e

    def metrics_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.metrics, columns=METRIC_COLUMNS)


def report_table(manifests: Sequence[RunManifest]) -> pd.DataFrame:
    """
    Model x data x condition table of accuracy, specificity and sensitivity.

    Manifests must come from the same data and settings (only the condition
    keys may differ) and each condition may appear once.
    """
    if not manifests:
        raise ReportError("No manifests to report")
    keys = {comparison_key(m.config) for m in manifests}
    if len(keys) > 1:
        raise ReportError("Manifests come from different data or settings and cannot be compared")
    conditions = [m.condition for m in manifests]
    if len(set(conditions)) != len(conditions):
        raise ReportError(f"Condition reported more than once: {conditions}")

    table = pd.concat([m.metrics_frame() for m in manifests], ignore_index=True)
    table = table.sort_values(["data", "condition", "model"], kind="mergesort", ignore_index=True)
    logger.info(f"Report table: {{'manifests': {len(manifests)}, 'rows': {len(table)}}}")
    return table


def format_table(table: pd.DataFrame) -> str:
    """Aligned text rendering with two-decimal metrics."""
    return table.to_string(index=False, float_format=lambda v: f"{v:.2f}")


def write_report(table: pd.DataFrame, csv_path: Path) -> Path:
    table.to_csv(csv_path, index=False, lineterminator="\n")
    return Path(csv_path)
