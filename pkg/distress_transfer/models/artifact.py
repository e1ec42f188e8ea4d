# distress_transfer/models/artifact.py
"""Versioned JSON model artefacts."""
import json
from pathlib import Path
from typing import Any, Dict, Optional

from ..errors import ModelError, OutputError
from .base import ClassifierKind, TrainedClassifier, params_from_dict, params_to_dict
from .forest import ForestModel
from .logistic import LogisticModel
from .svm import SvmModel

FORMAT_VERSION = 1

MODEL_CLASSES = {
    ClassifierKind.LR: LogisticModel,
    ClassifierKind.SVM: SvmModel,
    ClassifierKind.RF: ForestModel,
}


def model_to_dict(model: TrainedClassifier, training: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    return {
        "format_version": FORMAT_VERSION,
        "kind": model.kind.value,
        "fingerprint": model.fingerprint,
        "feature_names": list(model.feature_names),
        "hyperparams": params_to_dict(model.hp),
        "parameters": model.parameters(),
        "training": training or {},
    }


def model_from_dict(data: Dict[str, Any]) -> TrainedClassifier:
    version = data.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelError(f"Unsupported model format version: {version!r}")
    try:
        kind = ClassifierKind(data["kind"])
        return MODEL_CLASSES[kind].from_parameters(
            data["fingerprint"],
            data["feature_names"],
            params_from_dict(data["hyperparams"]),
            data["parameters"],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise ModelError(f"Malformed model artefact: {e}") from e


def save_model(model: TrainedClassifier, path: Path, training: Optional[Dict[str, Any]] = None) -> Path:
    """Write the artefact; floats are written with round-trip precision."""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(model_to_dict(model, training), handle, sort_keys=True)
            handle.write("\n")
    except OSError as e:
        raise OutputError(f"Cannot write model artefact {path}: {e}") from e
    return path


def load_model(path: Path) -> TrainedClassifier:
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            data = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise ModelError(f"Cannot read model artefact {path}: {e}") from e
    return model_from_dict(data)
