# distress_transfer/errors.py
"""
Error hierarchy shared by every pipeline stage.

Each error carries the stage it was raised in; the CLI maps the stage to a
process exit code so that every failure path exits with exactly one code.
"""
from typing import Optional

STAGE_CONFIG = "config"
STAGE_INGEST = "ingest"
STAGE_FEATURES = "features"
STAGE_ADAPT = "adapt"
STAGE_TRAIN = "train"
STAGE_SELECT = "select"
STAGE_PREDICT = "predict"
STAGE_INDEX = "index"
STAGE_REPORT = "report"
STAGE_SYNTH = "synth"
STAGE_OUTPUT = "output"

EXIT_CODES = {
    STAGE_CONFIG: 10,
    STAGE_INGEST: 11,
    STAGE_FEATURES: 12,
    STAGE_ADAPT: 13,
    STAGE_TRAIN: 14,
    STAGE_SELECT: 15,
    STAGE_PREDICT: 16,
    STAGE_INDEX: 17,
    STAGE_REPORT: 18,
    STAGE_SYNTH: 19,
    STAGE_OUTPUT: 20,
}
UNEXPECTED_EXIT_CODE = 1


class DistressError(Exception):
    """Base error; `stage` decides the exit code."""

    default_stage: Optional[str] = None

    def __init__(self, message: str, stage: Optional[str] = None):
        super().__init__(message)
        self.stage = stage or self.default_stage

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(self.stage, UNEXPECTED_EXIT_CODE)


class ConfigError(DistressError):
    default_stage = STAGE_CONFIG


class IngestError(DistressError):
    default_stage = STAGE_INGEST


class FeatureError(DistressError):
    default_stage = STAGE_FEATURES


class AdaptationError(DistressError):
    default_stage = STAGE_ADAPT


class ModelError(DistressError):
    default_stage = STAGE_TRAIN


class SelectionError(DistressError):
    default_stage = STAGE_SELECT


class PredictionError(DistressError):
    default_stage = STAGE_PREDICT


class IndexSeriesError(DistressError):
    default_stage = STAGE_INDEX


class ReportError(DistressError):
    default_stage = STAGE_REPORT


class SynthError(DistressError):
    default_stage = STAGE_SYNTH


class OutputError(DistressError):
    default_stage = STAGE_OUTPUT
