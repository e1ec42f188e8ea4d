# distress_transfer/transfer.py
"""
End-to-end inductive transfer: common features, optional domain adaptation,
source train/test split, grid-searched classifiers, selection on the labelled
target sample and prediction of every target row.
"""
import logging
from dataclasses import dataclass, field, replace
from datetime import date
from itertools import product
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.model_selection import train_test_split

from .config import PipelineConfig
from .corpus import (
    CorpusRole,
    DailyDocument,
    DistressLabel,
    aggregate_daily,
    anonymize,
    anonymize_id,
    apply_row_labels,
    filter_corpus,
    ingest_posts,
    load_row_labels,
)
from .domainadapt import AdaptationReport, adapt
from .errors import (
    STAGE_ADAPT,
    STAGE_FEATURES,
    STAGE_INGEST,
    STAGE_PREDICT,
    STAGE_SELECT,
    STAGE_TRAIN,
    AdaptationError,
    ModelError,
    PredictionError,
    SelectionError,
)
from .features import (
    FeatureKind,
    FeatureMatrix,
    FeatureSelectionReport,
    FeatureSpec,
    apply_scaling,
    build_feature_spec,
    build_unigram_vocab,
    corpus_vocabulary,
    correlation_prune,
    drop_meta,
    extract_features,
    fit_scaling,
    intersect_features,
    load_lexicon,
    tokenize_documents,
)
from .models import (
    ClassifierKind,
    CvRecord,
    GridSpec,
    LRParams,
    Metrics,
    RFParams,
    TrainedClassifier,
    default_svm_grid,
    evaluate,
    grid_search,
    train_classifier,
)
from .textprep import load_stopwords
from .utils.run_logging import stage

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PredictedTarget:
    """Predicted label (+1 Distress / -1 Control) for every target row."""

    row_keys: Tuple[Tuple[str, object], ...]
    labels: Tuple[int, ...]
    post_counts: Tuple[int, ...]

    def __post_init__(self):
        if not (len(self.row_keys) == len(self.labels) == len(self.post_counts)):
            raise PredictionError("row_keys, labels and post_counts differ in length")

    def __len__(self) -> int:
        return len(self.labels)

    def counts(self) -> Dict[str, int]:
        distress = sum(1 for label in self.labels if label > 0)
        return {"distress": distress, "control": len(self.labels) - distress}

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "user_id": [key[0] for key in self.row_keys],
                "date": [str(key[1]) for key in self.row_keys],
                "predicted": [DistressLabel.DISTRESS.value if l > 0 else DistressLabel.CONTROL.value for l in self.labels],
                "post_count": list(self.post_counts),
            }
        )

    def to_csv(self, path: Path) -> None:
        self.to_frame().to_csv(path, index=False, lineterminator="\n")

    @classmethod
    def from_csv(cls, path: Path) -> "PredictedTarget":
        """Read a predictions CSV written by to_csv."""
        try:
            frame = pd.read_csv(path, dtype={"user_id": str, "date": str, "predicted": str})
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise PredictionError(f"Cannot read predictions {path}: {e}") from e
        if not {"user_id", "date", "predicted", "post_count"} <= set(frame.columns):
            raise PredictionError(f"Predictions file {path} must have columns user_id,date,predicted,post_count")
        try:
            labels = tuple(DistressLabel.parse(value).sign for value in frame["predicted"])
            keys = tuple((user, date.fromisoformat(day)) for user, day in zip(frame["user_id"], frame["date"]))
        except ValueError as e:
            raise PredictionError(f"Bad prediction row in {path}: {e}") from e
        if any(label == 0 for label in labels):
            raise PredictionError(f"Predictions file {path} contains unlabeled rows")
        return cls(row_keys=keys, labels=labels, post_counts=tuple(int(n) for n in frame["post_count"]))


@dataclass(frozen=True, eq=False)
class CandidateResult:
    model: TrainedClassifier
    source_test: Metrics
    target: Metrics

    @property
    def kind(self) -> ClassifierKind:
        return self.model.kind


@dataclass(frozen=True, eq=False)
class TransferRun:
    weighted: bool
    spec: FeatureSpec
    adaptation: Optional[AdaptationReport]
    candidates: Tuple[CandidateResult, ...]
    selected: ClassifierKind
    predictions: PredictedTarget
    feature_report: FeatureSelectionReport
    cv_records: Tuple[CvRecord, ...] = ()
    split: Dict[str, int] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    @property
    def condition(self) -> str:
        return "weighted" if self.weighted else "unweighted"

    @property
    def selected_model(self) -> TrainedClassifier:
        return next(c.model for c in self.candidates if c.kind == self.selected)

    def metrics_table(self) -> pd.DataFrame:
        """One row per model x data set: accuracy, specificity, sensitivity."""
        rows = []
        for candidate in self.candidates:
            for data, metrics in (("source", candidate.source_test), ("target", candidate.target)):
                rows.append({
                    "condition": self.condition,
                    "model": candidate.kind.value.upper(),
                    "data": data,
                    "accuracy": metrics.accuracy,
                    "specificity": metrics.specificity,
                    "sensitivity": metrics.sensitivity,
                })
        return pd.DataFrame(rows, columns=["condition", "model", "data", "accuracy", "specificity", "sensitivity"])

    def feature_ranking(self) -> Optional[pd.DataFrame]:
        """The LR candidate's features by |weight| descending; None without an LR candidate."""
        lr = next((c.model for c in self.candidates if c.kind == ClassifierKind.LR), None)
        if lr is None:
            return None
        return pd.DataFrame(lr.ranked_features(), columns=["feature", "weight"])


def _salted(salt: str) -> bytes:
    return salt.encode("utf-8")


def load_corpora(config: PipelineConfig) -> Tuple[List[DailyDocument], List[DailyDocument]]:
    """
    Ingest, anonymise, filter and aggregate both corpora.

    Target documents start unlabelled; labels from target_sample_labels mark
    the labelled target sample.
    """
    config.require_inputs()
    source = ingest_posts(config.source_posts, CorpusRole.SOURCE, config.source_labels)
    target = ingest_posts(config.target_posts, CorpusRole.TARGET)
    if config.salt:
        source = anonymize(source, config.salt)
        target = anonymize(target, config.salt)
    source = filter_corpus(source, config.source_min_posts, config.language)
    target = filter_corpus(target, config.target_min_posts, config.language)

    source_docs = aggregate_daily(source, config.night_utc_offset_minutes)
    target_docs = [
        replace(doc, label=DistressLabel.UNLABELED)
        for doc in aggregate_daily(target, config.night_utc_offset_minutes)
    ]
    if config.target_sample_labels is not None:
        row_labels = load_row_labels(config.target_sample_labels)
        if config.salt:
            row_labels = {(anonymize_id(user, _salted(config.salt)), day): label for (user, day), label in row_labels.items()}
        target_docs = apply_row_labels(target_docs, row_labels)
    return source_docs, target_docs


def assemble_features(
    config: PipelineConfig,
    source_docs: Sequence[DailyDocument],
    target_docs: Sequence[DailyDocument],
) -> Tuple[FeatureMatrix, FeatureMatrix, FeatureSelectionReport]:
    """
    Coverage vocabulary -> intersection -> meta removal -> correlation pruning.

    Pruning is decided on the source matrix and the surviving columns are
    selected from the target matrix.
    """
    stopwords = load_stopwords(config.stopwords)
    lexicon = load_lexicon(config.lexicon)
    source_tokens = tokenize_documents(source_docs, stopwords)
    target_tokens = tokenize_documents(target_docs, stopwords)

    vocabulary = build_unigram_vocab(source_tokens, config.coverage)
    spec_s = build_feature_spec(lexicon, vocabulary)
    spec_t = build_feature_spec(lexicon, corpus_vocabulary(target_tokens))
    common = intersect_features(spec_s, spec_t)

    source = drop_meta(extract_features(source_tokens, common, lexicon))
    target = drop_meta(extract_features(target_tokens, common, lexicon))
    source = correlation_prune(source, config.r2_threshold)
    target = target.select(source.spec)

    report = FeatureSelectionReport(
        extracted_source=len(spec_s),
        extracted_target=len(spec_t),
        vocabulary=len(vocabulary),
        intersected=len(common),
        after_meta=len(drop_meta_spec(common)),
        after_pruning=len(source.spec),
    )
    logger.info(f"Feature selection: {report.to_dict()}")
    return source, target, report


def drop_meta_spec(spec: FeatureSpec) -> FeatureSpec:
    return spec.where(lambda f: f.kind != FeatureKind.META)


def labelled_target_rows(target: FeatureMatrix, minimum: int) -> List[int]:
    """Rows of the labelled target sample; fewer than `minimum` is a precondition failure."""
    rows = target.labeled_rows()
    if len(rows) < minimum or not rows:
        raise SelectionError(
            f"Labelled target sample has {len(rows)} rows; at least {max(1, minimum)} are required"
        )
    return rows


def estimate_target_ratio(target: FeatureMatrix) -> float:
    """Distress per Control in the labelled target sample."""
    y = target.y
    distress, control = int(np.sum(y == 1)), int(np.sum(y == -1))
    if distress == 0 or control == 0:
        raise AdaptationError(
            f"Cannot estimate the target class ratio from {distress} Distress / {control} Control "
            f"labelled rows; set target_ratio"
        )
    return distress / control


def adapt_domains(
    config: PipelineConfig,
    source: FeatureMatrix,
    target: FeatureMatrix,
) -> Tuple[FeatureMatrix, FeatureMatrix, Optional[AdaptationReport]]:
    """
    Weighted condition: full adaptation sequence. Unweighted: scaling fitted
    on the source and applied to both, nothing else.
    """
    if not config.weighted:
        scaling = fit_scaling(source)
        return apply_scaling(source, scaling), apply_scaling(target, scaling), None
    ratio = config.target_ratio if config.target_ratio is not None else estimate_target_ratio(target)
    return adapt(source, target, ratio, config.seed, config.threads)


def audit_split(train_idx: Sequence[int], test_idx: Sequence[int], n_rows: int) -> None:
    """Train and test rows must be disjoint and together cover every source row."""
    train, test = set(int(i) for i in train_idx), set(int(i) for i in test_idx)
    if train & test:
        raise ModelError(f"{len(train & test)} source rows appear in both train and test")
    if train | test != set(range(n_rows)):
        raise ModelError("Source split does not cover every row exactly once")


def split_source(matrix: FeatureMatrix, test_fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Stratified train/test split of the source rows."""
    y = matrix.y
    try:
        train_idx, test_idx = train_test_split(
            np.arange(matrix.n_rows), test_size=test_fraction, stratify=y, random_state=seed
        )
    except ValueError as e:
        raise ModelError(f"Cannot split {matrix.n_rows} source rows: {e}") from e
    train_idx, test_idx = np.sort(train_idx), np.sort(test_idx)
    audit_split(train_idx, test_idx, matrix.n_rows)
    return train_idx, test_idx


def grid_for(kind: ClassifierKind, config: PipelineConfig) -> GridSpec:
    if kind == ClassifierKind.LR:
        points = tuple(
            LRParams(learning_rate=rate, l2_lambda=lam, max_iters=config.lr_max_iters, tolerance=config.lr_tolerance)
            for rate, lam in product(config.lr_learning_rates, config.lr_l2_lambdas)
        )
        return GridSpec(kind, points)
    if kind == ClassifierKind.SVM:
        return default_svm_grid(config.svm_c_points, config.svm_sigma_points, config.svm_tolerance, config.svm_max_passes)
    points = tuple(
        RFParams(n_trees=trees, max_depth=depth, min_leaf=config.rf_min_leaf, seed=config.seed)
        for trees, depth in product(config.rf_n_trees, config.rf_max_depths)
    )
    return GridSpec(kind, points)


def train_candidates(
    config: PipelineConfig,
    train: FeatureMatrix,
) -> Tuple[List[TrainedClassifier], List[CvRecord]]:
    """Grid-search each configured classifier, then refit the best point on all training rows."""
    kinds = sorted((ClassifierKind(k) for k in config.classifiers), key=lambda k: k.order)
    y = train.y
    models: List[TrainedClassifier] = []
    records: List[CvRecord] = []
    for kind in kinds:
        best, cv = grid_search(train, y, grid_for(kind, config), config.folds, config.seed, config.threads)
        models.append(train_classifier(train, y, best))
        records.extend(cv)
    return models, records


def _kind_of(candidate) -> ClassifierKind:
    return candidate if isinstance(candidate, ClassifierKind) else candidate.kind


def select_best(candidates: Sequence[Tuple[object, Metrics]]):
    """
    The candidate maximising sensitivity + specificity on the labelled target
    sample; ties go to higher accuracy, then LR < SVM < RF.
    """
    if not candidates:
        raise SelectionError("No candidate classifiers to select from")
    best = max(
        candidates,
        key=lambda pair: (pair[1].selection_score, pair[1].accuracy, -_kind_of(pair[0]).order),
    )
    return best[0]


def predict_target(model: TrainedClassifier, target: FeatureMatrix) -> PredictedTarget:
    if target.n_rows == 0:
        raise PredictionError("Target matrix has no rows")
    labels = model.predict(target)
    post_counts = target.post_counts or tuple(1 for _ in range(target.n_rows))
    predicted = PredictedTarget(
        row_keys=target.row_keys,
        labels=tuple(int(label) for label in labels),
        post_counts=tuple(int(n) for n in post_counts),
    )
    logger.info(f"Target predicted: {dict(rows=len(predicted), **predicted.counts())}")
    return predicted


def run_pipeline(config: PipelineConfig) -> TransferRun:
    """
    Run one transfer condition (weighted or unweighted) end to end.

    Errors propagate tagged with the stage they were raised in.
    """
    timings: Dict[str, float] = {}
    with stage(STAGE_INGEST, timings):
        source_docs, target_docs = load_corpora(config)
    with stage(STAGE_FEATURES, timings):
        source, target, feature_report = assemble_features(config, source_docs, target_docs)
    with stage(STAGE_SELECT, timings):
        labelled = labelled_target_rows(target, config.min_target_sample)
    with stage(STAGE_ADAPT, timings):
        source, target, adaptation = adapt_domains(config, source, target)
    with stage(STAGE_TRAIN, timings):
        train_idx, test_idx = split_source(source, config.test_fraction, config.seed)
        train, test = source.take_rows(train_idx), source.take_rows(test_idx)
        models, cv_records = train_candidates(config, train)
    with stage(STAGE_SELECT, timings):
        sample = target.take_rows(labelled)
        candidates = tuple(
            CandidateResult(model, evaluate(model, test, test.y), evaluate(model, sample, sample.y))
            for model in models
        )
        selected = select_best([(c, c.target) for c in candidates])
    with stage(STAGE_PREDICT, timings):
        predictions = predict_target(selected.model, target)

    logger.info(
        f"Transfer run complete: {{'condition': '{'weighted' if config.weighted else 'unweighted'}', "
        f"'selected': '{selected.kind.value}', 'target_sample': {len(labelled)}, 'target_rows': {target.n_rows}}}"
    )
    return TransferRun(
        weighted=config.weighted,
        spec=source.spec,
        adaptation=adaptation,
        candidates=candidates,
        selected=selected.kind,
        predictions=predictions,
        feature_report=feature_report,
        cv_records=tuple(cv_records),
        split={"train": int(train_idx.size), "test": int(test_idx.size), "target_sample": len(labelled)},
        timings=timings,
    )
