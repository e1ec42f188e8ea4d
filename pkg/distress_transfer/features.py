# distress_transfer/features.py
"""
Daily documents -> numeric FeatureMatrix.

Feature families: lexicon category percentages, unigram counts, night index,
engagement and ego-network metadata, linguistic counts and meta columns.
Selection follows four criteria: coverage vocabulary, source/target
intersection, correlation pruning and meta removal.
"""
import hashlib
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .config import Config
from .corpus import DailyDocument, DistressLabel
from .errors import FeatureError
from .textprep import preprocess

logger = logging.getLogger(__name__)


class FeatureKind(str, Enum):
    LEXICON_PCT = "lexicon_pct"
    UNIGRAM = "unigram"
    TIME = "time"
    ENGAGEMENT = "engagement"
    EGO_NETWORK = "ego_network"
    LINGUISTIC = "linguistic"
    META = "meta"


USER_KINDS = frozenset({FeatureKind.ENGAGEMENT, FeatureKind.EGO_NETWORK})

LEXICON_PREFIX = "lex_"
UNIGRAM_PREFIX = "uni_"

# name, kind, DailyDocument attribute
METADATA_FEATURES = (
    ("meta_date", FeatureKind.META, None),
    ("meta_user", FeatureKind.META, None),
    ("time_night_index", FeatureKind.TIME, "mean_night_index"),
    ("eng_post_count", FeatureKind.ENGAGEMENT, "post_count"),
    ("eng_reply_proportion", FeatureKind.ENGAGEMENT, "reply_proportion"),
    ("eng_retweet_proportion", FeatureKind.ENGAGEMENT, "retweet_proportion"),
    ("eng_total_tweets", FeatureKind.ENGAGEMENT, "mean_total_tweets"),
    ("eng_total_favourites", FeatureKind.ENGAGEMENT, "mean_total_favourites"),
    ("ego_followers", FeatureKind.EGO_NETWORK, "mean_followers"),
    ("ego_followees", FeatureKind.EGO_NETWORK, "mean_followees"),
    ("ling_word_count", FeatureKind.LINGUISTIC, None),
    ("ling_mean_post_length", FeatureKind.LINGUISTIC, None),
)


@dataclass(frozen=True)
class Lexicon:
    """Category name -> patterns; 'abc*' is a prefix pattern, anything else exact."""

    categories: Mapping[str, Tuple[str, ...]]

    def __post_init__(self):
        for name, patterns in self.categories.items():
            if not patterns:
                raise FeatureError(f"Lexicon category {name!r} has no patterns")
            for pattern in patterns:
                if not pattern or pattern != pattern.lower() or "*" in pattern[:-1] or pattern == "*":
                    raise FeatureError(f"Invalid lexicon pattern {pattern!r} in category {name!r}")

    @property
    def names(self) -> List[str]:
        return list(self.categories)

    def _compiled(self) -> Dict[str, Tuple[frozenset, Tuple[str, ...]]]:
        compiled = self.__dict__.get("_compiled_cache")
        if compiled is None:
            compiled = {
                name: (
                    frozenset(p for p in patterns if not p.endswith("*")),
                    tuple(p[:-1] for p in patterns if p.endswith("*")),
                )
                for name, patterns in self.categories.items()
            }
            object.__setattr__(self, "_compiled_cache", compiled)
        return compiled

    def matches(self, category: str, token: str) -> bool:
        exact, prefixes = self._compiled()[category]
        return token in exact or token.startswith(prefixes)


def load_lexicon(path: Optional[Path] = None) -> Lexicon:
    """
    Parse a lexicon file: `[category]` headers, one pattern per line,
    '#' comment lines ignored.
    """
    path = Path(path) if path else Config.DEFAULT_LEXICON_PATH
    categories: Dict[str, List[str]] = {}
    current = None
    try:
        with open(path, encoding="utf-8") as handle:
            for line_no, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if line.startswith("[") and line.endswith("]"):
                    current = line[1:-1].strip()
                    if not current or current in categories:
                        raise FeatureError(f"{path}:{line_no}: empty or duplicate category {current!r}")
                    categories[current] = []
                    continue
                if current is None:
                    raise FeatureError(f"{path}:{line_no}: pattern before any [category] header")
                categories[current].append(line)
    except OSError as e:
        raise FeatureError(f"Cannot read lexicon {path}: {e}") from e
    if not categories:
        raise FeatureError(f"Lexicon {path} defines no categories")
    return Lexicon({name: tuple(patterns) for name, patterns in categories.items()})


def lexicon_percentages(tokens: Sequence[str], lexicon: Lexicon) -> Dict[str, float]:
    """Per category, 100 x matching tokens / total tokens (0 for no tokens)."""
    if not tokens:
        return {name: 0.0 for name in lexicon.names}
    total = len(tokens)
    counts = Counter(tokens)
    result = {}
    for name in lexicon.names:
        hits = sum(n for token, n in counts.items() if lexicon.matches(name, token))
        result[name] = 100.0 * hits / total
    return result


@dataclass(frozen=True)
class TokenizedDocument:
    document: DailyDocument
    tokens: Tuple[str, ...]

    @property
    def label(self) -> DistressLabel:
        return self.document.label


def tokenize_documents(documents: Sequence[DailyDocument], stopwords: Iterable[str]) -> List[TokenizedDocument]:
    stopwords = frozenset(stopwords)
    return [TokenizedDocument(doc, tuple(preprocess(doc.text, stopwords))) for doc in documents]


def build_unigram_vocab(source_docs: Sequence[TokenizedDocument], coverage: float) -> Tuple[str, ...]:
    """
    Smallest document-frequency-ranked prefix of stems covering `coverage` of
    the Distress documents.

    Stems are ranked by the number of Distress documents containing them
    (descending), ties broken lexicographically. The prefix stops at the first
    stem after which at least ceil(coverage x n_distress) documents contain
    a selected stem.
    """
    if not 0 < coverage <= 1:
        raise FeatureError(f"coverage must be in (0, 1], got {coverage}")
    distress = [set(doc.tokens) for doc in source_docs if doc.label == DistressLabel.DISTRESS]
    if not distress:
        raise FeatureError("Cannot build a unigram vocabulary without Distress documents")

    doc_freq: Counter = Counter()
    for stems in distress:
        doc_freq.update(stems)
    ranking = sorted(doc_freq, key=lambda s: (-doc_freq[s], s))

    containing: Dict[str, List[int]] = {}
    for i, stems in enumerate(distress):
        for s in stems:
            containing.setdefault(s, []).append(i)

    required = math.ceil(coverage * len(distress) - 1e-9)
    covered = np.zeros(len(distress), dtype=bool)
    vocabulary: List[str] = []
    for s in ranking:
        if covered.sum() >= required:
            break
        vocabulary.append(s)
        covered[containing[s]] = True

    if covered.sum() < required:
        logger.warning(
            f"Coverage not reachable: {{'required': {required}, 'covered': {int(covered.sum())}, "
            f"'distress_documents': {len(distress)}}}"
        )
    logger.info(
        f"Unigram vocabulary: {{'stems': {len(vocabulary)}, 'candidates': {len(ranking)}, "
        f"'coverage': {coverage}, 'covered_fraction': {covered.mean():.6f}}}"
    )
    return tuple(vocabulary)


def corpus_vocabulary(docs: Sequence[TokenizedDocument]) -> Tuple[str, ...]:
    """All stems present in at least one document, sorted."""
    stems = set()
    for doc in docs:
        stems.update(doc.tokens)
    return tuple(sorted(stems))


@dataclass(frozen=True)
class FeatureDef:
    name: str
    kind: FeatureKind


@dataclass(frozen=True)
class FeatureSpec:
    """Ordered, uniquely named features; order is fixed once built."""

    features: Tuple[FeatureDef, ...]

    def __post_init__(self):
        names = [f.name for f in self.features]
        if len(names) != len(set(names)):
            duplicates = sorted({n for n in names if names.count(n) > 1})
            raise FeatureError(f"Duplicate feature names: {duplicates}")

    def __len__(self) -> int:
        return len(self.features)

    def __iter__(self):
        return iter(self.features)

    @property
    def names(self) -> List[str]:
        return [f.name for f in self.features]

    def kinds(self) -> List[FeatureKind]:
        return [f.kind for f in self.features]

    def index_of(self, name: str) -> int:
        return self.names.index(name)

    def where(self, keep) -> "FeatureSpec":
        return FeatureSpec(tuple(f for f in self.features if keep(f)))

    def fingerprint(self) -> str:
        """SHA-256 over `name:kind` lines; models refuse matrices with another fingerprint."""
        payload = "\n".join(f"{f.name}:{f.kind.value}" for f in self.features)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def to_list(self) -> List[Dict[str, str]]:
        return [{"name": f.name, "kind": f.kind.value} for f in self.features]

    @classmethod
    def from_list(cls, items: Sequence[Mapping[str, str]]) -> "FeatureSpec":
        return cls(tuple(FeatureDef(item["name"], FeatureKind(item["kind"])) for item in items))


@dataclass(frozen=True)
class FeatureMatrix:
    spec: FeatureSpec
    values: np.ndarray
    labels: Tuple[DistressLabel, ...]
    row_keys: Tuple[Tuple[str, object], ...]
    post_counts: Tuple[int, ...] = field(default=())

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            values = values.reshape(len(self.labels), len(self.spec))
        if values.shape != (len(self.labels), len(self.spec)):
            raise FeatureError(f"Matrix shape {values.shape} does not match {len(self.labels)} rows x {len(self.spec)} features")
        if len(self.row_keys) != len(self.labels):
            raise FeatureError("row_keys and labels differ in length")
        if self.post_counts and len(self.post_counts) != len(self.labels):
            raise FeatureError("post_counts and labels differ in length")
        if not np.all(np.isfinite(values)):
            raise FeatureError("Feature matrix contains missing or non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_rows(self) -> int:
        return len(self.labels)

    @property
    def y(self) -> np.ndarray:
        """+1 Distress, -1 Control, 0 Unlabeled."""
        return np.array([label.sign for label in self.labels], dtype=int)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.spec.index_of(name)]

    def select(self, spec: FeatureSpec) -> "FeatureMatrix":
        """Columns of `spec`, in its order; every name must be present."""
        own = {name: i for i, name in enumerate(self.spec.names)}
        try:
            idx = [own[name] for name in spec.names]
        except KeyError as e:
            raise FeatureError(f"Feature {e.args[0]!r} is not in this matrix") from e
        return FeatureMatrix(spec, self.values[:, idx], self.labels, self.row_keys, self.post_counts)

    def take_rows(self, rows: Sequence[int]) -> "FeatureMatrix":
        rows = list(rows)
        return FeatureMatrix(
            self.spec,
            self.values[rows, :],
            tuple(self.labels[i] for i in rows),
            tuple(self.row_keys[i] for i in rows),
            tuple(self.post_counts[i] for i in rows) if self.post_counts else (),
        )

    def with_values(self, values: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(self.spec, values, self.labels, self.row_keys, self.post_counts)

    def labeled_rows(self) -> List[int]:
        return [i for i, label in enumerate(self.labels) if label != DistressLabel.UNLABELED]

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(self.values, columns=self.spec.names)
        frame.insert(0, "label", [label.value for label in self.labels])
        frame.insert(0, "date", [str(key[1]) for key in self.row_keys])
        frame.insert(0, "user_id", [key[0] for key in self.row_keys])
        return frame

    def to_csv(self, path: Path) -> None:
        """CSV with leading user_id,date,label columns then one column per feature."""
        self.to_frame().to_csv(path, index=False, lineterminator="\n")


def build_feature_spec(lexicon: Lexicon, vocabulary: Sequence[str]) -> FeatureSpec:
    """Full feature set before selection: metadata, lexicon, unigrams."""
    features = [FeatureDef(name, kind) for name, kind, _ in METADATA_FEATURES]
    features += [FeatureDef(LEXICON_PREFIX + name, FeatureKind.LEXICON_PCT) for name in lexicon.names]
    features += [FeatureDef(UNIGRAM_PREFIX + s, FeatureKind.UNIGRAM) for s in vocabulary]
    return FeatureSpec(tuple(features))


def _user_code(user_id: str) -> float:
    return float(int(hashlib.sha256(user_id.encode("utf-8")).hexdigest()[:12], 16))


def extract_features(docs: Sequence[TokenizedDocument], spec: FeatureSpec, lexicon: Lexicon) -> FeatureMatrix:
    """
    Compute every feature of `spec` for each document; absent values are 0.

    Unigram values are occurrence counts of the stem in the daily document.
    """
    if not docs:
        raise FeatureError("Cannot extract features from zero documents")
    attribute = {name: attr for name, _, attr in METADATA_FEATURES}
    column = {name: j for j, name in enumerate(spec.names)}
    values = np.zeros((len(docs), len(spec)), dtype=float)

    metadata_columns = [(column[name], name, attr) for name, attr in attribute.items() if name in column]
    lexicon_columns = [
        (column[LEXICON_PREFIX + name], name) for name in lexicon.names if LEXICON_PREFIX + name in column
    ]
    for i, tdoc in enumerate(docs):
        doc = tdoc.document
        for j, name, attr in metadata_columns:
            if attr is not None:
                values[i, j] = float(getattr(doc, attr))
            elif name == "meta_date":
                values[i, j] = float(doc.date.toordinal())
            elif name == "meta_user":
                values[i, j] = _user_code(doc.user_id)
            elif name == "ling_word_count":
                values[i, j] = float(len(tdoc.tokens))
            elif name == "ling_mean_post_length":
                values[i, j] = len(tdoc.tokens) / doc.post_count
        if lexicon_columns:
            percentages = lexicon_percentages(tdoc.tokens, lexicon)
            for j, name in lexicon_columns:
                values[i, j] = percentages[name]
        for stem, n in Counter(tdoc.tokens).items():
            j = column.get(UNIGRAM_PREFIX + stem)
            if j is not None:
                values[i, j] = float(n)

    return FeatureMatrix(
        spec=spec,
        values=values,
        labels=tuple(t.label for t in docs),
        row_keys=tuple(t.document.key for t in docs),
        post_counts=tuple(t.document.post_count for t in docs),
    )


def intersect_features(spec_s: FeatureSpec, spec_t: FeatureSpec) -> FeatureSpec:
    """Features present in both specs, in source order."""
    target = {(f.name, f.kind) for f in spec_t}
    common = spec_s.where(lambda f: (f.name, f.kind) in target)
    if not len(common):
        raise FeatureError("Source and target share no features")
    return common


def correlation_prune(matrix: FeatureMatrix, r2_threshold: float) -> FeatureMatrix:
    """
    Drop constant columns, then walk features left to right keeping a feature
    only if its squared Pearson correlation with every kept feature is at most
    `r2_threshold`.
    """
    if not 0 < r2_threshold <= 1:
        raise FeatureError(f"r2_threshold must be in (0, 1], got {r2_threshold}")
    values = matrix.values
    varying = [j for j in range(values.shape[1]) if np.ptp(values[:, j]) > 0]
    if not varying:
        raise FeatureError("Every feature is constant; nothing survives pruning")

    if len(varying) == 1:
        r2 = np.ones((1, 1))
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            r2 = np.corrcoef(values[:, varying], rowvar=False) ** 2
        r2 = np.nan_to_num(r2, nan=0.0)

    kept: List[int] = []
    for position in range(len(varying)):
        if all(r2[position, other] <= r2_threshold for other in kept):
            kept.append(position)

    keep_names = {matrix.spec.features[varying[p]].name for p in kept}
    spec = matrix.spec.where(lambda f: f.name in keep_names)
    logger.info(
        f"Correlation pruning: {{'features_in': {len(matrix.spec)}, 'constant': {len(matrix.spec) - len(varying)}, "
        f"'features_out': {len(spec)}, 'r2_threshold': {r2_threshold}}}"
    )
    return matrix.select(spec)


def drop_meta(matrix: FeatureMatrix) -> FeatureMatrix:
    """Remove Meta features; row keys stay on the matrix for indexing."""
    spec = matrix.spec.where(lambda f: f.kind != FeatureKind.META)
    if not len(spec):
        raise FeatureError("Removing meta features leaves no features")
    return matrix.select(spec)


@dataclass(frozen=True)
class ScalingParams:
    names: Tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def to_dict(self) -> Dict[str, List]:
        return {"names": list(self.names), "mean": self.mean.tolist(), "std": self.std.tolist()}


def fit_scaling(matrix: FeatureMatrix) -> ScalingParams:
    """Per-feature mean and population standard deviation."""
    if matrix.n_rows == 0:
        raise FeatureError("Cannot fit scaling on an empty matrix")
    return ScalingParams(
        names=tuple(matrix.spec.names),
        mean=matrix.values.mean(axis=0),
        std=matrix.values.std(axis=0, ddof=0),
    )


def apply_scaling(matrix: FeatureMatrix, params: ScalingParams) -> FeatureMatrix:
    """(x - mean) / std per feature; zero-std features map to 0."""
    if tuple(matrix.spec.names) != params.names:
        raise FeatureError("Scaling parameters were fitted on a different feature spec")
    safe_std = np.where(params.std > 0, params.std, 1.0)
    scaled = (matrix.values - params.mean) / safe_std
    scaled[:, params.std == 0] = 0.0
    return matrix.with_values(scaled)


@dataclass
class FeatureSelectionReport:
    """Feature counts after each selection criterion."""

    extracted_source: int = 0
    extracted_target: int = 0
    vocabulary: int = 0
    intersected: int = 0
    after_meta: int = 0
    after_pruning: int = 0

    def to_dict(self) -> Dict[str, int]:
        return dict(self.__dict__)
