# distress_transfer/corpus.py
"""
Ingest, validate, anonymise, filter and aggregate raw post records into
per-user per-day documents for the source and target corpora.
"""
import hashlib
import json
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date, datetime, time
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import pandas as pd

from .errors import IngestError
from .textprep import clean
from .utils.timezone_utils import clock_time, parse_timestamp, utc_date

logger = logging.getLogger(__name__)

# Night window, inclusive at both ends of the clock: 21:00:00 .. 05:59:59
NIGHT_START = time(21, 0)
NIGHT_END = time(5, 59, 59, 999999)

MANDATORY_FIELDS = (
    "post_id",
    "user_id",
    "timestamp",
    "text",
    "language",
    "is_reply",
    "is_retweet",
    "followers",
    "followees",
    "total_tweets",
    "total_favourites",
)
COUNT_FIELDS = ("followers", "followees", "total_tweets", "total_favourites")


class DistressLabel(str, Enum):
    DISTRESS = "distress"
    CONTROL = "control"
    UNLABELED = "unlabeled"

    @classmethod
    def parse(cls, value) -> "DistressLabel":
        if isinstance(value, DistressLabel):
            return value
        if value is None or (isinstance(value, str) and not value.strip()):
            return cls.UNLABELED
        try:
            return cls(str(value).strip().lower())
        except ValueError as e:
            raise ValueError(f"Unknown label: {value!r}") from e

    @property
    def sign(self) -> int:
        """+1 for Distress (the positive class), -1 for Control, 0 unlabeled."""
        return {DistressLabel.DISTRESS: 1, DistressLabel.CONTROL: -1}.get(self, 0)


class CorpusRole(str, Enum):
    SOURCE = "source"
    TARGET = "target"


@dataclass(frozen=True)
class PostRecord:
    post_id: str
    user_id: str
    timestamp: datetime
    text: str
    language: str
    is_reply: bool
    is_retweet: bool
    followers: int
    followees: int
    total_tweets: int
    total_favourites: int

    @classmethod
    def from_dict(cls, data: Mapping) -> "PostRecord":
        """Build a record from a decoded JSON line; raises ValueError when invalid."""
        missing = [name for name in MANDATORY_FIELDS if name not in data or data[name] is None]
        if missing:
            raise ValueError(f"missing fields: {', '.join(missing)}")
        post_id = str(data["post_id"]).strip()
        user_id = str(data["user_id"]).strip()
        if not post_id or not user_id:
            raise ValueError("post_id and user_id must be nonempty")
        counts = {}
        for name in COUNT_FIELDS:
            value = data[name]
            if isinstance(value, bool) or not math.isfinite(value) or int(value) != value or value < 0:
                raise ValueError(f"{name} must be a count >= 0, got {value!r}")
            counts[name] = int(value)
        for name in ("is_reply", "is_retweet"):
            if not isinstance(data[name], bool):
                raise ValueError(f"{name} must be a boolean, got {data[name]!r}")
        if not isinstance(data["text"], str):
            raise ValueError("text must be a string")
        return cls(
            post_id=post_id,
            user_id=user_id,
            timestamp=parse_timestamp(data["timestamp"]),
            text=data["text"],
            language=str(data["language"]).strip(),
            is_reply=data["is_reply"],
            is_retweet=data["is_retweet"],
            **counts,
        )


@dataclass(frozen=True)
class DailyDocument:
    user_id: str
    date: date
    text: str
    post_count: int
    reply_proportion: float
    retweet_proportion: float
    mean_night_index: float
    mean_followers: float
    mean_followees: float
    mean_total_tweets: float
    mean_total_favourites: float
    label: DistressLabel = DistressLabel.UNLABELED

    @property
    def key(self) -> Tuple[str, date]:
        return (self.user_id, self.date)


@dataclass(frozen=True)
class IngestReport:
    path: str = ""
    lines_read: int = 0
    blank: int = 0
    malformed: int = 0
    duplicates: int = 0
    accepted: int = 0

    @property
    def skipped(self) -> int:
        return self.malformed + self.duplicates

    def to_dict(self) -> Dict:
        return {
            'path': self.path,
            'lines_read': self.lines_read,
            'blank': self.blank,
            'malformed': self.malformed,
            'duplicates': self.duplicates,
            'accepted': self.accepted,
            'skipped': self.skipped,
        }


@dataclass(frozen=True)
class Corpus:
    role: CorpusRole
    posts: Tuple[PostRecord, ...]
    labels: Mapping[str, DistressLabel]
    report: IngestReport = field(default_factory=IngestReport)

    def __post_init__(self):
        if self.role == CorpusRole.SOURCE:
            users = {post.user_id for post in self.posts}
            unlabeled = sorted(u for u in users if self.labels.get(u, DistressLabel.UNLABELED) == DistressLabel.UNLABELED)
            if unlabeled:
                raise IngestError(
                    f"Source corpus has {len(unlabeled)} unlabeled users (e.g. {unlabeled[0]!r}); "
                    f"every source user must be labeled distress or control"
                )

    @property
    def users(self) -> List[str]:
        return sorted({post.user_id for post in self.posts})

    def label_of(self, user_id: str) -> DistressLabel:
        return self.labels.get(user_id, DistressLabel.UNLABELED)


def _merge_label(labels: Dict[str, DistressLabel], user_id: str, label: DistressLabel, origin: str):
    if label == DistressLabel.UNLABELED:
        return
    current = labels.get(user_id)
    if current is not None and current != label:
        raise IngestError(f"User {user_id!r} is labeled both {current.value} and {label.value} ({origin})")
    labels[user_id] = label


def load_user_labels(path: Path) -> Dict[str, DistressLabel]:
    """
    Load user-level labels from CSV `user_id,label`.

    Returns:
        mapping user_id -> DistressLabel; a user listed twice with different
        labels is a fatal IngestError
    """
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestError(f"Cannot read labels file {path}: {e}") from e
    if not {"user_id", "label"} <= set(frame.columns):
        raise IngestError(f"Labels file {path} must have columns user_id,label")
    labels: Dict[str, DistressLabel] = {}
    for user_id, raw in zip(frame["user_id"], frame["label"]):
        try:
            label = DistressLabel.parse(raw)
        except ValueError as e:
            raise IngestError(f"{path}: {e}") from e
        _merge_label(labels, user_id.strip(), label, str(path))
    return labels


def load_row_labels(path: Path) -> Dict[Tuple[str, date], DistressLabel]:
    """Load per-row labels from CSV `user_id,date,label` (the labelled target sample)."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IngestError(f"Cannot read row labels file {path}: {e}") from e
    if not {"user_id", "date", "label"} <= set(frame.columns):
        raise IngestError(f"Row labels file {path} must have columns user_id,date,label")
    rows: Dict[Tuple[str, date], DistressLabel] = {}
    for user_id, raw_date, raw_label in zip(frame["user_id"], frame["date"], frame["label"]):
        try:
            key = (user_id.strip(), date.fromisoformat(raw_date.strip()))
            rows[key] = DistressLabel.parse(raw_label)
        except ValueError as e:
            raise IngestError(f"{path}: bad row {user_id!r},{raw_date!r},{raw_label!r}: {e}") from e
    return rows


def ingest_posts(path: Path, role: CorpusRole, labels_path: Optional[Path] = None) -> Corpus:
    """
    Read a line-delimited JSON posts file into a Corpus.

    Lines that fail to decode or miss mandatory fields are counted and skipped;
    repeated post_ids after the first are skipped as duplicates.

    Args:
        path: posts file (UTF-8, one JSON object per line)
        role: CorpusRole.SOURCE or CorpusRole.TARGET
        labels_path: optional CSV `user_id,label` merged with in-line labels

    Returns:
        Corpus with an IngestReport
    """
    path = Path(path)
    role = CorpusRole(role)
    posts: List[PostRecord] = []
    labels: Dict[str, DistressLabel] = {}
    seen = set()
    lines_read = blank = malformed = duplicates = 0

    try:
        handle = open(path, encoding="utf-8")
    except OSError as e:
        raise IngestError(f"Cannot read posts file {path}: {e}") from e

    with handle:
        try:
            for line_no, line in enumerate(handle, start=1):
                lines_read += 1
                if not line.strip():
                    blank += 1
                    continue
                try:
                    data = json.loads(line)
                    if not isinstance(data, dict):
                        raise ValueError("record is not a JSON object")
                    record = PostRecord.from_dict(data)
                    label = DistressLabel.parse(data.get("label"))
                except (ValueError, TypeError, OverflowError) as e:
                    malformed += 1
                    logger.debug(f"Skipping malformed line: {{'path': '{path}', 'line': {line_no}, 'error': '{e}'}}")
                    continue
                if record.post_id in seen:
                    duplicates += 1
                    continue
                seen.add(record.post_id)
                _merge_label(labels, record.user_id, label, f"{path}:{line_no}")
                posts.append(record)
        except UnicodeDecodeError as e:
            raise IngestError(f"Posts file {path} is not valid UTF-8: {e}") from e

    if labels_path is not None:
        for user_id, label in load_user_labels(labels_path).items():
            _merge_label(labels, user_id, label, str(labels_path))

    report = IngestReport(
        path=str(path),
        lines_read=lines_read,
        blank=blank,
        malformed=malformed,
        duplicates=duplicates,
        accepted=len(posts),
    )
    if not posts:
        raise IngestError(f"No valid records in {path}: {report.to_dict()}")
    if report.skipped:
        logger.warning(f"Ingest skipped records: {report.to_dict()}")
    else:
        logger.info(f"Ingest complete: {report.to_dict()}")

    users = {post.user_id for post in posts}
    labels = {user: labels.get(user, DistressLabel.UNLABELED) for user in sorted(users)}
    return Corpus(role=role, posts=tuple(posts), labels=labels, report=report)


def anonymize_id(value: str, salt: bytes) -> str:
    """Hex SHA-256 digest of salt + id bytes."""
    if not salt:
        raise IngestError("Salt must be nonempty; unsalted hashing is refused")
    return hashlib.sha256(salt + value.encode("utf-8")).hexdigest()


def anonymize(corpus: Corpus, salt: bytes) -> Corpus:
    """Replace every user_id and post_id by its salted hash."""
    if isinstance(salt, str):
        salt = salt.encode("utf-8")
    if not salt:
        raise IngestError("Salt must be nonempty; unsalted hashing is refused")
    posts = tuple(
        replace(post, post_id=anonymize_id(post.post_id, salt), user_id=anonymize_id(post.user_id, salt))
        for post in corpus.posts
    )
    labels = {anonymize_id(user, salt): label for user, label in corpus.labels.items()}
    return replace(corpus, posts=posts, labels=labels)


def language_matches(tag: str, language: str) -> bool:
    """'en' matches 'en', 'EN' and 'en-GB'."""
    tag = tag.strip().lower()
    language = language.strip().lower()
    return tag == language or tag.startswith(language + "-")


def filter_corpus(corpus: Corpus, min_posts_per_user: int, language: str) -> Corpus:
    """
    Keep posts in `language` written by users with at least `min_posts_per_user`
    such posts. Ordering is preserved.
    """
    if min_posts_per_user < 0:
        raise IngestError(f"min_posts_per_user must be >= 0, got {min_posts_per_user}")
    in_language = [post for post in corpus.posts if language_matches(post.language, language)]
    per_user: Dict[str, int] = {}
    for post in in_language:
        per_user[post.user_id] = per_user.get(post.user_id, 0) + 1
    kept = tuple(post for post in in_language if per_user[post.user_id] >= min_posts_per_user)
    users = {post.user_id for post in kept}
    labels = {user: label for user, label in corpus.labels.items() if user in users}

    logger.info(
        f"Corpus filtered: {{'role': '{corpus.role.value}', 'posts_in': {len(corpus.posts)}, "
        f"'posts_out': {len(kept)}, 'users_out': {len(users)}, 'language': '{language}', "
        f"'min_posts_per_user': {min_posts_per_user}}}"
    )
    return replace(corpus, posts=kept, labels=labels)


def night_index(timestamp: datetime, utc_offset_minutes: int = 0) -> int:
    """
    1 for a post between 21:00:00 and 05:59:59 (inclusive) on the clock, else -1.

    The window wraps midnight, so it is the union of [21:00, 24:00) and
    [00:00, 06:00).
    """
    clock = clock_time(timestamp, utc_offset_minutes)
    if clock >= NIGHT_START or clock <= NIGHT_END:
        return 1
    return -1


def aggregate_daily(corpus: Corpus, utc_offset_minutes: int = 0) -> List[DailyDocument]:
    """
    Aggregate posts into one document per (user, UTC date).

    Text is the day's cleaned post texts joined by spaces in timestamp order;
    proportions are means of the boolean flags and mean_night_index the mean
    per-post night index. Each document inherits its user's label.
    """
    if not corpus.posts:
        raise IngestError(f"Cannot aggregate an empty {corpus.role.value} corpus")

    frame = pd.DataFrame(
        {
            "order": range(len(corpus.posts)),
            "user_id": [p.user_id for p in corpus.posts],
            "date": [utc_date(p.timestamp) for p in corpus.posts],
            "timestamp": [p.timestamp for p in corpus.posts],
            "text": [clean(p.text) for p in corpus.posts],
            "is_reply": [float(p.is_reply) for p in corpus.posts],
            "is_retweet": [float(p.is_retweet) for p in corpus.posts],
            "night": [float(night_index(p.timestamp, utc_offset_minutes)) for p in corpus.posts],
            "followers": [float(p.followers) for p in corpus.posts],
            "followees": [float(p.followees) for p in corpus.posts],
            "total_tweets": [float(p.total_tweets) for p in corpus.posts],
            "total_favourites": [float(p.total_favourites) for p in corpus.posts],
        }
    )
    frame = frame.sort_values(["user_id", "date", "timestamp", "order"], kind="mergesort")
    grouped = frame.groupby(["user_id", "date"], sort=True)
    aggregated = grouped.agg(
        text=("text", lambda texts: " ".join(t for t in texts if t)),
        post_count=("order", "size"),
        reply_proportion=("is_reply", "mean"),
        retweet_proportion=("is_retweet", "mean"),
        mean_night_index=("night", "mean"),
        mean_followers=("followers", "mean"),
        mean_followees=("followees", "mean"),
        mean_total_tweets=("total_tweets", "mean"),
        mean_total_favourites=("total_favourites", "mean"),
    )

    documents = [
        DailyDocument(
            user_id=user_id,
            date=day,
            text=row.text,
            post_count=int(row.post_count),
            reply_proportion=float(row.reply_proportion),
            retweet_proportion=float(row.retweet_proportion),
            mean_night_index=float(row.mean_night_index),
            mean_followers=float(row.mean_followers),
            mean_followees=float(row.mean_followees),
            mean_total_tweets=float(row.mean_total_tweets),
            mean_total_favourites=float(row.mean_total_favourites),
            label=corpus.label_of(user_id),
        )
        for (user_id, day), row in aggregated.iterrows()
    ]
    logger.info(
        f"Daily aggregation: {{'role': '{corpus.role.value}', 'posts': {len(corpus.posts)}, "
        f"'documents': {len(documents)}}}"
    )
    return documents


def apply_row_labels(documents: Sequence[DailyDocument], row_labels: Mapping[Tuple[str, date], DistressLabel]) -> List[DailyDocument]:
    """Override document labels with per-row labels where a key is present."""
    return [
        replace(doc, label=row_labels[doc.key]) if doc.key in row_labels else doc
        for doc in documents
    ]


def documents_to_frame(documents: Sequence[DailyDocument]) -> pd.DataFrame:
    """Tabular view of daily documents (for CSV export)."""
    return pd.DataFrame(
        {
            "user_id": [d.user_id for d in documents],
            "date": [d.date.isoformat() for d in documents],
            "label": [d.label.value for d in documents],
            "post_count": [d.post_count for d in documents],
            "reply_proportion": [d.reply_proportion for d in documents],
            "retweet_proportion": [d.retweet_proportion for d in documents],
            "mean_night_index": [d.mean_night_index for d in documents],
            "mean_followers": [d.mean_followers for d in documents],
            "mean_followees": [d.mean_followees for d in documents],
            "mean_total_tweets": [d.mean_total_tweets for d in documents],
            "mean_total_favourites": [d.mean_total_favourites for d in documents],
            "text": [d.text for d in documents],
        }
    )
