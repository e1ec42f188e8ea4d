# distress_transfer/synth.py
"""
Synthetic source/target post corpora with a controllable domain shift.

Every user posts at most once per day, so post counts equal daily-document
counts. Source users are labelled in-line and balanced 1:1; target posts are
unlabelled and their ground truth goes to the generator manifest, with a
labelled sample CSV drawn from it.
"""
import json
import logging
from dataclasses import asdict, dataclass
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np

from .errors import SynthError
from .manifest import file_digest
from .utils.timezone_utils import UTC_TZ

logger = logging.getLogger(__name__)

DISTRESS_WORDS = (
    "sad", "worried", "anxious", "lonely", "afraid", "stressed", "tired", "crying",
    "hurt", "depressed", "panic", "miserable", "scared", "awful", "upset",
)
CONTROL_WORDS = (
    "happy", "great", "love", "glad", "enjoy", "laughing", "thankful", "calm",
    "nice", "friends", "joy", "good",
)
NEUTRAL_WORDS = (
    "weather", "news", "vote", "market", "city", "train", "coffee", "game", "music",
    "book", "football", "dinner", "garden", "politics", "election", "queue", "bus",
    "rain", "tea", "shop", "phone", "film", "holiday", "street",
)

# Generative channels that a shift can move, in the order shift_fraction takes them
SHIFT_CHANNELS = (
    "distress_words",
    "followers",
    "post_length",
    "control_words",
    "followees",
    "night",
    "total_tweets",
    "reply",
    "total_favourites",
    "retweet",
)
# One unit of shift per channel, roughly one within-class standard deviation
CHANNEL_SCALE = {
    "distress_words": 0.12,
    "control_words": 0.12,
    "post_length": 2.5,
    "night": 0.3,
    "reply": 0.2,
    "retweet": 0.2,
    "followers": 1.0,
    "followees": 1.0,
    "total_tweets": 1.0,
    "total_favourites": 1.0,
}

SOURCE_START = date(2016, 1, 1)
TARGET_START = date(2019, 3, 1)


@dataclass(frozen=True)
class SynthSpec:
    n_source_posts: int = 2000
    n_target_posts: int = 2000
    shift: float = 1.0
    shift_fraction: float = 0.3
    source_posts_per_user: int = 25
    target_posts_per_user: int = 3
    target_days: int = 90
    target_distress_fraction: float = 0.34
    sample_size: int = 300
    non_english_fraction: float = 0.0
    base_words: int = 6
    extra_words_mean: float = 6.0

    def validate(self) -> None:
        problems = []
        if self.n_source_posts < 2 * self.source_posts_per_user:
            problems.append("n_source_posts must cover at least two source users")
        if self.n_target_posts < 1:
            problems.append("n_target_posts must be >= 1")
        if self.source_posts_per_user < 1 or self.target_posts_per_user < 1:
            problems.append("posts per user must be >= 1")
        if self.target_posts_per_user > self.target_days:
            problems.append("target_posts_per_user cannot exceed target_days")
        if not np.isfinite(self.shift):
            problems.append("shift must be finite")
        if not 0.0 <= self.shift_fraction <= 1.0:
            problems.append("shift_fraction must be in [0, 1]")
        if not 0.0 < self.target_distress_fraction < 1.0:
            problems.append("target_distress_fraction must be in (0, 1)")
        if not 0.0 <= self.non_english_fraction < 1.0:
            problems.append("non_english_fraction must be in [0, 1)")
        if self.sample_size < 0:
            problems.append("sample_size must be >= 0")
        if self.base_words < 1 or self.extra_words_mean < 0:
            problems.append("post length parameters must be positive")
        if problems:
            raise SynthError(f"Invalid synthetic spec: {'; '.join(problems)}")

    @property
    def shifted_channels(self) -> Tuple[str, ...]:
        return SHIFT_CHANNELS[: int(round(self.shift_fraction * len(SHIFT_CHANNELS)))]


@dataclass(frozen=True)
class ClassProfile:
    """Per-class generative parameters of one domain."""

    distress_word_rate: float
    control_word_rate: float
    night_rate: float
    reply_rate: float
    retweet_rate: float
    extra_words_mean: float
    log_followers: float
    log_followees: float
    log_total_tweets: float
    log_total_favourites: float

    def shifted(self, channels: Tuple[str, ...], shift: float) -> "ClassProfile":
        values = asdict(self)
        field_of = {
            "distress_words": "distress_word_rate",
            "control_words": "control_word_rate",
            "post_length": "extra_words_mean",
            "night": "night_rate",
            "reply": "reply_rate",
            "retweet": "retweet_rate",
            "followers": "log_followers",
            "followees": "log_followees",
            "total_tweets": "log_total_tweets",
            "total_favourites": "log_total_favourites",
        }
        for channel in channels:
            name = field_of[channel]
            values[name] += shift * CHANNEL_SCALE[channel]
        for name in ("distress_word_rate", "control_word_rate", "night_rate", "reply_rate", "retweet_rate"):
            values[name] = float(np.clip(values[name], 0.02, 0.9))
        values["extra_words_mean"] = max(0.0, values["extra_words_mean"])
        return ClassProfile(**values)


def source_profiles(spec: SynthSpec) -> Dict[str, ClassProfile]:
    return {
        "distress": ClassProfile(0.30, 0.08, 0.45, 0.30, 0.15, spec.extra_words_mean, 5.0, 5.5, 7.0, 6.0),
        "control": ClassProfile(0.08, 0.30, 0.25, 0.20, 0.15, spec.extra_words_mean, 5.6, 5.5, 7.3, 6.4),
    }


def target_profiles(spec: SynthSpec) -> Dict[str, ClassProfile]:
    channels = spec.shifted_channels
    return {label: profile.shifted(channels, spec.shift) for label, profile in source_profiles(spec).items()}


def _split_posts(n_posts: int, per_user: int) -> List[int]:
    """Posts per user: `per_user` each, the remainder spread one by one over the first users."""
    n_users = max(1, n_posts // per_user)
    counts = [per_user] * n_users if n_posts >= per_user else [n_posts]
    for i in range(n_posts - sum(counts)):
        counts[i % n_users] += 1
    return counts


def _timestamp(rng: np.random.Generator, day: date, night_rate: float) -> str:
    if rng.random() < night_rate:
        hour = int(rng.choice([21, 22, 23, 0, 1, 2, 3, 4, 5]))
    else:
        hour = int(rng.integers(6, 21))
    moment = datetime(day.year, day.month, day.day, hour, int(rng.integers(0, 60)), int(rng.integers(0, 60)), tzinfo=UTC_TZ)
    return moment.isoformat()


def _text(rng: np.random.Generator, profile: ClassProfile, base_words: int) -> str:
    n_words = base_words + int(rng.poisson(profile.extra_words_mean))
    draws = rng.random(n_words)
    words = []
    for u in draws:
        if u < profile.distress_word_rate:
            words.append(DISTRESS_WORDS[rng.integers(len(DISTRESS_WORDS))])
        elif u < profile.distress_word_rate + profile.control_word_rate:
            words.append(CONTROL_WORDS[rng.integers(len(CONTROL_WORDS))])
        else:
            words.append(NEUTRAL_WORDS[rng.integers(len(NEUTRAL_WORDS))])
    return " ".join(words)


def _user_fields(rng: np.random.Generator, profile: ClassProfile) -> Dict[str, int]:
    return {
        "followers": int(round(np.exp(rng.normal(profile.log_followers, 1.0)))),
        "followees": int(round(np.exp(rng.normal(profile.log_followees, 1.0)))),
        "total_tweets": int(round(np.exp(rng.normal(profile.log_total_tweets, 1.0)))),
        "total_favourites": int(round(np.exp(rng.normal(profile.log_total_favourites, 1.0)))),
    }


def _post(rng, post_id, user_id, day, profile, fields, spec, label=None) -> Dict:
    record = {
        "post_id": post_id,
        "user_id": user_id,
        "timestamp": _timestamp(rng, day, profile.night_rate),
        "text": _text(rng, profile, spec.base_words),
        "language": "de" if rng.random() < spec.non_english_fraction else "en",
        "is_reply": bool(rng.random() < profile.reply_rate),
        "is_retweet": bool(rng.random() < profile.retweet_rate),
        **fields,
    }
    if label is not None:
        record["label"] = label
    return record


def _write_jsonl(path: Path, records: List[Dict]) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")


@dataclass(frozen=True)
class SynthResult:
    source_posts: Path
    target_posts: Path
    target_sample_labels: Path
    manifest: Path


def generate(spec: SynthSpec, seed: int, out_dir: Path) -> SynthResult:
    """
    Write source_posts.jsonl, target_posts.jsonl, target_sample_labels.csv
    and generator_manifest.json under `out_dir`. Same spec and seed give
    byte-identical files.
    """
    spec.validate()
    out_dir = Path(out_dir)
    rng = np.random.default_rng(seed)
    source_profile = source_profiles(spec)
    target_profile = target_profiles(spec)

    source_records: List[Dict] = []
    source_labels: Dict[str, str] = {}
    source_counts = _split_posts(spec.n_source_posts, spec.source_posts_per_user)
    for u, n_posts in enumerate(source_counts):
        user_id = f"s{u:05d}"
        label = "distress" if u % 2 == 0 else "control"
        source_labels[user_id] = label
        fields = _user_fields(rng, source_profile[label])
        start = SOURCE_START + timedelta(days=u % 30)
        for k in range(n_posts):
            post_id = f"sp{len(source_records):08d}"
            source_records.append(
                _post(rng, post_id, user_id, start + timedelta(days=k), source_profile[label], fields, spec, label)
            )

    target_records: List[Dict] = []
    target_labels: Dict[str, str] = {}
    target_rows: List[Tuple[str, str, str]] = []
    target_counts = _split_posts(spec.n_target_posts, spec.target_posts_per_user)
    n_distress = int(round(spec.target_distress_fraction * len(target_counts)))
    distress_users = set(rng.permutation(len(target_counts))[:n_distress].tolist())
    for u, n_posts in enumerate(target_counts):
        user_id = f"t{u:05d}"
        label = "distress" if u in distress_users else "control"
        target_labels[user_id] = label
        fields = _user_fields(rng, target_profile[label])
        if n_posts > spec.target_days:
            raise SynthError(f"User {user_id} needs {n_posts} distinct days but target_days is {spec.target_days}")
        offsets = np.sort(rng.choice(spec.target_days, size=n_posts, replace=False))
        for offset in offsets.tolist():
            day = TARGET_START + timedelta(days=offset)
            post_id = f"tp{len(target_records):08d}"
            record = _post(rng, post_id, user_id, day, target_profile[label], fields, spec)
            target_records.append(record)
            if record["language"] == "en":
                target_rows.append((user_id, day.isoformat(), label))

    sample_size = min(spec.sample_size, len(target_rows))
    picked = np.sort(rng.choice(len(target_rows), size=sample_size, replace=False)) if sample_size else []
    sample = sorted(target_rows[i] for i in picked)

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        result = SynthResult(
            source_posts=out_dir / "source_posts.jsonl",
            target_posts=out_dir / "target_posts.jsonl",
            target_sample_labels=out_dir / "target_sample_labels.csv",
            manifest=out_dir / "generator_manifest.json",
        )
        _write_jsonl(result.source_posts, source_records)
        _write_jsonl(result.target_posts, target_records)
        with open(result.target_sample_labels, "w", encoding="utf-8") as handle:
            handle.write("user_id,date,label\n")
            for user_id, day, label in sample:
                handle.write(f"{user_id},{day},{label}\n")

        manifest = {
            "seed": seed,
            "spec": asdict(spec),
            "shifted_channels": list(spec.shifted_channels),
            "profiles": {
                "source": {label: asdict(p) for label, p in source_profile.items()},
                "target": {label: asdict(p) for label, p in target_profile.items()},
            },
            "source": {"users": len(source_counts), "posts": len(source_records), "labels": source_labels},
            "target": {
                "users": len(target_counts),
                "posts": len(target_records),
                "distress_users": n_distress,
                "labels": target_labels,
            },
            "sample": {"rows": len(sample), "distress": sum(1 for row in sample if row[2] == "distress")},
            "files": {
                path.name: file_digest(path)
                for path in (result.source_posts, result.target_posts, result.target_sample_labels)
            },
        }
        with open(result.manifest, "w", encoding="utf-8") as handle:
            json.dump(manifest, handle, indent=2, sort_keys=True)
            handle.write("\n")
    except OSError as e:
        raise SynthError(f"Cannot write synthetic data to {out_dir}: {e}") from e

    logger.info(
        f"Synthetic data written: {{'out_dir': '{out_dir}', 'source_posts': {len(source_records)}, "
        f"'target_posts': {len(target_records)}, 'sample_rows': {len(sample)}, 'seed': {seed}, "
        f"'shifted_channels': {list(spec.shifted_channels)}}}"
    )
    return result
