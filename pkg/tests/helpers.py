"""Small fixtures shared by the test suites."""
import json
from datetime import date
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from distress_transfer.corpus import DailyDocument, DistressLabel
from distress_transfer.features import FeatureDef, FeatureKind, FeatureMatrix, FeatureSpec

LABEL_BY_SIGN = {1: DistressLabel.DISTRESS, -1: DistressLabel.CONTROL, 0: DistressLabel.UNLABELED}


def post(post_id, user_id, timestamp="2019-03-01T12:00:00+00:00", text="hello world", label=None, **overrides):
    record = {
        "post_id": post_id,
        "user_id": user_id,
        "timestamp": timestamp,
        "text": text,
        "language": "en",
        "is_reply": False,
        "is_retweet": False,
        "followers": 10,
        "followees": 20,
        "total_tweets": 100,
        "total_favourites": 5,
    }
    record.update(overrides)
    if label is not None:
        record["label"] = label
    return record


def write_posts(path: Path, records: Iterable[dict], raw_lines: Sequence[str] = ()) -> Path:
    """One JSON object per line, then any raw (possibly malformed) lines."""
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record) + "\n")
        for line in raw_lines:
            handle.write(line + "\n")
    return Path(path)


def document(user_id="u1", day=date(2019, 3, 1), text="", label=DistressLabel.UNLABELED, post_count=1, **overrides):
    values = dict(
        user_id=user_id,
        date=day,
        text=text,
        post_count=post_count,
        reply_proportion=0.0,
        retweet_proportion=0.0,
        mean_night_index=-1.0,
        mean_followers=10.0,
        mean_followees=20.0,
        mean_total_tweets=100.0,
        mean_total_favourites=5.0,
        label=label,
    )
    values.update(overrides)
    return DailyDocument(**values)


def spec(names: Sequence[str], kinds: Optional[Sequence[FeatureKind]] = None) -> FeatureSpec:
    kinds = kinds or [FeatureKind.LEXICON_PCT] * len(names)
    return FeatureSpec(tuple(FeatureDef(name, kind) for name, kind in zip(names, kinds)))


def matrix(values, signs, names=None, kinds=None, post_counts=None) -> FeatureMatrix:
    """FeatureMatrix from an array and +1 / -1 / 0 labels; row keys are (u<i>, day i)."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    names = names or [f"f{j}" for j in range(values.shape[1])]
    keys = tuple((f"u{i}", date.fromordinal(date(2019, 3, 1).toordinal() + i)) for i in range(values.shape[0]))
    return FeatureMatrix(
        spec=spec(names, kinds),
        values=values,
        labels=tuple(LABEL_BY_SIGN[int(s)] for s in signs),
        row_keys=keys,
        post_counts=tuple(post_counts) if post_counts is not None else tuple(1 for _ in range(values.shape[0])),
    )


def two_clusters(n_per_class=20, gap=4.0, seed=0, n_features=2):
    """Separable Distress (+gap) / Control (0) gaussian blobs."""
    rng = np.random.default_rng(seed)
    distress = rng.normal(gap, 0.3, size=(n_per_class, n_features))
    control = rng.normal(0.0, 0.3, size=(n_per_class, n_features))
    values = np.vstack([distress, control])
    signs = [1] * n_per_class + [-1] * n_per_class
    return matrix(values, signs)
