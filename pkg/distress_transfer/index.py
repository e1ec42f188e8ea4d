# distress_transfer/index.py
"""
Daily distress index: per day, the standardised count of Distress-predicted
posts minus the standardised count of Control-predicted posts.
"""
import logging
from dataclasses import dataclass
from datetime import date, datetime
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import numpy as np
import pandas as pd
from matplotlib import dates as mdates
from matplotlib import rc_context
from matplotlib.figure import Figure

from .errors import IndexSeriesError
from .transfer import PredictedTarget

logger = logging.getLogger(__name__)

UNIT_ROWS = "rows"
UNIT_POSTS = "posts"
CSV_COLUMNS = ["date", "n_d", "n_s", "bdi"]
# Fixed SVG ids so identical series render byte-identical files
SVG_HASH_SALT = "distress-index"


@dataclass(frozen=True)
class DailyCounts:
    date: date
    n_d: int
    n_s: int

    @property
    def total(self) -> int:
        return self.n_d + self.n_s


@dataclass(frozen=True, eq=False)
class IndexSeries:
    dates: Tuple[date, ...]
    n_d: np.ndarray
    n_s: np.ndarray
    values: np.ndarray
    mu_d: float
    alpha_d: float
    mu_s: float
    alpha_s: float

    def __len__(self) -> int:
        return len(self.dates)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "date": [d.isoformat() for d in self.dates],
                "n_d": self.n_d.astype(int),
                "n_s": self.n_s.astype(int),
                "bdi": self.values,
            },
            columns=CSV_COLUMNS,
        )

    def stats(self) -> dict:
        return {"mu_d": self.mu_d, "alpha_d": self.alpha_d, "mu_s": self.mu_s, "alpha_s": self.alpha_s}


def daily_counts(predicted: PredictedTarget, unit: str = UNIT_ROWS) -> List[DailyCounts]:
    """
    Distress / Control counts for every calendar day between the first and
    last predicted date; days without predictions count 0.

    unit="rows" counts predicted daily documents, unit="posts" weights each
    document by its post count.
    """
    if unit not in (UNIT_ROWS, UNIT_POSTS):
        raise IndexSeriesError(f"Unknown counting unit: {unit!r}")
    if not len(predicted):
        raise IndexSeriesError("No predictions to count")

    weights = np.asarray(predicted.post_counts if unit == UNIT_POSTS else [1] * len(predicted), dtype=int)
    labels = np.asarray(predicted.labels, dtype=int)
    frame = pd.DataFrame(
        {
            "date": pd.to_datetime([key[1] for key in predicted.row_keys]),
            "n_d": np.where(labels > 0, weights, 0),
            "n_s": np.where(labels > 0, 0, weights),
        }
    )
    per_day = frame.groupby("date")[["n_d", "n_s"]].sum()
    calendar = pd.date_range(per_day.index.min(), per_day.index.max(), freq="D")
    per_day = per_day.reindex(calendar, fill_value=0)
    return [DailyCounts(ts.date(), int(row.n_d), int(row.n_s)) for ts, row in per_day.iterrows()]


def _standardised(values: np.ndarray) -> Tuple[np.ndarray, float, float]:
    mu = float(values.mean())
    alpha = float(values.std(ddof=0))
    if alpha == 0:
        return np.zeros_like(values, dtype=float), mu, alpha
    return (values - mu) / alpha, mu, alpha


def bdi(counts: Sequence[DailyCounts]) -> IndexSeries:
    """
    BDI(t) = (n_d(t) - mu_d) / alpha_d - (n_s(t) - mu_s) / alpha_s.

    Means and population standard deviations are taken over exactly the
    given days; a term whose alpha is 0 is 0.
    """
    if len(counts) < 2:
        raise IndexSeriesError(f"The index needs at least 2 days, got {len(counts)}")
    dates = tuple(c.date for c in counts)
    if any(later <= earlier for earlier, later in zip(dates, dates[1:])):
        raise IndexSeriesError("Daily counts must have strictly increasing dates")
    n_d = np.asarray([c.n_d for c in counts], dtype=float)
    n_s = np.asarray([c.n_s for c in counts], dtype=float)
    z_d, mu_d, alpha_d = _standardised(n_d)
    z_s, mu_s, alpha_s = _standardised(n_s)
    return IndexSeries(
        dates=dates,
        n_d=n_d,
        n_s=n_s,
        values=z_d - z_s,
        mu_d=mu_d,
        alpha_d=alpha_d,
        mu_s=mu_s,
        alpha_s=alpha_s,
    )


def load_annotations(path: Path) -> List[Tuple[date, str]]:
    """Event annotations from CSV `date,label`."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IndexSeriesError(f"Cannot read annotations {path}: {e}") from e
    if not {"date", "label"} <= set(frame.columns):
        raise IndexSeriesError(f"Annotations file {path} must have columns date,label")
    try:
        return [(date.fromisoformat(d.strip()), label) for d, label in zip(frame["date"], frame["label"])]
    except ValueError as e:
        raise IndexSeriesError(f"Bad annotation date in {path}: {e}") from e


def _as_num(day: date) -> float:
    return mdates.date2num(datetime(day.year, day.month, day.day))


def plot_series(series: IndexSeries, plot_path: Path, annotations: Sequence[Tuple[date, str]] = ()) -> None:
    """Standalone SVG line chart; each annotation is a vertical line with id event-marker-<i>."""
    with rc_context({"svg.hashsalt": SVG_HASH_SALT, "svg.fonttype": "none"}):
        fig = Figure(figsize=(10, 4))
        ax = fig.add_subplot()
        ax.plot([_as_num(d) for d in series.dates], series.values, color="tab:red", linewidth=1.2, label="Distress index")
        ax.axhline(0.0, color="grey", linewidth=0.6)
        for i, (day, label) in enumerate(annotations):
            ax.axvline(_as_num(day), color="tab:blue", linestyle="--", linewidth=0.8, gid=f"event-marker-{i}")
            ax.annotate(label, (_as_num(day), 1.0), xycoords=("data", "axes fraction"),
                        rotation=90, va="top", ha="right", fontsize=7)
        ax.xaxis.set_major_locator(mdates.AutoDateLocator())
        ax.xaxis.set_major_formatter(mdates.DateFormatter("%Y-%m-%d"))
        ax.set_ylabel("Index")
        ax.legend(loc="upper left")
        fig.autofmt_xdate()
        fig.savefig(plot_path, format="svg", metadata={"Date": None})


def emit(series: IndexSeries, csv_path: Path, plot_path: Path, annotations_path: Optional[Path] = None) -> None:
    """Write the CSV `date,n_d,n_s,bdi` and the SVG plot."""
    annotations = load_annotations(annotations_path) if annotations_path else []
    try:
        series.to_frame().to_csv(csv_path, index=False, lineterminator="\n")
        plot_series(series, plot_path, annotations)
    except OSError as e:
        raise IndexSeriesError(f"Cannot write index outputs: {e}") from e
    payload = {"days": len(series), "csv": str(csv_path), "plot": str(plot_path), "annotations": len(annotations), **series.stats()}
    logger.info(f"Index written: {payload}")


def load_index_csv(path: Path) -> IndexSeries:
    """Read an emitted index CSV; stored BDI values are kept as written."""
    try:
        frame = pd.read_csv(path, dtype={"date": str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise IndexSeriesError(f"Cannot read index CSV {path}: {e}") from e
    if list(frame.columns) != CSV_COLUMNS:
        raise IndexSeriesError(f"Index CSV {path} must have columns {','.join(CSV_COLUMNS)}")
    counts = [
        DailyCounts(date.fromisoformat(d), int(nd), int(ns))
        for d, nd, ns in zip(frame["date"], frame["n_d"], frame["n_s"])
    ]
    recomputed = bdi(counts)
    return IndexSeries(
        dates=recomputed.dates,
        n_d=recomputed.n_d,
        n_s=recomputed.n_s,
        values=frame["bdi"].to_numpy(dtype=float),
        mu_d=recomputed.mu_d,
        alpha_d=recomputed.alpha_d,
        mu_s=recomputed.mu_s,
        alpha_s=recomputed.alpha_s,
    )
