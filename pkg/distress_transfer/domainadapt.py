# distress_transfer/domainadapt.py
"""
Source/target distribution mismatch: two-sample KS diagnostics and the
adaptation sequence resample -> drop user features -> scale/centre -> mean shift.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import kolmogorov

from .errors import AdaptationError
from .features import (
    USER_KINDS,
    FeatureMatrix,
    FeatureSpec,
    ScalingParams,
    apply_scaling,
    fit_scaling,
)
from .utils.parallel import map_tasks

logger = logging.getLogger(__name__)

# Significance gate used for the diagnostic summary only
KS_ALPHA = 0.001
P_VALUE_FLOOR = np.finfo(float).tiny


@dataclass(frozen=True)
class KsResult:
    feature: str
    statistic: float
    p_value: float

    @property
    def significant(self) -> bool:
        return self.p_value < KS_ALPHA


def ks_two_sample(a, b, feature: str = "") -> KsResult:
    """
    Two-sample Kolmogorov-Smirnov test.

    D is the largest |ECDF_a - ECDF_b| over the pooled sample points; the
    p-value comes from the asymptotic Kolmogorov distribution at
    sqrt(n_a n_b / (n_a + n_b)) * D, clamped to [tiny, 1].
    """
    a = np.sort(np.asarray(a, dtype=float).ravel())
    b = np.sort(np.asarray(b, dtype=float).ravel())
    n_a, n_b = a.size, b.size
    if n_a == 0 or n_b == 0:
        raise AdaptationError("KS test needs two nonempty samples")
    pooled = np.concatenate([a, b])
    cdf_a = np.searchsorted(a, pooled, side="right") / n_a
    cdf_b = np.searchsorted(b, pooled, side="right") / n_b
    d = float(np.max(np.abs(cdf_a - cdf_b)))
    en = n_a * n_b / (n_a + n_b)
    p = float(kolmogorov(np.sqrt(en) * d))
    return KsResult(feature=feature, statistic=d, p_value=min(1.0, max(P_VALUE_FLOOR, p)))


def ks_all_features(source: FeatureMatrix, target: FeatureMatrix, threads: int = 1) -> List[KsResult]:
    """Per-feature KS test on the features the two matrices share, in source order."""
    target_names = set(target.spec.names)
    names = [name for name in source.spec.names if name in target_names]
    return map_tasks(lambda name: ks_two_sample(source.column(name), target.column(name), name), names, threads)


def class_ratio(matrix: FeatureMatrix) -> Tuple[int, int]:
    """(Distress rows, Control rows)."""
    y = matrix.y
    return int(np.sum(y == 1)), int(np.sum(y == -1))


def resample_class_ratio(matrix: FeatureMatrix, target_ratio: float, seed: int) -> FeatureMatrix:
    """
    Downsample the over-represented class so Distress:Control matches
    `target_ratio` (Distress per Control) within one row.

    Rows are drawn without replacement from a seeded generator; surviving
    rows keep their original order.
    """
    if target_ratio is None or not np.isfinite(target_ratio) or target_ratio <= 0:
        raise AdaptationError(f"target_ratio must be a positive number, got {target_ratio}")
    y = matrix.y
    distress = np.flatnonzero(y == 1)
    control = np.flatnonzero(y == -1)
    if distress.size == 0 or control.size == 0:
        raise AdaptationError("Resampling needs both Distress and Control rows")

    keep_distress, keep_control = distress.size, control.size
    if distress.size / control.size > target_ratio:
        keep_distress = max(1, int(round(target_ratio * control.size)))
    else:
        keep_control = max(1, int(round(distress.size / target_ratio)))

    rng = np.random.default_rng(seed)
    kept_distress = np.sort(rng.choice(distress, size=keep_distress, replace=False))
    kept_control = np.sort(rng.choice(control, size=keep_control, replace=False))
    unlabeled = np.flatnonzero(y == 0)
    rows = np.sort(np.concatenate([kept_distress, kept_control, unlabeled]))

    logger.info(
        f"Resampled source: {{'before': {(int(distress.size), int(control.size))}, "
        f"'after': {(keep_distress, keep_control)}, 'target_ratio': {target_ratio:.6f}, 'seed': {seed}}}"
    )
    return matrix.take_rows(rows.tolist())


def drop_user_features(spec: FeatureSpec) -> FeatureSpec:
    """Remove Engagement and EgoNetwork features."""
    kept = spec.where(lambda f: f.kind not in USER_KINDS)
    if not len(kept):
        raise AdaptationError("Removing user features leaves no features")
    return kept


def mean_shifts(source: FeatureMatrix, target: FeatureMatrix) -> np.ndarray:
    """Per-feature target mean minus source mean."""
    if source.spec != target.spec:
        raise AdaptationError("Source and target feature specs differ")
    return target.values.mean(axis=0) - source.values.mean(axis=0)


def mean_match(source: FeatureMatrix, target: FeatureMatrix) -> FeatureMatrix:
    """Shift every source column so its mean equals the target column mean."""
    shift = mean_shifts(source, target)
    return source.with_values(source.values + shift)


@dataclass
class AdaptationReport:
    ks_before: List[KsResult] = field(default_factory=list)
    ks_after: List[KsResult] = field(default_factory=list)
    class_ratio_before: Tuple[int, int] = (0, 0)
    class_ratio_after: Tuple[int, int] = (0, 0)
    target_ratio: float = 1.0
    dropped_features: List[str] = field(default_factory=list)
    mean_shift: Dict[str, float] = field(default_factory=dict)
    scaling: Optional[ScalingParams] = None
    method: str = "additive per-feature mean shift after shared scaling"

    def rows(self) -> List[Dict]:
        after = {r.feature: r for r in self.ks_after}
        rows = []
        for before in self.ks_before:
            post = after.get(before.feature)
            rows.append({
                'feature': before.feature,
                'ks_before': before.statistic,
                'p_before': before.p_value,
                'ks_after': post.statistic if post else None,
                'p_after': post.p_value if post else None,
                'mean_shift': self.mean_shift.get(before.feature),
            })
        return rows

    def to_csv(self, path: Path) -> None:
        columns = ['feature', 'ks_before', 'p_before', 'ks_after', 'p_after', 'mean_shift']
        pd.DataFrame(self.rows(), columns=columns).to_csv(path, index=False, lineterminator="\n")

    def to_dict(self) -> Dict:
        return {
            'method': self.method,
            'target_ratio': self.target_ratio,
            'class_ratio_before': list(self.class_ratio_before),
            'class_ratio_after': list(self.class_ratio_after),
            'dropped_features': list(self.dropped_features),
            'features_tested': len(self.ks_before),
            'significant_before': sum(r.significant for r in self.ks_before),
            'significant_after': sum(r.significant for r in self.ks_after),
            'alpha': KS_ALPHA,
            'max_abs_mean_shift': max((abs(v) for v in self.mean_shift.values()), default=0.0),
        }

    def write_json(self, path: Path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            json.dump(self.to_dict(), handle, indent=2, sort_keys=True)
            handle.write("\n")


def adapt(
    source: FeatureMatrix,
    target: FeatureMatrix,
    target_ratio: float,
    seed: int,
    threads: int = 1,
) -> Tuple[FeatureMatrix, FeatureMatrix, AdaptationReport]:
    """
    Run the full adaptation sequence on matrices sharing one spec.

    Returns the adapted source, the scaled target and the report. KS results
    are diagnostics; adaptation always runs.
    """
    if source.spec != target.spec:
        raise AdaptationError("Source and target feature specs differ")
    report = AdaptationReport(target_ratio=target_ratio)
    report.ks_before = ks_all_features(source, target, threads)
    report.class_ratio_before = class_ratio(source)

    resampled = resample_class_ratio(source, target_ratio, seed)
    report.class_ratio_after = class_ratio(resampled)

    spec = drop_user_features(source.spec)
    report.dropped_features = [name for name in source.spec.names if name not in set(spec.names)]
    resampled = resampled.select(spec)
    target = target.select(spec)

    report.scaling = fit_scaling(resampled)
    scaled_source = apply_scaling(resampled, report.scaling)
    scaled_target = apply_scaling(target, report.scaling)

    shift = mean_shifts(scaled_source, scaled_target)
    adapted = mean_match(scaled_source, scaled_target)
    report.mean_shift = dict(zip(spec.names, shift.tolist()))
    report.ks_after = ks_all_features(adapted, scaled_target, threads)

    logger.info(f"Adaptation complete: {report.to_dict()}")
    return adapted, scaled_target, report
