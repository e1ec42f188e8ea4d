import hashlib
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from dotenv import load_dotenv

from .errors import ConfigError

BASE_DIR = Path(__file__).resolve().parent.parent  # project root
PACKAGE_DIR = Path(__file__).resolve().parent
ENV_PATH_ROOT = BASE_DIR / ".env"
# Process environment wins over .env values
if ENV_PATH_ROOT.exists():
    load_dotenv(ENV_PATH_ROOT, override=False)

ENV_PREFIX = "DT_"


class Config:
    BASE_DIR = BASE_DIR

    # Bundled reference data
    DATA_DIR = PACKAGE_DIR / "data"
    DEFAULT_STOPWORDS_PATH = DATA_DIR / "stopwords_en.txt"
    DEFAULT_LEXICON_PATH = DATA_DIR / "demo_lexicon.txt"
    PORTER_VECTORS_PATH = DATA_DIR / "porter_vectors.txt"
    DEMO_CONFIG_PATH = DATA_DIR / "demo.toml"

    LOG_LEVEL = os.getenv("DT_LOG_LEVEL", "INFO").upper()

    # Salt for anonymisation; empty means ids are kept as ingested
    SALT = os.getenv("DT_SALT", "")

    # Night index is computed on UTC clocks unless an offset is configured
    NIGHT_UTC_OFFSET_MINUTES = int(os.getenv("DT_NIGHT_UTC_OFFSET_MINUTES", "0"))

    THREADS = int(os.getenv("DT_THREADS", "1"))
    OUT_DIR = Path(os.getenv("DT_OUT_DIR", str(BASE_DIR / "out")))


CLASSIFIER_KINDS = ("lr", "svm", "rf")
INDEX_UNITS = ("rows", "posts")
PATH_FIELDS = (
    "source_posts",
    "target_posts",
    "source_labels",
    "target_sample_labels",
    "lexicon",
    "stopwords",
    "annotations",
    "out_dir",
)


@dataclass(frozen=True)
class PipelineConfig:
    """Resolved configuration of one transfer run."""

    # [paths]
    source_posts: Optional[Path] = None
    target_posts: Optional[Path] = None
    source_labels: Optional[Path] = None
    target_sample_labels: Optional[Path] = None
    lexicon: Path = Config.DEFAULT_LEXICON_PATH
    stopwords: Path = Config.DEFAULT_STOPWORDS_PATH
    annotations: Optional[Path] = None
    out_dir: Path = Config.OUT_DIR

    # [run]
    weighted: bool = True
    seed: int = 42
    threads: int = Config.THREADS
    salt: str = Config.SALT
    language: str = "en"
    source_min_posts: int = 25
    target_min_posts: int = 1
    night_utc_offset_minutes: int = Config.NIGHT_UTC_OFFSET_MINUTES
    min_target_sample: int = 30
    test_fraction: float = 0.2
    folds: int = 5

    # [features]
    coverage: float = 0.99
    r2_threshold: float = 0.75

    # [adaptation]
    target_ratio: Optional[float] = None

    # [models]
    classifiers: Tuple[str, ...] = CLASSIFIER_KINDS
    lr_learning_rates: Tuple[float, ...] = (0.1,)
    lr_l2_lambdas: Tuple[float, ...] = (1e-3,)
    lr_max_iters: int = 5000
    lr_tolerance: float = 1e-6
    svm_c_points: int = 8
    svm_sigma_points: int = 8
    svm_tolerance: float = 1e-3
    svm_max_passes: int = 50
    rf_n_trees: Tuple[int, ...] = (200,)
    rf_max_depths: Tuple[int, ...] = (12,)
    rf_min_leaf: int = 2

    # [index]
    index_unit: str = "rows"

    def __post_init__(self):
        unknown = [k for k in self.classifiers if k not in CLASSIFIER_KINDS]
        if unknown or not self.classifiers:
            raise ConfigError(f"classifiers must be a nonempty subset of {CLASSIFIER_KINDS}, got {self.classifiers}")
        if self.index_unit not in INDEX_UNITS:
            raise ConfigError(f"index_unit must be one of {INDEX_UNITS}, got {self.index_unit!r}")
        if not 0 < self.coverage <= 1:
            raise ConfigError(f"coverage must be in (0, 1], got {self.coverage}")
        if not 0 < self.r2_threshold <= 1:
            raise ConfigError(f"r2_threshold must be in (0, 1], got {self.r2_threshold}")
        if not 0 < self.test_fraction < 1:
            raise ConfigError(f"test_fraction must be in (0, 1), got {self.test_fraction}")
        if self.folds < 2:
            raise ConfigError(f"folds must be >= 2, got {self.folds}")
        if self.target_ratio is not None and self.target_ratio <= 0:
            raise ConfigError(f"target_ratio must be positive, got {self.target_ratio}")
        if self.source_min_posts < 0 or self.target_min_posts < 0:
            raise ConfigError("minimum posts per user must be >= 0")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")

    def require_inputs(self) -> None:
        """Raise unless both corpora are configured and readable."""
        for name in ("source_posts", "target_posts"):
            value = getattr(self, name)
            if value is None:
                raise ConfigError(f"{name} is not configured")
            if not Path(value).is_file():
                raise ConfigError(f"{name} does not exist: {value}")

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        for key, value in data.items():
            if isinstance(value, Path):
                data[key] = str(value)
            elif isinstance(value, tuple):
                data[key] = list(value)
        return data

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON form; the run identity in manifests."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def with_overrides(self, **overrides: Any) -> "PipelineConfig":
        present = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **present) if present else self


def _field_types() -> Dict[str, Any]:
    return {f.name: f for f in fields(PipelineConfig)}


def _coerce(name: str, value: Any, default: Any) -> Any:
    """Coerce a TOML or environment value to the type of the field default."""
    try:
        if name in PATH_FIELDS:
            return None if value in (None, "") else Path(value)
        if isinstance(default, bool):
            if isinstance(value, bool):
                return value
            lowered = str(value).strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(f"not a boolean: {value!r}")
        if isinstance(default, tuple):
            items = value.split(",") if isinstance(value, str) else list(value)
            items = [item.strip() if isinstance(item, str) else item for item in items]
            kind = type(default[0]) if default else str
            return tuple(kind(item) for item in items if item != "")
        if name == "target_ratio":
            return None if value in (None, "") else float(value)
        if isinstance(default, int):
            return int(value)
        if isinstance(default, float):
            return float(value)
        return str(value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Invalid value for {name}: {value!r} ({e})") from e


def _flatten_tables(document: Dict[str, Any]) -> Dict[str, Any]:
    flat: Dict[str, Any] = {}
    for key, value in document.items():
        items = value.items() if isinstance(value, dict) else [(key, value)]
        for inner_key, inner_value in items:
            if inner_key in flat:
                raise ConfigError(f"Duplicate config key: {inner_key}")
            flat[inner_key] = inner_value
    return flat


def env_overrides(environ: Optional[Dict[str, str]] = None) -> Dict[str, str]:
    """Collect DT_<KEY> variables naming a PipelineConfig field."""
    environ = os.environ if environ is None else environ
    names = _field_types()
    found = {}
    for var, value in environ.items():
        if not var.startswith(ENV_PREFIX):
            continue
        key = var[len(ENV_PREFIX):].lower()
        if key in names:
            found[key] = value
    return found


def load_pipeline_config(path: Optional[Path] = None, environ: Optional[Dict[str, str]] = None) -> PipelineConfig:
    """
    Load a PipelineConfig from a TOML file, then apply DT_ environment overrides.

    Args:
        path: TOML file; None uses defaults only
        environ: environment mapping (defaults to os.environ)

    Returns:
        PipelineConfig with relative paths resolved against the file's directory
    """
    raw: Dict[str, Any] = {}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        try:
            with open(path, "rb") as handle:
                raw = _flatten_tables(tomllib.load(handle))
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Config file is not valid TOML: {path}: {e}") from e
        base = path.resolve().parent

    raw.update(env_overrides(environ))

    defaults = PipelineConfig.__dataclass_fields__
    unknown = sorted(set(raw) - set(defaults))
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}")

    values: Dict[str, Any] = {}
    for key, value in raw.items():
        dc_field = defaults[key]
        default = dc_field.default if dc_field.default is not None else ""
        coerced = _coerce(key, value, default)
        if isinstance(coerced, Path) and not coerced.is_absolute():
            coerced = (base / coerced).resolve()
        values[key] = coerced
    return PipelineConfig(**values)
