"""Configuration for CAD sequence evaluation."""
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path
from typing import Optional
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

# Base directory for shipped fixtures and prompt templates
BASE_DIR = os.path.dirname(os.path.abspath(__file__))
FIXTURES_DIR = os.path.join(BASE_DIR, "fixtures")
TEMPLATES_DIR = os.path.join(BASE_DIR, "annotators", "templates")

# Tessellation: chord tolerance relative to the profile bounding-box diagonal
CHORD_TOLERANCE_FRACTION = 0.002
MIN_SEGMENTS_PER_CIRCLE = 32

# Sketch validation tolerances (model units)
LOOP_CLOSURE_TOLERANCE = 1e-6
AXIS_TOLERANCE = 1e-6
MIN_LINE_LENGTH = 1e-9
MIN_TRIANGLE_AREA = 1e-12

# Metrics
F1_TAU = 0.05
CD_SAMPLE_COUNT = 8192
CD_REPORT_SCALE = 1000.0
DMCD_RADIUS = 0.01
DMCD_NORMALIZATION = "per_mesh"
CURVATURE_WEIGHTING = "count"
SEGE_SCALE = 1.0
SIR_COPLANAR_EPSILON = 1e-10
SPHERICITY_FORMULA = "pi^(1/3) * (6V)^(2/3) / s"

# Corpus statistics
VOCAB_CHECKPOINT = 10000
HISTOGRAM_BINS = 20

# Seeds
SEED = 0

# Endpoint settings
API_KEY_ENV = "CADMETRICS_API_KEY"
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"
DEFAULT_MODEL = "gpt-4.1"
JUDGE_MODEL = "gemma-3-12b-it"
REQUEST_TIMEOUT = 120
MAX_ATTEMPTS = 6
BACKOFF_BASE = 1.0
BACKOFF_CAP = 60.0
BACKOFF_JITTER = 0.5
MAX_IN_FLIGHT = 8
JUDGE_RETRIES = 2
MAX_IMAGES = 10


class ConfigError(ValueError):
    """Invalid configuration file."""


@dataclass(frozen=True)
class EvalConfig:
    """Every constant that influences a reported number."""
    chord_tolerance: Optional[float] = None
    chord_tolerance_fraction: float = CHORD_TOLERANCE_FRACTION
    min_segments_per_circle: int = MIN_SEGMENTS_PER_CIRCLE
    f1_tau: float = F1_TAU
    cd_sample_count: int = CD_SAMPLE_COUNT
    cd_report_scale: float = CD_REPORT_SCALE
    dmcd_radius: float = DMCD_RADIUS
    dmcd_normalization: str = DMCD_NORMALIZATION
    curvature_weighting: str = CURVATURE_WEIGHTING
    sege_scale: float = SEGE_SCALE
    seed: int = SEED
    vocab_checkpoint: int = VOCAB_CHECKPOINT
    histogram_bins: int = HISTOGRAM_BINS
    endpoint: str = DEFAULT_ENDPOINT
    model: str = DEFAULT_MODEL
    judge_model: str = JUDGE_MODEL
    temperature: float = 0.0
    max_tokens: int = 2048
    max_in_flight: int = MAX_IN_FLIGHT
    judge_retries: int = JUDGE_RETRIES

    def __post_init__(self):
        if self.chord_tolerance is not None and not self.chord_tolerance > 0:
            raise ConfigError("chord_tolerance must be > 0")
        if self.min_segments_per_circle < 8:
            raise ConfigError("min_segments_per_circle must be >= 8")
        if self.cd_sample_count < 1:
            raise ConfigError("cd_sample_count must be >= 1")
        if not self.dmcd_radius > 0:
            raise ConfigError("dmcd_radius must be > 0")
        if self.dmcd_normalization not in ("per_mesh", "ground_truth", "none"):
            raise ConfigError(f"unknown dmcd_normalization: {self.dmcd_normalization}")
        if self.curvature_weighting not in ("count", "length"):
            raise ConfigError(f"unknown curvature_weighting: {self.curvature_weighting}")
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")

    def tessellation(self):
        from cad.tessellate import TessellationParams
        return TessellationParams(
            chord_tolerance=self.chord_tolerance,
            min_segments_per_circle=self.min_segments_per_circle,
            relative_tolerance=self.chord_tolerance_fraction,
        )

    def with_overrides(self, **overrides) -> "EvalConfig":
        return replace(self, **overrides)

    def metadata(self) -> dict:
        """Report header: configuration plus the conventions behind each metric."""
        meta = asdict(self)
        meta.update({
            "sphericity_formula": SPHERICITY_FORMULA,
            "chamfer": "mean squared nearest-neighbour distance, both directions summed, "
                       "clouds normalised by the ground-truth bounding box to [-1, 1]^3",
            "dmcd_edge_rule": "edge contributes when its closest point lies within the radius",
            "std": "sample standard deviation (n - 1)",
            "judge_digit_0": "tie",
            "loop_closure_tolerance": LOOP_CLOSURE_TOLERANCE,
            "sir_coplanar_epsilon": SIR_COPLANAR_EPSILON,
        })
        return meta


def load_config(path: Optional[str] = None) -> EvalConfig:
    """Load a flat key = value TOML file; missing keys keep their defaults."""
    if path is None:
        return EvalConfig()
    try:
        with open(Path(path), "rb") as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e

    known = {f.name for f in fields(EvalConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        # api_key lands here too: credentials come from the environment only
        raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    try:
        return EvalConfig(**data)
    except TypeError as e:
        raise ConfigError(f"{path}: {e}") from e
