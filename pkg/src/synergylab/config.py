"""Run configuration: TOML file plus ``section.key=value`` overrides."""

from __future__ import annotations

import json
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import _toml
from .errors import ConfigError


@dataclass
class InputConfig:
    dir: str = ""
    papers: str = ""
    authors: str = ""
    authorships: str = ""
    citations: str = ""
    schema: str = ""


@dataclass
class OutputConfig:
    dir: str = "synergylab_out"


@dataclass
class CorpusConfig:
    year_min: int = 1960
    year_max: int = 2020
    required: list = field(default_factory=lambda: ["gender", "top_field", "year", "di-computable"])
    gender_threshold: float = 0.5


@dataclass
class SlicingConfig:
    disciplines: list = field(default_factory=list)  # empty: every field present
    period_width: int = 10
    period_start: int = 1960


@dataclass
class DiConfig:
    l: int = 5
    window: int = 5  # negative: unbounded
    subthreshold: str = "reclassify"


@dataclass
class FitConfig:
    min_count: int = 100
    beta_starts: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 1.5, 2.0])
    gamma_starts: list = field(default_factory=lambda: [0.01, 0.05, 0.1, 0.25, 0.5])
    xatol: float = 1e-8
    maxiter: int = 2000
    weight: str = "none"  # none | Lg
    model: str = "standard"  # standard | reduced
    g_max: int = 0  # 0: no cap


@dataclass
class FeaturesConfig:
    q: float = 0.90
    ddof: int = 0
    min_authors: int = 10


@dataclass
class InferenceConfig:
    n_boot: int = 1000
    level: float = 0.95
    robust: bool = False
    caliper_mult: float = 0.2
    mediator: str = "period"  # period: slice fits per period; field: one fit per field
    min_papers: int = 50


@dataclass
class ModesConfig:
    roster: str = ""
    k: int = 0  # 0: choose by silhouette
    k_min: int = 2
    k_max: int = 10
    n_init: int = 10
    pca_components: int = 2


@dataclass
class RunSection:
    seed: int = 0
    threads: int = 0  # 0: library default


@dataclass
class SynthConfig:
    out_dir: str = ""  # empty: write to input.dir
    seed: int = -1  # negative: derived from run.seed
    n_papers: int = 30_000
    g_max: int = 25
    elite_fraction: float = 0.1
    elite_multiplier: float = 10.0


SECTIONS = {
    "input": InputConfig,
    "output": OutputConfig,
    "corpus": CorpusConfig,
    "slicing": SlicingConfig,
    "di": DiConfig,
    "fit": FitConfig,
    "features": FeaturesConfig,
    "inference": InferenceConfig,
    "modes": ModesConfig,
    "run": RunSection,
    "synth": SynthConfig,
}


@dataclass
class RunConfig:
    input: InputConfig = field(default_factory=InputConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    slicing: SlicingConfig = field(default_factory=SlicingConfig)
    di: DiConfig = field(default_factory=DiConfig)
    fit: FitConfig = field(default_factory=FitConfig)
    features: FeaturesConfig = field(default_factory=FeaturesConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    modes: ModesConfig = field(default_factory=ModesConfig)
    run: RunSection = field(default_factory=RunSection)
    synth: SynthConfig = field(default_factory=SynthConfig)
    base_dir: str = field(default=".", repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("base_dir")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    def seed_for(self, name: str) -> int:
        """Stable per-task seed derived from the root seed and a task name."""
        ss = np.random.SeedSequence([int(self.run.seed), zlib.crc32(name.encode())])
        return int(ss.generate_state(1)[0])

    def validate(self) -> "RunConfig":
        if self.di.l < 1:
            raise ConfigError("di.l must be >= 1")
        if self.di.subthreshold not in ("reclassify", "drop"):
            raise ConfigError(f"di.subthreshold must be reclassify or drop, got {self.di.subthreshold!r}")
        if self.fit.weight not in ("none", "Lg"):
            raise ConfigError(f"fit.weight must be none or Lg, got {self.fit.weight!r}")
        if self.fit.model not in ("standard", "reduced"):
            raise ConfigError(f"fit.model must be standard or reduced, got {self.fit.model!r}")
        if self.fit.min_count < 1:
            raise ConfigError("fit.min_count must be >= 1")
        if not 0 < self.features.q <= 1:
            raise ConfigError("features.q must be in (0, 1]")
        if self.inference.mediator not in ("period", "field"):
            raise ConfigError(f"inference.mediator must be period or field, got {self.inference.mediator!r}")
        if not 0 < self.inference.level < 1:
            raise ConfigError("inference.level must be in (0, 1)")
        if self.inference.n_boot < 1:
            raise ConfigError("inference.n_boot must be >= 1")
        if self.slicing.period_width < 1:
            raise ConfigError("slicing.period_width must be >= 1")
        if self.corpus.year_min > self.corpus.year_max:
            raise ConfigError("corpus.year_min exceeds corpus.year_max")
        if self.modes.k_min < 2 or self.modes.k_max < self.modes.k_min:
            raise ConfigError("modes.k_min must be >= 2 and <= modes.k_max")
        return self


def _coerce(section: str, key: str, value, target_type):
    if target_type is bool and isinstance(value, bool):
        return value
    if target_type is int and isinstance(value, int) and not isinstance(value, bool):
        return value
    if target_type is float and isinstance(value, (int, float)) and not isinstance(value, bool):
        return float(value)
    if target_type is str and isinstance(value, str):
        return value
    if target_type is list and isinstance(value, list):
        return value
    raise ConfigError(f"{section}.{key}: expected {target_type.__name__}, got {value!r}")


def _apply(cfg: RunConfig, section: str, key: str, value) -> None:
    if section not in SECTIONS:
        raise ConfigError(f"unknown config section [{section}]")
    obj = getattr(cfg, section)
    types = {f.name: f.type for f in fields(obj)}
    if key not in types:
        raise ConfigError(f"unknown config key {section}.{key}")
    default = getattr(SECTIONS[section](), key)
    setattr(obj, key, _coerce(section, key, value, type(default)))


def from_dict(doc: dict, base_dir: str | Path = ".") -> RunConfig:
    cfg = RunConfig(base_dir=str(base_dir))
    for section, body in doc.items():
        if not isinstance(body, dict):
            raise ConfigError(f"config entry {section!r} must be a table")
        for key, value in body.items():
            _apply(cfg, section, key, value)
    return cfg


def load_config(path: str | Path | None, overrides=()) -> RunConfig:
    if path is None:
        cfg = RunConfig()
    else:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as e:
            raise ConfigError(f"cannot read config {path}: {e.strerror}") from None
        try:
            doc = _toml.loads(text)
        except _toml.TOMLDecodeError as e:
            raise ConfigError(f"config {path}: {e}") from None
        cfg = from_dict(doc, p.parent)
    for item in overrides:
        apply_override(cfg, item)
    return cfg.validate()


def apply_override(cfg: RunConfig, item: str) -> None:
    """Apply ``section.key=value``; value is read as a TOML literal, else a string."""
    if "=" not in item or "." not in item.split("=", 1)[0]:
        raise ConfigError(f"override must look like section.key=value, got {item!r}")
    lhs, raw = item.split("=", 1)
    section, key = lhs.strip().split(".", 1)
    try:
        value = _toml.loads(f"v = {raw}")["v"]
    except _toml.TOMLDecodeError:
        value = raw
    _apply(cfg, section, key, value)
