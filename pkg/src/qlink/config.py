"""Key-value run configuration files.

One ``section.key = value`` per line; ``#`` starts a comment.  Every dB
quantity uses a ``_db`` key and every probability is a plain decimal.  The
whole file is validated, with line numbers, before anything runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .components import DetectorModel, FiberSpan, LanternModel, SourceModel
from .protocol import SCHEMES, ArchitectureConfig, fit_visibility

PRESETS = ("ideal", "paper_b2b", "paper_500m")
FIT_NAMES = ("ideal", "paper", "custom", "fit_dark_share", "fit_qber11")


class ConfigError(ValueError):
    """Invalid configuration; ``errors`` holds one message per offending line."""

    def __init__(self, source: str, errors: list[str]):
        self.source = source
        self.errors = errors
        super().__init__(f"{source}: " + "; ".join(errors))


def _num(v: str) -> float:
    return float(v)


def _int(v: str) -> int:
    f = float(v)
    if f != int(f):
        raise ValueError(f"expected an integer, got {v}")
    return int(f)


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(x) for x in v.replace(",", " ").split())


def _phase(v: str):
    return None if v.strip().lower() == "random" else float(v)


def _choice(options):
    def parse(v: str) -> str:
        if v not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {v!r}")
        return v
    return parse


# key -> (parser, check, description of the check)
_PROB = (lambda x: 0.0 <= x <= 1.0, "must lie in [0, 1]")
_NONNEG = (lambda x: x >= 0.0, "must be >= 0")
_POS = (lambda x: x > 0.0, "must be > 0")
_ANY = (lambda x: True, "")

SCHEMA = {
    "link.scheme": (_choice(SCHEMES), *_ANY),
    "link.dimension": (_int, lambda x: x >= 2, "must be >= 2"),
    "link.visibility": (_num, *_PROB),
    "link.target_diagonal": (_num, *_PROB),
    "source.mean_photon_number": (_num, *_NONNEG),
    "lantern.insertion_loss_db": (_num, *_NONNEG),
    "lantern.loss_reading": (_choice(("per_lantern", "per_pair")), *_ANY),
    "lantern.extinction_db": (_floats, lambda xs: all(x <= 0 for x in xs), "values must be <= 0"),
    "lantern.crosstalk_phase": (_phase, *_ANY),
    "fiber.length_km": (_num, *_NONNEG),
    "fiber.loss_coeff_db_per_km": (_num, *_NONNEG),
    "fiber.excess_loss_db": (_num, *_NONNEG),
    "detector.efficiency": (_num, *_PROB),
    "detector.dark_count_prob": (_num, *_PROB),
    "detector.gate_width_ns": (_num, *_POS),
    "detector.trigger_rate_hz": (_num, *_POS),
    "run.fit": (_choice(FIT_NAMES), *_ANY),
    "run.seed": (_int, *_NONNEG),
    "run.output_dir": (str, *_ANY),
}

DEFAULTS = {
    "link.scheme": "fmf_lantern",
    "link.dimension": 2,
    "link.visibility": 1.0,
    "link.target_diagonal": None,
    "source.mean_photon_number": 0.4,
    "lantern.insertion_loss_db": 0.0,
    "lantern.loss_reading": "per_lantern",
    "lantern.extinction_db": (-math.inf,),
    "lantern.crosstalk_phase": None,
    "fiber.length_km": 0.0,
    "fiber.loss_coeff_db_per_km": 0.22,
    "fiber.excess_loss_db": 0.0,
    "detector.efficiency": 0.10,
    "detector.dark_count_prob": 2.4e-6,
    "detector.gate_width_ns": 2.5,
    "detector.trigger_rate_hz": 1e6,
    "run.fit": "custom",
    "run.seed": 0,
    "run.output_dir": None,
}


def parse_config_text(text: str, source: str = "<config>") -> dict:
    """Parse and validate; returns ``{key: value}`` for the keys present."""
    values, errors = {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'section.key = value', got {raw.strip()!r}")
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in SCHEMA:
            errors.append(f"line {lineno}: unknown key {key!r}")
            continue
        parser, check, why = SCHEMA[key]
        try:
            parsed = parser(value)
        except ValueError as exc:
            errors.append(f"line {lineno}: {key}: {exc}")
            continue
        if not check(parsed):
            errors.append(f"line {lineno}: {key} = {value} {why}")
            continue
        values[key] = parsed
    if errors:
        raise ConfigError(source, errors)
    return values


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration for one run."""

    values: dict = field(default_factory=dict)
    source: str = "<defaults>"

    def get(self, key: str):
        return self.values.get(key, DEFAULTS[key])

    @property
    def fit(self) -> str:
        return self.get("run.fit")

    @property
    def seed(self) -> int:
        return self.get("run.seed")

    @property
    def output_dir(self) -> str | None:
        return self.get("run.output_dir")

    def with_values(self, **overrides) -> "RunConfig":
        return RunConfig({**self.values, **overrides}, self.source)

    def base_architecture(self) -> ArchitectureConfig:
        """Device parameters as written, before any named fit."""
        d = self.get("link.dimension")
        ext = self.get("lantern.extinction_db")
        loss = self.get("lantern.insertion_loss_db")
        if self.get("lantern.loss_reading") == "per_pair":
            loss /= 2.0
        phase = self.get("lantern.crosstalk_phase")
        try:
            mux = LanternModel(d, loss, (-math.inf,) * d, phase)
            demux = LanternModel(d, loss, ext, phase)
            cfg = ArchitectureConfig(
                scheme=self.get("link.scheme"),
                dim=d,
                source=SourceModel(self.get("source.mean_photon_number")),
                lanterns=(mux, demux),
                fiber=FiberSpan(
                    self.get("fiber.length_km"),
                    self.get("fiber.loss_coeff_db_per_km"),
                    self.get("fiber.excess_loss_db"),
                ),
                detectors=(DetectorModel(
                    self.get("detector.efficiency"),
                    self.get("detector.dark_count_prob"),
                    self.get("detector.gate_width_ns"),
                    self.get("detector.trigger_rate_hz"),
                ),),
                visibility=self.get("link.visibility"),
            )
        except ValueError as exc:
            raise ConfigError(self.source, [str(exc)]) from None
        target = self.get("link.target_diagonal")
        if target is not None:
            cfg = cfg.replace(visibility=fit_visibility(cfg, target))
        return cfg

    def architecture(self) -> ArchitectureConfig:
        """Device parameters with the named fit applied."""
        from .experiments import apply_fit

        return apply_fit(self.base_architecture(), self.fit)


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(str(path), [f"config file not found: {path}"])
    rc = RunConfig(parse_config_text(path.read_text(), str(path)), str(path))
    rc.base_architecture()  # surface cross-field errors before any run
    return rc


def preset_path(name: str):
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")
    return resources.files("qlink") / "presets" / f"{name}.cfg"


def load_preset(name: str) -> RunConfig:
    p = preset_path(name)
    return RunConfig(parse_config_text(p.read_text(), name), name)


def resolve_config(ref: str | Path) -> RunConfig:
    """Load a config from a path, or from a preset name such as ``paper_500m``."""
    p = Path(ref)
    if not p.exists():
        stem = p.name[:-4] if p.name.endswith(".cfg") else p.name
        if stem in PRESETS and p.parent == Path("."):
            return load_preset(stem)
    return load_config(p)
