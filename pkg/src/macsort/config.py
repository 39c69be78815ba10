"""Run configuration: defaults, key=value config files, flag overrides.

Precedence is flags > config file > defaults; unknown keys are rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError
from .prompt_filter import TpodConfig
from .tracker import AssocConfig

# dataclass attribute -> config file / flag key (only where they differ)
_KEY_ALIASES = {"lam": "lambda"}


@dataclass
class RunConfig:
    """Flat bag of every knob the CLI exposes."""

    # association
    lam: float = 0.2
    theta_deg: float = 45.0
    iou_gate: float = 0.1
    max_age: int = 30
    min_hits: int = 3
    ema_alpha: float = 0.9
    use_appearance: bool = True
    use_direction: bool = True
    fixed_w_aaw: float | None = None
    # detection filtering
    kappa1: int = 9
    kappa2: int = 3
    detection_threshold: float = 0.2
    overlap_threshold: float = 0.0
    cold_start_passthrough: bool = True
    memory_from_ie_only: bool = False
    # metrics
    iou_threshold: float = 0.5
    hota_sweep: bool = False
    # paths
    input_dir: str = ""
    output_dir: str = ""
    annotation_file: str = ""

    def assoc_config(self) -> AssocConfig:
        return AssocConfig(
            lam=self.lam,
            theta_deg=self.theta_deg,
            iou_gate=self.iou_gate,
            max_age=self.max_age,
            min_hits=self.min_hits,
            ema_alpha=self.ema_alpha,
            use_appearance=self.use_appearance,
            use_direction=self.use_direction,
            fixed_w_aaw=self.fixed_w_aaw,
        )

    def tpod_config(self) -> TpodConfig:
        return TpodConfig(
            kappa1=self.kappa1,
            kappa2=self.kappa2,
            detection_threshold=self.detection_threshold,
            overlap_threshold=self.overlap_threshold,
            cold_start_passthrough=self.cold_start_passthrough,
            memory_from_ie_only=self.memory_from_ie_only,
        )


_FIELDS = {f.name: f for f in fields(RunConfig)}
_KEY_TO_FIELD = {_KEY_ALIASES.get(name, name): name for name in _FIELDS}


def _parse_bool(key: str, raw: str) -> bool:
    lowered = raw.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {raw!r}")


def _coerce(field_name: str, raw: str):
    key = _KEY_ALIASES.get(field_name, field_name)
    ftype = _FIELDS[field_name].type
    if field_name == "fixed_w_aaw":
        return float(raw) if raw.strip() else None
    if ftype == "bool":
        return _parse_bool(key, raw)
    try:
        if ftype == "int":
            return int(raw)
        if ftype == "float":
            return float(raw)
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    return raw


def read_config_file(path: str | Path) -> dict[str, str]:
    """Raw key=value pairs; unknown or duplicate keys are rejected."""
    pairs: dict[str, str] = {}
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _KEY_TO_FIELD:
            raise ConfigError(f"{path}:{lineno}: unknown config key {key!r}")
        if key in pairs:
            raise ConfigError(f"{path}:{lineno}: duplicate config key {key!r}")
        pairs[key] = raw.strip()
    return pairs


def build_config(
    config_path: str | Path | None = None, overrides: dict | None = None
) -> RunConfig:
    """Assemble a RunConfig from defaults, an optional file, and overrides.

    Override values may be already-typed (from CLI flags) or raw strings.
    """
    cfg = RunConfig()
    if config_path is not None:
        for key, raw in read_config_file(config_path).items():
            name = _KEY_TO_FIELD[key]
            setattr(cfg, name, _coerce(name, raw))
    for key, value in (overrides or {}).items():
        name = _KEY_TO_FIELD.get(key, key)
        if name not in _FIELDS:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(value, str):
            value = _coerce(name, value)
        setattr(cfg, name, value)
    try:
        cfg.assoc_config()  # validates ranges
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg
