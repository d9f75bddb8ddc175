"""Flat ``key = value`` run configuration with dotted keys.

Blank lines and ``#`` comments are ignored; unknown keys are an error.

    fusion.mode = background-fill
    roi.k_edge = 25
    rules.t_liver = 100
    loss.lambda = 1.0
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from cvsroi.errors import ConfigError, MissingFile
from cvsroi.fusion import FusionMode
from cvsroi.roi import RoiConfig
from cvsroi.rules import AssessConfig, RuleThresholds
from cvsroi.sobel_loss import LossConfig


@dataclass(frozen=True)
class RunConfig:
    fusion_mode: FusionMode = FusionMode.BACKGROUND_FILL
    roi: RoiConfig = field(default_factory=RoiConfig)
    rules: RuleThresholds = field(default_factory=RuleThresholds)
    connectivity: int = 8
    loss: LossConfig = field(default_factory=LossConfig)
    overlay_dir: Optional[str] = None

    def assess_config(self) -> AssessConfig:
        return AssessConfig(replace(self.roi, connectivity=self.connectivity), self.rules, self.connectivity)


def _int(v: str) -> int:
    return int(v)


# key -> (section, field, parser)
_KEYS = {
    "fusion.mode": ("fusion_mode", None, FusionMode),
    "roi.k_edge": ("roi", "k_edge", _int),
    "roi.step_deg": ("roi", "step_deg", float),
    "roi.max_sweep_deg": ("roi", "max_sweep_deg", float),
    "roi.min_area": ("roi", "min_area", float),
    "rules.t_liver": ("rules", "t_liver", _int),
    "rules.t_cp": ("rules", "t_cp", _int),
    "rules.min_cluster": ("rules", "min_cluster", _int),
    "rules.connectivity": ("connectivity", None, _int),
    "loss.lambda": ("loss", "lam", float),
    "loss.beta": ("loss", "beta", float),
    "loss.channel_reduce": ("loss", "channel_reduce", str),
    "io.overlay_dir": ("overlay_dir", None, str),
}


def parse_config(text: str, base: Optional[RunConfig] = None) -> RunConfig:
    cfg = base or RunConfig()
    sections = {"roi": {}, "rules": {}, "loss": {}}
    top = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        section, name, parse = _KEYS[key]
        try:
            parsed = parse(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {value!r}") from exc
        if name is None:
            top[section] = parsed
        else:
            sections[section][name] = parsed
    try:
        cfg = replace(
            cfg,
            roi=replace(cfg.roi, **sections["roi"]),
            rules=replace(cfg.rules, **sections["rules"]),
            loss=replace(cfg.loss, **sections["loss"]),
            **top,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.connectivity not in (4, 8):
        raise ConfigError("rules.connectivity must be 4 or 8")
    return cfg


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    p = Path(path)
    if not p.is_file():
        raise MissingFile(f"config file {p} does not exist")
    return parse_config(p.read_text())
