"""Flat key=value run configuration.

The shipped defaults: unit sampling time, 0.5 blend weights, rate
thresholds of 3, the four-kernel bank with default dual settings, the two
adaptation schedules and a sliding window of 8. Keys use dotted sections,
one assignment per line, with '#' comments.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

from .adaptive import WeightAdaptConfig, m_smkl_defaults, s_smkl_defaults
from .ensemble import DetectorConfig
from .features import FeatureThresholds
from .kernels import KernelSpec, default_kernel_bank


@dataclass
class RunConfig:
    seed: int = 0
    thresholds: FeatureThresholds = field(default_factory=FeatureThresholds)
    kernels: list[KernelSpec] = field(default_factory=default_kernel_bank)
    C: float = 1.0
    mkl_max_iter: int = 200
    m_adapt: WeightAdaptConfig = field(default_factory=m_smkl_defaults)
    s_adapt: WeightAdaptConfig = field(default_factory=s_smkl_defaults)
    detector: DetectorConfig = field(default_factory=DetectorConfig)


class ConfigError(ValueError):
    pass


_THRESHOLD_FIELDS = {f.name for f in dataclasses.fields(FeatureThresholds)}
_ADAPT_FIELDS = {f.name for f in dataclasses.fields(WeightAdaptConfig)}


def _parse_float(text: str) -> float:
    return float(text)


def _parse_int(text: str) -> int:
    return int(text)


def _parse_init_w(text: str) -> tuple:
    return tuple(float(v) for v in text.split(","))


def _parse_kernels(text: str) -> list[KernelSpec]:
    return [KernelSpec.parse(part) for part in text.split(",") if part.strip()]


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; unknown keys and bad values are errors."""
    sections: dict[str, dict] = {"features": {}, "m_adapt": {}, "s_adapt": {}}
    top: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            _apply_key(top, sections, key, value)
        except ConfigError:
            raise
        except ValueError as err:
            raise ConfigError(f"line {lineno}: bad value for {key}: {err}") from None
    try:
        return RunConfig(
            seed=top.get("seed", 0),
            thresholds=dataclasses.replace(FeatureThresholds(), **sections["features"]),
            kernels=top.get("kernels", default_kernel_bank()),
            C=top.get("C", 1.0),
            mkl_max_iter=top.get("mkl_max_iter", 200),
            m_adapt=dataclasses.replace(m_smkl_defaults(), **sections["m_adapt"]),
            s_adapt=dataclasses.replace(s_smkl_defaults(), **sections["s_adapt"]),
            detector=DetectorConfig(window_n=top.get("window_n", 8)),
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _apply_key(top: dict, sections: dict, key: str, value: str) -> None:
    if key == "seed":
        top["seed"] = _parse_int(value)
    elif key == "mkl.c":
        top["C"] = _parse_float(value)
    elif key == "mkl.max_iter":
        top["mkl_max_iter"] = _parse_int(value)
    elif key == "mkl.kernels":
        top["kernels"] = _parse_kernels(value)
    elif key == "detector.window_n":
        top["window_n"] = _parse_int(value)
    elif "." in key:
        section, name = key.split(".", 1)
        if section == "features" and name in _THRESHOLD_FIELDS:
            sections["features"][name] = value if name == "mff_packet_rule" else _parse_float(value)
        elif section in ("m_adapt", "s_adapt") and name in _ADAPT_FIELDS:
            if name == "max_iter":
                sections[section][name] = _parse_int(value)
            elif name == "init_w":
                sections[section][name] = _parse_init_w(value)
            else:
                sections[section][name] = _parse_float(value)
        else:
            raise ConfigError(f"unknown configuration key {key!r}")
    else:
        raise ConfigError(f"unknown configuration key {key!r}")


def _dump_adapt(name: str, cfg: WeightAdaptConfig) -> list[str]:
    lines = []
    for fld in ("lr1", "lr2", "t1", "t2", "t3", "t4", "t5", "t6",
                "p1", "p2", "p3", "p4", "sigma1", "sigma2"):
        lines.append(f"{name}.{fld} = {repr(getattr(cfg, fld))}")
    lines.append(f"{name}.max_iter = {cfg.max_iter}")
    lines.append(f"{name}.init_w = {','.join(repr(float(w)) for w in cfg.init_w)}")
    return lines


def dump_config(cfg: RunConfig) -> str:
    """Render a config that parse_config() reads back to an equal RunConfig."""
    th = cfg.thresholds
    lines = [f"seed = {cfg.seed}", ""]
    for fld in ("theta1", "theta2", "theta3", "theta4", "theta5",
                "theta6", "theta7", "theta8", "theta9", "delta_t"):
        lines.append(f"features.{fld} = {repr(getattr(th, fld))}")
    lines.append(f"features.mff_packet_rule = {th.mff_packet_rule}")
    lines.append("")
    lines.append(f"mkl.c = {repr(cfg.C)}")
    lines.append(f"mkl.max_iter = {cfg.mkl_max_iter}")
    lines.append(f"mkl.kernels = {','.join(k.label() for k in cfg.kernels)}")
    lines.append("")
    lines.extend(_dump_adapt("m_adapt", cfg.m_adapt))
    lines.append("")
    lines.extend(_dump_adapt("s_adapt", cfg.s_adapt))
    lines.append("")
    lines.append(f"detector.window_n = {cfg.detector.window_n}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
