"""Run configuration: one JSON document covering every pipeline stage.

The file is a nested object with one section per stage plus a few
top-level flags::

    {
      "rig":     {... CameraRig fields ...},
      "match":   {... MatchParams fields ...},
      "wls":     {... WlsParams fields ...},
      "ranger":  {... RangerParams fields ...},
      "synth":   {"background_depth_m": 4.0, "noise_sigma": 1.5, "seed": 0},
      "eval":    {"bin_width_m": 0.05},
      "io":      {"out_dir": "out"},
      "subpixel": true
    }

Every key is optional and defaults as documented on the dataclasses;
unknown keys anywhere are rejected so typos fail loudly before any
computation starts.  ``RunConfig.from_dict(cfg.to_dict())`` reproduces
``cfg`` exactly.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .core import CameraRig
from .errors import ParseError
from .ranger import RangerParams
from .refine import WlsParams
from .stereo import MatchParams


def default_rig() -> CameraRig:
    """The stand-in rig used when no calibration is supplied.

    640x360 with a 384 px focal length and 12.5 cm baseline, so
    focal_px * baseline_m = 48 exactly and the stock scene depths
    (1, 1.5, 2, 4 m) map to integral disparities well inside d_max.
    """
    return CameraRig(
        focal_px=384.0,
        baseline_m=0.125,
        cx_px=319.5,
        cy_px=179.5,
        width_px=640,
        height_px=360,
    )


@dataclass
class SynthSection:
    """Scene generation settings.

    :param background_depth_m: backdrop plane depth in meters
    :param noise_sigma: per-view Gaussian pixel noise sigma
    :param seed: texture and noise seed
    """

    background_depth_m: float = 4.0
    noise_sigma: float = 1.5
    seed: int = 0


@dataclass
class EvalSection:
    """Batch evaluation settings.

    :param bin_width_m: depth histogram bin width in meters (> 0); bins
        cover [0, background depth]
    """

    bin_width_m: float = 0.05

    def __post_init__(self):
        if self.bin_width_m <= 0:
            raise ValueError(f"bin_width_m must be > 0, got {self.bin_width_m}")


@dataclass
class IoSection:
    """Default output locations.

    :param out_dir: directory commands write into when no explicit path
        is given
    """

    out_dir: str = "out"


@dataclass
class RunConfig:
    """Resolved settings for every command."""

    rig: CameraRig = field(default_factory=default_rig)
    match: MatchParams = field(default_factory=MatchParams)
    wls: WlsParams = field(default_factory=WlsParams)
    ranger: RangerParams = field(default_factory=RangerParams)
    synth: SynthSection = field(default_factory=SynthSection)
    eval: EvalSection = field(default_factory=EvalSection)
    io: IoSection = field(default_factory=IoSection)
    subpixel: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ParseError(f"config root must be an object, got {type(data).__name__}")
        sections = {
            "rig": CameraRig,
            "match": MatchParams,
            "wls": WlsParams,
            "ranger": RangerParams,
            "synth": SynthSection,
            "eval": EvalSection,
            "io": IoSection,
        }
        unknown = set(data) - set(sections) - {"subpixel"}
        if unknown:
            raise ParseError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {}
        for name, section_cls in sections.items():
            if name in data:
                kwargs[name] = _section_from_mapping(section_cls, data[name], name)
        if "subpixel" in data:
            if not isinstance(data["subpixel"], bool):
                raise ParseError("config key 'subpixel' must be a boolean")
            kwargs["subpixel"] = data["subpixel"]
        return cls(**kwargs)

    def to_dict(self) -> dict:
        return {
            "rig": dataclasses.asdict(self.rig),
            "match": dataclasses.asdict(self.match),
            "wls": dataclasses.asdict(self.wls),
            "ranger": dataclasses.asdict(self.ranger),
            "synth": dataclasses.asdict(self.synth),
            "eval": dataclasses.asdict(self.eval),
            "io": dataclasses.asdict(self.io),
            "subpixel": self.subpixel,
        }


def _section_from_mapping(section_cls, mapping, section_name: str):
    """Instantiate a config dataclass strictly from a JSON object."""
    if not isinstance(mapping, dict):
        raise ParseError(
            f"config section {section_name!r} must be an object, "
            f"got {type(mapping).__name__}"
        )
    known = {f.name for f in dataclasses.fields(section_cls)}
    unknown = set(mapping) - known
    if unknown:
        raise ParseError(
            f"unknown keys in config section {section_name!r}: {sorted(unknown)}"
        )
    required = {
        f.name
        for f in dataclasses.fields(section_cls)
        if f.default is dataclasses.MISSING
        and f.default_factory is dataclasses.MISSING
    }
    missing = required - set(mapping)
    if missing:
        if section_cls is CameraRig:
            # CameraRig itself has no field defaults; the documented
            # defaults live in default_rig(), so partial rigs are
            # completed from there like any other section.
            defaults = dataclasses.asdict(default_rig())
            mapping = {**{k: defaults[k] for k in missing}, **mapping}
        else:
            raise ParseError(
                f"config section {section_name!r} is missing keys: {sorted(missing)}"
            )
    try:
        return section_cls(**mapping)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid config section {section_name!r}: {exc}") from exc


def rig_from_dict(data: dict, context: str = "rig") -> CameraRig:
    """Strictly parse a rig object (e.g. from persisted scene metadata)."""
    return _section_from_mapping(CameraRig, data, context)


def load_config(path: str | Path) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path} is not valid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def dump_config(config: RunConfig, path: str | Path) -> None:
    """Write a config (typically the defaults) as formatted JSON."""
    from .fileio import write_bytes_atomic

    payload = (json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n").encode(
        "utf-8"
    )
    write_bytes_atomic(path, payload)
