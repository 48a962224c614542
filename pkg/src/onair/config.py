"""Line-oriented ``key = value`` experiment configuration.

Blank lines and ``#`` comments are ignored. Unknown keys, duplicates and
malformed values raise :class:`ConfigError` naming the offending key.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

from . import dictlearn as dl
from .errors import ConfigError
from .masks import PATTERNS, MaskSpec
from .patches import PatchConfig
from .pipeline import VARIANTS, OnairConfig
from .sensing import FOURIER, PIXEL

REQUIRED = ("variant", "lambda_s", "lambda_z", "input")


def _bool(text):
    t = text.lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt(conv):
    def parse(text):
        return None if text.lower() in ("", "none") else conv(text)
    return parse


# key -> (parser, default)
KEYS = {
    "variant": (str, None),
    "lambda_s": (float, None),
    "lambda_z": (float, None),
    "input": (str, None),
    "input_kind": (str, "frames"),
    "rho": (float, 0.9),
    "rank": (_opt(int), None),
    "L": (float, dl.DEFAULT_L),
    "window_len": (int, 5),
    "window_stride": (int, 1),
    "patch_x": (int, 8),
    "patch_y": (int, 8),
    "patch_t": (int, 5),
    "stride_x": (int, 2),
    "stride_y": (int, 2),
    "stride_t": (int, 1),
    "K": (int, 7),
    "K_hat": (int, 1),
    "K_tilde": (int, 10),
    "K_first": (int, 50),
    "presolve": (int, 0),
    "passes": (int, 1),
    "tau": (_opt(float), None),
    "image_mode": (str, "auto"),
    "sensing": (str, PIXEL),
    "mask_pattern": (str, "uniform"),
    "mask_fraction": (float, 0.5),
    "mask_accel": (float, 1.0),
    "mask_lines": (_opt(int), None),
    "mask_seed": (_opt(int), None),
    "mask_per_frame": (_bool, True),
    "mask_file": (_opt(str), None),
    "noise_snr_db": (float, math.inf),
    "seed": (int, 0),
    "reference": (_opt(str), None),
    "output_dir": (str, "out"),
    "initial_dictionary": (_opt(str), None),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed by the experiment runner.

    ``input_kind = frames`` treats ``input`` as the ground-truth video, which
    is measured with the configured mask and noise; ``measurements`` treats
    it as zero-filled data (pixels or k-space) and needs ``mask_file``.
    """

    onair: OnairConfig
    sensing: str
    mask: MaskSpec
    input: Path
    input_kind: str = "frames"
    mask_file: Path | None = None
    noise_snr_db: float = math.inf
    reference: Path | None = None
    output_dir: Path = Path("out")
    initial_dictionary: Path | None = None
    seed: int = 0
    raw: dict = field(default_factory=dict, compare=False, repr=False)
    base: Path | None = None

    def with_overrides(self, **values) -> "ExperimentConfig":
        """Re-validated copy with some keys replaced (e.g. ``seed``)."""
        raw = dict(self.raw)
        raw.update({k: str(v) for k, v in values.items()})
        return from_mapping(raw, base=self.base)


def parse_text(text: str) -> dict:
    raw = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r} (line {lineno})")
        if key in raw:
            raise ConfigError(f"duplicate key {key!r} (line {lineno})")
        raw[key] = value
    return raw


def _value(raw, key):
    conv, default = KEYS[key]
    if key not in raw:
        return default
    try:
        return conv(raw[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: invalid value {raw[key]!r} ({exc})") from None


def _check(cond, key, msg):
    if not cond:
        raise ConfigError(f"{key}: {msg}")


def from_mapping(raw: dict, base: Path | None = None) -> ExperimentConfig:
    """Validate a ``key -> text`` mapping; relative paths resolve against ``base``."""
    for key in raw:
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
    for key in REQUIRED:
        if key not in raw:
            raise ConfigError(f"missing required key {key!r}")
    v = {key: _value(raw, key) for key in KEYS}

    _check(v["variant"] in VARIANTS, "variant", f"must be one of {', '.join(VARIANTS)}, got {v['variant']!r}")
    _check(v["lambda_s"] >= 0, "lambda_s", "must be >= 0")
    _check(v["lambda_z"] >= 0, "lambda_z", "must be >= 0")
    _check(0 < v["rho"] <= 1, "rho", f"must be in (0, 1], got {v['rho']}")
    _check(v["L"] > v["lambda_z"], "L", f"must exceed lambda_z ({v['lambda_z']})")
    if v["variant"] == "ld":
        _check(v["rank"] is not None and v["rank"] >= 1, "rank", "variant ld needs rank >= 1")
    elif v["rank"] is not None:
        _check(v["rank"] >= 1, "rank", "must be >= 1")
    for key in ("patch_x", "patch_y", "patch_t", "stride_x", "stride_y", "stride_t",
                "window_len", "window_stride", "K", "K_first", "passes"):
        _check(v[key] >= 1, key, "must be >= 1")
    for key in ("K_hat", "K_tilde", "presolve"):
        _check(v[key] >= 0, key, "must be >= 0")
    _check(v["patch_t"] <= v["window_len"], "patch_t", f"exceeds window_len ({v['window_len']})")
    _check(v["window_stride"] <= v["window_len"], "window_stride", f"exceeds window_len ({v['window_len']})")
    for axis in "xyt":
        _check(v[f"stride_{axis}"] <= v[f"patch_{axis}"], f"stride_{axis}",
               f"exceeds patch_{axis} ({v[f'patch_{axis}']})")
    if v["tau"] is not None:
        _check(0 < v["tau"] <= 1, "tau", "must be in (0, 1/||A||^2] = (0, 1]")
    _check(v["image_mode"] in ("auto", "direct", "proxgrad"), "image_mode", "must be auto, direct or proxgrad")
    _check(v["sensing"] in (PIXEL, FOURIER), "sensing", f"must be {PIXEL} or {FOURIER}")
    if v["image_mode"] == "direct":
        _check(v["sensing"] == PIXEL, "image_mode", "direct solve requires sensing = pixel")
    _check(v["input_kind"] in ("frames", "measurements"), "input_kind", "must be frames or measurements")
    if v["input_kind"] == "measurements":
        _check(v["mask_file"] is not None, "mask_file", "required when input_kind = measurements")
    _check(not math.isnan(v["noise_snr_db"]), "noise_snr_db", "must be a number or inf")

    _check(v["mask_pattern"] in PATTERNS, "mask_pattern", f"must be one of {', '.join(PATTERNS)}")
    _check(0 < v["mask_fraction"] <= 1, "mask_fraction", "must be in (0, 1]")
    _check(v["mask_accel"] >= 1, "mask_accel", "must be >= 1")
    if v["mask_lines"] is not None:
        _check(v["mask_lines"] >= 1, "mask_lines", "must be >= 1")
    try:
        mask = MaskSpec(pattern=v["mask_pattern"], keep_fraction=v["mask_fraction"],
                        acceleration=v["mask_accel"],
                        seed=v["seed"] if v["mask_seed"] is None else v["mask_seed"],
                        per_frame=v["mask_per_frame"], num_lines=v["mask_lines"])
    except ValueError as exc:
        raise ConfigError(f"mask_*: {exc}") from None
    if v["sensing"] == PIXEL:
        _check(mask.pattern == "uniform" or v["mask_file"] is not None, "mask_pattern",
               "pixel sensing uses the uniform pattern")

    patch = PatchConfig((v["patch_x"], v["patch_y"], v["patch_t"]), (v["stride_x"], v["stride_y"]), v["stride_t"])
    try:
        onair = OnairConfig(
            variant=v["variant"], lam_s=v["lambda_s"], lam_z=v["lambda_z"], rho=v["rho"], L=v["L"],
            rank=v["rank"], window_len=v["window_len"], window_stride=v["window_stride"], patch=patch,
            K=v["K"], K_hat=v["K_hat"], K_tilde=v["K_tilde"], K_first=v["K_first"],
            presolve=v["presolve"], passes=v["passes"], tau=v["tau"], image_mode=v["image_mode"],
            seed=v["seed"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    def path(key):
        p = v[key]
        if p is None:
            return None
        p = Path(p)
        return p if base is None or p.is_absolute() else base / p

    return ExperimentConfig(
        onair=onair, sensing=v["sensing"], mask=mask, input=path("input"), input_kind=v["input_kind"],
        mask_file=path("mask_file"), noise_snr_db=v["noise_snr_db"], reference=path("reference"),
        output_dir=Path(v["output_dir"]), initial_dictionary=path("initial_dictionary"),
        seed=v["seed"], raw=dict(raw), base=base,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    raw = parse_text(text)
    return from_mapping(raw, base=path.parent)


def format_config(raw: dict) -> str:
    return "".join(f"{k} = {raw[k]}\n" for k in KEYS if k in raw)


__all__ = ["ExperimentConfig", "KEYS", "REQUIRED", "format_config", "from_mapping", "load_config", "parse_text"]
