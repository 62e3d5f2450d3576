# utils/config.py
"""
Run configuration for V2XSentinel.

A run is described by one JSON document with the sections scenario, channel,
jammer, gng, vocabulary, filter, detection, output and a top-level seed.
User files are merged over the defaults section by section and validated
before any pipeline stage runs.
"""

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from constants import (
    DEFAULT_CHANNEL,
    DEFAULT_D_K,
    DEFAULT_DT,
    DEFAULT_FILTER,
    DEFAULT_GNG,
    DEFAULT_JAMMER,
    DEFAULT_LANE_COUNT,
    DEFAULT_N_FRAMES,
    DEFAULT_N_VEHICLES,
    DEFAULT_PHI,
    DEFAULT_SINR_THRESHOLD_DB,
    DEFAULT_SMOOTHING,
    DEFAULT_TAU_BIN_EDGES
)
from core.exceptions import FileOperationError, ValidationError
from utils.logger import get_logger
from utils.validators import validate_run_config

logger = get_logger(__name__)

DEFAULT_SEED = 0

# Sections whose values change what a training run learns
TRAINING_SECTIONS = ("scenario", "channel", "gng", "vocabulary", "filter", "detection", "seed")


def default_config() -> dict:
    """The default run configuration (simulation parameter table values)."""
    return {
        "scenario": {
            "source": None,
            "n_vehicles": DEFAULT_N_VEHICLES,
            "n_frames": DEFAULT_N_FRAMES,
            "lane_count": DEFAULT_LANE_COUNT,
            "dt": DEFAULT_DT,
            "seed": DEFAULT_SEED,
            "bs_position": None,
            "ngsim_vehicle_ids": None,
            "ngsim_frame_range": None,
            "ngsim_use_global": False,
        },
        "channel": dict(DEFAULT_CHANNEL, d_k=DEFAULT_D_K, sinr_threshold_db=DEFAULT_SINR_THRESHOLD_DB),
        "jammer": copy.deepcopy(DEFAULT_JAMMER),
        "gng": dict(DEFAULT_GNG),
        "vocabulary": {
            "smoothing": DEFAULT_SMOOTHING,
            "tau_bin_edges": list(DEFAULT_TAU_BIN_EDGES),
            "platoon_frame": True,
        },
        "filter": dict(DEFAULT_FILTER),
        "detection": {"phi": DEFAULT_PHI},
        "output": {"dir": "output", "log_dir": None},
        "seed": DEFAULT_SEED,
    }


def merge_config(base: dict, override: dict) -> dict:
    """
    Merge override over base section by section.

    Keys unknown to base are kept so that validation can reject them.
    """
    merged = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key].update(copy.deepcopy(value))
        else:
            merged[key] = copy.deepcopy(value)
    return merged


@dataclass
class RunConfig:
    """Validated configuration of one run."""
    data: dict = field(default_factory=default_config)
    source_path: Optional[str] = None

    def __post_init__(self):
        validate_run_config(self.data)

    def section(self, name: str) -> dict:
        return self.data[name]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def output_dir(self) -> Path:
        return Path(self.data["output"]["dir"])

    @property
    def log_dir(self) -> Path:
        log_dir = self.data["output"].get("log_dir")
        return Path(log_dir) if log_dir else self.output_dir / "logs"

    def with_overrides(self, seed: Optional[int] = None, output_dir: Optional[str] = None) -> "RunConfig":
        """Copy with the command-line overrides applied."""
        data = copy.deepcopy(self.data)
        if seed is not None:
            data["seed"] = seed
        if output_dir is not None:
            data["output"]["dir"] = str(output_dir)
        return RunConfig(data=data, source_path=self.source_path)

    def training_sections(self) -> dict:
        return {name: self.data[name] for name in TRAINING_SECTIONS}

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON of the training sections."""
        canonical = json.dumps(self.training_sections(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)


def load_config(path: Optional[str] = None) -> RunConfig:
    """
    Load a run configuration.

    Args:
        path: JSON file merged over the defaults; None for the defaults only

    Raises:
        FileOperationError: Unreadable file
        ValidationError: Malformed JSON, unknown key or out-of-range value
    """
    data = default_config()
    if path is not None:
        config_path = Path(path)
        if not config_path.is_file():
            raise FileOperationError("lectura de configuración", str(config_path), "El archivo no existe")
        try:
            with open(config_path, "r", encoding="utf-8") as f:
                user = json.load(f)
        except json.JSONDecodeError as e:
            raise ValidationError("config", str(config_path), f"JSON inválido: {e}")
        if not isinstance(user, dict):
            raise ValidationError("config", type(user).__name__, "Se esperaba un objeto JSON")
        data = merge_config(data, user)

    config = RunConfig(data=data, source_path=str(path) if path else None)
    logger.info(f"Configuration loaded from {path or 'defaults'} (fingerprint {config.fingerprint()[:12]})")
    return config
