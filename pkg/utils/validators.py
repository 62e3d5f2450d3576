# utils/validators.py
"""
Validation utilities for V2XSentinel.
Checks run configurations before any pipeline stage runs.
"""

from numbers import Number
from typing import Optional, Tuple

from constants import (
    DEFAULT_CHANNEL,
    DEFAULT_FILTER,
    DEFAULT_GNG,
    DEFAULT_JAMMER,
    JAMMER_MODES,
    JAMMER_MODE_SINGLE,
    MIN_SYNTH_FRAMES,
    MIN_SYNTH_VEHICLES
)
from core.exceptions import ValidationError

# Allowed keys per section
CONFIG_SCHEMA = {
    "scenario": {"source", "n_vehicles", "n_frames", "lane_count", "dt", "seed", "bs_position",
                 "ngsim_vehicle_ids", "ngsim_frame_range", "ngsim_use_global"},
    "channel": set(DEFAULT_CHANNEL) | {"d_k", "sinr_threshold_db"},
    "jammer": set(DEFAULT_JAMMER),
    "gng": set(DEFAULT_GNG),
    "vocabulary": {"smoothing", "tau_bin_edges", "platoon_frame"},
    "filter": set(DEFAULT_FILTER),
    "detection": {"phi"},
    "output": {"dir", "log_dir"},
    "seed": None,
}


def is_number(value) -> bool:
    return isinstance(value, Number) and not isinstance(value, bool)


def is_integer(value) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def validate_numeric(value, min_val: float = None, max_val: float = None,
                     exclusive_min: bool = False) -> Tuple[bool, Optional[float]]:
    """
    Validate a numeric value with optional range checking.

    Returns:
        Tuple of (is_valid, parsed_value)
    """
    if not is_number(value):
        return False, None
    parsed = float(value)
    if min_val is not None and (parsed < min_val or (exclusive_min and parsed == min_val)):
        return False, None
    if max_val is not None and parsed > max_val:
        return False, None
    return True, parsed


def _require_number(path: str, value, min_val=None, max_val=None, exclusive_min=False, integer=False):
    if integer and not is_integer(value):
        raise ValidationError(path, value, "Debe ser un entero")
    valid, _ = validate_numeric(value, min_val, max_val, exclusive_min)
    if not valid:
        bound = []
        if min_val is not None:
            bound.append(f"{'>' if exclusive_min else '>='} {min_val}")
        if max_val is not None:
            bound.append(f"<= {max_val}")
        raise ValidationError(path, value, f"Debe ser un número {' y '.join(bound)}".strip())


def _require_point(path: str, value):
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(is_number(v) for v in value)):
        raise ValidationError(path, value, "Debe ser un par [x, y] en metros")


def validate_attack_windows(path: str, windows) -> None:
    """Windows are [start, end) integer pairs, sorted and non-overlapping."""
    if not isinstance(windows, list):
        raise ValidationError(path, windows, "Debe ser una lista de pares [inicio, fin]")
    previous_end = None
    for i, window in enumerate(windows):
        if not (isinstance(window, (list, tuple)) and len(window) == 2 and all(is_integer(v) for v in window)):
            raise ValidationError(f"{path}[{i}]", window, "Debe ser un par de enteros [inicio, fin]")
        start, end = window
        if start < 0 or end <= start:
            raise ValidationError(f"{path}[{i}]", window, "Se requiere 0 <= inicio < fin")
        if previous_end is not None and start < previous_end:
            raise ValidationError(f"{path}[{i}]", window, "Las ventanas deben estar ordenadas y sin solaparse")
        previous_end = end


def validate_run_config(data: dict) -> None:
    """
    Validate a merged run configuration.

    Raises:
        ValidationError: Naming the offending key path
    """
    if not isinstance(data, dict):
        raise ValidationError("config", type(data).__name__, "Se esperaba un objeto")

    for section, value in data.items():
        if section not in CONFIG_SCHEMA:
            raise ValidationError(section, "...", "Sección desconocida")
        allowed = CONFIG_SCHEMA[section]
        if allowed is None:
            continue
        if not isinstance(value, dict):
            raise ValidationError(section, value, "Debe ser un objeto")
        for key in value:
            if key not in allowed:
                raise ValidationError(f"{section}.{key}", value[key], "Clave desconocida")

    for section in CONFIG_SCHEMA:
        if section not in data:
            raise ValidationError(section, None, "Sección requerida")

    _require_number("seed", data["seed"], 0, integer=True)

    scenario = data["scenario"]
    if scenario["source"] is not None and not isinstance(scenario["source"], str):
        raise ValidationError("scenario.source", scenario["source"], "Debe ser una ruta o null")
    _require_number("scenario.n_vehicles", scenario["n_vehicles"], MIN_SYNTH_VEHICLES, integer=True)
    _require_number("scenario.n_frames", scenario["n_frames"], MIN_SYNTH_FRAMES, integer=True)
    _require_number("scenario.lane_count", scenario["lane_count"], 1, integer=True)
    _require_number("scenario.dt", scenario["dt"], 0, exclusive_min=True)
    _require_number("scenario.seed", scenario["seed"], 0, integer=True)
    if scenario["bs_position"] is not None:
        _require_point("scenario.bs_position", scenario["bs_position"])
    ids = scenario["ngsim_vehicle_ids"]
    if ids is not None and not (isinstance(ids, list) and ids and all(is_integer(v) for v in ids)):
        raise ValidationError("scenario.ngsim_vehicle_ids", ids, "Debe ser una lista de enteros")
    frame_range = scenario["ngsim_frame_range"]
    if frame_range is not None:
        if not (isinstance(frame_range, list) and len(frame_range) == 2
                and all(is_integer(v) for v in frame_range) and frame_range[0] <= frame_range[1]):
            raise ValidationError("scenario.ngsim_frame_range", frame_range, "Debe ser [primero, último]")

    channel = data["channel"]
    for key in ("carrier_hz", "bandwidth_hz", "cell_radius_m"):
        _require_number(f"channel.{key}", channel[key], 0, exclusive_min=True)
    for key in ("bs_antenna_height_m", "vehicle_antenna_height_m", "shadow_sigma_db", "pathloss_exp_coeff", "d_k"):
        _require_number(f"channel.{key}", channel[key], 0)
    for key in ("bs_gain_dbi", "vehicle_gain_dbi", "noise_figure_db", "tx_power_dbm", "jammer_power_dbm",
                "snr_db", "pathloss_const_db", "sinr_threshold_db"):
        _require_number(f"channel.{key}", channel[key])
    for key in ("enable_shadowing", "enable_fading"):
        if not isinstance(channel[key], bool):
            raise ValidationError(f"channel.{key}", channel[key], "Debe ser booleano")

    jammer = data["jammer"]
    if not isinstance(jammer["enabled"], bool):
        raise ValidationError("jammer.enabled", jammer["enabled"], "Debe ser booleano")
    if jammer["position"] is not None:
        _require_point("jammer.position", jammer["position"])
    if jammer["power_dbm"] is not None:
        _require_number("jammer.power_dbm", jammer["power_dbm"])
    if jammer["mode"] not in JAMMER_MODES:
        raise ValidationError("jammer.mode", jammer["mode"], f"Valores permitidos: {', '.join(JAMMER_MODES)}")
    validate_attack_windows("jammer.attack_windows", jammer["attack_windows"])
    if jammer["mode"] == JAMMER_MODE_SINGLE and jammer["enabled"] and len(jammer["attack_windows"]) != 1:
        raise ValidationError("jammer.attack_windows", jammer["attack_windows"],
                              "El modo de ataque único requiere exactamente una ventana")
    _require_number("jammer.roadside_offset_m", jammer["roadside_offset_m"], 0)

    gng = data["gng"]
    _require_number("gng.max_nodes", gng["max_nodes"], 2, integer=True)
    _require_number("gng.lambda_insert", gng["lambda_insert"], 1, integer=True)
    _require_number("gng.max_age", gng["max_age"], 1, integer=True)
    _require_number("gng.epochs", gng["epochs"], 1, integer=True)
    for key in ("eps_b", "eps_n", "alpha_split", "d_decay"):
        _require_number(f"gng.{key}", gng[key], 0, 1)

    vocabulary = data["vocabulary"]
    _require_number("vocabulary.smoothing", vocabulary["smoothing"], 0)
    edges = vocabulary["tau_bin_edges"]
    if edges is not None:
        if not (isinstance(edges, list) and all(is_integer(e) and e >= 2 for e in edges)
                and edges == sorted(set(edges))):
            raise ValidationError("vocabulary.tau_bin_edges", edges, "Enteros >= 2 estrictamente crecientes o null")
    if not isinstance(vocabulary["platoon_frame"], bool):
        raise ValidationError("vocabulary.platoon_frame", vocabulary["platoon_frame"], "Debe ser booleano")

    flt = data["filter"]
    _require_number("filter.n_particles", flt["n_particles"], 1, integer=True)
    _require_number("filter.measurement_noise_m", flt["measurement_noise_m"], 0, exclusive_min=True)
    _require_number("filter.prior_covariance", flt["prior_covariance"], 0, exclusive_min=True)
    _require_number("filter.responsibility_temperature", flt["responsibility_temperature"], 0, exclusive_min=True)
    _require_number("filter.process_noise_scale", flt["process_noise_scale"], 0)
    _require_number("filter.control_gain", flt["control_gain"], 0)

    _require_number("detection.phi", data["detection"]["phi"], 0)

    output = data["output"]
    if not isinstance(output["dir"], str) or not output["dir"]:
        raise ValidationError("output.dir", output["dir"], "Debe ser una ruta")
    if output["log_dir"] is not None and not isinstance(output["log_dir"], str):
        raise ValidationError("output.log_dir", output["log_dir"], "Debe ser una ruta o null")
