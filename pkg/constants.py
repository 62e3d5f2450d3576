# constants.py
"""
Application-wide constants for V2XSentinel.
Centralizes configuration defaults, file names and logging settings.
"""

# Application Information
APP_NAME = "V2XSentinel"
APP_VERSION = "1.0.0"
MODEL_FORMAT_VERSION = "1.0"

# File names written under the output directory
TRAJECTORY_FILE_NAME = "trajectories.csv"
SCENARIO_FILE_NAME = "scenario.json"
CLEAN_GRAPHS_FILE_NAME = "graphs_clean.jsonl"
JAMMED_GRAPHS_FILE_NAME = "graphs_jammed.jsonl"
MODEL_FILE_NAME = "model.json"
SNAPSHOTS_FILE_NAME = "snapshots.jsonl"
SERIES_FILE_TEMPLATE = "abnormality_{modality}.csv"
ROC_FILE_TEMPLATE = "roc_{name}"
SUMMARY_FILE_NAME = "summary.json"

# Trajectory CSV schema
TRAJECTORY_COLUMNS = ["frame", "vehicle_id", "x_m", "y_m"]

# Modalities
MODALITY_POSITIONAL = "positional"
MODALITY_COMMUNICATION = "communication"
MODALITIES = [MODALITY_POSITIONAL, MODALITY_COMMUNICATION]

# Scenario defaults
DEFAULT_DT = 0.1  # seconds per frame
DEFAULT_N_VEHICLES = 4
DEFAULT_N_FRAMES = 2000
DEFAULT_LANE_COUNT = 3
LANE_WIDTH_M = 3.7
MIN_SYNTH_VEHICLES = 2
MIN_SYNTH_FRAMES = 50
MIN_TRAJECTORY_FRAMES = 3
FOOT = 0.3048  # metres per foot

# NGSIM I-80 projection (CA State Plane III, US ft -> UTM 10N)
NGSIM_SOURCE_EPSG = 2227
NGSIM_TARGET_EPSG = 32610

# Channel defaults (simulation parameter table)
DEFAULT_CHANNEL = {
    "carrier_hz": 2.0e9,
    "bandwidth_hz": 1.4e6,
    "cell_radius_m": 500.0,
    "bs_antenna_height_m": 25.0,
    "vehicle_antenna_height_m": 1.5,
    "bs_gain_dbi": 8.0,
    "vehicle_gain_dbi": 3.0,
    "noise_figure_db": 5.0,
    "tx_power_dbm": 23.0,
    "jammer_power_dbm": 23.0,
    "snr_db": 20.0,
    "pathloss_const_db": 128.1,
    "pathloss_exp_coeff": 37.6,
    "shadow_sigma_db": 8.0,
    "enable_shadowing": True,
    "enable_fading": True,
}
THERMAL_NOISE_DBM_HZ = -174.0

# Jammer defaults
JAMMER_MODE_SINGLE = "constant-single"
JAMMER_MODE_PERIODIC = "periodic-multi"
JAMMER_MODES = [JAMMER_MODE_SINGLE, JAMMER_MODE_PERIODIC]
DEFAULT_JAMMER = {
    "enabled": True,
    "position": None,  # None -> roadside jammer level with the platoon centroid
    "power_dbm": 23.0,
    "mode": JAMMER_MODE_PERIODIC,
    "attack_windows": [[600, 700], [1400, 1500]],
    "roadside_offset_m": 2.0,
}

# Connectivity
DEFAULT_D_K = 10.0  # metres, V2V connectivity distance
DEFAULT_SINR_THRESHOLD_DB = 0.0

# Growing Neural Gas defaults (classical settings)
DEFAULT_GNG = {
    "max_nodes": 24,
    "lambda_insert": 100,
    "eps_b": 0.05,
    "eps_n": 0.006,
    "max_age": 88,
    "alpha_split": 0.5,
    "d_decay": 0.995,
    "epochs": 3,
}
COVARIANCE_REGULARIZATION = 1e-6
SINGULAR_EIGENVALUE_FLOOR = 1e-4

# Vocabulary defaults
DEFAULT_SMOOTHING = 1e-3
DEFAULT_TAU_BIN_EDGES = [3, 6]  # bins {1-2, 3-5, 6+}
UNKNOWN_WORD = "UNKNOWN"

# Filter defaults
DEFAULT_FILTER = {
    "n_particles": 200,
    "measurement_noise_m": 0.5,
    "process_noise_scale": 0.1,
    "prior_covariance": 1.0e3,
    "control_gain": 0.5,
    "responsibility_temperature": 0.5,
}
STOCHASTIC_TOLERANCE = 1e-9

# Detection defaults
DEFAULT_PHI = 3.0
PROBABILITY_FLOOR = 1e-12
# Floor on per-edge probabilities when matching words to the predicted geometry
EDGE_PROBABILITY_FLOOR = 1e-3

# Exit codes
EXIT_NORMAL = 0
EXIT_ERROR = 1
EXIT_ABNORMAL = 2

# Logging Configuration
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
LOG_DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
LOG_FILE_NAME = "v2xsentinel.log"
LOG_MAX_BYTES = 10 * 1024 * 1024  # 10 MB
LOG_BACKUP_COUNT = 3
