# tests/test_config.py
import json
import os
import shutil
import sys
import tempfile
import unittest

# Add root directory to path
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.exceptions import FileOperationError, InsufficientDataError, PipelineStageError, ValidationError
from utils.config import RunConfig, default_config, load_config, merge_config
from utils.error_handler import report_error, stage
from utils.error_messages import get_error_message
from utils.validators import validate_run_config

class TestRunConfig(unittest.TestCase):
    """Configuration loading and validation."""

    def setUp(self):
        self.test_dir = tempfile.mkdtemp(prefix="v2x_config_")

    def tearDown(self):
        shutil.rmtree(self.test_dir, ignore_errors=True)

    def write(self, content) -> str:
        path = os.path.join(self.test_dir, "run.json")
        with open(path, "w", encoding="utf-8") as f:
            f.write(content if isinstance(content, str) else json.dumps(content))
        return path

    def test_defaults_are_valid(self):
        validate_run_config(default_config())
        config = load_config()
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.section("channel")["d_k"], 10.0)
        self.assertEqual(config.section("filter")["n_particles"], 200)

    def test_shipped_file_matches_defaults(self):
        shipped = os.path.join(os.path.dirname(__file__), '..', 'config', 'default_config.json')
        with open(shipped, "r", encoding="utf-8") as f:
            self.assertEqual(json.load(f), default_config())
        self.assertEqual(load_config(shipped).fingerprint(), load_config().fingerprint())

    def test_file_is_merged_over_defaults(self):
        config = load_config(self.write({"channel": {"d_k": 25.0}, "seed": 7}))
        self.assertEqual(config.section("channel")["d_k"], 25.0)
        self.assertEqual(config.section("channel")["carrier_hz"], 2.0e9)
        self.assertEqual(config.seed, 7)

    def test_unknown_key(self):
        with self.assertRaises(ValidationError):
            load_config(self.write({"channel": {"dk": 5.0}}))
        with self.assertRaises(ValidationError):
            load_config(self.write({"radar": {}}))

    def test_negative_connectivity_distance(self):
        with self.assertRaises(ValidationError):
            load_config(self.write({"channel": {"d_k": -1.0}}))

    def test_zero_connectivity_distance_is_allowed(self):
        self.assertEqual(load_config(self.write({"channel": {"d_k": 0}})).section("channel")["d_k"], 0)

    def test_overlapping_windows(self):
        with self.assertRaises(ValidationError):
            load_config(self.write({"jammer": {"attack_windows": [[10, 30], [20, 40]]}}))

    def test_single_mode_needs_one_window(self):
        with self.assertRaises(ValidationError):
            load_config(self.write({"jammer": {"mode": "constant-single"}}))
        config = load_config(self.write({"jammer": {"mode": "constant-single", "attack_windows": [[5, 9]]}}))
        self.assertEqual(config.section("jammer")["attack_windows"], [[5, 9]])

    def test_boolean_is_not_a_number(self):
        with self.assertRaises(ValidationError):
            load_config(self.write({"filter": {"n_particles": True}}))

    def test_missing_file(self):
        with self.assertRaises(FileOperationError):
            load_config(os.path.join(self.test_dir, "absent.json"))

    def test_malformed_json(self):
        with self.assertRaises(ValidationError):
            load_config(self.write("{\"seed\": 1,"))

    def test_fingerprint(self):
        a = load_config(self.write({"seed": 3}))
        b = load_config(self.write({"seed": 3}))
        self.assertEqual(a.fingerprint(), b.fingerprint())
        self.assertEqual(len(a.fingerprint()), 64)

        # output location does not change what is learned
        moved = a.with_overrides(output_dir=os.path.join(self.test_dir, "elsewhere"))
        self.assertEqual(moved.fingerprint(), a.fingerprint())
        self.assertNotEqual(a.with_overrides(seed=4).fingerprint(), a.fingerprint())

    def test_overrides_keep_original(self):
        config = load_config()
        overridden = config.with_overrides(seed=11, output_dir="runs/a")
        self.assertEqual(overridden.seed, 11)
        self.assertEqual(str(overridden.output_dir), os.path.join("runs", "a"))
        self.assertEqual(config.seed, 0)
        self.assertEqual(overridden.log_dir, overridden.output_dir / "logs")

    def test_merge_does_not_alias(self):
        base = default_config()
        merged = merge_config(base, {"gng": {"max_nodes": 8}})
        merged["jammer"]["attack_windows"].append([3000, 3100])
        self.assertEqual(base["gng"]["max_nodes"], 24)
        self.assertEqual(len(base["jammer"]["attack_windows"]), 2)

    def test_direct_construction_validates(self):
        data = default_config()
        data["detection"]["phi"] = -0.5
        with self.assertRaises(ValidationError):
            RunConfig(data=data)


class TestErrorHandling(unittest.TestCase):
    """Stage wrapping and console messages."""

    def test_stage_wraps_once(self):
        with self.assertRaises(PipelineStageError) as ctx:
            with stage("exterior"):
                with stage("interior"):
                    raise InsufficientDataError("Pocos frames")
        self.assertEqual(ctx.exception.stage, "interior")
        self.assertIsInstance(ctx.exception.cause, InsufficientDataError)

    def test_report_names_stage_and_cause(self):
        try:
            with stage("carga"):
                raise FileOperationError("importación", "model.json", "El archivo especificado no existe")
        except PipelineStageError as e:
            text = report_error(e)
        self.assertTrue(text.startswith("[carga] Error de Archivo"))
        self.assertIn("model.json", text)
        self.assertIn("Sugerencias:", text)

    def test_unknown_exception_falls_back(self):
        info = get_error_message(KeyError("x"))
        self.assertEqual(info["title"], "Error Inesperado")

if __name__ == '__main__':
    unittest.main()
