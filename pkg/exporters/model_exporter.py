# exporters/model_exporter.py
"""
Model bundle exporter.

Output is canonical JSON (sorted keys, compact separators) so that two
trainings with the same inputs and seed produce byte-identical files.
"""

import json
from pathlib import Path

from core.exceptions import FileOperationError
from core.vocabulary import ModelBundle
from utils.logger import get_logger

logger = get_logger(__name__)


class ModelExporter:

    @staticmethod
    def export(model: ModelBundle, filename: str) -> str:
        path = Path(filename)
        document = json.dumps(model.to_dict(), sort_keys=True, separators=(",", ":"), allow_nan=False)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                f.write(document)
        except OSError as e:
            raise FileOperationError("exportación", str(path), str(e))
        logger.info(f"Model written to {path} ({len(document) / 1024:.1f} KiB)")
        return str(path)


def save_model(model: ModelBundle, path: str) -> str:
    return ModelExporter.export(model, path)
