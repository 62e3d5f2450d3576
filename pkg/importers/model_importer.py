# importers/model_importer.py
"""
Model bundle importer.

The bundle is a single JSON document tagged with the model format version.
Every transition and interaction matrix is checked to be row-stochastic
while loading.
"""

import json

from constants import MODEL_FORMAT_VERSION
from core.exceptions import CorruptModelError, ModelVersionError, V2XSentinelError
from core.vocabulary import ModelBundle
from importers.base_importer import BaseImporter
from utils.logger import get_logger

logger = get_logger(__name__)


class ModelImporter(BaseImporter):
    """Loads ModelBundle documents."""

    SUPPORTED_EXTENSIONS = [".json"]

    @classmethod
    def import_file(cls, filepath: str, **kwargs) -> ModelBundle:
        """
        Raises:
            FileOperationError: Missing file
            ModelVersionError: Version tag differs from the supported one
            CorruptModelError: Truncated, malformed or inconsistent document
        """
        path = cls.validate_file(filepath)
        try:
            data = cls.read_json(path)
        except (json.JSONDecodeError, UnicodeDecodeError) as e:
            raise CorruptModelError(f"Archivo de modelo corrupto: {filepath}", details=str(e))

        if not isinstance(data, dict) or "version" not in data:
            raise CorruptModelError(f"El modelo no tiene etiqueta de versión: {filepath}")
        if data["version"] != MODEL_FORMAT_VERSION:
            raise ModelVersionError(
                f"Versión de modelo no soportada: {data['version']}",
                details=f"se esperaba {MODEL_FORMAT_VERSION}"
            )

        try:
            model = ModelBundle.from_dict(data)
        except CorruptModelError:
            raise
        except V2XSentinelError as e:
            raise CorruptModelError(f"Modelo inconsistente: {filepath}", details=e.message)
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise CorruptModelError(f"Modelo incompleto: {filepath}", details=repr(e))

        logger.info(
            f"Loaded model {filepath}: N={model.n_vehicles}, "
            f"words={model.dictionaries['positional'].n_words}/{model.dictionaries['communication'].n_words}, "
            f"fingerprint={model.fingerprint[:12]}"
        )
        return model


def load_model(path: str) -> ModelBundle:
    return ModelImporter.import_file(path)
