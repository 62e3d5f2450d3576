# importers/base_importer.py
"""
Base class for V2XSentinel file readers.

Every importer checks the path and extension first, so that a missing or
mistyped input is reported as a FileOperationError before any parsing.
"""

import json
from abc import ABC, abstractmethod
from pathlib import Path
from typing import List

from core.exceptions import FileOperationError
from utils.logger import get_logger

logger = get_logger(__name__)


class BaseImporter(ABC):
    """Common path checks and JSON reading for the importers."""

    # Accepted suffixes, lower case (empty: any)
    SUPPORTED_EXTENSIONS: List[str] = []

    @classmethod
    def validate_file(cls, filepath: str) -> Path:
        """
        Check that filepath names an existing file with an accepted suffix.

        Returns:
            The path as a Path

        Raises:
            FileOperationError: Missing path, directory or unsupported suffix
        """
        path = Path(filepath)
        if not path.exists():
            raise FileOperationError("importación", str(filepath), "El archivo especificado no existe")
        if not path.is_file():
            raise FileOperationError("importación", str(filepath), "La ruta especificada no es un archivo")
        if cls.SUPPORTED_EXTENSIONS and path.suffix.lower() not in cls.SUPPORTED_EXTENSIONS:
            raise FileOperationError(
                "importación",
                str(filepath),
                f"Extensiones soportadas: {', '.join(cls.SUPPORTED_EXTENSIONS)}"
            )
        logger.debug(f"{cls.__name__}: reading {path}")
        return path

    @staticmethod
    def read_json(path: Path):
        """Parse a UTF-8 JSON document; decoding errors propagate to the caller."""
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    @classmethod
    @abstractmethod
    def import_file(cls, filepath: str, **kwargs):
        """Read filepath into the importer's domain object."""
