# exporters/graph_exporter.py
"""
Graph stream exporter (JSON lines).

Each line holds one frame:
{"frame", "adjacency" (rows of '0'/'1'), "attack", "v2i_sinr_db", "v2i_outage"}
"""

import json
from pathlib import Path
from typing import Sequence

from core.exceptions import FileOperationError
from core.radio import GraphRecord
from utils.logger import get_logger

logger = get_logger(__name__)


class GraphStreamExporter:

    @staticmethod
    def record_to_dict(record: GraphRecord) -> dict:
        return {
            "frame": record.frame,
            "adjacency": record.graph.to_bitmap(),
            "attack": record.attack,
            "v2i_sinr_db": [round(v, 4) for v in record.v2i_sinr_db] if record.v2i_sinr_db is not None else None,
            "v2i_outage": list(record.v2i_outage) if record.v2i_outage is not None else None,
        }

    @staticmethod
    def export(records: Sequence[GraphRecord], filename: str) -> str:
        path = Path(filename)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            with open(path, "w", encoding="utf-8") as f:
                for record in records:
                    f.write(json.dumps(GraphStreamExporter.record_to_dict(record), separators=(",", ":")))
                    f.write("\n")
        except OSError as e:
            raise FileOperationError("exportación", str(path), str(e))
        logger.info(f"Graph stream written to {path} ({len(records)} frames)")
        return str(path)
