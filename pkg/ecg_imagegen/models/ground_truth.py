"""
Ground-truth model - everything needed to supervise or score a generated page
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np

from .artifacts import ArtifactBox
from .paper import LeadPolyline


SCHEMA_VERSION = 1


@dataclass
class GroundTruthMeta:
    """Sidecar content of one generated image

    ``polylines`` carry post-perspective vertices; their ``band_px``,
    ``x_range_px`` and ``baseline_px`` stay in the unwarped page frame so an
    evaluator can undo ``matrix`` and digitize in that frame. Artifact boxes
    are in the unwarped frame too; their warped bounds are kept in
    ``extra['warped_bbox_px']``.
    """

    record_id: str
    record_index: int
    polylines: List[LeadPolyline] = field(default_factory=list)
    matrix: np.ndarray = field(default_factory=lambda: np.eye(3))
    boxes: List[ArtifactBox] = field(default_factory=list)
    paper: Dict[str, Any] = field(default_factory=dict)
    creases: Dict[str, Any] = field(default_factory=dict)
    wrinkles: Dict[str, Any] = field(default_factory=dict)
    imaging: Dict[str, Any] = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    image_digest: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            'schema_version': SCHEMA_VERSION,
            'record_id': self.record_id,
            'record_index': self.record_index,
            'paper': self.paper,
            'matrix': [float(v) for v in np.asarray(self.matrix, dtype=np.float64).ravel()],
            'polylines': [p.to_dict() for p in self.polylines],
            'boxes': [b.to_dict() for b in self.boxes],
            'creases': self.creases,
            'wrinkles': self.wrinkles,
            'imaging': self.imaging,
            'timings': self.timings,
            'warnings': list(self.warnings),
            'image_digest': self.image_digest,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "GroundTruthMeta":
        version = data.get('schema_version')
        if version != SCHEMA_VERSION:
            raise ValueError(f"Unsupported sidecar schema version: {version!r}")
        return cls(
            record_id=data.get('record_id', ''),
            record_index=int(data.get('record_index', 0)),
            polylines=[LeadPolyline.from_dict(p) for p in data.get('polylines', [])],
            matrix=np.asarray(data.get('matrix', np.eye(3).ravel()), dtype=np.float64).reshape(3, 3),
            boxes=[ArtifactBox.from_dict(b) for b in data.get('boxes', [])],
            paper=dict(data.get('paper', {})),
            creases=dict(data.get('creases', {})),
            wrinkles=dict(data.get('wrinkles', {})),
            imaging=dict(data.get('imaging', {})),
            timings={k: float(v) for k, v in data.get('timings', {}).items()},
            warnings=list(data.get('warnings', [])),
            image_digest=data.get('image_digest', ''),
        )

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=1)
        return path

    @classmethod
    def load(cls, path: Union[str, Path]) -> "GroundTruthMeta":
        with open(path, 'r', encoding='utf-8') as f:
            return cls.from_dict(json.load(f))
