import json
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel, ValidationError

from config import Config
from . import spaces
from .core_sets import SubsetMask, mask_of, points_of
from .errors import InputError
from .models import SpacePresentation, StepFunction


class DataManager:
    """Reads space, subset and function files and writes reports"""

    def __init__(self, output_dir: Optional[str] = None):
        self.config = Config()
        self.output_dir = output_dir or self.config.OUTPUT_DIR
        self._ensure_output_directory()

    def _ensure_output_directory(self):
        """Ensure output directory exists"""
        if not os.path.exists(self.output_dir):
            os.makedirs(self.output_dir)

    def _load_json(self, path: str) -> Any:
        try:
            with open(path, 'r', encoding='utf-8') as f:
                return json.load(f)
        except FileNotFoundError:
            raise InputError(f"File not found: {path}", {'path': path})
        except json.JSONDecodeError as e:
            raise InputError(f"Malformed JSON in {path}: {e.msg}", {'path': path, 'line': e.lineno})

    # Inputs

    def load_space_dict(self, path: str) -> Dict[str, Any]:
        data = self._load_json(path)
        if not isinstance(data, dict):
            raise InputError("space file must hold a JSON object", {'path': path})
        return data

    def load_space(self, path: str, cutoff: Optional[float] = None,
                   ladder: Optional[Sequence[float]] = None) -> SpacePresentation:
        """Load a presentation, applying cutoff and ladder overrides"""
        data = self.load_space_dict(path)
        if cutoff is not None:
            data['cutoff'] = cutoff
        if ladder is not None:
            data['ladder'] = list(ladder)
        return spaces.presentation_from_dict(data)

    def resolve_points(self, p: SpacePresentation, items: Sequence[Any]) -> SubsetMask:
        """Window indices, lattice labels or point names to a mask"""
        labels = {tuple(label): i for i, label in enumerate(p.window.labels or [])}
        names = {name: i for i, name in enumerate(p.window.names or [])}
        indices = []
        for item in items:
            if isinstance(item, str):
                if item not in names:
                    raise InputError(f"Unknown point name: {item}")
                indices.append(names[item])
            elif isinstance(item, (list, tuple)):
                if tuple(item) not in labels:
                    raise InputError(f"Label is not a window point: {list(item)}")
                indices.append(labels[tuple(item)])
            else:
                index = int(item)
                if not 0 <= index < p.size:
                    raise InputError(f"Point index out of range: {index}", {'size': p.size})
                indices.append(index)
        return mask_of(indices)

    def _ranges(self, entry: Any) -> List[Any]:
        if isinstance(entry, dict):
            points: List[Any] = []
            for start, stop in entry.get('ranges', []):
                points.extend(range(int(start), int(stop) + 1))
            points.extend(entry.get('points', []))
            return points
        return list(entry)

    def load_subsets(self, path: str, p: SpacePresentation) -> Dict[str, SubsetMask]:
        """Named subsets: lists of points or {"ranges": [[start, stop], ...], "points": [...]}"""
        data = self._load_json(path)
        if not isinstance(data, dict):
            raise InputError("subset file must hold a JSON object", {'path': path})
        return {name: self.resolve_points(p, self._ranges(entry)) for name, entry in data.items()}

    def load_function(self, path: str, p: SpacePresentation, domain: Optional[SubsetMask] = None) -> StepFunction:
        """Values from JSON ({"values", "lo", "hi"}) or CSV (point_index, value)"""
        if path.endswith('.csv'):
            try:
                frame = pd.read_csv(path)
            except FileNotFoundError:
                raise InputError(f"File not found: {path}", {'path': path})
            if 'value' not in frame.columns:
                raise InputError("function CSV needs a value column", {'columns': frame.columns.tolist()})
            frame = frame.sort_values('point_index') if 'point_index' in frame.columns else frame
            values = frame['value'].astype(float).tolist()
            data: Dict[str, Any] = {'values': values, 'lo': min(values), 'hi': max(values)}
        else:
            data = self._load_json(path)
        if 'pieces' in data:
            values = np.full(p.size, float(data.get('default', data.get('lo', 0.0))))
            for piece in data['pieces']:
                flags = np.zeros(p.size, dtype=bool)
                flags[points_of(self.resolve_points(p, self._ranges(piece)), p.size)] = True
                values[flags] = float(piece['value'])
            data = dict(data, values=values.tolist())
        if len(data.get('values', [])) != p.size:
            raise InputError("function needs one value per window point", {'size': p.size})
        if domain is None and data.get('domain') is not None:
            domain = self.resolve_points(p, self._ranges(data['domain']))
        try:
            return StepFunction(values=data['values'], lo=data['lo'], hi=data['hi'], domain=domain)
        except KeyError as e:
            raise InputError(f"Function file lacks field {e}", {'field': str(e)})
        except ValidationError as e:
            raise InputError("Invalid function file", {'errors': e.errors(include_url=False)})

    # Outputs

    def _path(self, name: str) -> str:
        return os.path.join(self.output_dir, name)

    def _jsonable(self, payload: Any) -> Any:
        if isinstance(payload, BaseModel):
            return payload.model_dump(mode='json')
        if isinstance(payload, dict):
            return {str(k): self._jsonable(v) for k, v in payload.items()}
        if isinstance(payload, (list, tuple)):
            return [self._jsonable(v) for v in payload]
        if isinstance(payload, np.generic):
            return payload.item()
        return payload

    def save_report(self, name: str, payload: Dict[str, Any]) -> str:
        """Write a JSON report with sorted keys"""
        path = self._path(name)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self._jsonable(payload), f, indent=2, sort_keys=True)
            f.write('\n')
        return path

    def save_function(self, name: str, f: StepFunction) -> str:
        """Write point_index,value rows for the points of the function's domain"""
        path = self._path(name)
        index = np.flatnonzero(f.domain_array())
        frame = pd.DataFrame({'point_index': index, 'value': f.array()[index]})
        frame.to_csv(path, index=False, float_format='%.12g')
        return path

    def save_table(self, name: str, rows: List[Dict[str, Any]]) -> str:
        path = self._path(name)
        pd.DataFrame(rows).to_csv(path, index=False, float_format='%.12g')
        return path

    def save_space(self, name: str, p: SpacePresentation) -> str:
        return self.save_report(name, spaces.presentation_to_dict(p))
