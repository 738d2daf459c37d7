"""
Domain Loader Agent
Reads a domain file into DomainSpec, GridSpec and ground truth
"""

from pathlib import Path
from typing import Any, Dict, List, Tuple
import json
import logging
import math

from agents.base_agent import BaseAgent
from logic_blocks.errors import ConfigurationError
from logic_blocks.geometry_block import DomainSpec, GeometryBlock, GridSpec, Transmitter

logger = logging.getLogger(__name__)

DEFAULT_GRID_CELLS = 50
CIRCLE_SEGMENTS = 32


class DomainLoaderAgent(BaseAgent):
    """
    Input: {'config_path': str} or {'config': dict}, optional 'sensing_radius'
    Output: domain, grid, ground truth, PAO and geometry warnings

    Loaded files are cached by resolved path.
    """

    REQUIRED_FIELDS = ['bounds', 'transmitters']

    def __init__(self):
        super().__init__(agent_id="domain_loader_001", agent_type="domain_loader")
        self.loaded_domains: Dict[str, Dict[str, Any]] = {}

    def validate_input(self, input_data: Dict[str, Any]) -> bool:
        if not isinstance(input_data, dict):
            return False
        return 'config_path' in input_data or 'config' in input_data

    def execute(self, input_data: Dict[str, Any]) -> Dict[str, Any]:
        raw = input_data.get('config')
        if raw is None:
            raw = self.load_file(input_data['config_path'])
        missing = [f for f in self.REQUIRED_FIELDS if f not in raw]
        if missing:
            raise ConfigurationError(f"Domain file is missing required fields: {missing}")

        domain = DomainSpec(
            bounds=self._parse_bounds(raw['bounds']),
            obstacles=tuple(self._parse_obstacles(raw)),
            transmitters=tuple(self._parse_transmitter(t) for t in raw['transmitters']),
            name=str(raw.get('name', 'domain')),
        )
        sensing_radius = float(input_data.get('sensing_radius', 0.06))
        violations = GeometryBlock.validate_geometry(domain, sensing_radius)
        errors = [v for v in violations if v.severity == 'error']
        if errors:
            raise ConfigurationError(
                "Invalid domain geometry: " + "; ".join(f"[{v.rule}] {v.message}" for v in errors)
            )

        grid = self._parse_grid(raw.get('grid'), domain)
        truth = GeometryBlock.ground_truth(domain, grid)
        pao = GeometryBlock.pao(domain)
        logger.info(
            f"Loaded domain '{domain.name}': {len(domain.obstacles)} obstacles, "
            f"PAO={pao:.2f}%, grid {grid.rows}x{grid.cols}"
        )
        return {
            'domain': domain,
            'grid': grid,
            'truth': truth,
            'pao': pao,
            'warnings': [v for v in violations if v.severity == 'warning'],
        }

    def load_file(self, path: str) -> Dict[str, Any]:
        key = str(Path(path).resolve())
        if key in self.loaded_domains:
            return self.loaded_domains[key]
        try:
            with open(path, 'r', encoding='utf-8') as f:
                raw = json.load(f)
        except FileNotFoundError as e:
            raise ConfigurationError(f"Domain file not found: {path}") from e
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in domain file {path}: {e}") from e
        self.loaded_domains[key] = raw
        return raw

    def _parse_bounds(self, bounds: Any) -> Tuple[float, float, float, float]:
        if not isinstance(bounds, (list, tuple)) or len(bounds) != 4:
            raise ConfigurationError("bounds must be [xmin, ymin, xmax, ymax]")
        return tuple(float(b) for b in bounds)

    def _parse_obstacles(self, raw: Dict[str, Any]) -> List[Tuple[Tuple[float, float], ...]]:
        polygons = [[(float(x), float(y)) for x, y in poly] for poly in raw.get('obstacles', [])]
        for circle in raw.get('circles', []):
            cx, cy = (float(v) for v in circle['center'])
            r = float(circle['radius'])
            polygons.append([
                (cx + r * math.cos(2 * math.pi * k / CIRCLE_SEGMENTS),
                 cy + r * math.sin(2 * math.pi * k / CIRCLE_SEGMENTS))
                for k in range(CIRCLE_SEGMENTS)
            ])
        oriented = []
        for k, poly in enumerate(polygons):
            if GeometryBlock.signed_area(poly) < 0:
                logger.debug(f"Obstacle {k} listed clockwise; reversing")
                poly = poly[::-1]
            oriented.append(tuple(poly))
        return oriented

    def _parse_transmitter(self, raw: Dict[str, Any]) -> Transmitter:
        try:
            x, y = raw['pos']
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigurationError(f"Transmitter needs 'pos': [x, y], got {raw}") from e
        return Transmitter(
            position=(float(x), float(y)),
            gain=float(raw.get('k', 1.0)),
            power=float(raw.get('pow', 1.0)),
            alpha=float(raw.get('alpha', 2.0)),
        )

    def _parse_grid(self, raw: Any, domain: DomainSpec) -> GridSpec:
        if raw is None:
            cols = DEFAULT_GRID_CELLS
            rows = max(1, round(cols * domain.height / domain.width))
        else:
            rows, cols = int(raw['rows']), int(raw['cols'])
        return GridSpec.for_bounds(domain.bounds, rows, cols)
