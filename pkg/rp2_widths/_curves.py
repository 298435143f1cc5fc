from __future__ import annotations

import dataclasses
import functools
import logging
import math
from typing import Any, Optional

import numpy as np
import scipy.spatial
from scipy.spatial.transform import Rotation

from ._config import TraceConfig
from ._poly import LevelFunction, SweepPolynomial
from .exceptions import AntipodalPairingError, NearSingularError, ParameterRangeError

# fixed generic orientation: no grid vertex on a coordinate plane
_GRID_ROTATION = Rotation.from_euler("zyx", [0.1234, 0.5678, 0.9012]).as_matrix()
# crossings of antipodal edges are exact negations of each other
_PAIRING_TOLERANCE = 1e-9


@dataclasses.dataclass(frozen=True, eq=False)
class GeodesicGrid:
    resolution: int
    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    face_edges: np.ndarray

    @property
    def max_edge_arc(self) -> float:
        return float(
            np.max(
                _arc_lengths(
                    self.vertices[self.edges[:, 0]],
                    self.vertices[self.edges[:, 1]],
                )
            )
        )


@functools.cache
def geodesic_grid(resolution: int) -> GeodesicGrid:
    """Icosahedron subdivided `resolution` times: 20 * 4^resolution triangles."""
    if resolution < 0:
        raise ParameterRangeError(f"resolution must be >= 0: {resolution}")
    vertices, faces = _icosahedron()
    vertices = vertices @ _GRID_ROTATION.T
    for _ in range(resolution):
        vertices, faces = _subdivide(vertices, faces)
    edges, face_edges = _edge_table(faces)
    return GeodesicGrid(
        resolution=resolution,
        vertices=vertices,
        faces=faces,
        edges=edges,
        face_edges=face_edges,
    )


@dataclasses.dataclass(frozen=True, eq=False)
class TracedCurve:
    components: list[np.ndarray]
    component_lengths: list[float]
    total_length_sphere: float
    antipodal_pairing: list[Optional[int]]
    resolution: int
    step_bound: float

    def to_json(self) -> dict[str, Any]:
        return {
            "resolution": self.resolution,
            "step_bound": self.step_bound,
            "total_length_sphere": self.total_length_sphere,
            "component_lengths": list(self.component_lengths),
            "antipodal_pairing": list(self.antipodal_pairing),
            "components": [
                [[float(value) for value in vertex] for vertex in component]
                for component in self.components
            ],
        }


def jsonschema_traced_curve() -> dict[str, Any]:
    vertex = {
        "type": "array",
        "items": {"type": "number"},
        "minItems": 3,
        "maxItems": 3,
    }
    schema = {
        "type": "object",
        "required": [
            "resolution",
            "step_bound",
            "total_length_sphere",
            "component_lengths",
            "antipodal_pairing",
            "components",
        ],
        "additionalProperties": False,
        "properties": {
            "resolution": {"type": "integer", "minimum": 0},
            "step_bound": {"type": "number"},
            "total_length_sphere": {"type": "number", "minimum": 0.0},
            "component_lengths": {"type": "array", "items": {"type": "number"}},
            "antipodal_pairing": {
                "type": "array",
                "items": {"type": ["integer", "null"]},
            },
            "components": {
                "type": "array",
                "items": {"type": "array", "items": vertex},
            },
        },
    }
    return schema


def trace_level_set(
    level: LevelFunction,
    resolution: Optional[int] = None,
    *,
    config: Optional[TraceConfig] = None,
    logger: Optional[logging.Logger] = None,
) -> TracedCurve:
    """Marching triangles for {level = 0} on the icosahedral grid of S^2.

    Sign-change edges are bisected along their great arc and the crossings are
    linked through the two crossing edges of each triangle.
    """
    # pylint: disable=too-many-locals
    config = config or TraceConfig()
    logger = logger or logging.getLogger(__name__)
    resolution = config.resolution if resolution is None else resolution
    if isinstance(level, SweepPolynomial) and level.is_zero():
        raise ParameterRangeError("the zero polynomial has no zero set to trace")
    grid = geodesic_grid(resolution)
    logger.debug(f"trace: resolution {resolution}, {len(grid.faces)} triangles")
    # signs at the grid vertices
    values = level(grid.vertices)
    if np.any(values == 0.0):
        raise NearSingularError("the level set passes through a grid vertex")
    positive = values > 0.0
    crossing = positive[grid.edges[:, 0]] != positive[grid.edges[:, 1]]
    # with nonzero vertex signs a triangle has 0 or 2 crossing edges
    face_crossing = crossing[grid.face_edges]
    active = np.any(face_crossing, axis=1)
    # crossing points
    crossing_edges = np.nonzero(crossing)[0]
    start = grid.vertices[grid.edges[crossing_edges, 0]]
    end = grid.vertices[grid.edges[crossing_edges, 1]]
    points = _bisect_edges(
        level,
        start,
        end,
        positive[grid.edges[crossing_edges, 0]],
        config.bisection_steps,
    )
    if len(points):
        gradient = level.gradient(points)
        radial = np.sum(gradient * points, axis=1, keepdims=True)
        tangential = gradient - radial * points
        weakest = float(np.min(np.linalg.norm(tangential, axis=1)))
        if weakest < config.gradient_floor:
            raise NearSingularError(
                f"surface gradient {weakest} below {config.gradient_floor}"
                " at a crossing"
            )
    # link crossings through triangles
    node = np.full(len(grid.edges), -1)
    node[crossing_edges] = np.arange(len(crossing_edges))
    links = node[grid.face_edges[active]][face_crossing[active]].reshape(-1, 2)
    cycles = _cycles(len(points), links)
    components = [points[cycle] for cycle in cycles]
    lengths = [_closed_length(component) for component in components]
    pairing = _antipodal_pairing(points, cycles)
    logger.debug(f"trace: {len(components)} components, total {sum(lengths)}")
    return TracedCurve(
        components=components,
        component_lengths=lengths,
        total_length_sphere=float(math.fsum(lengths)),
        antipodal_pairing=pairing,
        resolution=resolution,
        step_bound=grid.max_edge_arc,
    )


def rp2_mass_from_trace(curve: TracedCurve) -> float:
    for index, partner in enumerate(curve.antipodal_pairing):
        if partner is None or curve.antipodal_pairing[partner] != index:
            raise AntipodalPairingError(
                f"component {index} has no consistent antipodal image"
            )
    # paired components are identified, self-antipodal ones are double covers
    return curve.total_length_sphere / 2.0


def _icosahedron() -> tuple[np.ndarray, np.ndarray]:
    t = (1.0 + math.sqrt(5.0)) / 2.0
    vertices = np.array(
        [
            (-1.0, t, 0.0),
            (1.0, t, 0.0),
            (-1.0, -t, 0.0),
            (1.0, -t, 0.0),
            (0.0, -1.0, t),
            (0.0, 1.0, t),
            (0.0, -1.0, -t),
            (0.0, 1.0, -t),
            (t, 0.0, -1.0),
            (t, 0.0, 1.0),
            (-t, 0.0, -1.0),
            (-t, 0.0, 1.0),
        ]
    ) / math.sqrt(1.0 + t**2)
    faces = np.array(
        [
            (0, 11, 5),
            (0, 5, 1),
            (0, 1, 7),
            (0, 7, 10),
            (0, 10, 11),
            (1, 5, 9),
            (5, 11, 4),
            (11, 10, 2),
            (10, 7, 6),
            (7, 1, 8),
            (3, 9, 4),
            (3, 4, 2),
            (3, 2, 6),
            (3, 6, 8),
            (3, 8, 9),
            (4, 9, 5),
            (2, 4, 11),
            (6, 2, 10),
            (8, 6, 7),
            (9, 8, 1),
        ]
    )
    return vertices, faces


def _edge_table(faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # face edges in the order (0, 1), (1, 2), (2, 0)
    pairs = np.stack([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=1)
    edges, inverse = np.unique(
        np.sort(pairs, axis=2).reshape(-1, 2),
        axis=0,
        return_inverse=True,
    )
    return edges, np.asarray(inverse).reshape(-1, 3)


def _subdivide(
    vertices: np.ndarray,
    faces: np.ndarray,
) -> tuple[np.ndarray, np.ndarray]:
    """Split each triangle into four, pushing edge midpoints to the unit sphere."""
    edges, face_edges = _edge_table(faces)
    midpoints = vertices[edges[:, 0]] + vertices[edges[:, 1]]
    midpoints /= np.linalg.norm(midpoints, axis=1, keepdims=True)
    middle = len(vertices) + face_edges
    a, b, c = faces.T
    ab, bc, ca = middle.T
    new_faces = np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([ab, b, bc], axis=1),
            np.stack([ca, bc, c], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )
    return np.concatenate([vertices, midpoints]), new_faces


def _bisect_edges(
    level: LevelFunction,
    start: np.ndarray,
    end: np.ndarray,
    start_positive: np.ndarray,
    iterations: int,
) -> np.ndarray:
    low = np.zeros(len(start))
    high = np.ones(len(start))
    for _ in range(iterations):
        middle = 0.5 * (low + high)
        same = (level(_arc_point(start, end, middle)) > 0.0) == start_positive
        low = np.where(same, middle, low)
        high = np.where(same, high, middle)
    return _arc_point(start, end, 0.5 * (low + high))


def _arc_point(start: np.ndarray, end: np.ndarray, t: np.ndarray) -> np.ndarray:
    point = (1.0 - t)[:, None] * start + t[:, None] * end
    return point / np.linalg.norm(point, axis=1, keepdims=True)


def _arc_lengths(start: np.ndarray, end: np.ndarray) -> np.ndarray:
    cross = np.linalg.norm(np.cross(start, end), axis=-1)
    return np.arctan2(cross, np.sum(start * end, axis=-1))


def _closed_length(component: np.ndarray) -> float:
    return float(math.fsum(_arc_lengths(component, np.roll(component, -1, axis=0))))


def _cycles(n_nodes: int, links: np.ndarray) -> list[np.ndarray]:
    # every crossing edge borders exactly two active triangles
    neighbors: list[list[int]] = [[] for _ in range(n_nodes)]
    for a, b in links:
        neighbors[a].append(int(b))
        neighbors[b].append(int(a))
    visited = np.zeros(n_nodes, dtype=bool)
    cycles: list[np.ndarray] = []
    for start in range(n_nodes):
        if visited[start]:
            continue
        cycle = [start]
        visited[start] = True
        previous, current = start, neighbors[start][0]
        while current != start:
            cycle.append(current)
            visited[current] = True
            first, second = neighbors[current]
            previous, current = current, (second if first == previous else first)
        cycles.append(np.array(cycle))
    return cycles


def _antipodal_pairing(
    points: np.ndarray,
    cycles: list[np.ndarray],
) -> list[Optional[int]]:
    if not cycles:
        return []
    owner = np.empty(len(points), dtype=int)
    for index, cycle in enumerate(cycles):
        owner[cycle] = index
    tree = scipy.spatial.cKDTree(points)
    pairing: list[Optional[int]] = []
    for cycle in cycles:
        distance, nearest = tree.query(-points[cycle])
        partners = set(owner[nearest].tolist())
        if np.max(distance) > _PAIRING_TOLERANCE or len(partners) != 1:
            pairing.append(None)
        else:
            pairing.append(partners.pop())
    return pairing
