import concurrent.futures
import math
from typing import Callable, Iterable, Sequence, TypeVar

import numpy as np

from ._config import CircleSampling

T = TypeVar("T")
R = TypeVar("R")

# stream tags mixed into every SeedSequence
CIRCLE_STREAM = 1
REDRAW_STREAM = 2
POLYNOMIAL_STREAM = 3
SCAN_CIRCLE_STREAM = 4
GEODESIC_STREAM = 5

_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))


def derive_seed(seed: int, *keys: int) -> int:
    sequence = np.random.SeedSequence([seed, *keys])
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def generator(seed: int, *keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, *keys]))


def uniform_directions(rng: np.random.Generator, n: int) -> np.ndarray:
    directions = rng.standard_normal((n, 3))
    return directions / np.linalg.norm(directions, axis=1, keepdims=True)


def block_ranges(n: int, block_size: int) -> list[range]:
    return [
        range(start, min(start + block_size, n)) for start in range(0, n, block_size)
    ]


def circle_directions(
    seed: int,
    indices: range,
    *,
    block_size: int,
    sampling: CircleSampling = "random",
    total: int,
) -> np.ndarray:
    """Directions for sample indices of one block.

    Random sampling draws block b = start // block_size from its own stream, so
    a sample's direction depends only on (seed, index).
    """
    match sampling:
        case "random":
            rng = generator(seed, CIRCLE_STREAM, indices.start // block_size)
            return uniform_directions(rng, len(indices))
        case "fibonacci":
            return fibonacci_directions(np.arange(indices.start, indices.stop), total)


def fibonacci_directions(indices: np.ndarray, total: int) -> np.ndarray:
    z = 1.0 - 2.0 * (indices + 0.5) / total
    radius = np.sqrt(1.0 - z * z)
    angle = _GOLDEN_ANGLE * indices
    return np.stack([radius * np.cos(angle), radius * np.sin(angle), z], axis=1)


def redraw_direction(seed: int, index: int, attempt: int) -> np.ndarray:
    rng = generator(seed, REDRAW_STREAM, index, attempt)
    return uniform_directions(rng, 1)[0]


def map_blocks(
    function: Callable[[T], R],
    items: Sequence[T] | Iterable[T],
    *,
    workers: int = 1,
) -> list[R]:
    """Ordered map; process pool when workers > 1 (results do not depend on it)."""
    if workers <= 1:
        return [function(item) for item in items]
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))
