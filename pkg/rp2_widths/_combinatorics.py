from __future__ import annotations

import dataclasses
import math
from typing import Any, Iterator

from .exceptions import ParameterRangeError


def dim_d(d: int) -> int:
    """Dimension (d+1)(2d+1) of the sweepout polynomial space of degree 2d."""
    if d < 0:
        raise ParameterRangeError(f"d must be >= 0: {d}")
    return (d + 1) * (2 * d + 1)


def f_interval(p: int) -> int:
    """Unique d+1 with D(d) <= p <= D(d+1)-1, by binary search on d."""
    _check_width_index(p)
    low, high = 0, 1
    # grow the bracket until D(high) > p
    while dim_d(high) <= p:
        low, high = high, 2 * high
    # invariant: D(low) <= p < D(high)
    while high - low > 1:
        middle = (low + high) // 2
        if dim_d(middle) <= p:
            low = middle
        else:
            high = middle
    return low + 1


def f_interval_table(p_max: int) -> list[int]:
    """f(1), ..., f(p_max) by walking the intervals [D(d), D(d+1)-1]."""
    if p_max < 0:
        raise ParameterRangeError(f"p_max must be >= 0: {p_max}")
    table: list[int] = []
    d = 0
    while len(table) < p_max:
        run = min(dim_d(d + 1) - dim_d(d), p_max - len(table))
        table.extend([d + 1] * run)
        d += 1
    return table


def f_closed(p: int) -> int:
    """floor((1 + sqrt(1 + 8p)) / 4) without floating point.

    floor((1 + sqrt(N)) / 4) >= k  iff  4k - 1 <= isqrt(N).
    """
    _check_width_index(p)
    return (math.isqrt(1 + 8 * p) + 1) // 4


def omega_std(p: int) -> float:
    return 2.0 * math.pi * f_closed(p)


def width_jumps(p_max: int) -> list[int]:
    """Indices p <= p_max with omega_std(p) > omega_std(p - 1)."""
    jumps: list[int] = []
    d = 1
    while dim_d(d) <= p_max:
        jumps.append(dim_d(d))
        d += 1
    return jumps


@dataclasses.dataclass(frozen=True)
class SpectrumEntry:
    n1: int
    n2: int
    n3: int
    mu: float

    def __post_init__(self) -> None:
        if min(self.n1, self.n2, self.n3) < 0:
            raise ParameterRangeError(f"multiplicities must be >= 0: {self}")
        if self.mu <= 0.0:
            raise ParameterRangeError(f"mu must be > 0: {self.mu}")

    @property
    def total(self) -> int:
        return self.n1 + self.n2 + self.n3

    @property
    def offset(self) -> int:
        return self.n2 + 2 * self.n3

    @property
    def parity(self) -> int:
        return self.total % 2

    @property
    def even(self) -> bool:
        return self.parity == 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.total, self.offset)

    @property
    def value(self) -> float:
        return self.total * math.pi + self.mu * self.offset

    def to_json(self) -> dict[str, Any]:
        return {
            "n1": self.n1,
            "n2": self.n2,
            "n3": self.n3,
            "parity": self.parity,
            "value": self.value,
        }


def jsonschema_spectrum_entry() -> dict[str, Any]:
    schema = {
        "type": "object",
        "required": ["n1", "n2", "n3", "parity", "value"],
        "additionalProperties": False,
        "properties": {
            "n1": {"type": "integer", "minimum": 0},
            "n2": {"type": "integer", "minimum": 0},
            "n3": {"type": "integer", "minimum": 0},
            "parity": {"enum": [0, 1]},
            "value": {"type": "number"},
        },
    }
    return schema


def triples(total: int) -> Iterator[tuple[int, int, int]]:
    """All (n1, n2, n3) in N^3 with n1 + n2 + n3 = total."""
    for n3 in range(total + 1):
        for n2 in range(total - n3 + 1):
            yield (total - n2 - n3, n2, n3)


def offset_multipliers(total: int) -> list[int]:
    """Sorted distinct n2 + 2 n3 over n1 + n2 + n3 = total."""
    offsets: set[int] = set()
    for n3 in range(total + 1):
        # n2 runs over 0..total-n3
        offsets.update(range(2 * n3, total + n3 + 1))
    return sorted(offsets)


def spectrum_entries(d: int, mu: float) -> list[SpectrumEntry]:
    """One even-parity representative per distinct value of R, sorted by value."""
    _check_counting_regime(d, mu)
    cap = _spectrum_cap(d)
    representatives: dict[tuple[int, int], SpectrumEntry] = {}
    for total in range(1, 2 * (d + 1) + 1):
        for n1, n2, n3 in triples(total):
            entry = SpectrumEntry(n1, n2, n3, mu)
            # parity filter
            if not entry.even:
                continue
            if entry.value > cap:
                continue
            representatives.setdefault(entry.key, entry)
    return sorted(representatives.values(), key=lambda entry: entry.value)


def enumerate_r(d: int, mu: float) -> list[float]:
    """Distinct values of R below the cap 2 pi (d+1) + 1, increasing."""
    _check_counting_regime(d, mu)
    cap = _spectrum_cap(d)
    keys: set[tuple[int, int]] = set()
    for total in range(2, 2 * (d + 1) + 1, 2):
        for n3 in range(total + 1):
            keys.update((total, offset) for offset in range(2 * n3, total + n3 + 1))
    values = (total * math.pi + mu * offset for total, offset in keys)
    return sorted(value for value in values if 0.0 < value <= cap)


def card_r_formula(d: int) -> int:
    if d < 0:
        raise ParameterRangeError(f"d must be >= 0: {d}")
    return (d + 1) * (2 * d + 5)


def counting_mu(d: int) -> float:
    """Perturbation size used for the counting table, 1 / (4 (d+1))."""
    return 1.0 / (4 * (d + 1))


@dataclasses.dataclass(frozen=True)
class PerturbedWidth:
    p: int
    f: int
    value: float
    lower: float
    upper: float

    @property
    def within(self) -> bool:
        return self.lower <= self.value <= self.upper

    def to_json(self) -> dict[str, Any]:
        return dataclasses.asdict(self) | {"within": self.within}


def jsonschema_perturbed_width() -> dict[str, Any]:
    schema = {
        "type": "object",
        "required": ["p", "f", "value", "lower", "upper", "within"],
        "additionalProperties": False,
        "properties": {
            "p": {"type": "integer", "minimum": 1},
            "f": {"type": "integer", "minimum": 1},
            "value": {"type": "number"},
            "lower": {"type": "number"},
            "upper": {"type": "number"},
            "within": {"type": "boolean"},
        },
    }
    return schema


def perturbed_width_spectrum(d: int, mu: float) -> list[PerturbedWidth]:
    """Widths of the perturbed metric read off R for p = 1 .. D(d+1)-1.

    R has exactly D(d+1)-1 elements and the perturbed widths are strictly
    increasing, so the p-th smallest element of R is the p-th width.
    """
    values = enumerate_r(d, mu)
    expected = dim_d(d + 1) - 1
    if len(values) != expected:
        raise ParameterRangeError(
            f"mu={mu} leaves {len(values)} spectrum values, expected {expected}"
        )
    widths: list[PerturbedWidth] = []
    for p, value in enumerate(values, start=1):
        f = f_closed(p)
        widths.append(
            PerturbedWidth(
                p=p,
                f=f,
                value=value,
                lower=2.0 * math.pi * f,
                upper=(2.0 * math.pi + 4.0 * mu) * f,
            )
        )
    return widths


def _spectrum_cap(d: int) -> float:
    return 2.0 * math.pi * (d + 1) + 1.0


def _check_width_index(p: int) -> None:
    if p < 1:
        raise ParameterRangeError(f"p must be >= 1: {p}")


def _check_counting_regime(d: int, mu: float) -> None:
    if d < 0:
        raise ParameterRangeError(f"d must be >= 0: {d}")
    if not 0.0 < mu < 1.0 / (2 * (d + 1)):
        raise ParameterRangeError(
            f"mu must lie in (0, 1/(2(d+1))) = (0, {1.0 / (2 * (d + 1))}): {mu}"
        )
