import math

import jsonschema
import pytest

from rp2_widths._combinatorics import (
    SpectrumEntry,
    card_r_formula,
    counting_mu,
    dim_d,
    enumerate_r,
    f_closed,
    f_interval,
    f_interval_table,
    jsonschema_perturbed_width,
    jsonschema_spectrum_entry,
    offset_multipliers,
    omega_std,
    perturbed_width_spectrum,
    spectrum_entries,
    triples,
    width_jumps,
)
from rp2_widths.exceptions import ParameterRangeError


@pytest.mark.parametrize("d, expected", [(0, 1), (1, 6), (2, 15), (3, 28), (10, 231)])
def test_dim_d(d: int, expected: int) -> None:
    assert dim_d(d) == expected


@pytest.mark.parametrize(
    "p, expected",
    [(1, 1), (5, 1), (6, 2), (14, 2), (15, 3), (27, 3), (28, 4)],
)
def test_f_interval_and_closed_form(p: int, expected: int) -> None:
    assert f_interval(p) == expected
    assert f_closed(p) == expected


def test_f_agrees_up_to_ten_thousand() -> None:
    table = f_interval_table(10_000)
    assert len(table) == 10_000
    assert all(table[p - 1] == f_closed(p) for p in range(1, 10_001))
    assert all(f_interval(p) == f_closed(p) for p in range(1, 10_001))


@pytest.mark.slow
def test_f_agrees_up_to_one_million() -> None:
    table = f_interval_table(10**6)
    assert all(value == f_closed(p) for p, value in enumerate(table, start=1))
    assert all(f_interval(p) == table[p - 1] for p in range(1, 10**6 + 1))


def test_f_closed_at_interval_boundaries() -> None:
    # isqrt keeps the floor exact where 1 + 8p is a perfect square
    for d in range(1, 2000):
        assert f_closed(dim_d(d)) == d + 1
        assert f_closed(dim_d(d) - 1) == d


@pytest.mark.parametrize("p", [0, -3])
def test_width_index_must_be_positive(p: int) -> None:
    with pytest.raises(ParameterRangeError):
        f_interval(p)
    with pytest.raises(ParameterRangeError):
        f_closed(p)


def test_omega_std() -> None:
    expected = [2.0 * math.pi] * 5 + [4.0 * math.pi] * 9
    assert [omega_std(p) for p in range(1, 15)] == expected


def test_width_jumps() -> None:
    assert width_jumps(100) == [6, 15, 28, 45, 66, 91]
    assert width_jumps(5) == []
    jumps = set(width_jumps(500))
    for p in range(2, 501):
        assert (omega_std(p) > omega_std(p - 1)) == (p in jumps)


@pytest.mark.parametrize("total", range(7))
def test_offset_multipliers_fill_the_range(total: int) -> None:
    assert offset_multipliers(total) == list(range(2 * total + 1))
    assert sorted({n2 + 2 * n3 for _, n2, n3 in triples(total)}) == list(
        range(2 * total + 1)
    )


def test_triples_count() -> None:
    for total in range(8):
        assert len(list(triples(total))) == (total + 1) * (total + 2) // 2


def test_spectrum_entry() -> None:
    entry = SpectrumEntry(1, 2, 1, 0.1)
    assert entry.total == 4
    assert entry.offset == 4
    assert entry.even
    assert entry.value == pytest.approx(4 * math.pi + 0.4)
    assert not SpectrumEntry(1, 0, 0, 0.1).even
    with pytest.raises(ParameterRangeError):
        SpectrumEntry(-1, 0, 0, 0.1)


def test_enumerate_r_small_cases() -> None:
    values = enumerate_r(0, 0.1)
    assert values == pytest.approx([2.0 * math.pi + 0.1 * k for k in range(5)])
    # totals 2 and 4 contribute 5 + 9 values
    assert len(enumerate_r(1, 0.05)) == 14


def test_enumerate_r_is_sorted_and_distinct() -> None:
    values = enumerate_r(4, counting_mu(4))
    assert values == sorted(set(values))


def test_counting_identity_up_to_fifty() -> None:
    for d in range(51):
        assert len(enumerate_r(d, counting_mu(d))) == card_r_formula(d)


@pytest.mark.parametrize("d, mu", [(1, 0.0), (1, 0.25), (0, 0.5), (2, -0.01)])
def test_enumerate_r_rejects_mu_outside_regime(d: int, mu: float) -> None:
    with pytest.raises(ParameterRangeError):
        enumerate_r(d, mu)


def test_spectrum_entries_match_enumeration() -> None:
    entries = spectrum_entries(1, 0.05)
    assert all(entry.even for entry in entries)
    assert [entry.value for entry in entries] == pytest.approx(enumerate_r(1, 0.05))
    for entry in entries:
        jsonschema.validate(
            instance=entry.to_json(), schema=jsonschema_spectrum_entry()
        )


@pytest.mark.parametrize("d", [0, 1, 2, 5])
def test_perturbed_width_spectrum(d: int) -> None:
    mu = counting_mu(d)
    widths = perturbed_width_spectrum(d, mu)
    assert len(widths) == dim_d(d + 1) - 1
    assert [width.p for width in widths] == list(range(1, dim_d(d + 1)))
    assert all(width.within for width in widths)
    assert all(a.value < b.value for a, b in zip(widths, widths[1:]))
    assert all(width.f == f_closed(width.p) for width in widths)
    for width in widths:
        row = width.to_json()
        assert row["within"]
        jsonschema.validate(instance=row, schema=jsonschema_perturbed_width())


def test_perturbed_width_spectrum_needs_full_spectrum() -> None:
    # the cap drops the top values once 4 (d+1) mu > 1
    with pytest.raises(ParameterRangeError):
        perturbed_width_spectrum(1, 0.2)


def test_card_r_formula() -> None:
    assert [card_r_formula(d) for d in range(4)] == [5, 14, 27, 44]
