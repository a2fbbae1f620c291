import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from qmanizk import bitstrings, subsets


def test_dilution_factor_at_two_qubits():
    # 3^5 * (C(2,1) + C(2,2))
    assert subsets.dilution_factor(2) == 729


@pytest.mark.parametrize("n", [1, 2, 3, 5, 6, 9])
def test_subset_count_formula(n):
    assert subsets.admissible_subset_count(n) == sum(math.comb(n, k) for k in range(1, min(5, n) + 1))


def test_singletons_come_first():
    assert [subsets.unrank_subset(4, r) for r in range(5)] == [(0,), (1,), (2,), (3,), (0, 1)]
    assert subsets.unrank_subset(6, subsets.admissible_subset_count(6) - 1) == (1, 2, 3, 4, 5)


@given(n=st.integers(1, 9), data=st.data())
def test_rank_and_unrank_are_inverse(n, data):
    rank = data.draw(st.integers(0, subsets.admissible_subset_count(n) - 1))
    subset = subsets.unrank_subset(n, rank)
    assert list(subset) == sorted(set(subset)) and 1 <= len(subset) <= 5
    assert subsets.rank_subset(n, subset) == rank


def test_rank_rejects_inadmissible():
    with pytest.raises(ValueError):
        subsets.rank_subset(7, range(6))
    with pytest.raises(ValueError):
        subsets.unrank_subset(3, 7)


def test_sample_subset_is_uniform(rng):
    counts = np.zeros(subsets.admissible_subset_count(3))
    for _ in range(7000):
        counts[subsets.rank_subset(3, subsets.sample_subset(3, rng))] += 1
    assert stats.chisquare(counts).pvalue > 1e-3


@given(bits=st.lists(st.integers(0, 1), min_size=1, max_size=40))
def test_hex_round_trip_and_parity(bits):
    arr = bitstrings.as_bits(bits)
    assert np.array_equal(bitstrings.hex_to_bits(bitstrings.bits_to_hex(arr), len(bits)), arr)
    assert bitstrings.parity(arr) == sum(bits) % 2
    assert bitstrings.bits_to_int(arr) == sum(b << j for j, b in enumerate(bits))


def test_bit_helpers_reject_bad_input():
    with pytest.raises(ValueError):
        bitstrings.as_bits([0, 2])
    with pytest.raises(ValueError):
        bitstrings.int_to_bits(8, 3)
    with pytest.raises(ValueError):
        bitstrings.hex_to_bits("zz", 4)


@pytest.mark.parametrize("base", [2, 3, 24, 381, 2**40 + 3])
def test_uniform_digits_in_range(base):
    values = subsets.uniform_digits(np.random.default_rng(base), base, 500)
    assert len(values) == 500 and all(0 <= v < base for v in values)


@pytest.mark.parametrize("base", [3, 24])
def test_uniform_digits_chi_square(base):
    values = subsets.uniform_digits(np.random.default_rng(11), base, 24000)
    counts = np.bincount(values, minlength=base)
    assert stats.chisquare(counts).pvalue > 1e-3


def test_uniform_digits_pairs_are_independent():
    # consecutive digits from one word must not be correlated
    values = subsets.uniform_digits(np.random.default_rng(5), 4, 32000)
    table = np.zeros((4, 4))
    for a, b in zip(values[::2], values[1::2]):
        table[a, b] += 1
    assert stats.chi2_contingency(table).pvalue > 1e-3


def test_uniform_digits_edge_bases():
    rng = np.random.default_rng(0)
    assert subsets.uniform_digits(rng, 1, 5) == [0] * 5
    assert subsets.uniform_digits(rng, 7, 0) == []
    with pytest.raises(ValueError):
        subsets.uniform_digits(rng, 0, 1)
    with pytest.raises(ValueError):
        subsets.uniform_digits(rng, 2**64 + 1, 1)
