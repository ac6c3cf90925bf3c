from itertools import product

import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbitherm.errors import ResourceLimitError
from orbitherm.words import (
    brute_force_reduced,
    canonical_rotation,
    check_budget,
    cyclic_count,
    enumerate_reduced_words,
    free_reduce,
    inverse,
    is_cyclically_reduced,
    iter_shell,
    parse_word,
    periodic_classes,
    rotations,
    shell_count,
    word_str,
)

letters2 = st.sampled_from([1, -1, 2, -2])


@pytest.mark.parametrize("k,m", [(2, 0), (2, 1), (2, 4), (3, 3), (4, 2)])
def test_shell_matches_brute_force(k, m):
    got = list(iter_shell(k, m))
    assert sorted(got) == sorted(brute_force_reduced(k, m))
    assert len(got) == shell_count(k, m)
    assert len(set(got)) == len(got)


@pytest.mark.parametrize("k,n", [(2, 1), (2, 2), (2, 5), (3, 4)])
def test_cyclic_classes_cover_cyclically_reduced_words(k, n):
    classes = periodic_classes(k, n)
    assert sum(m for _, m in classes) == cyclic_count(k, n)
    brute = [w for w in brute_force_reduced(k, n) if is_cyclically_reduced(w)]
    assert len(brute) == cyclic_count(k, n)
    assert {canonical_rotation(w) for w in brute} == {w for w, _ in classes}


def test_small_class_counts():
    # k = 2: 4 classes of length 1, 8 of length 2 (12 up to length 2)
    assert len(periodic_classes(2, 1)) == 4
    assert len(periodic_classes(2, 2)) == 8


def test_enumeration_is_shell_ordered():
    ws = list(enumerate_reduced_words(2, 3))
    assert [len(w) for w in ws] == sorted(len(w) for w in ws)
    assert len(ws) == 1 + 4 + 12 + 36


def test_budget_caps():
    with pytest.raises(ResourceLimitError):
        check_budget(2, 40)


@given(st.lists(letters2, max_size=12))
def test_free_reduce_idempotent_and_inverse(w):
    r = free_reduce(w)
    assert free_reduce(r) == r
    assert free_reduce(tuple(r) + inverse(r)) == ()


@given(st.lists(letters2, min_size=1, max_size=10))
def test_canonical_rotation_invariant(w):
    w = tuple(w)
    c = canonical_rotation(w)
    assert all(canonical_rotation(r) == c for r in rotations(w))


@given(st.lists(letters2, max_size=10))
def test_word_string_roundtrip(w):
    assert parse_word(word_str(tuple(w))) == tuple(w)
