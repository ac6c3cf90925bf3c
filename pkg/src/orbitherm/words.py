"""Reduced words in a free group on generators 1..k.

A word is a tuple of signed generator indices; ``-j`` is the inverse of
generator ``j`` and ``()`` is the identity.  Products are read left to
right as matrix products, so ``(1, 2)`` means ``g1 @ g2``.
"""
from itertools import product

from .errors import ResourceLimitError

MAX_WORD_LEN = 16
MAX_WORDS = 10 ** 8


def alphabet(k):
    """Letters in enumeration order: 1, -1, 2, -2, ..."""
    out = []
    for j in range(1, k + 1):
        out += [j, -j]
    return out


def is_reduced(w):
    return all(w[i] != -w[i + 1] for i in range(len(w) - 1))


def is_cyclically_reduced(w):
    return is_reduced(w) and (len(w) < 2 or w[0] != -w[-1])


def free_reduce(w):
    out = []
    for x in w:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def inverse(w):
    return tuple(-x for x in reversed(w))


def rotations(w):
    return [w[i:] + w[:i] for i in range(len(w))] if w else [w]


def letter_key(w):
    # lexicographic order by position in the 1, -1, 2, -2, ... alphabet
    return tuple(2 * abs(x) - (x > 0) for x in w)


def canonical_rotation(w):
    """Lexicographically least rotation (in alphabet order)."""
    return min(rotations(w), key=letter_key)


def shell_count(k, m):
    if m == 0:
        return 1
    return 2 * k * (2 * k - 1) ** (m - 1)


def cyclic_count(k, n):
    """Number of cyclically reduced words of length n >= 1."""
    return (2 * k - 1) ** n + 1 + (k - 1) * (1 + (-1) ** n)


def check_budget(k, max_len, cap_len=MAX_WORD_LEN, cap_words=MAX_WORDS):
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    if max_len > cap_len:
        raise ResourceLimitError(f"word length {max_len} above cap {cap_len}")
    total = sum(shell_count(k, m) for m in range(max_len + 1))
    if total > cap_words:
        raise ResourceLimitError(f"{total} words above cap {cap_words}")
    return total


def iter_shell(k, m):
    """Reduced words of length exactly m, in lexicographic alphabet order."""
    letters = alphabet(k)
    if m == 0:
        yield ()
        return

    def rec(prefix):
        if len(prefix) == m:
            yield tuple(prefix)
            return
        for x in letters:
            if prefix and prefix[-1] == -x:
                continue
            prefix.append(x)
            yield from rec(prefix)
            prefix.pop()

    yield from rec([])


def enumerate_reduced_words(k, max_len, cap_len=MAX_WORD_LEN):
    check_budget(k, max_len, cap_len)
    for m in range(max_len + 1):
        yield from iter_shell(k, m)


def brute_force_reduced(k, m):
    """All length-m tuples over the alphabet that are reduced (test oracle)."""
    return [w for w in product(alphabet(k), repeat=m) if is_reduced(w)]


def periodic_classes(k, n):
    """Cyclically reduced words of length n grouped up to rotation.

    Returns a list of ``(canonical_word, multiplicity)`` where multiplicity is
    the number of distinct rotations (it divides n).
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    check_budget(k, n)
    seen = {}
    for w in iter_shell(k, n):
        if n > 1 and w[0] == -w[-1]:
            continue
        c = canonical_rotation(w)
        if c == w:
            seen[c] = len(set(rotations(w)))
    return sorted(seen.items(), key=lambda kv: letter_key(kv[0]))


_NAMES = "abcdefghijklmnopqrstuvwxyz"


def word_str(w):
    if not w:
        return "e"
    return "".join(_NAMES[x - 1] if x > 0 else _NAMES[-x - 1].upper() for x in w)


def parse_word(s):
    if s in ("", "e"):
        return ()
    out = []
    for ch in s:
        if ch.lower() not in _NAMES:
            raise ValueError(f"bad letter {ch!r}")
        j = _NAMES.index(ch.lower()) + 1
        out.append(j if ch.islower() else -j)
    return tuple(out)


def power(w, n):
    if n >= 0:
        return tuple(w) * n
    return inverse(w) * (-n)
