#!/usr/bin/env python3
"""Reference implementation of the Porter (1980) suffix stemmer.

Independent of the C++ implementation; used to generate the frozen
expected strings in tests/unit/test_text.cpp. Run:

    python3 tests/oracles/porter_ref.py word [word ...]
"""
import sys


def is_consonant(word: str, i: int) -> bool:
    c = word[i]
    if c in "aeiou":
        return False
    if c == "y":
        return i == 0 or not is_consonant(word, i - 1)
    return True


def measure(stem: str) -> int:
    """Number of VC sequences in [C](VC)^m[V]."""
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        v = not is_consonant(stem, i)
        if prev_vowel and not v:
            m += 1
        prev_vowel = v
    return m


def has_vowel(stem: str) -> bool:
    return any(not is_consonant(stem, i) for i in range(len(stem)))


def ends_double_consonant(word: str) -> bool:
    return (
        len(word) >= 2
        and word[-1] == word[-2]
        and is_consonant(word, len(word) - 1)
    )


def ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if not (
        is_consonant(word, len(word) - 3)
        and not is_consonant(word, len(word) - 2)
        and is_consonant(word, len(word) - 1)
    ):
        return False
    return word[-1] not in "wxy"


def replace_suffix(word, suffix, repl, min_measure):
    if word.endswith(suffix):
        stem = word[: len(word) - len(suffix)]
        if measure(stem) > min_measure:
            return stem + repl, True
        return word, True  # matched but condition failed: stop scanning
    return word, False


def step1a(word):
    if word.endswith("sses"):
        return word[:-2]
    if word.endswith("ies"):
        return word[:-2]
    if word.endswith("ss"):
        return word
    if word.endswith("s"):
        return word[:-1]
    return word


def step1b(word):
    if word.endswith("eed"):
        stem = word[:-3]
        if measure(stem) > 0:
            return word[:-1]
        return word
    fired = False
    if word.endswith("ed") and has_vowel(word[:-2]):
        word = word[:-2]
        fired = True
    elif word.endswith("ing") and has_vowel(word[:-3]):
        word = word[:-3]
        fired = True
    if fired:
        if word.endswith(("at", "bl", "iz")):
            return word + "e"
        if ends_double_consonant(word) and word[-1] not in "lsz":
            return word[:-1]
        if measure(word) == 1 and ends_cvc(word):
            return word + "e"
    return word


def step1c(word):
    if word.endswith("y") and has_vowel(word[:-1]):
        return word[:-1] + "i"
    return word


STEP2 = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

STEP3 = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

STEP4 = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


def run_rules(word, rules, min_measure):
    for suffix, repl in rules:
        out, matched = replace_suffix(word, suffix, repl, min_measure)
        if matched:
            return out
    return word


def step4(word):
    for suffix in STEP4:
        if word.endswith(suffix):
            stem = word[: len(word) - len(suffix)]
            if suffix == "ion" and not (stem and stem[-1] in "st"):
                return word
            if measure(stem) > 1:
                return stem
            return word
    return word


def step5a(word):
    if word.endswith("e"):
        stem = word[:-1]
        m = measure(stem)
        if m > 1:
            return stem
        if m == 1 and not ends_cvc(stem):
            return stem
    return word


def step5b(word):
    if measure(word) > 1 and ends_double_consonant(word) and word.endswith("l"):
        return word[:-1]
    return word


def stem_once(word: str) -> str:
    if len(word) <= 2:
        return word
    word = step1a(word)
    word = step1b(word)
    word = step1c(word)
    word = run_rules(word, STEP2, 0)
    word = run_rules(word, STEP3, 0)
    word = step4(word)
    word = step5a(word)
    word = step5b(word)
    return word


def stem(word: str) -> str:
    """Stem iterated to a fixpoint (how the library applies it)."""
    for _ in range(8):
        out = stem_once(word)
        if out == word:
            return out
        word = out
    return word


if __name__ == "__main__":
    for w in sys.argv[1:]:
        print(f"{w} -> {stem(w.lower())}")
