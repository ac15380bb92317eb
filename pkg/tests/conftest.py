import itertools
from pathlib import Path

import numpy as np
import pytest

from ctxlearn.core import Dataset, FeatureRole, FeatureSchema

ROOT = Path(__file__).resolve().parents[1]
VOWEL_PATH = ROOT / "data" / "vowel-context.data"

P, C, I = FeatureRole.PRIMARY, FeatureRole.CONTEXTUAL, FeatureRole.IRRELEVANT


def discrete_dataset(rows, names=None):
    """rows: iterable of (label, x1, ..., xn) integer tuples."""
    rows = list(rows)
    n = len(rows[0]) - 1
    names = names or tuple(f"x{i + 1}" for i in range(n))
    labels = [r[0] for r in rows]
    schema = FeatureSchema(names, (P,) * n, tuple(sorted(set(labels))), (True,) * n)
    return Dataset.from_arrays(schema, np.array([r[1:] for r in rows], dtype=float), labels)


def xor_rows():
    return [(a ^ b, a, b) for a, b in itertools.product((0, 1), repeat=2)]


def copy_coin_rows():
    # x0 = x1, x2 an independent fair coin
    return [(a, a, b) for a, b in itertools.product((0, 1), repeat=2)]


def context_flip_rows():
    # x0 = x1 when x2 = 0, x0 = not x1 when x2 = 1; p(x2 = 0) = 3/4
    rows = []
    for x1 in (0, 1):
        rows += [(x1, x1, 0)] * 3
        rows.append((1 - x1, x1, 1))
    return rows


@pytest.fixture(scope="session")
def vowel():
    if not VOWEL_PATH.exists():
        pytest.skip(f"vowel data not found at {VOWEL_PATH}")
    from ctxlearn.data import load_vowel

    return load_vowel(VOWEL_PATH)


@pytest.fixture(scope="session")
def vowel_split(vowel):
    from ctxlearn.core import split_by

    return split_by(vowel, lambda o: o.split == "train")
