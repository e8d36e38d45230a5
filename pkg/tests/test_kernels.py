import random

import numpy as np
import pytest

from splocal import _kernels_py, kernels

from oracles import oracle_edit_distance

try:
    from splocal import _kernels as _compiled
except ImportError:
    _compiled = None

IMPLS = [("python", _kernels_py)] + ([("cython", _compiled)] if _compiled else [])


def ids(seq):
    return np.array(seq, dtype=np.intc)


@pytest.mark.parametrize("name,impl", IMPLS)
def test_edit_distance_matches_oracle(name, impl):
    rng = random.Random(7)
    for _ in range(300):
        a = [rng.randint(0, 5) for _ in range(rng.randint(0, 12))]
        b = [rng.randint(0, 5) for _ in range(rng.randint(0, 12))]
        assert impl.edit_distance(ids(a), ids(b)) == oracle_edit_distance(a, b)


@pytest.mark.parametrize("name,impl", IMPLS)
def test_edit_distance_basics(name, impl):
    assert impl.edit_distance(ids([]), ids([])) == 0
    assert impl.edit_distance(ids([1, 2, 3]), ids([1, 2, 3])) == 0
    assert impl.edit_distance(ids([1, 2, 3]), ids([])) == 3
    assert impl.edit_distance(ids([]), ids([9])) == 1
    assert impl.edit_distance(ids([1, 2, 3]), ids([1, 9, 3])) == 1


@pytest.mark.parametrize("name,impl", IMPLS)
def test_hamming_bound_dominates_levenshtein(name, impl):
    rng = random.Random(11)
    for _ in range(200):
        a = [rng.randint(0, 4) for _ in range(rng.randint(0, 10))]
        b = [rng.randint(0, 4) for _ in range(rng.randint(0, 10))]
        assert impl.edit_distance(ids(a), ids(b)) <= impl.hamming_plus_length_gap(ids(a), ids(b))


@pytest.mark.skipif(_compiled is None, reason="extension not built")
def test_backends_agree():
    rng = random.Random(3)
    for _ in range(200):
        a = ids([rng.randint(0, 6) for _ in range(rng.randint(0, 15))])
        b = ids([rng.randint(0, 6) for _ in range(rng.randint(0, 15))])
        assert _compiled.edit_distance(a, b) == _kernels_py.edit_distance(a, b)
        assert _compiled.hamming_plus_length_gap(a, b) == _kernels_py.hamming_plus_length_gap(a, b)


def test_selector_reports_backend():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.edit_distance(ids([1]), ids([2])) == 1
