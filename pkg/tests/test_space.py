import json

import numpy as np
import pytest

from lpquant.norms import parse_norm
from lpquant.space import MeasureSpace, load, lp_norm, read_space, tail_truncate, write_space

from conftest import random_space

E1 = parse_norm("euclidean", 1)


def test_load_basic():
    s = load([(1, [0]), (1, [2])], 1)
    assert s.mass == 2 and s.n == 2 and s.dim == 1 and not s.infinite_mass
    assert load([(1, [0])], 1, infinite_mass=True).infinite_mass


@pytest.mark.parametrize("atoms,dim", [([], 1), ([(0, [1])], 1), ([(-1, [1])], 1), ([(1, [1, 2])], 1),
                                       ([(1, [np.nan])], 1), ([(np.inf, [1])], 1)])
def test_load_rejects(atoms, dim):
    with pytest.raises(ValueError):
        load(atoms, dim)


def test_arrays_are_read_only():
    s = load([(1, [0]), (1, [2])], 1)
    with pytest.raises(ValueError):
        s.values[0, 0] = 5


def test_lp_norm_examples():
    s = load([(2, [1]), (1, [3])], 1)
    assert lp_norm(s, E1, 2) == pytest.approx(np.sqrt(11), rel=1e-15)
    assert lp_norm(s, E1, np.inf) == 3.0
    assert lp_norm(load([(1, [0]), (3, [0])], 1), E1, 2) == 0.0


def test_tail_truncate_examples():
    s = load([(1, [0.05]), (1, [1.0])], 1)
    assert tail_truncate(s, E1, 0.1).values.tolist() == [[1.0]]
    assert tail_truncate(s, E1, 0.01) == s
    s2 = load([(1, [1]), (1, [2])], 1)
    g = tail_truncate(s2, E1, 1.0)
    assert g.mass == 2 and g.mass <= lp_norm(s2, E1, 2) ** 2
    assert tail_truncate(s2, E1, 10.0).n == 0


def test_markov_bound_random(rng):
    for i in range(500):
        d = int(rng.integers(1, 4))
        s = random_space(rng, int(rng.integers(1, 20)), d, infinite_mass=bool(i % 2))
        norm = parse_norm("q:3" if i % 3 == 0 else "euclidean", d)
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        eps = float(rng.exponential())
        t = tail_truncate(s, norm, eps)
        assert eps**p * t.mass <= lp_norm(s, norm, p) ** p * (1 + 1e-12)
        assert tail_truncate(t, norm, eps) == t
        bigger = tail_truncate(s, norm, 2 * eps)
        assert set(map(tuple, bigger.values)) <= set(map(tuple, t.values))


def test_json_roundtrip_is_bit_exact(tmp_path, rng):
    s = random_space(rng, 7, 3, infinite_mass=True)
    path = tmp_path / "s.json"
    write_space(s, path)
    assert read_space(path) == s
    assert json.loads(path.read_text())["infinite_mass"] is True


def test_csv_reader(tmp_path):
    path = tmp_path / "s.csv"
    path.write_text("# weight, x, y\n1, 0, 0\n2.5, 1, -1\n")
    s = read_space(path)
    assert s.weights.tolist() == [1.0, 2.5] and s.values.tolist() == [[0, 0], [1, -1]]
    assert read_space(path, infinite_mass=True).infinite_mass


@pytest.mark.parametrize("text,suffix", [("{bad", ".json"), ('{"dim": 1}', ".json"), ("1, a\n", ".csv"), ("", ".csv"),
                                         ('{"dim": 2, "atoms": [{"w": 1, "f": [1]}]}', ".json")])
def test_malformed_files(tmp_path, text, suffix):
    path = tmp_path / ("bad" + suffix)
    path.write_text(text)
    with pytest.raises(ValueError):
        read_space(path)
