import math
import warnings

import numpy as np
import pytest

from rotset import boxgrid as bg
from rotset.dynamics import MapSpec, Translation, evaluate, identity_map, lipschitz_bound
from rotset.transition import (UnsoundParameters, build_table, cache_key, check_soundness,
                               image_of, load_table, save_table)


def _unsound(*args, **kw):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return build_table(*args, allow_unsound=True, **kw)


def _as_set(arr):
    return {tuple(int(v) for v in r) for r in arr}


@pytest.fixture(scope="module")
def table11():
    from rotset import standard_family
    return build_table(standard_family(1, 1), 8)


def test_identity_zero_reach_contains_box(ident):
    t = _unsound(ident, 4, m=3, R=0.0)
    for i in range(4):
        for j in range(4):
            img = _as_set(image_of(t, (i, j)))
            assert (i, j) in img
            # corner test points also touch all boxes sharing that corner
            assert (i - 1, j - 1) in img and (i + 1, j + 1) in img


def test_integer_translation_table():
    f = MapSpec((Translation(1, 2),))
    t = _unsound(f, 4, m=3, R=0.0)
    for i in range(4):
        for j in range(4):
            assert (i + 4, j + 8) in _as_set(image_of(t, (i, j)))


def test_unsound_parameters_rejected(f11):
    with pytest.raises(UnsoundParameters):
        build_table(f11, 8, m=42, R=math.sqrt(2) / 8)
    with pytest.warns(UserWarning):
        t = build_table(f11, 8, m=42, R=math.sqrt(2) / 8, allow_unsound=True)
    assert not t.sound


def test_defaults_sound(table11, f11):
    assert table11.sound
    assert table11.m == math.ceil(lipschitz_bound(f11)) + 1
    assert table11.R == math.sqrt(2) / 8
    assert check_soundness(table11.lipschitz, 8, table11.m, table11.R)


def test_f11_m42_deterministic(f11):
    a = _unsound(f11, 8, m=42, R=math.sqrt(2) / 8)
    b = _unsound(f11, 8, m=42, R=math.sqrt(2) / 8, threads=3)
    assert a.k * a.k == len(a.offsets) - 1 == 64
    assert a == b
    assert a.count == b.count > 64


def test_lists_nonempty_and_unique(table11):
    for i in range(8):
        for j in range(8):
            tg = table11.targets_of(i, j)
            assert len(tg) > 0
            assert len(_as_set(tg)) == len(tg)
            assert np.all((tg[:, :2] >= 0) & (tg[:, :2] < 8))


def test_targets_sorted(table11):
    for i in range(8):
        for j in range(8):
            abs_ = image_of(table11, (i, j))
            order = np.lexsort(abs_.T[::-1])
            assert np.array_equal(order, np.arange(len(abs_)))


def test_image_of_translates(table11, rng):
    for _ in range(50):
        b = rng.integers(-100, 100, 2)
        s = rng.integers(-5, 5, 2)
        shifted = image_of(table11, b + 8 * s)
        assert np.array_equal(shifted, image_of(table11, b) + 8 * s)


def test_image_of_brute_force(table11, f11):
    k, m, R = 8, table11.m, table11.R
    img = evaluate(f11, bg.test_points((2, 3), k, m))
    brute = set()
    for p in img:
        brute |= set(bg.boxes_near(p, R, k))
    assert _as_set(image_of(table11, (2, 3))) == brute


def test_soundness_membership(table11, f11, rng):
    k = 8
    base = rng.integers(0, k, (10000, 2))
    y = (base + rng.uniform(0, 1, (10000, 2))) / k
    fy = evaluate(f11, y)
    for b, p in zip(base, fy):
        target = tuple(bg.box_of(p, k))
        assert target in _as_set(image_of(table11, b))


def test_nearest_test_point_within_L_eta(table11, f11, rng):
    k, m = 8, table11.m
    eta = bg.test_grid_density(k, m)
    base = rng.integers(0, k, (2000, 2))
    y = (base + rng.uniform(0, 1, (2000, 2))) / k
    # nearest grid point along each axis
    x = base / k + np.round((y - base / k) * k * (m - 1)) / (k * (m - 1))
    d = np.hypot(*(evaluate(f11, y) - evaluate(f11, x)).T)
    assert np.all(d <= table11.lipschitz * eta)


def test_evaluation_guard(f11):
    with pytest.raises(OverflowError):
        build_table(f11, 2000, m=100)


def test_cache_round_trip(table11, tmp_path):
    path = tmp_path / cache_key(table11.label, table11.k, table11.m, table11.R)
    save_table(table11, path)
    back = load_table(path, lipschitz=table11.lipschitz)
    assert back == table11
    assert back.label == table11.label and back.sound
    assert not (tmp_path / (path.name + ".part")).exists()


def test_cache_rejects_garbage(tmp_path):
    p = tmp_path / "x.tbl"
    p.write_bytes(b"\0" * 64)
    with pytest.raises(ValueError):
        load_table(p)
