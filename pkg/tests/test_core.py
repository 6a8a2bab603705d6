import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsbell.core import (
    CompactState,
    JointBox,
    LocalState,
    MomentVector,
    box_from_json,
    box_from_moments,
    box_to_json,
    compact_affine_map,
    compact_from_box,
    correlator,
    expand,
    is_valid,
    local_from_moments,
    mixture,
    moments_from_local,
    product_box,
    uniform_box,
    validate_joint_box,
)

from conftest import random_local

prob = st.floats(0.0, 1.0, allow_nan=False)
local_states = st.builds(LocalState, prob, prob, prob)


def random_level1_box(rng, n_products=4):
    boxes = [product_box(random_local(rng), random_local(rng)) for _ in range(n_products)]
    return mixture(boxes, rng.dirichlet(np.ones(n_products)))


def test_uniform_box_is_valid():
    assert validate_joint_box(uniform_box()) == []


def test_constructed_signaling_violation():
    t = np.full((3, 3, 2, 2), 0.25)
    t[0, 0] = [[0.6, 0.4], [0.0, 0.0]]
    report = validate_joint_box(JointBox(t))
    a_x = [v for v in report if v.kind == "no-signaling" and "p(+|X_A)" in v.where]
    assert a_x and max(v.magnitude for v in a_x) == pytest.approx(0.5, abs=1e-12)


def test_negative_entries_and_normalization_reported():
    t = np.full((3, 3, 2, 2), 0.25)
    t[1, 2, 0, 0] = -0.1
    kinds = {v.kind for v in validate_joint_box(JointBox(t))}
    assert {"positivity", "normalization"} <= kinds


def test_products_pass_all_twelve_equalities(rng):
    for _ in range(100):
        box = product_box(random_local(rng), random_local(rng))
        assert validate_joint_box(box) == []
        # brute-force marginal comparison, independent of the validator
        ma = box.table.sum(axis=3)[:, :, 0]
        mb = box.table.sum(axis=2)[:, :, 0]
        assert np.ptp(ma, axis=1).max() < 1e-12
        assert np.ptp(mb, axis=0).max() < 1e-12


def test_product_box_examples():
    half = LocalState(0.5, 0.5, 0.5)
    assert product_box(half, half).allclose(uniform_box())
    box = product_box(LocalState(1, 0, 0.5), LocalState(0, 1, 0.5))
    assert box.block("X", "X")[0, 0] == 0
    assert box.block("X", "X")[0, 1] == 1
    assert box.block("Z", "Z")[0, 0] == 0.25


def test_product_marginals_equal_inputs(rng):
    alice, bob = random_local(rng), random_local(rng)
    box = product_box(alice, bob)
    np.testing.assert_allclose(box.marginals_a(), np.repeat(alice.as_array()[:, None], 3, axis=1), atol=1e-15)
    np.testing.assert_allclose(box.marginals_b(), np.repeat(bob.as_array()[None, :], 3, axis=0), atol=1e-15)


def test_local_state_range_checked():
    with pytest.raises(ValueError):
        LocalState(1.1, 0.5, 0.5)
    with pytest.raises(ValueError):
        product_box(LocalState(0.5, 0.5, 0.5), LocalState(-0.01, 0.5, 0.5))
    with pytest.raises(ValueError):
        MomentVector(0, 0, 1.5)


def test_compact_examples():
    c = compact_from_box(uniform_box())
    assert c.diag == (0.25,) * 3 and c.off_diag == (0.25,) * 6
    assert c.marg_a == (0.5,) * 3 and c.marg_b == (0.5,) * 3
    c = compact_from_box(product_box(LocalState(1, 0, 0.5), LocalState(0, 1, 0.5)))
    assert c.marg_a == (1.0, 0.0, 0.5)


def test_compact_round_trip_on_random_boxes(rng):
    for _ in range(100):
        box = random_level1_box(rng)
        assert expand(compact_from_box(box)).allclose(box, 1e-12)


def test_compact_from_invalid_box_raises():
    t = np.full((3, 3, 2, 2), 0.25)
    t[0, 0] = [[0.6, 0.4], [0.0, 0.0]]
    with pytest.raises(ValueError):
        compact_from_box(JointBox(t))


def test_expand_examples():
    uniform = CompactState((0.25,) * 3, (0.25,) * 6, (0.5,) * 3, (0.5,) * 3)
    assert expand(uniform).allclose(uniform_box())

    perfect = CompactState((0.5, 0.25, 0.25), (0.25,) * 6, (0.5,) * 3, (0.5,) * 3)
    np.testing.assert_allclose(expand(perfect).block("X", "X"), [[0.5, 0.0], [0.0, 0.5]])

    over = CompactState((0.6, 0.25, 0.25), (0.25,) * 6, (0.5,) * 3, (0.5,) * 3)
    box = expand(over)
    assert box.block("X", "X")[0, 1] == pytest.approx(-0.1)
    assert any(v.kind == "positivity" and v.where == "XX:pm" for v in validate_joint_box(box))


@given(st.lists(st.floats(-2, 2, allow_nan=False), min_size=15, max_size=15))
def test_compact_of_expand_is_identity(v):
    c = CompactState.from_vector(v)
    t = expand(c).table
    np.testing.assert_allclose(t[:, :, 0, 0], c.pp_matrix(), atol=0)
    np.testing.assert_allclose(t[:, 0, 0, :].sum(axis=-1), c.marg_a, atol=1e-12)
    np.testing.assert_allclose(t[0, :, :, 0].sum(axis=-1), c.marg_b, atol=1e-12)


def test_moments_examples():
    assert moments_from_local(LocalState(0.5, 0.5, 0.5)) == MomentVector(0, 0, 0)
    assert moments_from_local(LocalState(1, 0, 0.5)) == MomentVector(1, -1, 0)


def test_moments_round_trip(rng):
    worst = 0.0
    for p in rng.random((1000, 3)):
        back = local_from_moments(moments_from_local(LocalState(*p)))
        worst = max(worst, np.abs(back.as_array() - p).max())
    assert worst < 1e-15


def test_correlator_examples():
    assert correlator(uniform_box(), "X", "Z") == 0
    perfect = expand(CompactState((0.5, 0.25, 0.25), (0.25,) * 6, (0.5,) * 3, (0.5,) * 3))
    assert correlator(perfect, "X", "X") == 1


def test_product_correlator_is_product_of_moments(rng):
    for _ in range(1000):
        a, b = random_local(rng), random_local(rng)
        box = product_box(a, b)
        ma, mb = moments_from_local(a).as_array(), moments_from_local(b).as_array()
        i, j = rng.integers(3, size=2)
        assert abs(correlator(box, i, j) - ma[i] * mb[j]) < 1e-12


@settings(max_examples=50)
@given(local_states, local_states, local_states, local_states, st.floats(0, 1))
def test_correlator_is_affine_in_mixtures(a1, b1, a2, b2, lam):
    x, y = product_box(a1, b1), product_box(a2, b2)
    mix = mixture([x, y], [lam, 1 - lam])
    for i in range(3):
        for j in range(3):
            expected = lam * correlator(x, i, j) + (1 - lam) * correlator(y, i, j)
            assert abs(correlator(mix, i, j) - expected) < 1e-12


@settings(max_examples=50)
@given(local_states, local_states)
def test_product_box_always_valid(a, b):
    assert is_valid(product_box(a, b))


def test_moment_matrix_round_trip(rng):
    box = random_level1_box(rng)
    assert box_from_moments(box.moment_matrix()).allclose(box, 1e-14)


def test_affine_map_matches_direct_evaluation(rng):
    Q, q = compact_affine_map(lambda b: b.table.ravel())
    v = rng.random(15)
    np.testing.assert_allclose(Q @ v + q, expand(CompactState.from_vector(v)).table.ravel(), atol=1e-14)


def test_json_round_trip(rng):
    box = random_level1_box(rng)
    doc = json.loads(json.dumps(box_to_json(box)))
    assert len(doc["compact"]) == 15
    assert box_from_json(doc).allclose(box, 1e-15)


def test_json_compact_only():
    doc = {"compact": [0.25] * 9 + [0.5] * 6}
    assert box_from_json(doc).allclose(uniform_box())


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {},
        {"blocks": {"XX": {"pp": 1, "pm": 0, "mp": 0, "mm": 0}}},
        {"blocks": {k: {"pp": 0.25, "pm": 0.25, "mp": 0.25} for k in ("XX", "XY", "XZ", "YX", "YY", "YZ", "ZX", "ZY", "ZZ")}},
        {"compact": [0.25] * 14},
    ],
)
def test_json_schema_errors(doc):
    with pytest.raises(ValueError):
        box_from_json(doc)


def test_json_blocks_and_compact_must_agree():
    doc = box_to_json(uniform_box())
    doc["compact"][0] = 0.3
    with pytest.raises(ValueError):
        box_from_json(doc)


def test_box_is_immutable():
    box = uniform_box()
    with pytest.raises(ValueError):
        box.table[0, 0, 0, 0] = 1.0
