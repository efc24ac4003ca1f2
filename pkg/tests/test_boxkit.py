import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steercost.boxkit import (
    Box,
    all_local_det_boxes,
    all_pr_boxes,
    box_from_correlators,
    box_from_json,
    box_to_json,
    chsh_value,
    chsh_values,
    correlators,
    flat_index,
    is_local,
    local_det_box,
    make_box,
    maximally_mixed_box,
    mix,
    pr_box,
    read_box,
    write_box,
)
from steercost.errors import BadWeights, NegativeEntry, NotNormalized, SignalingDetected, ValidationError


def test_flat_index_order():
    seen = [flat_index(a, b, x, y) for x, y, a, b in itertools.product((0, 1), repeat=4)]
    assert seen == list(range(16))


def test_table_is_read_only():
    box = maximally_mixed_box()
    with pytest.raises(ValueError):
        box.table[0, 0, 0, 0] = 1.0


def test_make_box_flat_order():
    entries = [0.25] * 16
    entries[0], entries[1] = 0.5, 0.0  # p(00|00), p(01|00)
    entries[2], entries[3] = 0.0, 0.5
    box = make_box(entries)
    assert box.prob(0, 0, 0, 0) == 0.5
    assert box.prob(1, 1, 0, 0) == 0.5
    assert box.prob(0, 1, 0, 0) == 0.0


@pytest.mark.parametrize(
    "entries, exc",
    [
        ([-0.1, 0.6, 0.25, 0.25] + [0.25] * 12, NegativeEntry),
        ([0.3] * 4 + [0.25] * 12, NotNormalized),
        ([1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0], SignalingDetected),
        ([0.25] * 15, ValidationError),
        ([float("nan")] + [0.25] * 15, ValidationError),
    ],
)
def test_make_box_rejects(entries, exc):
    with pytest.raises(exc):
        make_box(entries)


def test_signaling_message_names_direction():
    # Alice's marginal at x=0 depends on y
    with pytest.raises(SignalingDetected, match="Bob -> Alice"):
        make_box([1, 0, 0, 0, 0, 0, 0, 1, 1, 0, 0, 0, 1, 0, 0, 0])


def test_pr_box_rule():
    for al, be, ga in itertools.product((0, 1), repeat=3):
        box = pr_box(al, be, ga)
        for x, y, a, b in itertools.product((0, 1), repeat=4):
            want = 0.5 if (a ^ b) == ((x & y) ^ (al & x) ^ (be & y) ^ ga) else 0.0
            assert box.prob(a, b, x, y) == want


def test_pr_box_chsh_is_four_on_its_own_form():
    for al, be, ga in itertools.product((0, 1), repeat=3):
        assert chsh_value(pr_box(al, be, ga), al, be, ga) == pytest.approx(4.0, abs=1e-12)


def test_pr_000_correlators():
    c = correlators(pr_box(0, 0, 0))
    assert c.ordered() == (1.0, 1.0, 1.0, -1.0)
    assert np.all(c.mA == 0) and np.all(c.mB == 0)


def test_local_det_boxes_are_local_and_distinct():
    boxes = all_local_det_boxes()
    assert len(boxes) == 16
    flats = {tuple(b.flat()) for b in boxes}
    assert len(flats) == 16
    for b in boxes:
        assert max(chsh_values(b).values()) == pytest.approx(2.0)
        assert is_local(b)


def test_local_det_rule():
    box = local_det_box(1, 0, 0, 1)  # a = x, b = 1
    assert box.prob(0, 1, 0, 0) == 1.0
    assert box.prob(1, 1, 1, 1) == 1.0
    assert box.prob(0, 0, 0, 0) == 0.0


def test_maximally_mixed_has_zero_correlators():
    c = correlators(maximally_mixed_box())
    assert np.all(c.E == 0)
    assert all(v == 0 for v in chsh_values(maximally_mixed_box()).values())


def test_mix_pr_boxes_to_mixed():
    # the uniform mixture of PR^000 and PR^001 is the maximally mixed box
    mixed = mix([pr_box(0, 0, 0), pr_box(0, 0, 1)], [0.5, 0.5])
    assert mixed.allclose(maximally_mixed_box(), atol=0)


@pytest.mark.parametrize("weights", [[0.5, 0.6], [-0.1, 1.1], [1.0]])
def test_mix_bad_weights(weights):
    with pytest.raises(BadWeights):
        mix([pr_box(0, 0, 0), pr_box(0, 0, 1)], weights)


def test_chsh_bound_for_mixed_pr():
    for V in np.linspace(0, 1, 11):
        box = mix([pr_box(0, 0, 0), maximally_mixed_box()], [V, 1 - V])
        assert chsh_value(box, 0, 0, 0) == pytest.approx(4 * V, abs=1e-12)
        assert is_local(box) == (4 * V <= 2 + 1e-9)


def test_json_round_trip_bit_exact(tmp_path):
    box = box_from_correlators([[0.1, 1 / math.sqrt(3)], [math.pi / 10, -0.3]], [0.1, -0.2], [0.05, 0.0])
    again = box_from_json(box_to_json(box))
    assert again.flat() == box.flat()
    path = tmp_path / "b.json"
    write_box(box, path)
    assert read_box(path).flat() == box.flat()
    assert json.loads(path.read_text())["p"] == box.flat()


@pytest.mark.parametrize("text", ["not json", "[1,2]", '{"q": []}', '{"p": [true] }', '{"p": [0.25, 0.25]}'])
def test_json_rejects(text):
    with pytest.raises(ValidationError):
        box_from_json(text)


finite = st.floats(-1, 1, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=16, max_size=16).filter(lambda w: sum(w) > 1e-3))
def test_mixtures_of_vertices_satisfy_chsh(w):
    w = np.array(w) / sum(w)
    box = mix(all_local_det_boxes(), w)
    assert max(chsh_values(box).values()) <= 2 + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=8, max_size=8).filter(lambda w: sum(w) > 1e-3))
def test_correlator_round_trip(w):
    w = np.array(w) / sum(w)
    box = mix(all_pr_boxes(), w)
    c = correlators(box)
    assert box_from_correlators(c.E, c.mA, c.mB).max_abs_diff(box) < 1e-12
    assert max(abs(v) for v in chsh_values(box).values()) <= 4 + 1e-9
