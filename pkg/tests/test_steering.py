import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linprog

from steercost.boxkit import Box, all_local_det_boxes, box_from_correlators, correlators, maximally_mixed_box, mix, pr_box
from steercost.errors import NotRealizable, OutOfRange, ValidationError
from steercost.quantum import mub_pair_rotated
from steercost.steering import (
    ALICE_STRATEGIES,
    BB84_THRESHOLD,
    BobStrategy,
    LhvLhsModel,
    PureState,
    bb84_box,
    bb84_lhv_model,
    colored_bb84_box,
    colored_bb84_lhv_model,
    colored_noise_box,
    convex_roof_check,
    detect_family,
    extremal_steerable_box,
    find_pure_state,
    is_steerable,
    lhv_lhs_search,
    mub_realizable,
    numeric_decomposition,
    optimal_decomposition_bb84,
    optimal_decomposition_colored,
    pr_half_sum,
    steering_cost_bb84,
    steering_cost_colored,
    steering_cost_convergence,
    steering_cost_lower_bound,
    steering_cost_numeric,
    steering_functional,
    unsteerable_generators,
)

SQ2 = math.sqrt(2)


def test_extremal_box_is_pr_half_sum():
    assert pr_half_sum().max_abs_diff(extremal_steerable_box()) == 0.0
    assert steering_functional(extremal_steerable_box()) == pytest.approx(2 * SQ2, abs=1e-12)


def test_functional_of_pr_and_mixed():
    assert steering_functional(maximally_mixed_box()) == 0.0
    # PR^000 has E = (1, 1, 1, -1): |(2, 0)| + |(0, 2)|
    assert steering_functional(pr_box(0, 0, 0)) == pytest.approx(4.0)


def test_white_family_values():
    assert bb84_box(0).allclose(maximally_mixed_box(), atol=0)
    assert bb84_box(1).allclose(extremal_steerable_box(), atol=0)
    assert colored_bb84_box(1).allclose(extremal_steerable_box(), atol=1e-15)
    assert colored_bb84_box(0).allclose(colored_noise_box(), atol=1e-15)


def test_family_visibility_range():
    with pytest.raises(OutOfRange):
        bb84_box(-0.1)
    with pytest.raises(OutOfRange):
        colored_bb84_box(1.01)


def test_is_steerable_threshold():
    assert not is_steerable(bb84_box(BB84_THRESHOLD - 1e-6))
    assert is_steerable(bb84_box(BB84_THRESHOLD + 1e-6))
    assert is_steerable(colored_bb84_box(0.01))


def test_bob_strategy_validation():
    with pytest.raises(ValidationError):
        BobStrategy([[0.6, 0.6], [0.5, 0.5]])


def test_find_pure_state_poles():
    st0 = find_pure_state(BobStrategy.from_correlators(1.0, 0.0))
    assert (st0.r1, st0.r2, st0.cos_phi) == (1.0, 0.0, 0.0)
    st1 = find_pure_state(BobStrategy.from_correlators(-1.0, 0.0))
    assert (st1.r1, st1.r2) == (0.0, 1.0)


def test_find_pure_state_rejects_outside_disk():
    s = BobStrategy.from_correlators(0.8, 0.8)
    assert not mub_realizable(s)
    with pytest.raises(NotRealizable):
        find_pure_state(s)


def test_find_pure_state_round_trip():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(1000):
        r = math.sqrt(rng.uniform())
        t = rng.uniform(0, 2 * math.pi)
        s = BobStrategy.from_correlators(r * math.cos(t), r * math.sin(t))
        if r < 1:
            # interior points are mixed states; only boundary points are pure
            s = BobStrategy.from_correlators(math.cos(t), math.sin(t))
        back = find_pure_state(s).strategy()
        worst = max(worst, float(np.max(np.abs(back.probs - s.probs))))
    assert worst < 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(-3, 3))
def test_pure_state_statistics_are_mub_independent(t, angle):
    s = BobStrategy.from_correlators(math.cos(t), math.sin(t))
    state = find_pure_state(s)
    back = state.strategy(mub_pair_rotated(angle))
    assert np.max(np.abs(back.probs - s.probs)) < 1e-9


@pytest.mark.parametrize("V", [0.1, 0.3, 0.5, 0.7, BB84_THRESHOLD])
def test_bb84_model_below_threshold(V):
    cand = bb84_lhv_model(V)
    assert cand.reconstruction_residual < 1e-12
    assert all(cand.realizable)
    assert cand.model.residual(bb84_box(V)) < 1e-12
    assert cand.model.weights == (0.25,) * 4
    # the certificate does not depend on which MUB pair Bob measures
    assert cand.model.residual(bb84_box(V), mub_pair_rotated(0.9)) < 1e-12


def test_bb84_model_strategies():
    E = [s.E for s in bb84_lhv_model(0.6).bob]
    assert np.allclose(E, [(0.6, -0.6), (-0.6, 0.6), (0.6, 0.6), (-0.6, -0.6)])


@pytest.mark.parametrize("V", [0.75, 0.9, 1.0])
def test_bb84_candidate_unrealizable_above_threshold(V):
    cand = bb84_lhv_model(V)
    assert cand.reconstruction_residual < 1e-12
    assert not any(cand.realizable)
    assert cand.model is None


def test_colored_candidate():
    cand = colored_bb84_lhv_model(0.0)
    assert cand.model is not None and cand.model.residual(colored_bb84_box(0.0)) < 1e-12
    for V in (0.2, 1.0):
        cand = colored_bb84_lhv_model(V)
        assert cand.reconstruction_residual < 1e-12
        assert cand.model is None
        assert np.allclose([s.E for s in cand.bob], [(1, -V), (-1, V), (1, V), (-1, -V)])


def test_model_validation():
    ps = PureState(1.0, 0.0, 0.0)
    with pytest.raises(ValidationError):
        LhvLhsModel((0.5, 0.4), ((0, 0), (0, 1)), (ps, ps))
    with pytest.raises(ValidationError):
        LhvLhsModel((1.0,), ((0, 0),), (PureState(1.0, 1.0, 0.0),))


def test_generators_are_boxes():
    G, labels = unsteerable_generators(16)
    assert G.shape == (16, 64) and len(labels) == 64
    assert np.allclose(G.reshape(2, 2, 2, 2, -1).sum(axis=(2, 3)), 1.0)


def test_lhv_search_model_reconstructs():
    box = bb84_box(0.6)
    model = lhv_lhs_search(box, 360)
    assert model is not None
    assert model.residual(box) < 1e-7


def test_lhv_search_fails_for_steerable():
    assert lhv_lhs_search(extremal_steerable_box(), 360) is None


def test_lower_bound_exact_above_threshold():
    for V in np.linspace(BB84_THRESHOLD, 1, 7):
        assert steering_cost_lower_bound(bb84_box(V)) == pytest.approx(steering_cost_bb84(V), abs=1e-12)


@pytest.mark.parametrize("family", ["white", "colored"])
def test_lower_bound_below_numeric(family):
    make = bb84_box if family == "white" else colored_bb84_box
    for V in np.linspace(0, 1, 11):
        box = make(V)
        assert steering_cost_lower_bound(box) <= steering_cost_numeric(box) + 5e-3


def test_cost_nondecreasing_in_V():
    costs = [steering_cost_numeric(bb84_box(V)) for V in np.linspace(0, 1, 50)]
    assert all(b >= a - 1e-9 for a, b in zip(costs, costs[1:]))


def test_convergence_finer_grid_not_higher():
    rep = steering_cost_convergence(colored_bb84_box(0.5), 90)
    assert rep["cost_2n"] <= rep["cost"] + 1e-9
    assert rep["cost"] == pytest.approx(0.5, abs=2e-3)


def test_optimal_decompositions():
    dec = optimal_decomposition_bb84(0.9)
    assert dec.p_s == pytest.approx((0.9 * SQ2 - 1) / (SQ2 - 1), abs=1e-12)
    assert dec.residual(bb84_box(0.9)) < 1e-12
    assert dec.unsteerable.allclose(bb84_box(BB84_THRESHOLD), atol=1e-15)
    dec = optimal_decomposition_colored(0.4)
    assert dec.p_s == 0.4
    assert dec.unsteerable.allclose(colored_bb84_box(0.0), atol=1e-15)
    with pytest.raises(OutOfRange):
        optimal_decomposition_bb84(0.5)


def test_numeric_decomposition():
    box = bb84_box(0.9)
    dec = numeric_decomposition(box, 360)
    assert dec.residual(box) < 1e-7
    assert dec.p_s == pytest.approx(steering_cost_bb84(0.9), abs=1e-3)
    assert dec.model.residual(dec.unsteerable) < 1e-7
    assert steering_functional(dec.unsteerable) <= 2 + 1e-7


@pytest.mark.parametrize(
    "V, family, left, relation",
    [(0.8, "white", (0.8 * SQ2 - 1) / (SQ2 - 1), "<="), (1.0, "white", 1.0, "<="), (0.6, "colored", 0.6, "=")],
)
def test_convex_roof_examples(V, family, left, relation):
    rep = convex_roof_check(V, family)
    assert rep.left == pytest.approx(left, abs=1e-12)
    assert rep.right == pytest.approx(V, abs=1e-12)
    assert rep.relation == relation and rep.holds


def test_steering_cost_closed_forms():
    assert steering_cost_bb84(0.5) == 0.0
    assert steering_cost_bb84(1.0) == pytest.approx(1.0)
    assert steering_cost_colored(0.3) == 0.3


def test_detect_family():
    assert detect_family(bb84_box(0.37)) == ("white", pytest.approx(0.37, abs=1e-15))
    assert detect_family(colored_bb84_box(0.2)) == ("colored", pytest.approx(0.2, abs=1e-15))
    assert detect_family(pr_box(0, 0, 0)) is None
    assert detect_family(box_from_correlators([[0.5, 0], [0, -0.5]], [0.1, 0.1])) is None


def test_mixing_reduces_cost():
    # convexity on a single pair, checked against the closed forms
    a, b = bb84_box(1.0), colored_bb84_box(0.2)
    m = mix([a, b], [0.5, 0.5])
    assert steering_cost_numeric(m) <= 0.5 * 1.0 + 0.5 * 0.2 + 5e-3


def _outer_polygon_feasible(box, n=256):
    """Independent relaxation: Bob's (E0, E1) ranges over a polygon circumscribing the unit disk.

    Every LHV-LHS box lies in the convex hull of these generators, so infeasibility
    of the exact-membership LP certifies steerability.
    """
    r = 1 / math.cos(math.pi / n)
    th = 2 * math.pi * (np.arange(n) + 0.5) / n
    cols = []
    for al, be in ((0, 0), (0, 1), (1, 0), (1, 1)):
        for e0, e1 in zip(r * np.cos(th), r * np.sin(th)):
            t = np.zeros((2, 2, 2, 2))
            for x in (0, 1):
                t[x, :, (al & x) ^ be, :] = [[(1 + e0) / 2, (1 - e0) / 2], [(1 + e1) / 2, (1 - e1) / 2]]
            cols.append(t.ravel())
    G = np.array(cols).T
    res = linprog(
        np.zeros(G.shape[1]),
        A_eq=np.vstack([G, np.ones(G.shape[1])]),
        b_eq=np.append(box.flat(), 1.0),
        bounds=(0, None),
        method="highs",
    )
    return res.status == 0


def test_functional_alone_misses_biased_marginal_steering():
    # Mixture of deterministic boxes with realizable Bob marginals and S < 2 that
    # still admits no LHV-LHS model: the functional test is not sufficient once
    # the marginals are biased.
    rng = np.random.default_rng(0)
    dets = all_local_det_boxes()
    found = []
    while len(found) < 146:
        box = mix(dets, rng.dirichlet(np.ones(16)))
        mB = correlators(box).mB
        if mB[0] ** 2 + mB[1] ** 2 <= 1:
            found.append(box)
    box = found[145]
    assert steering_functional(box) < 0.9
    assert not _outer_polygon_feasible(box)
    assert lhv_lhs_search(box, 360) is None
    assert steering_cost_numeric(box, 360) > 0.05
    # a generic interior sample is fine
    assert _outer_polygon_feasible(found[0])
    assert lhv_lhs_search(found[0], 360) is not None


def test_random_unsteerable_mixtures_agree_with_functional():
    # mixtures of (deterministic Alice) x (qubit-realizable Bob) products: always S <= 2 and a model exists
    rng = np.random.default_rng(5)
    for _ in range(30):
        k = rng.integers(1, 6)
        t = np.zeros((2, 2, 2, 2))
        for w in rng.dirichlet(np.ones(k)):
            al, be = ALICE_STRATEGIES[rng.integers(4)]
            r, th = math.sqrt(rng.uniform()), rng.uniform(0, 2 * math.pi)
            bob = BobStrategy.from_correlators(r * math.cos(th), r * math.sin(th)).probs
            for x in (0, 1):
                t[x, :, (al & x) ^ be, :] += w * bob
        box = Box(t)
        S = steering_functional(box)
        assert S <= 2 + 1e-12
        if S < 2 - 5e-3:
            model = lhv_lhs_search(box)
            assert model is not None and model.residual(box) < 1e-7
