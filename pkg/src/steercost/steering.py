"""Steerability and steering cost in the two-MUB qubit scenario.

Alice has two black-box binary measurements; Bob measures two mutually
unbiased qubit bases B0 (y=0) and B1 (y=1). A Bob response P(b|y) is written
through its correlators E_y = P(0|y) - P(1|y), and a qubit pure state can
produce (E0, E1) exactly when E0^2 + E1^2 <= 1.

Extremal unsteerable boxes are products of a deterministic Alice response and
a Bob pure-state response. :func:`lhv_lhs_search` and
:func:`steering_cost_numeric` discretize the pure states to ``grid_n`` points
on the circle E0^2 + E1^2 = 1 and solve the membership LP from :mod:`.lp`.
Discretization shrinks the unsteerable set (cost biased up by about
``(pi/grid_n)^2``), while leaving the steerable residual as any nonnegative
nonsignaling table relaxes the decomposition (cost biased down).
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import lp
from .boxkit import (
    Box,
    Correlators,
    box_from_correlators,
    correlators,
    maximally_mixed_box,
    mix,
    pr_box,
)
from .errors import NotRealizable, OutOfRange, ValidationError
from .quantum import MubPair, mub_pair_standard

TAU_MODEL = 1e-7
TAU_GRID = 1e-6
DEFAULT_GRID = 720
SQRT2 = math.sqrt(2.0)
BB84_THRESHOLD = 1 / SQRT2

# Alice's deterministic strategies a = alpha*x + beta, in the order P_D^00, P_D^01, P_D^10, P_D^11
ALICE_STRATEGIES = ((0, 0), (0, 1), (1, 0), (1, 1))


def _check_visibility(V: float, low_open: bool = False) -> float:
    V = float(V)
    if not (0.0 <= V <= 1.0) or (low_open and V == 0.0):
        raise OutOfRange(f"visibility V={V!r} outside {'(0, 1]' if low_open else '[0, 1]'}")
    return V


# ---------------------------------------------------------------------------
# the steering functional


def steering_functional(box: Box) -> float:
    """Left-hand side of the CHSH-like steering inequality (<= 2 for LHV-LHS boxes)."""
    E = correlators(box).E
    plus = math.hypot(E[0, 0] + E[1, 0], E[0, 1] + E[1, 1])
    minus = math.hypot(E[0, 0] - E[1, 0], E[0, 1] - E[1, 1])
    return plus + minus


def is_steerable(box: Box) -> bool:
    """Functional test ``S > 2``.

    A violation certifies steering. For boxes with biased marginals a value
    ``S <= 2`` does not by itself guarantee an LHV-LHS model; use
    :func:`lhv_lhs_search` for a membership answer.
    """
    return steering_functional(box) > 2.0 + TAU_MODEL


# ---------------------------------------------------------------------------
# families


def bb84_box(V: float) -> Box:
    """(1 + (-1)^(a+b+xy) delta_xy V) / 4; V=0 gives the maximally mixed box."""
    V = _check_visibility(V)
    return box_from_correlators([[V, 0.0], [0.0, -V]])


def colored_bb84_box(V: float) -> Box:
    V = _check_visibility(V)
    t = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product((0, 1), repeat=4):
        s1 = -1 if (a ^ b ^ (x & y)) else 1
        s2 = -1 if (a ^ b ^ x ^ y) else 1
        t[x, y, a, b] = (1 + s1 * ((x == y) * V + (1 - V) / 2) + s2 * (1 - V) / 2) / 4
    return Box(t)


def extremal_steerable_box() -> Box:
    return box_from_correlators([[1.0, 0.0], [0.0, -1.0]])


def pr_half_sum() -> Box:
    """(P_PR^000 + P_PR^110)/2; equal to :func:`extremal_steerable_box`."""
    return mix([pr_box(0, 0, 0), pr_box(1, 1, 0)], [0.5, 0.5])


def colored_noise_box() -> Box:
    """(P_PR^000 + P_PR^110 + P_PR^010 + P_PR^100)/4, the unsteerable noise of the colored family."""
    return mix([pr_box(0, 0, 0), pr_box(1, 1, 0), pr_box(0, 1, 0), pr_box(1, 0, 0)], [0.25] * 4)


# ---------------------------------------------------------------------------
# Bob strategies and pure states


@dataclass(frozen=True, eq=False)
class BobStrategy:
    """P(b|y) stored as an array indexed ``[y, b]``."""

    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(2, 2)
        if np.any(p < -TAU_MODEL) or np.any(np.abs(p.sum(axis=1) - 1) > TAU_MODEL):
            raise ValidationError(f"not a conditional distribution: {p.tolist()}")
        p = p.copy()
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_correlators(cls, E0: float, E1: float) -> "BobStrategy":
        return cls([[(1 + E0) / 2, (1 - E0) / 2], [(1 + E1) / 2, (1 - E1) / 2]])

    @classmethod
    def deterministic(cls, gamma: int, epsilon: int) -> "BobStrategy":
        """b = gamma*y + epsilon (mod 2)."""
        p = np.zeros((2, 2))
        for y in (0, 1):
            p[y, (gamma & y) ^ epsilon] = 1.0
        return cls(p)

    @property
    def E(self) -> tuple[float, float]:
        return float(self.probs[0, 0] - self.probs[0, 1]), float(self.probs[1, 0] - self.probs[1, 1])


@dataclass(frozen=True)
class PureState:
    """r1|f1> + e^{i phi} r2|f2> in Bob's B0 basis; only cos(phi) is observable."""

    r1: float
    r2: float
    cos_phi: float

    def vector(self, mub: MubPair | None = None) -> np.ndarray:
        return (mub or mub_pair_standard()).vector(self.r1, self.r2, self.cos_phi)

    def strategy(self, mub: MubPair | None = None) -> BobStrategy:
        """Born-rule statistics <psi|Pi_b|y|psi> under the MUB measurements."""
        psi = self.vector(mub)
        meas = (mub or mub_pair_standard()).measurements()
        p = [[float(np.vdot(psi, meas[y][b] @ psi).real) for b in (0, 1)] for y in (0, 1)]
        return BobStrategy(p)

    def to_dict(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "cos_phi": self.cos_phi}


def mub_realizable(s: BobStrategy) -> bool:
    E0, E1 = s.E
    return E0 * E0 + E1 * E1 <= 1.0 + TAU_MODEL


def find_pure_state(s: BobStrategy) -> PureState:
    if not mub_realizable(s):
        E0, E1 = s.E
        raise NotRealizable(f"E0^2 + E1^2 = {E0 * E0 + E1 * E1:.6g} > 1; no qubit state gives these statistics")
    E0, E1 = s.E
    E0 = min(1.0, max(-1.0, E0))
    r1 = math.sqrt((1 + E0) / 2)
    r2 = math.sqrt((1 - E0) / 2)
    denom = 2 * r1 * r2
    if denom <= 1e-15:
        cos_phi = 0.0
    else:
        cos_phi = min(1.0, max(-1.0, E1 / denom))
    return PureState(r1, r2, cos_phi)


# ---------------------------------------------------------------------------
# LHV-LHS models


@dataclass(frozen=True, eq=False)
class LhvLhsModel:
    """Weights over (Alice deterministic strategy, Bob pure state) pairs."""

    weights: tuple[float, ...]
    alice: tuple[tuple[int, int], ...]
    bob: tuple[PureState, ...]

    def __post_init__(self):
        if not (len(self.weights) == len(self.alice) == len(self.bob)) or not self.weights:
            raise ValidationError("model components have mismatched lengths")
        w = np.asarray(self.weights)
        if np.any(w < -TAU_MODEL) or abs(w.sum() - 1) > TAU_MODEL:
            raise ValidationError(f"model weights must be a probability vector (sum {float(w.sum())!r})")
        for st in self.bob:
            if abs(st.r1 ** 2 + st.r2 ** 2 - 1) > TAU_MODEL or abs(st.cos_phi) > 1 + 1e-12:
                raise ValidationError(f"invalid Bob pure state {st}")

    def box(self, mub: MubPair | None = None) -> Box:
        t = np.zeros((2, 2, 2, 2))
        for w, (al, be), st in zip(self.weights, self.alice, self.bob):
            bp = st.strategy(mub).probs
            for x in (0, 1):
                t[x, :, (al & x) ^ be, :] += w * bp
        return Box(t)

    def residual(self, target: Box, mub: MubPair | None = None) -> float:
        return self.box(mub).max_abs_diff(target)

    def to_dict(self) -> dict:
        return {
            "components": [
                {"weight": float(w), "alice": {"alpha": al, "beta": be}, "bob_state": st.to_dict()}
                for w, (al, be), st in zip(self.weights, self.alice, self.bob)
            ]
        }


@dataclass(frozen=True, eq=False)
class LhvCandidate:
    """Dimension-4 shared-randomness model with nondeterministic Bob strategies.

    ``model`` is set only when every Bob strategy is realizable by a qubit
    pure state under the MUB measurements.
    """

    weights: tuple[float, ...]
    alice: tuple[tuple[int, int], ...]
    bob: tuple[BobStrategy, ...]
    realizable: tuple[bool, ...]
    reconstruction_residual: float
    model: Optional[LhvLhsModel]


def _candidate(weights, bob_strats, target: Box) -> LhvCandidate:
    t = np.zeros((2, 2, 2, 2))
    for w, (al, be), s in zip(weights, ALICE_STRATEGIES, bob_strats):
        for x in (0, 1):
            t[x, :, (al & x) ^ be, :] += w * s.probs
    residual = float(np.max(np.abs(t - target.table)))
    realizable = tuple(mub_realizable(s) for s in bob_strats)
    model = None
    if all(realizable):
        model = LhvLhsModel(tuple(weights), ALICE_STRATEGIES, tuple(find_pure_state(s) for s in bob_strats))
    return LhvCandidate(tuple(weights), ALICE_STRATEGIES, tuple(bob_strats), realizable, residual, model)


def _mixed_bob(terms) -> BobStrategy:
    return BobStrategy(sum(w * BobStrategy.deterministic(g, e).probs for w, (g, e) in terms))


def bb84_bob_strategies(V: float) -> tuple[BobStrategy, ...]:
    """Bob's four responses in the dimension-4 model of the white-noise family (correlators (+-V, +-V))."""
    u = [(0.25, (0, 0)), (0.25, (1, 0)), (0.25, (0, 1)), (0.25, (1, 1))]

    def strat(*dets):
        return _mixed_bob([(2 * V / 4, d) for d in dets] + [((1 - 2 * V) * w, d) for w, d in u])

    return (
        strat((0, 0), (1, 0), (0, 1), (1, 0)),
        strat((0, 1), (1, 1), (0, 0), (1, 1)),
        strat((0, 0), (1, 1), (0, 0), (1, 0)),
        strat((0, 1), (1, 0), (0, 1), (1, 1)),
    )


def colored_bob_strategies(V: float) -> tuple[BobStrategy, ...]:
    """Bob's four responses in the dimension-4 model of the colored-noise family (correlators (+-1, +-V))."""
    half = (1 - V) / 2
    return (
        _mixed_bob([(V, (1, 0)), (half, (0, 0)), (half, (1, 0))]),
        _mixed_bob([(V, (1, 1)), (half, (0, 1)), (half, (1, 1))]),
        _mixed_bob([(V, (0, 0)), (half, (0, 0)), (half, (1, 0))]),
        _mixed_bob([(V, (0, 1)), (half, (0, 1)), (half, (1, 1))]),
    )


def bb84_lhv_model(V: float) -> LhvCandidate:
    V = _check_visibility(V, low_open=True)
    return _candidate((0.25,) * 4, bb84_bob_strategies(V), bb84_box(V))


def colored_bb84_lhv_model(V: float) -> LhvCandidate:
    V = _check_visibility(V)
    return _candidate((0.25,) * 4, colored_bob_strategies(V), colored_bb84_box(V))


@functools.lru_cache(maxsize=8)
def unsteerable_generators(grid_n: int) -> tuple[np.ndarray, tuple]:
    """16 x (4*grid_n) matrix of extremal unsteerable boxes and their (alice, theta_k) labels."""
    if grid_n < 8:
        raise ValidationError(f"grid_n must be >= 8, got {grid_n}")
    theta = 2 * np.pi * np.arange(grid_n) / grid_n
    E0, E1 = np.cos(theta), np.sin(theta)
    # Bob probabilities [k, y, b]
    bob = np.empty((grid_n, 2, 2))
    bob[:, 0, 0], bob[:, 0, 1] = (1 + E0) / 2, (1 - E0) / 2
    bob[:, 1, 0], bob[:, 1, 1] = (1 + E1) / 2, (1 - E1) / 2
    cols, labels = [], []
    for al, be in ALICE_STRATEGIES:
        t = np.zeros((grid_n, 2, 2, 2, 2))  # [k, x, y, a, b]
        for x in (0, 1):
            t[:, x, :, (al & x) ^ be, :] = bob
        cols.append(t.reshape(grid_n, 16))
        labels.extend(((al, be), float(th)) for th in theta)
    G = np.concatenate(cols).T.copy()
    G.setflags(write=False)
    return G, tuple(labels)


def lhv_lhs_search(box: Box, grid_n: int = DEFAULT_GRID) -> Optional[LhvLhsModel]:
    G, labels = unsteerable_generators(grid_n)
    weight, q = lp.conic_weight(box, G)
    if weight < 1 - TAU_GRID:
        return None
    keep = np.flatnonzero(q > 0)
    w = q[keep] / q[keep].sum()
    alice, states = [], []
    for k in keep:
        (al, be), th = labels[k]
        alice.append((al, be))
        states.append(find_pure_state(BobStrategy.from_correlators(math.cos(th), math.sin(th))))
    return LhvLhsModel(tuple(float(v) for v in w), tuple(alice), tuple(states))


# ---------------------------------------------------------------------------
# steering cost


@dataclass(frozen=True, eq=False)
class SteeringDecomposition:
    """box = p_s * steerable + (1 - p_s) * unsteerable."""

    p_s: float
    steerable: Box
    unsteerable: Box
    model: Optional[LhvLhsModel] = None
    source: str = "closed-form"
    diagnostics: dict = field(default_factory=dict)

    def reconstruct(self) -> Box:
        if self.p_s >= 1.0:
            return self.steerable
        if self.p_s <= 0.0:
            return self.unsteerable
        return mix([self.steerable, self.unsteerable], [self.p_s, 1 - self.p_s])

    def residual(self, target: Box) -> float:
        return self.reconstruct().max_abs_diff(target)

    def check(self, target: Box) -> None:
        res = self.residual(target)
        if res > TAU_MODEL:
            raise ValidationError(f"decomposition misses the target box by {res:.3g}")
        if steering_functional(self.unsteerable) > 2 + TAU_MODEL:
            raise ValidationError("unsteerable part violates the steering inequality")
        if self.model is not None and self.model.residual(self.unsteerable) > TAU_MODEL:
            raise ValidationError("model does not reproduce the unsteerable part")


def steering_cost_lower_bound(box: Box) -> float:
    """max{0, (S - 2)/(2 sqrt2 - 2)}: S is convex, <= 2 on unsteerable and <= 2 sqrt2 on steerable parts."""
    return max(0.0, (steering_functional(box) - 2.0) / (2 * SQRT2 - 2.0))


def steering_cost_numeric(box: Box, grid_n: int = DEFAULT_GRID) -> float:
    G, _ = unsteerable_generators(grid_n)
    weight, _ = lp.conic_weight(box, G)
    return min(1.0, max(0.0, 1.0 - weight))


def steering_cost_convergence(box: Box, grid_n: int = DEFAULT_GRID) -> dict:
    """Compare the estimate at ``grid_n`` and ``2*grid_n``; the finer grid can only lower it."""
    coarse = steering_cost_numeric(box, grid_n)
    fine = steering_cost_numeric(box, 2 * grid_n)
    return {"grid_n": grid_n, "cost": coarse, "cost_2n": fine, "difference": coarse - fine}


def numeric_decomposition(box: Box, grid_n: int = DEFAULT_GRID) -> SteeringDecomposition:
    """Decomposition read off the membership LP; the steerable part is the normalized residual."""
    G, labels = unsteerable_generators(grid_n)
    weight, q = lp.conic_weight(box, G)
    p_s = min(1.0, max(0.0, 1.0 - weight))
    if weight <= TAU_GRID:
        q = np.zeros_like(q)
        p_s = 1.0
    keep = np.flatnonzero(q > 0)
    us_table = (G[:, keep] @ q[keep]).reshape(2, 2, 2, 2)
    model = None
    if len(keep):
        unsteerable = Box(us_table / q[keep].sum())
        model = LhvLhsModel(
            tuple(float(v) for v in q[keep] / q[keep].sum()),
            tuple(labels[k][0] for k in keep),
            tuple(
                find_pure_state(BobStrategy.from_correlators(math.cos(labels[k][1]), math.sin(labels[k][1])))
                for k in keep
            ),
        )
    else:
        unsteerable = maximally_mixed_box()
    rest = box.table - us_table
    min_rest = float(rest.min())
    if p_s > TAU_GRID:
        rest = np.clip(rest, 0.0, None)
        steerable = Box(rest / rest.sum(axis=(2, 3), keepdims=True), tol=1e-6)
    else:
        steerable = extremal_steerable_box()
    diagnostics = {
        "grid_n": grid_n,
        "residual_min_entry": min_rest,
        "steerable_functional": steering_functional(steerable),
        "steerable_distance_to_extremal": steerable.max_abs_diff(extremal_steerable_box()),
    }
    dec = SteeringDecomposition(p_s, steerable, unsteerable, model, "grid-lp", diagnostics)
    dec.diagnostics["reconstruction_residual"] = dec.residual(box)
    return dec


def steering_cost_bb84(V: float) -> float:
    V = _check_visibility(V)
    return max(0.0, (SQRT2 * V - 1) / (SQRT2 - 1))


def steering_cost_colored(V: float) -> float:
    return _check_visibility(V)


def optimal_decomposition_bb84(V: float) -> SteeringDecomposition:
    V = _check_visibility(V)
    if V < BB84_THRESHOLD - 1e-12:
        raise OutOfRange(f"V={V!r} is below 1/sqrt2; the box is unsteerable")
    p_s = min(1.0, max(0.0, (SQRT2 * V - 1) / (SQRT2 - 1)))
    unsteerable = bb84_box(BB84_THRESHOLD)
    model = bb84_lhv_model(BB84_THRESHOLD).model
    dec = SteeringDecomposition(p_s, extremal_steerable_box(), unsteerable, model)
    dec.check(bb84_box(V))
    return dec


def optimal_decomposition_colored(V: float) -> SteeringDecomposition:
    V = _check_visibility(V)
    model = colored_bb84_lhv_model(0.0).model
    dec = SteeringDecomposition(V, extremal_steerable_box(), colored_noise_box(), model)
    dec.check(colored_bb84_box(V))
    return dec


@dataclass(frozen=True)
class ConvexRoofReport:
    family: str
    V: float
    left: float
    right: float
    relation: str
    holds: bool


def convex_roof_check(V: float, family: str) -> ConvexRoofReport:
    """Cost of the noisy family versus V * cost(singlet box) + (1 - V) * cost(noise box) = V."""
    V = _check_visibility(V)
    right = V * 1.0 + (1 - V) * 0.0
    if family == "white":
        left = steering_cost_bb84(V)
        return ConvexRoofReport(family, V, left, right, "<=", left <= right + TAU_MODEL)
    if family == "colored":
        left = steering_cost_colored(V)
        return ConvexRoofReport(family, V, left, right, "=", abs(left - right) <= TAU_MODEL)
    raise ValidationError(f"unknown family {family!r}; expected 'white' or 'colored'")


def family_box(family: str, V: float) -> Box:
    if family == "white":
        return bb84_box(V)
    if family == "colored":
        return colored_bb84_box(V)
    raise ValidationError(f"unknown family {family!r}; expected 'white' or 'colored'")


def family_cost(family: str, V: float) -> float:
    return steering_cost_bb84(V) if family == "white" else steering_cost_colored(V)


def detect_family(box: Box, tol: float = 1e-9) -> Optional[tuple[str, float]]:
    """Match against the white/colored families with V fitted by least squares on the correlators."""
    c: Correlators = correlators(box)
    E = c.E
    fits = {
        "white": (E[0, 0] - E[1, 1]) / 2,
        "colored": -E[1, 1],
    }
    for fam, V in fits.items():
        if not -tol <= V <= 1 + tol:
            continue
        V = min(1.0, max(0.0, float(V)))
        if family_box(fam, V).max_abs_diff(box) < tol:
            return fam, V
    return None
