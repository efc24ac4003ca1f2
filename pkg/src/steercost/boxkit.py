"""Two-input/two-output bipartite boxes p(ab|xy).

A :class:`Box` stores its table as a read-only array indexed ``[x, y, a, b]``,
so ``table.ravel()`` is exactly the flat serialization order
``idx = ((x*2 + y)*2 + a)*2 + b``.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import BadWeights, NegativeEntry, NotNormalized, SignalingDetected, ValidationError

TAU_BOX = 1e-9

BITS = (0, 1)


def flat_index(a: int, b: int, x: int, y: int) -> int:
    return ((x * 2 + y) * 2 + a) * 2 + b


def _sign(*bits: int) -> int:
    return -1 if sum(bits) % 2 else 1


class Box:
    """Validated nonsignaling box. Immutable after construction."""

    __slots__ = ("_table",)

    def __init__(self, entries, tol: float = TAU_BOX):
        table = np.array(entries, dtype=float).reshape(2, 2, 2, 2)
        _validate(table, tol)
        table.setflags(write=False)
        self._table = table

    @property
    def table(self) -> np.ndarray:
        """Read-only view indexed ``[x, y, a, b]``."""
        return self._table

    def prob(self, a: int, b: int, x: int, y: int) -> float:
        return float(self._table[x, y, a, b])

    def flat(self) -> list[float]:
        return [float(v) for v in self._table.ravel()]

    def alice_marginal(self) -> np.ndarray:
        """p(a|x) indexed ``[x, a]`` (read at y = 0)."""
        return self._table[:, 0].sum(axis=2)

    def bob_marginal(self) -> np.ndarray:
        """p(b|y) indexed ``[y, b]`` (read at x = 0)."""
        return self._table[0].sum(axis=1)

    def allclose(self, other: "Box", atol: float = TAU_BOX) -> bool:
        return bool(np.allclose(self._table, other._table, rtol=0.0, atol=atol))

    def max_abs_diff(self, other: "Box") -> float:
        return float(np.max(np.abs(self._table - other._table)))

    def __repr__(self) -> str:
        return f"Box({np.array2string(self._table.ravel(), precision=4)})"


def _validate(table: np.ndarray, tol: float) -> None:
    if not np.all(np.isfinite(table)):
        raise ValidationError("box entries must be finite")
    neg = np.argwhere(table < -tol)
    if len(neg):
        x, y, a, b = (int(v) for v in neg[0])
        raise NegativeEntry(
            f"p({a}{b}|{x}{y}) = {table[x, y, a, b]:.3g} < 0 (flat index {flat_index(a, b, x, y)})"
        )
    sums = table.sum(axis=(2, 3))
    for x, y in itertools.product(BITS, BITS):
        if abs(sums[x, y] - 1.0) > tol:
            raise NotNormalized(f"sum_ab p(ab|{x}{y}) = {float(sums[x, y])!r}, expected 1")
    alice = table.sum(axis=3)  # [x, y, a]
    for x, a in itertools.product(BITS, BITS):
        if abs(alice[x, 0, a] - alice[x, 1, a]) > tol:
            raise SignalingDetected(
                f"Bob -> Alice: sum_b p({a}b|{x}y) differs between y=0 ({float(alice[x, 0, a])!r}) "
                f"and y=1 ({float(alice[x, 1, a])!r})"
            )
    bob = table.sum(axis=2)  # [x, y, b]
    for y, b in itertools.product(BITS, BITS):
        if abs(bob[0, y, b] - bob[1, y, b]) > tol:
            raise SignalingDetected(
                f"Alice -> Bob: sum_a p(a{b}|x{y}) differs between x=0 ({float(bob[0, y, b])!r}) "
                f"and x=1 ({float(bob[1, y, b])!r})"
            )


def make_box(entries: Sequence[float]) -> Box:
    """Build a box from 16 numbers in flat index order."""
    entries = list(entries)
    if len(entries) != 16:
        raise ValidationError(f"expected 16 entries, got {len(entries)}")
    return Box(entries)


def _from_rule(rule) -> Box:
    t = np.zeros((2, 2, 2, 2))
    for x, y, a, b in itertools.product(BITS, repeat=4):
        t[x, y, a, b] = rule(a, b, x, y)
    return Box(t)


def pr_box(alpha: int, beta: int, gamma: int) -> Box:
    return _from_rule(
        lambda a, b, x, y: 0.5 if (a ^ b) == ((x & y) ^ (alpha & x) ^ (beta & y) ^ gamma) else 0.0
    )


def local_det_box(alpha: int, beta: int, gamma: int, epsilon: int) -> Box:
    """Alice outputs a = alpha*x + beta, Bob outputs b = gamma*y + epsilon (mod 2)."""
    return _from_rule(
        lambda a, b, x, y: float(a == ((alpha & x) ^ beta) and b == ((gamma & y) ^ epsilon))
    )


def maximally_mixed_box() -> Box:
    return Box(np.full(16, 0.25))


def all_pr_boxes() -> list[Box]:
    return [pr_box(*bits) for bits in itertools.product(BITS, repeat=3)]


def all_local_det_boxes() -> list[Box]:
    """The 16 deterministic vertices, ordered by (alpha, beta, gamma, epsilon) as a binary number."""
    return [local_det_box(*bits) for bits in itertools.product(BITS, repeat=4)]


def mix(boxes: Sequence[Box], weights: Sequence[float]) -> Box:
    if len(boxes) == 0 or len(boxes) != len(weights):
        raise BadWeights(f"need equal, nonzero numbers of boxes and weights ({len(boxes)} vs {len(weights)})")
    w = np.asarray(weights, dtype=float)
    if np.any(w < -TAU_BOX):
        raise BadWeights(f"negative weight {float(w.min())!r}")
    if abs(w.sum() - 1.0) > TAU_BOX:
        raise BadWeights(f"weights sum to {float(w.sum())!r}, expected 1")
    table = np.tensordot(w, np.stack([bx.table for bx in boxes]), axes=1)
    return Box(table)


@dataclass(frozen=True)
class Correlators:
    E: np.ndarray   # [x, y]
    mA: np.ndarray  # [x]
    mB: np.ndarray  # [y]

    def ordered(self) -> tuple[float, float, float, float]:
        """E in (x, y) order 00, 01, 10, 11."""
        return tuple(float(v) for v in self.E.ravel())


_PAR_AB = np.array([[1.0, -1.0], [-1.0, 1.0]])  # (-1)^(a xor b) indexed [a, b]
_PAR = np.array([1.0, -1.0])


def correlators(box: Box) -> Correlators:
    t = box.table
    E = np.einsum("xyab,ab->xy", t, _PAR_AB)
    mA = np.einsum("xab,a->x", t[:, 0], _PAR)
    mB = np.einsum("yab,b->y", t[0], _PAR)
    return Correlators(E, mA, mB)


def box_from_correlators(E, mA=(0.0, 0.0), mB=(0.0, 0.0)) -> Box:
    """Inverse of :func:`correlators`: p = (1 + (-1)^a mA_x + (-1)^b mB_y + (-1)^(a+b) E_xy)/4."""
    E = np.asarray(E, dtype=float).reshape(2, 2)
    mA = np.asarray(mA, dtype=float)
    mB = np.asarray(mB, dtype=float)
    t = (
        1.0
        + _PAR[None, None, :, None] * mA[:, None, None, None]
        + _PAR[None, None, None, :] * mB[None, :, None, None]
        + _PAR_AB[None, None] * E[:, :, None, None]
    ) / 4.0
    return Box(t)


def chsh_value(box: Box, alpha: int, beta: int, gamma: int) -> float:
    E = correlators(box).E
    return float(
        _sign(gamma) * E[0, 0]
        + _sign(beta, gamma) * E[0, 1]
        + _sign(alpha, gamma) * E[1, 0]
        + _sign(alpha, beta, gamma, 1) * E[1, 1]
    )


def chsh_values(box: Box) -> dict[str, float]:
    """All 8 CHSH forms keyed ``"abg"`` (e.g. ``"000"``)."""
    return {
        f"{al}{be}{ga}": chsh_value(box, al, be, ga)
        for al, be, ga in itertools.product(BITS, repeat=3)
    }


def is_local(box: Box) -> bool:
    return max(chsh_values(box).values()) <= 2.0 + TAU_BOX


def box_to_json(box: Box) -> str:
    return json.dumps({"p": box.flat()})


def box_from_json(text: str) -> Box:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or "p" not in data:
        raise ValidationError('box JSON must be an object with key "p"')
    p = data["p"]
    if not isinstance(p, list) or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in p):
        raise ValidationError('"p" must be a list of 16 numbers')
    return make_box(p)


def read_box(path: str | Path) -> Box:
    return box_from_json(Path(path).read_text())


def write_box(box: Box, path: str | Path) -> None:
    Path(path).write_text(box_to_json(box) + "\n")
