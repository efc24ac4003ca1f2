"""Deterministic one-way LOCC acting on assemblages.

A channel is a list of :class:`Subchannel` objects. Each has a Kraus operator
on Bob's qubit and a classical wiring on Alice's side; the wiring may depend
on the subchannel label because the Kraus outcome is communicated to Alice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .boxkit import Box
from .errors import DimensionMismatch, StochasticityViolation, UnknownPreset, ZeroTransmission
from .quantum import (
    I2,
    SX,
    SZ,
    TAU_Q,
    Assemblage,
    MeasurementSet,
    _box_table,
    dagger,
    min_eigenvalue,
    mub_pair_standard,
    projector,
)
from .steering import DEFAULT_GRID, steering_cost_numeric

MONOTONICITY_TOL = 5e-3


@dataclass(frozen=True, eq=False)
class Wiring:
    """pre[x', x] = p(x|x'), post[x', a, x, a'] = p(a'|x', a, x)."""

    pre: np.ndarray
    post: np.ndarray

    def __post_init__(self):
        pre = np.asarray(self.pre, dtype=float)
        post = np.asarray(self.post, dtype=float)
        if pre.shape != (2, 2) or post.shape != (2, 2, 2, 2):
            raise StochasticityViolation(f"wiring tables have shapes {pre.shape}, {post.shape}")
        if np.any(pre < -TAU_Q) or np.any(post < -TAU_Q):
            raise StochasticityViolation("wiring has negative probabilities")
        if np.any(np.abs(pre.sum(axis=1) - 1) > TAU_Q):
            raise StochasticityViolation("p(x|x') does not sum to 1 over x")
        if np.any(np.abs(post.sum(axis=3) - 1) > TAU_Q):
            raise StochasticityViolation("p(a'|x',a,x) does not sum to 1 over a'")
        object.__setattr__(self, "pre", pre)
        object.__setattr__(self, "post", post)

    @classmethod
    def from_functions(cls, input_map: Callable[[int], int], output_map: Callable[[int, int, int], int]):
        """Deterministic wiring x = input_map(x'), a' = output_map(x', a, x)."""
        pre = np.zeros((2, 2))
        post = np.zeros((2, 2, 2, 2))
        for xp in (0, 1):
            pre[xp, input_map(xp)] = 1.0
            for a in (0, 1):
                for x in (0, 1):
                    post[xp, a, x, output_map(xp, a, x)] = 1.0
        return cls(pre, post)


def identity_wiring() -> Wiring:
    return Wiring.from_functions(lambda xp: xp, lambda xp, a, x: a)


def swap_inputs_wiring() -> Wiring:
    return Wiring.from_functions(lambda xp: xp ^ 1, lambda xp, a, x: a)


def coarse_grain_wiring() -> Wiring:
    return Wiring.from_functions(lambda xp: xp, lambda xp, a, x: 0)


def flip_outputs_wiring() -> Wiring:
    return Wiring.from_functions(lambda xp: xp, lambda xp, a, x: a ^ 1)


def output_xor_input_wiring() -> Wiring:
    return Wiring.from_functions(lambda xp: xp, lambda xp, a, x: a ^ xp)


def fixed_input_wiring(x0: int = 0) -> Wiring:
    return Wiring.from_functions(lambda xp: x0, lambda xp, a, x: a)


@dataclass(frozen=True, eq=False)
class Subchannel:
    kraus: np.ndarray
    wiring: Wiring = field(default_factory=identity_wiring)
    label: str = ""

    def __post_init__(self):
        K = np.asarray(self.kraus, dtype=complex)
        if K.shape != (2, 2):
            raise DimensionMismatch(f"Kraus operator must be 2 x 2, got {K.shape}")
        object.__setattr__(self, "kraus", K)


def check_channel(channel: Sequence[Subchannel]) -> bool:
    """True if sum K^dag K equals the identity; raises if it exceeds it."""
    total = sum(dagger(s.kraus) @ s.kraus for s in channel)
    if min_eigenvalue(I2 - total) < -TAU_Q:
        raise StochasticityViolation("sum of K^dag K exceeds the identity")
    return bool(np.max(np.abs(total - I2)) <= TAU_Q)


def wire(w: Wiring, sigma: np.ndarray) -> np.ndarray:
    """sigma'[a', x'] = sum_{a,x} p(x|x') p(a'|x',a,x) sigma[a, x] on raw operator arrays."""
    return np.einsum("px,paxq,axij->qpij", w.pre, w.post, sigma)


def apply_wiring_assemblage(w: Wiring, asm: Assemblage) -> Assemblage:
    return Assemblage(wire(w, asm.sigma))


def apply_subchannel(s: Subchannel, asm: Assemblage) -> tuple[np.ndarray, float]:
    """Unnormalized output K W(sigma) K^dag and its transmission probability T."""
    wired = wire(s.wiring, asm.sigma)
    K = s.kraus
    out = np.einsum("ij,axjk,lk->axil", K, wired, K.conj())
    T = float(np.trace(out[:, 0].sum(axis=0)).real)
    return out, min(1.0, max(0.0, T))


def normalized_box_after(s: Subchannel, asm: Assemblage, bob: MeasurementSet) -> Box:
    """Box of the assemblage K W(sigma) K^dag / T.

    Alice's marginal is Tr[K sigma'_a'|x' K^dag]/T, i.e. conditioned on the
    subchannel having fired; for unitary or identity Kraus operators this is
    the wired marginal sum p(x|x') p(a'|x',a,x) p(a|x).
    """
    out, T = apply_subchannel(s, asm)
    if T <= TAU_Q:
        raise ZeroTransmission(f"subchannel {s.label!r} transmits with probability {T:.3g}")
    return Box(_box_table(out / T, bob))


@dataclass(frozen=True)
class MonotonicityReport:
    before: float
    terms: tuple  # (label, T, cost after)
    average_after: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "before": self.before,
            "after": [{"label": lab, "T": T, "cost": c} for lab, T, c in self.terms],
            "average_after": self.average_after,
            "pass": self.passed,
        }


def monotonicity_harness(
    asm: Assemblage,
    channel: Sequence[Subchannel],
    bob: MeasurementSet,
    grid_n: int = DEFAULT_GRID,
) -> MonotonicityReport:
    check_channel(channel)
    before = steering_cost_numeric(Box(_box_table(asm.sigma, bob)), grid_n)
    terms = []
    for s in channel:
        _, T = apply_subchannel(s, asm)
        cost = steering_cost_numeric(normalized_box_after(s, asm, bob), grid_n) if T > TAU_Q else 0.0
        terms.append((s.label, T, cost))
    avg = sum(T * c for _, T, c in terms)
    return MonotonicityReport(before, tuple(terms), avg, avg <= before + MONOTONICITY_TOL)


# ---------------------------------------------------------------------------
# channel library


def _f_projectors():
    f = mub_pair_standard().f
    return projector(f[0]), projector(f[1])


def _g_projectors():
    g = mub_pair_standard().g
    return projector(g[0]), projector(g[1])


def _identity():
    return [Subchannel(I2, identity_wiring(), "id")]


def _swap_inputs():
    return [Subchannel(I2, swap_inputs_wiring(), "swap")]


def _coarse_grain():
    return [Subchannel(I2, coarse_grain_wiring(), "coarse")]


def _flip_outputs():
    return [Subchannel(I2, flip_outputs_wiring(), "flip")]


def _output_xor_input():
    return [Subchannel(I2, output_xor_input_wiring(), "xor")]


def _fix_input():
    return [Subchannel(I2, fixed_input_wiring(0), "fix0")]


def _dephase_b0():
    P1, P2 = _f_projectors()
    return [Subchannel(P1, identity_wiring(), "f1"), Subchannel(P2, identity_wiring(), "f2")]


def _dephase_b1():
    Q1, Q2 = _g_projectors()
    return [Subchannel(Q1, identity_wiring(), "g1"), Subchannel(Q2, identity_wiring(), "g2")]


def _project_f1():
    P1, _ = _f_projectors()
    return [Subchannel(P1, identity_wiring(), "f1")]


def _dephase_b0_conditional():
    P1, P2 = _f_projectors()
    return [Subchannel(P1, identity_wiring(), "f1"), Subchannel(P2, swap_inputs_wiring(), "f2-swap")]


def _weak_dephase(p: float = 0.3):
    return [
        Subchannel(np.sqrt(1 - p) * I2, identity_wiring(), "keep"),
        Subchannel(np.sqrt(p) * SZ, flip_outputs_wiring(), "z-flip"),
    ]


def _amplitude_damping(gamma: float = 0.25):
    K0 = np.array([[1, 0], [0, np.sqrt(1 - gamma)]], dtype=complex)
    K1 = np.array([[0, np.sqrt(gamma)], [0, 0]], dtype=complex)
    return [Subchannel(K0, identity_wiring(), "no-decay"), Subchannel(K1, identity_wiring(), "decay")]


def _hadamard():
    return [Subchannel((SX + SZ) / np.sqrt(2), identity_wiring(), "H")]


PRESETS: dict[str, Callable[[], list[Subchannel]]] = {
    "identity": _identity,
    "swap-inputs": _swap_inputs,
    "coarse-grain": _coarse_grain,
    "dephase-B0": _dephase_b0,
    "project-f1": _project_f1,
    "flip-outputs": _flip_outputs,
    "output-xor-input": _output_xor_input,
    "fix-input": _fix_input,
    "dephase-B1": _dephase_b1,
    "dephase-B0-conditional": _dephase_b0_conditional,
    "weak-dephase": _weak_dephase,
    "amplitude-damping": _amplitude_damping,
    "hadamard": _hadamard,
}


def preset(name: str) -> list[Subchannel]:
    try:
        return PRESETS[name]()
    except KeyError:
        raise UnknownPreset(f"unknown channel preset {name!r}; choose from {', '.join(PRESETS)}") from None
