"""Qubit-pair linear algebra: states, projective measurements, assemblages, boxes.

Matrices are plain complex numpy arrays. Two-qubit operators use the tensor
order A (x) B, so Alice's factor is the slow index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .boxkit import Box
from .errors import (
    DimensionMismatch,
    InvalidAssemblage,
    InvalidMeasurement,
    InvalidState,
    NotMutuallyUnbiased,
    OutOfRange,
)

TAU_Q = 1e-10

I2 = np.eye(2, dtype=complex)
I4 = np.eye(4, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
SINGLET = np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)  # (|01> - |10>)/sqrt2


def _square(m: np.ndarray, dims: Sequence[int], what: str) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in dims:
        raise DimensionMismatch(f"{what}: expected square matrix of size in {tuple(dims)}, got {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DimensionMismatch(f"{what}: non-finite entries")
    return m


def projector(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def dagger(m: np.ndarray) -> np.ndarray:
    return m.conj().T


def is_hermitian(m: np.ndarray, tol: float = TAU_Q) -> bool:
    return bool(np.max(np.abs(m - dagger(m))) <= tol)


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + dagger(m)) / 2)[0])


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a = _square(a, (2,), "tensor")
    b = _square(b, (2,), "tensor")
    return np.kron(a, b)


def partial_trace_A(m: np.ndarray) -> np.ndarray:
    m = _square(m, (4,), "partial_trace_A").reshape(2, 2, 2, 2)
    return np.einsum("ijik->jk", m)


def partial_trace_B(m: np.ndarray) -> np.ndarray:
    m = _square(m, (4,), "partial_trace_B").reshape(2, 2, 2, 2)
    return np.einsum("ijkj->ik", m)


def partial_transpose_B(m: np.ndarray) -> np.ndarray:
    m = _square(m, (4,), "partial_transpose_B").reshape(2, 2, 2, 2)
    return m.transpose(0, 3, 2, 1).reshape(4, 4)


@dataclass(frozen=True, eq=False)
class State:
    rho: np.ndarray

    def __post_init__(self):
        rho = _square(self.rho, (2, 4), "State")
        if not is_hermitian(rho):
            raise InvalidState("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1) > TAU_Q:
            raise InvalidState(f"trace {float(tr)!r} != 1")
        lam = min_eigenvalue(rho)
        if lam < -TAU_Q:
            raise InvalidState(f"negative eigenvalue {lam!r}")
        rho = rho.copy()
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    def eigh(self):
        return np.linalg.eigh(self.rho)


def _check_visibility(V: float) -> float:
    V = float(V)
    if not 0.0 <= V <= 1.0:
        raise OutOfRange(f"visibility V={V!r} outside [0, 1]")
    return V


def werner_state(V: float) -> State:
    V = _check_visibility(V)
    return State(V * projector(SINGLET) + (1 - V) / 4 * I4)


def colored_noise_state(V: float) -> State:
    V = _check_visibility(V)
    noise = (projector(np.kron(KET0, KET1)) + projector(np.kron(KET1, KET0))) / 2
    return State(V * projector(SINGLET) + (1 - V) * noise)


def ppt_entangled(state: State) -> bool:
    """Peres-Horodecki test; necessary and sufficient for two qubits."""
    if state.dim != 4:
        raise DimensionMismatch("PPT test needs a two-qubit state")
    return min_eigenvalue(partial_transpose_B(state.rho)) < -TAU_Q


@dataclass(frozen=True, eq=False)
class MeasurementSet:
    """``effects[s][o]`` is the effect for setting ``s`` and outcome ``o``."""

    effects: tuple
    projective: bool = True

    def __post_init__(self):
        eff = tuple(tuple(_square(e, (2,), "effect") for e in setting) for setting in self.effects)
        for s, setting in enumerate(eff):
            total = np.zeros((2, 2), dtype=complex)
            for o, e in enumerate(setting):
                if not is_hermitian(e) or min_eigenvalue(e) < -TAU_Q:
                    raise InvalidMeasurement(f"effect ({s},{o}) is not a positive Hermitian operator")
                if self.projective and np.max(np.abs(e @ e - e)) > TAU_Q:
                    raise InvalidMeasurement(f"effect ({s},{o}) is not a projector")
                total = total + e
            if np.max(np.abs(total - I2)) > TAU_Q:
                raise InvalidMeasurement(f"effects of setting {s} do not sum to identity")
        object.__setattr__(self, "effects", eff)

    def __getitem__(self, s):
        return self.effects[s]

    @property
    def n_settings(self) -> int:
        return len(self.effects)


@dataclass(frozen=True, eq=False)
class MubPair:
    f: tuple  # basis B0 as (|f1>, |f2>)
    g: tuple  # basis B1 as (|g1>, |g2>)

    def __post_init__(self):
        f = tuple(np.asarray(v, dtype=complex) for v in self.f)
        g = tuple(np.asarray(v, dtype=complex) for v in self.g)
        for name, basis in (("B0", f), ("B1", g)):
            gram = np.array([[np.vdot(u, v) for v in basis] for u in basis])
            if len(basis) != 2 or np.max(np.abs(gram - I2)) > TAU_Q:
                raise NotMutuallyUnbiased(f"{name} is not an orthonormal qubit basis")
        for i, fi in enumerate(f):
            for j, gj in enumerate(g):
                ov = abs(np.vdot(fi, gj)) ** 2
                if abs(ov - 0.5) > TAU_Q:
                    raise NotMutuallyUnbiased(f"|<f{i + 1}|g{j + 1}>|^2 = {ov:.6g}, expected 1/2")
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)

    def measurements(self) -> MeasurementSet:
        """Bob's setting y=0 measures B0, y=1 measures B1; outcome b picks the (b+1)-th vector."""
        return MeasurementSet(tuple(tuple(projector(v) for v in basis) for basis in (self.f, self.g)))

    def vector(self, r1: float, r2: float, cos_phi: float) -> np.ndarray:
        """``r1|f1> + e^{i phi} r2|f2>`` with the phase measured against |g1> = (|f1> + |f2>)/sqrt2."""
        # the B1 overlap depends on the phase of <f2|g1>/<f1|g1>; absorb it into phi
        ref = np.vdot(self.f[1], self.g[0]) / np.vdot(self.f[0], self.g[0])
        phi = np.arccos(np.clip(cos_phi, -1.0, 1.0))
        return r1 * self.f[0] + np.exp(1j * phi) * r2 * self.f[1] * (ref / abs(ref))


def mub_pair_standard() -> MubPair:
    """B0 = sigma_z eigenbasis, B1 = sigma_x eigenbasis."""
    s = 1 / np.sqrt(2)
    return MubPair((KET0, KET1), (s * (KET0 + KET1), s * (KET0 - KET1)))


def mub_pair_rotated(angle: float) -> MubPair:
    if not np.isfinite(angle):
        raise OutOfRange("rotation angle must be finite")
    axis = (SX + SY + SZ) / np.sqrt(3)
    U = np.cos(angle / 2) * I2 - 1j * np.sin(angle / 2) * axis
    std = mub_pair_standard()
    return MubPair(tuple(U @ v for v in std.f), tuple(U @ v for v in std.g))


def bb84_alice_measurements() -> MeasurementSet:
    """x=0: (1 - s sigma_z)/2, x=1: (1 + s sigma_x)/2 with s = (-1)^a."""
    return MeasurementSet(
        (
            ((I2 - SZ) / 2, (I2 + SZ) / 2),
            ((I2 + SX) / 2, (I2 - SX) / 2),
        )
    )


@dataclass(frozen=True, eq=False)
class Assemblage:
    """Unnormalized conditional states ``sigma[a, x]`` (array shape (2, 2, 2, 2))."""

    sigma: np.ndarray

    def __post_init__(self):
        sig = np.asarray(self.sigma, dtype=complex)
        if sig.shape != (2, 2, 2, 2):
            raise DimensionMismatch(f"assemblage must have shape (2, 2, 2, 2), got {sig.shape}")
        for a in range(2):
            for x in range(2):
                s = sig[a, x]
                if not is_hermitian(s) or min_eigenvalue(s) < -TAU_Q:
                    raise InvalidAssemblage(f"sigma_{a}|{x} is not positive semidefinite")
        red0, red1 = sig[:, 0].sum(axis=0), sig[:, 1].sum(axis=0)
        if np.max(np.abs(red0 - red1)) > TAU_Q:
            raise InvalidAssemblage("sum_a sigma_a|x depends on x")
        tr = np.trace(red0).real
        if abs(tr - 1) > TAU_Q:
            raise InvalidAssemblage(f"total trace {float(tr)!r} != 1")
        sig = sig.copy()
        sig.setflags(write=False)
        object.__setattr__(self, "sigma", sig)

    def reduced_state(self) -> np.ndarray:
        return self.sigma[:, 0].sum(axis=0)

    def alice_marginal(self) -> np.ndarray:
        """p(a|x) indexed ``[x, a]``."""
        return np.einsum("axii->xa", self.sigma).real


def assemblage_from(state: State, alice: MeasurementSet) -> Assemblage:
    if state.dim != 4:
        raise DimensionMismatch("assemblage_from needs a 2 x 2 state")
    if alice.n_settings != 2 or any(len(s) != 2 for s in alice.effects):
        raise DimensionMismatch("Alice needs two settings with two outcomes each")
    sigma = np.empty((2, 2, 2, 2), dtype=complex)
    for x in range(2):
        for a in range(2):
            sigma[a, x] = partial_trace_A(np.kron(alice[x][a], I2) @ state.rho)
    return Assemblage(sigma)


def _box_table(sigma: np.ndarray, bob: MeasurementSet) -> np.ndarray:
    if bob.n_settings != 2 or any(len(s) != 2 for s in bob.effects):
        raise DimensionMismatch("Bob needs two settings with two outcomes each")
    t = np.empty((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    t[x, y, a, b] = np.trace(bob[y][b] @ sigma[a, x]).real
    return t


def box_from(asm: Assemblage, bob: MeasurementSet) -> Box:
    """p(ab|xy) = Tr[Pi_b|y sigma_a|x]."""
    return Box(_box_table(asm.sigma, bob))


def joint_box(state: State, alice: MeasurementSet, bob: MeasurementSet) -> Box:
    """p(ab|xy) = Tr[(M_a|x (x) Pi_b|y) rho], computed without forming the assemblage."""
    t = np.empty((2, 2, 2, 2))
    for x in range(2):
        for y in range(2):
            for a in range(2):
                for b in range(2):
                    t[x, y, a, b] = np.trace(np.kron(alice[x][a], bob[y][b]) @ state.rho).real
    return Box(t)
