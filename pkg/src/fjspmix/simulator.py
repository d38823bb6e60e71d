"""Sparse statevector simulation of mixer circuits.

States are dictionaries from basis keys (integers, qubit 0 is the
least significant bit) to complex amplitudes. Every gate rebuilds the
dictionary; amplitudes below the pruning threshold are dropped and the
discarded squared mass is tracked. Simulation aborts when the total
discarded mass or the norm drift exceeds tight bounds, so results are
exact to numerical precision or not returned at all.

A dense reference backend recomputes small circuits over the full
2^n vector for cross-checking the sparse path.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .circuit import (
    Circuit,
    ControlledFractionalPermutation,
    DiagonalPhase,
    Gate,
    MultiControlledX,
    PauliX,
    RegisterLayout,
)

PRUNE_EPS = 1e-12
MASS_EPS = 1e-10
NORM_EPS = 1e-10


class SimulationPrecisionError(RuntimeError):
    """Pruned mass or norm drift exceeded the exactness budget."""


@dataclass
class SparseState:
    num_qubits: int
    amplitudes: dict[int, complex] = field(default_factory=dict)
    pruned_mass: float = 0.0

    def norm_squared(self) -> float:
        return sum((a * a.conjugate()).real for a in self.amplitudes.values())

    def copy(self) -> "SparseState":
        return SparseState(self.num_qubits, dict(self.amplitudes), self.pruned_mass)


def init_basis(
    register: int | RegisterLayout, ones: Iterable[int] = ()
) -> SparseState:
    """Computational basis state.

    With an integer qubit count, ``ones`` lists the qubit indices to
    set. With a RegisterLayout, ``ones`` is the main-register bit
    vector in vertex order and every auxiliary qubit starts at zero.
    """
    if isinstance(register, RegisterLayout):
        bits = tuple(ones)
        if len(bits) != register.n:
            raise ValueError(
                f"expected {register.n} main bits, got {len(bits)}"
            )
        key = 0
        for j, bit in enumerate(bits, start=1):
            if bit not in (0, 1):
                raise ValueError("main bits must be 0 or 1")
            if bit:
                key |= 1 << register.main(j)
        return SparseState(register.total_qubits, {key: 1.0 + 0.0j})
    key = 0
    for q in ones:
        if not 0 <= q < register:
            raise ValueError(f"qubit {q} out of range for {register} qubits")
        key |= 1 << q
    return SparseState(register, {key: 1.0 + 0.0j})


def _permuted_key(gate: ControlledFractionalPermutation, key: int) -> int:
    """Main-register image of a basis key under the gate's permutation."""
    moved = gate.permutation.moved_points()
    if len(moved) == 2:
        u, v = moved
        qu, qv = gate.main[u - 1], gate.main[v - 1]
        if ((key >> qu) & 1) != ((key >> qv) & 1):
            return key ^ ((1 << qu) | (1 << qv))
        return key
    out = key
    for j in moved:
        out &= ~(1 << gate.main[j - 1])
    for j in moved:
        if (key >> (gate.main[j - 1])) & 1:
            out |= 1 << gate.main[gate.permutation.image(j) - 1]
    return out


def _prune(state: SparseState, new: dict[int, complex]) -> None:
    dropped = 0.0
    for key in [k for k, a in new.items() if abs(a) < PRUNE_EPS]:
        amp = new.pop(key)
        dropped += (amp * amp.conjugate()).real
    state.pruned_mass += dropped
    if state.pruned_mass > MASS_EPS:
        raise SimulationPrecisionError(
            f"discarded squared mass {state.pruned_mass:.3e} exceeds {MASS_EPS:.0e}"
        )
    state.amplitudes = new


def apply_gate(state: SparseState, gate: Gate) -> SparseState:
    """Apply one gate in place and return the state."""
    amps = state.amplitudes
    if isinstance(gate, PauliX):
        mask = 1 << gate.qubit
        _prune(state, {k ^ mask: a for k, a in amps.items()})
        return state
    if isinstance(gate, MultiControlledX):
        mask1 = 0
        mask0 = 0
        for q, v in gate.controls:
            if v:
                mask1 |= 1 << q
            else:
                mask0 |= 1 << q
        tmask = 1 << gate.target
        new: dict[int, complex] = {}
        for k, a in amps.items():
            nk = k ^ tmask if (k & mask1) == mask1 and (k & mask0) == 0 else k
            new[nk] = new.get(nk, 0.0) + a
        _prune(state, new)
        return state
    if isinstance(gate, ControlledFractionalPermutation):
        mask1 = 0
        mask0 = 0
        for q, v in gate.controls:
            if v:
                mask1 |= 1 << q
            else:
                mask0 |= 1 << q
        fmask = 1 << gate.aux_flip
        cosb = math.cos(gate.angle)
        move = -1j * math.sin(gate.angle)
        new = {}

        def add(k: int, a: complex) -> None:
            new[k] = new.get(k, 0.0) + a

        for k, a in amps.items():
            if (k & mask1) == mask1 and (k & mask0) == 0:
                pk = _permuted_key(gate, k)
                if gate.skip_fixed_points and pk == k:
                    add(k, a)
                else:
                    add(k, cosb * a)
                    add(pk ^ fmask, move * a)
            else:
                add(k, a)
        _prune(state, new)
        return state
    if isinstance(gate, DiagonalPhase):
        new = {}
        for k, a in amps.items():
            bits = tuple((k >> q) & 1 for q in gate.qubits)
            new[k] = a * cmath.exp(-1j * gate.angle * gate.cost(bits))
        _prune(state, new)
        return state
    raise TypeError(f"unknown gate type {type(gate).__name__}")


def apply_circuit(
    state: SparseState, circuit: Circuit | Iterable[Gate], check_norm: bool = True
) -> SparseState:
    """Apply every gate, verifying norm preservation after each one."""
    gates = circuit.gates if isinstance(circuit, Circuit) else circuit
    for gate in gates:
        apply_gate(state, gate)
        if check_norm:
            drift = abs(state.norm_squared() + state.pruned_mass - 1.0)
            if drift > NORM_EPS:
                raise SimulationPrecisionError(
                    f"norm drift {drift:.3e} after {type(gate).__name__}"
                    f" exceeds {NORM_EPS:.0e}"
                )
    return state


def main_marginal(
    state: SparseState, qubits: Sequence[int]
) -> dict[tuple[int, ...], float]:
    """Measurement distribution over the given qubits, in the given order."""
    out: dict[tuple[int, ...], float] = {}
    for k, a in state.amplitudes.items():
        bits = tuple((k >> q) & 1 for q in qubits)
        out[bits] = out.get(bits, 0.0) + (a * a.conjugate()).real
    return out


def register_mass(state: SparseState, qubits: Sequence[int]) -> float:
    """Squared mass of amplitudes that set at least one of the qubits."""
    mask = 0
    for q in qubits:
        mask |= 1 << q
    return sum(
        (a * a.conjugate()).real
        for k, a in state.amplitudes.items()
        if k & mask
    )


def register_is_zero(
    state: SparseState, qubits: Sequence[int], tol: float = MASS_EPS
) -> bool:
    """True when the mass outside the all-zero subspace is below tol."""
    return register_mass(state, qubits) < tol


def sample(
    state: SparseState,
    qubits: Sequence[int],
    shots: int,
    rng: np.random.Generator | int,
) -> dict[tuple[int, ...], int]:
    """Multinomial measurement samples over the given qubits."""
    if isinstance(rng, int):
        rng = np.random.default_rng(rng)
    marginal = main_marginal(state, qubits)
    outcomes = sorted(marginal)
    probs = np.array([marginal[o] for o in outcomes], dtype=float)
    probs = probs / probs.sum()
    counts = rng.multinomial(shots, probs)
    return {o: int(c) for o, c in zip(outcomes, counts) if c}


def dense_cross_validate(
    circuit: Circuit | Iterable[Gate],
    num_qubits: int,
    initial_ones: Iterable[int] = (),
    max_qubits: int = 20,
) -> np.ndarray:
    """Reference dense simulation; returns the full statevector.

    Implemented independently of the sparse path with vectorized index
    arithmetic, so agreement between the two is meaningful.
    """
    if num_qubits > max_qubits:
        raise ValueError(f"dense backend limited to {max_qubits} qubits")
    dim = 1 << num_qubits
    vec = np.zeros(dim, dtype=complex)
    key = 0
    for q in initial_ones:
        key |= 1 << q
    vec[key] = 1.0
    idx = np.arange(dim, dtype=np.int64)
    gates = circuit.gates if isinstance(circuit, Circuit) else circuit
    for gate in gates:
        if isinstance(gate, PauliX):
            vec = vec[idx ^ (1 << gate.qubit)]
        elif isinstance(gate, MultiControlledX):
            mask1 = 0
            mask0 = 0
            for q, v in gate.controls:
                if v:
                    mask1 |= 1 << q
                else:
                    mask0 |= 1 << q
            sat = ((idx & mask1) == mask1) & ((idx & mask0) == 0)
            flipped = vec[idx ^ (1 << gate.target)]
            vec = np.where(sat, flipped, vec)
        elif isinstance(gate, ControlledFractionalPermutation):
            moved = gate.permutation.moved_points()
            if len(moved) == 2:
                pu, pv = moved
                qu, qv = gate.main[pu - 1], gate.main[pv - 1]
                differs = (((idx >> qu) & 1) != ((idx >> qv) & 1)).astype(np.int64)
                pidx = idx ^ (differs * ((1 << qu) | (1 << qv)))
            else:
                pidx = np.array(
                    [_permuted_key(gate, int(k)) for k in idx], dtype=np.int64
                )
            mask1 = 0
            mask0 = 0
            for q, req in gate.controls:
                if req:
                    mask1 |= 1 << q
                else:
                    mask0 |= 1 << q
            sel = ((idx & mask1) == mask1) & ((idx & mask0) == 0)
            if gate.skip_fixed_points:
                sel = sel & (pidx != idx)
            cosb = math.cos(gate.angle)
            move = -1j * math.sin(gate.angle)
            new = vec.copy()
            new[sel] = cosb * vec[sel]
            targets = pidx[sel] ^ (1 << gate.aux_flip)
            np.add.at(new, targets, move * vec[sel])
            vec = new
        elif isinstance(gate, DiagonalPhase):
            support = np.nonzero(np.abs(vec) > 0)[0]
            for k in support:
                bits = tuple((int(k) >> q) & 1 for q in gate.qubits)
                vec[k] = vec[k] * cmath.exp(-1j * gate.angle * gate.cost(bits))
        else:
            raise TypeError(f"unknown gate type {type(gate).__name__}")
    return vec
