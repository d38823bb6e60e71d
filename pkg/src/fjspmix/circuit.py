"""Mixer circuits over main and auxiliary registers.

Qubit layout for a mixer of L layers over N assignment vertices:

* main: qubits 0..N-1, one per vertex, vertex j on qubit j-1,
* a:    qubits N..2N-1, shared scratch for neighborhood checks,
* b:    qubits 2N..3N-1, shared scratch for per-vertex clauses,
* per layer: a fresh copy register y (N qubits), a move-enable qubit z
  and a moved flag c, appended after the shared blocks.

Total auxiliary width is 2N + (N + 2)L.

One partial mixer for a permutation applies, in order: set b to all
ones; for each vertex compute its clause into b via a; fold b and the
flag into z; apply the controlled fractional permutation; unfold z;
uncompute the clauses in reverse; restore b. The per-layer copy block
snapshots main into y first, so every partial mixer in a layer reads
controls from the state the layer started in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Union

from .constraint_graph import ConstraintGraph
from .control_logic import Permutation, transposition_family


@dataclass(frozen=True)
class PauliX:
    qubit: int


@dataclass(frozen=True)
class MultiControlledX:
    """X on target when every control qubit holds its required value."""

    controls: tuple[tuple[int, int], ...]  # (qubit, required 0/1)
    target: int

    def __post_init__(self) -> None:
        qubits = [q for q, _ in self.controls]
        if len(set(qubits)) != len(qubits) or self.target in qubits:
            raise ValueError("control and target qubits must be distinct")
        if any(v not in (0, 1) for _, v in self.controls):
            raise ValueError("control values must be 0 or 1")


@dataclass(frozen=True)
class ControlledFractionalPermutation:
    """Partial permutation move on the main register.

    Every basis state satisfying the polarized controls splits into a
    stay branch, weighted cos(angle), and a moved branch, weighted
    -i sin(angle), in which the aux_flip qubit is inverted and the main
    register is permuted. Non-satisfying basis states pass through.

    The literal wiring controls on the enable qubit alone; a stale
    enable then lets a branch that has already moved move again. The
    corrected wiring adds a negated control on the moved flag, freezing
    branches after their first move, and skips basis states the
    permutation leaves fixed. Both fixes together make the gate an
    isometry on every state the surrounding mixer can feed it (distinct
    moved images of distinct inputs never collide); without them it is
    not norm-preserving on those states, which the simulator reports.
    """

    controls: tuple[tuple[int, int], ...]  # (qubit, required 0/1)
    angle: float
    aux_flip: int
    permutation: Permutation
    main: tuple[int, ...]  # qubit carrying vertex j at position j-1
    skip_fixed_points: bool = False

    def __post_init__(self) -> None:
        if len(self.main) != self.permutation.size:
            raise ValueError("main wiring must cover every vertex")


@dataclass(frozen=True)
class DiagonalPhase:
    """exp(-i * angle * cost(bits)) on the computational basis of `qubits`."""

    qubits: tuple[int, ...]
    angle: float
    cost: Callable[[tuple[int, ...]], float]


Gate = Union[PauliX, MultiControlledX, ControlledFractionalPermutation, DiagonalPhase]


@dataclass(frozen=True)
class RegisterLayout:
    """Qubit numbering for a mixer with a given vertex count and layer count."""

    n: int
    layers: int

    def main(self, j: int) -> int:
        return j - 1

    def a(self, j: int) -> int:
        return self.n + j - 1

    def b(self, j: int) -> int:
        return 2 * self.n + j - 1

    def _layer_base(self, layer: int) -> int:
        if not 0 <= layer < self.layers:
            raise ValueError(f"layer {layer} out of range 0..{self.layers - 1}")
        return 3 * self.n + layer * (self.n + 2)

    def y(self, layer: int, j: int) -> int:
        return self._layer_base(layer) + j - 1

    def z(self, layer: int) -> int:
        return self._layer_base(layer) + self.n

    def c(self, layer: int) -> int:
        return self._layer_base(layer) + self.n + 1

    @property
    def main_qubits(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    @property
    def total_qubits(self) -> int:
        return 3 * self.n + self.layers * (self.n + 2)

    @property
    def aux_qubits(self) -> int:
        return self.total_qubits - self.n


@dataclass
class Circuit:
    num_qubits: int
    gates: list = field(default_factory=list)
    layout: RegisterLayout | None = None

    def append(self, gate: Gate) -> None:
        self.gates.append(gate)

    def extend(self, gates: Iterable[Gate]) -> None:
        self.gates.extend(gates)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)


def build_copy_block(layout: RegisterLayout, layer: int) -> list[Gate]:
    """Snapshot the main register into the layer's fresh copy register."""
    return [
        MultiControlledX(((layout.main(j), 1),), layout.y(layer, j))
        for j in range(1, layout.n + 1)
    ]


def build_vertex_check(
    graph: ConstraintGraph, perm: Permutation, layout: RegisterLayout, layer: int, j: int
) -> list[Gate]:
    """Compute the clause for vertex j into b, using a as scratch.

    First a_j is raised exactly when every preimage of a neighbor of
    perm(j) is clear in the copy register; with no neighbors the clause
    condition is vacuous, so a_j is raised unconditionally. Then b_j
    (prepared as 1) is cleared exactly when vertex j carries weight and
    a_j stayed low, leaving b_j holding the clause value.
    """
    preimages = sorted(perm.preimage(l) for l in graph.neighbors(perm.image(j)))
    gates: list[Gate] = []
    if preimages:
        gates.append(
            MultiControlledX(
                tuple((layout.y(layer, p), 0) for p in preimages), layout.a(j)
            )
        )
    else:
        gates.append(PauliX(layout.a(j)))
    gates.append(
        MultiControlledX(
            ((layout.y(layer, j), 1), (layout.a(j), 0)), layout.b(j)
        )
    )
    return gates


def build_partial_mixer(
    graph: ConstraintGraph,
    perm: Permutation,
    layout: RegisterLayout,
    layer: int,
    beta: float,
    corrected: bool = True,
) -> list[Gate]:
    """One permutation's move block, scratch registers restored at the end."""
    n = layout.n
    gates: list[Gate] = [PauliX(layout.b(j)) for j in range(1, n + 1)]
    checks = [build_vertex_check(graph, perm, layout, layer, j) for j in range(1, n + 1)]
    for block in checks:
        gates.extend(block)
    fold = MultiControlledX(
        tuple((layout.b(j), 1) for j in range(1, n + 1)) + ((layout.c(layer), 0),),
        layout.z(layer),
    )
    gates.append(fold)
    if corrected:
        move_controls = ((layout.z(layer), 1), (layout.c(layer), 0))
    else:
        move_controls = ((layout.z(layer), 1),)
    gates.append(
        ControlledFractionalPermutation(
            controls=move_controls,
            angle=beta,
            aux_flip=layout.c(layer),
            permutation=perm,
            main=layout.main_qubits,
            skip_fixed_points=corrected,
        )
    )
    gates.append(fold)
    for block in reversed(checks):
        gates.extend(reversed(block))
    gates.extend(PauliX(layout.b(j)) for j in range(1, n + 1))
    return gates


def build_layer_mixer(
    graph: ConstraintGraph,
    layout: RegisterLayout,
    layer: int,
    beta: float,
    family: list[Permutation] | None = None,
    corrected: bool = True,
) -> list[Gate]:
    """Copy block followed by every partial mixer of the family, in order."""
    if family is None:
        family = transposition_family(graph)
    gates = build_copy_block(layout, layer)
    for perm in family:
        gates.extend(build_partial_mixer(graph, perm, layout, layer, beta, corrected))
    return gates


def mixer_layer_circuit(
    graph: ConstraintGraph,
    betas: Iterable[float],
    family: list[Permutation] | None = None,
    corrected: bool = True,
) -> Circuit:
    """Complete mixer circuit, one layer per angle, with its register layout."""
    beta_list = list(betas)
    layout = RegisterLayout(n=graph.size, layers=len(beta_list))
    circuit = Circuit(num_qubits=layout.total_qubits, layout=layout)
    for layer, beta in enumerate(beta_list):
        circuit.extend(
            build_layer_mixer(graph, layout, layer, beta, family, corrected)
        )
    return circuit


@dataclass(frozen=True)
class GateCounts:
    toffoli: int = 0
    cnot: int = 0
    single_qubit: int = 0
    ancilla: int = 0

    def __add__(self, other: "GateCounts") -> "GateCounts":
        # Scratch is reusable across gates, so ancilla takes the maximum.
        return GateCounts(
            toffoli=self.toffoli + other.toffoli,
            cnot=self.cnot + other.cnot,
            single_qubit=self.single_qubit + other.single_qubit,
            ancilla=max(self.ancilla, other.ancilla),
        )

    @property
    def total(self) -> int:
        return self.toffoli + self.cnot + self.single_qubit


def _mcx_counts(num_controls: int, num_negated: int) -> GateCounts:
    """Cost of one multi-controlled X in the X/CNOT/Toffoli basis.

    Negated controls are conjugated by X pairs. Three or more controls
    use the standard scratch chain: m-2 ancillas and 2(m-2)+1 Toffolis.
    """
    flips = 2 * num_negated
    if num_controls == 0:
        return GateCounts(single_qubit=1 + flips)
    if num_controls == 1:
        return GateCounts(cnot=1, single_qubit=flips)
    if num_controls == 2:
        return GateCounts(toffoli=1, single_qubit=flips)
    return GateCounts(
        toffoli=2 * (num_controls - 2) + 1,
        single_qubit=flips,
        ancilla=num_controls - 2,
    )


def count_decomposed(circuit: Circuit | Iterable[Gate]) -> GateCounts:
    """Gate tally after decomposition to X, CNOT and Toffoli.

    The fractional permutation is costed as two CNOTs plus a
    multi-controlled single-qubit rotation, itself two multi-controlled
    X gates and four single-qubit rotations; the corrected form carries
    one extra control for the flag qubit.
    """
    total = GateCounts()
    gates = circuit.gates if isinstance(circuit, Circuit) else circuit
    for gate in gates:
        if isinstance(gate, PauliX):
            total += GateCounts(single_qubit=1)
        elif isinstance(gate, MultiControlledX):
            negated = sum(1 for _, v in gate.controls if v == 0)
            total += _mcx_counts(len(gate.controls), negated)
        elif isinstance(gate, ControlledFractionalPermutation):
            # Costed as two CNOTs plus a rotation controlled on the
            # gate's own controls and one main-register data wire; the
            # rotation is itself two multi-controlled X gates and four
            # single-qubit rotations.
            negated = sum(1 for _, v in gate.controls if v == 0)
            rotation = _mcx_counts(len(gate.controls) + 1, negated)
            total += GateCounts(cnot=2, single_qubit=4)
            total += rotation + rotation
        else:
            raise ValueError(f"no decomposition cost model for {type(gate).__name__}")
    return total


def decompose(circuit: Circuit) -> Circuit:
    """Rewrite multi-controlled X gates to X, CNOT and Toffoli.

    Gates with three or more controls borrow scratch qubits appended
    past the original register; each chain returns its scratch to zero.
    Fractional permutations and diagonal phases pass through opaquely
    (they are costed analytically in count_decomposed, and the
    simulator applies them exactly), so the output still simulates.
    """
    max_extra = 0
    for gate in circuit.gates:
        if isinstance(gate, MultiControlledX) and len(gate.controls) > 2:
            max_extra = max(max_extra, len(gate.controls) - 2)
    scratch = list(range(circuit.num_qubits, circuit.num_qubits + max_extra))
    out = Circuit(num_qubits=circuit.num_qubits + max_extra, layout=circuit.layout)
    for gate in circuit.gates:
        if not isinstance(gate, MultiControlledX):
            out.append(gate)
            continue
        negated = [q for q, v in gate.controls if v == 0]
        for q in negated:
            out.append(PauliX(q))
        positives = tuple((q, 1) for q, _ in gate.controls)
        m = len(positives)
        if m <= 2:
            out.append(MultiControlledX(positives, gate.target))
        else:
            chain = []
            chain.append(
                MultiControlledX((positives[0], positives[1]), scratch[0])
            )
            for i in range(2, m - 1):
                chain.append(
                    MultiControlledX(
                        ((positives[i][0], 1), (scratch[i - 2], 1)), scratch[i - 1]
                    )
                )
            out.extend(chain)
            out.append(
                MultiControlledX(
                    ((positives[m - 1][0], 1), (scratch[m - 3], 1)), gate.target
                )
            )
            out.extend(reversed(chain))
        for q in negated:
            out.append(PauliX(q))
    return out


def gate_count_report(
    graphs: list[ConstraintGraph], beta: float = math.pi / 7, corrected: bool = True
) -> dict:
    """Resource scaling across instances: decomposed tallies and slopes.

    Each row holds the decomposed gate counts of one full mixer layer.
    Alongside the per-column log-log least-squares slopes, the report
    fits the control-logic cost (Toffoli plus CNOT) of a single partial
    mixer, averaged over the family, and of the full layer; these are
    the quantities whose growth the design bounds.
    """
    import numpy as np

    rows = []
    partial_control = []
    for graph in graphs:
        layout = RegisterLayout(n=graph.size, layers=1)
        family = transposition_family(graph)
        layer_counts = count_decomposed(
            build_layer_mixer(graph, layout, 0, beta, family, corrected)
        )
        control_sum = 0
        for perm in family:
            c = count_decomposed(
                build_partial_mixer(graph, perm, layout, 0, beta, corrected)
            )
            control_sum += c.toffoli + c.cnot
        partial_control.append(control_sum / max(1, len(family)))
        rows.append(
            {
                "n": graph.size,
                "p_size": len(family),
                "toffoli": layer_counts.toffoli,
                "cnot": layer_counts.cnot,
                "single_qubit": layer_counts.single_qubit,
                "ancilla": layer_counts.ancilla,
            }
        )
    logn = np.log([row["n"] for row in rows])

    def slope(values) -> float:
        v = np.asarray(values, dtype=float)
        if (v <= 0).any():
            return float("nan")
        return float(np.polyfit(logn, np.log(v), 1)[0])

    slopes = {
        "p_size": slope([row["p_size"] for row in rows]),
        "toffoli": slope([row["toffoli"] for row in rows]),
        "cnot": slope([row["cnot"] for row in rows]),
        "single_qubit": slope([row["single_qubit"] for row in rows]),
        "ancilla": slope([row["ancilla"] for row in rows]),
        "partial_mixer_control": slope(partial_control),
        "layer_control": slope(
            [row["toffoli"] + row["cnot"] for row in rows]
        ),
    }
    return {
        "rows": rows,
        "partial_mixer_control": partial_control,
        "slopes": slopes,
    }
