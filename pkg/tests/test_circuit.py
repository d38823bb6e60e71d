"""Register layout, mixer gate construction, decomposition, and counts."""

import math

import pytest

from fjspmix import (
    Circuit,
    ControlledFractionalPermutation,
    DiagonalPhase,
    GateCounts,
    MultiControlledX,
    PauliX,
    Permutation,
    RegisterLayout,
    build_copy_block,
    build_partial_mixer,
    count_decomposed,
    decompose,
    gate_count_report,
    mixer_layer_circuit,
    scaling_instance,
    transposition_family,
)
from fjspmix.circuit import _mcx_counts
from fjspmix.constraint_graph import build_graph
from fjspmix.simulator import apply_circuit, init_basis


def test_layout_indices():
    layout = RegisterLayout(n=3, layers=2)
    assert [layout.main(j) for j in (1, 2, 3)] == [0, 1, 2]
    assert [layout.a(j) for j in (1, 2, 3)] == [3, 4, 5]
    assert [layout.b(j) for j in (1, 2, 3)] == [6, 7, 8]
    assert [layout.y(0, j) for j in (1, 2, 3)] == [9, 10, 11]
    assert layout.z(0) == 12
    assert layout.c(0) == 13
    assert [layout.y(1, j) for j in (1, 2, 3)] == [14, 15, 16]
    assert layout.z(1) == 17
    assert layout.c(1) == 18
    assert layout.total_qubits == 19
    assert layout.aux_qubits == 16
    assert layout.main_qubits == (0, 1, 2)
    with pytest.raises(ValueError):
        layout.y(2, 1)


@pytest.mark.parametrize("layers,aux", [(1, 32), (2, 44), (3, 56)])
def test_layout_aux_width_reference(layers, aux):
    # 2N shared scratch plus N+2 fresh qubits per layer, at N = 10.
    assert RegisterLayout(n=10, layers=layers).aux_qubits == aux


def test_mcx_validation():
    with pytest.raises(ValueError):
        MultiControlledX(((0, 1), (0, 0)), 2)
    with pytest.raises(ValueError):
        MultiControlledX(((0, 1),), 0)
    with pytest.raises(ValueError):
        MultiControlledX(((0, 2),), 1)


def test_fractional_permutation_validation():
    with pytest.raises(ValueError):
        ControlledFractionalPermutation(
            controls=(),
            angle=0.3,
            aux_flip=5,
            permutation=Permutation.transposition(3, 1, 2),
            main=(0, 1),
        )


def test_copy_block():
    layout = RegisterLayout(n=4, layers=1)
    block = build_copy_block(layout, 0)
    assert len(block) == 4
    for j, gate in enumerate(block, start=1):
        assert gate == MultiControlledX(((layout.main(j), 1),), layout.y(0, j))


@pytest.mark.parametrize("corrected", [True, False])
def test_partial_mixer_structure(ref_graph, corrected):
    n = ref_graph.size
    layout = RegisterLayout(n=n, layers=1)
    tau = transposition_family(ref_graph)[0]
    gates = build_partial_mixer(ref_graph, tau, layout, 0, 0.4, corrected)
    assert len(gates) == 6 * n + 3

    b_qubits = {layout.b(j) for j in range(1, n + 1)}
    assert all(isinstance(g, PauliX) and g.qubit in b_qubits for g in gates[:n])
    assert all(isinstance(g, PauliX) and g.qubit in b_qubits for g in gates[5 * n + 3 :])

    fold = gates[3 * n]
    assert isinstance(fold, MultiControlledX)
    assert fold.target == layout.z(0)
    assert fold.controls == tuple(
        (layout.b(j), 1) for j in range(1, n + 1)
    ) + ((layout.c(0), 0),)
    assert gates[3 * n + 2] == fold

    move = gates[3 * n + 1]
    assert isinstance(move, ControlledFractionalPermutation)
    assert move.aux_flip == layout.c(0)
    assert move.permutation == tau
    assert move.main == layout.main_qubits
    assert move.skip_fixed_points is corrected
    if corrected:
        assert move.controls == ((layout.z(0), 1), (layout.c(0), 0))
    else:
        assert move.controls == ((layout.z(0), 1),)

    # The clause computations are uncomputed by the exact mirror image.
    assert gates[3 * n + 3 : 5 * n + 3] == list(reversed(gates[n : 3 * n]))


def test_mixer_layer_circuit_shape(ref_graph):
    circuit = mixer_layer_circuit(ref_graph, [0.3, 0.5])
    assert circuit.layout == RegisterLayout(n=10, layers=2)
    assert circuit.num_qubits == circuit.layout.total_qubits
    family_size = len(transposition_family(ref_graph))
    per_layer = 10 + family_size * (6 * 10 + 3)
    assert len(circuit) == 2 * per_layer


@pytest.mark.parametrize(
    "controls,negated,expected",
    [
        (0, 0, GateCounts(single_qubit=1)),
        (1, 0, GateCounts(cnot=1)),
        (1, 1, GateCounts(cnot=1, single_qubit=2)),
        (2, 0, GateCounts(toffoli=1)),
        (3, 0, GateCounts(toffoli=3, ancilla=1)),
        (4, 1, GateCounts(toffoli=5, single_qubit=2, ancilla=2)),
    ],
)
def test_mcx_cost_model(controls, negated, expected):
    assert _mcx_counts(controls, negated) == expected


def test_gate_counts_arithmetic():
    total = GateCounts(toffoli=2, cnot=1, ancilla=3) + GateCounts(
        toffoli=1, single_qubit=4, ancilla=2
    )
    # Scratch is reused, so widths take the maximum rather than adding.
    assert total == GateCounts(toffoli=3, cnot=1, single_qubit=4, ancilla=3)
    assert total.total == 8


def test_count_decomposed_rejects_phase():
    gate = DiagonalPhase((0,), 0.1, lambda bits: 0.0)
    with pytest.raises(ValueError):
        count_decomposed([gate])


def test_decompose_matches_cost_model(ref_graph):
    circuit = mixer_layer_circuit(ref_graph, [0.4])
    counts = count_decomposed(circuit)
    recounted = count_decomposed(decompose(circuit))
    assert recounted.toffoli == counts.toffoli
    assert recounted.cnot == counts.cnot
    assert recounted.single_qubit == counts.single_qubit


def test_decompose_small_gates_and_phases_pass_through():
    phase = DiagonalPhase((0,), 0.2, lambda bits: 1.0)
    circuit = Circuit(num_qubits=3)
    circuit.append(MultiControlledX(((0, 0),), 1))
    circuit.append(phase)
    out = decompose(circuit)
    assert out.gates == [PauliX(0), MultiControlledX(((0, 1),), 1), PauliX(0), phase]
    assert out.num_qubits == 3


@pytest.mark.parametrize("num_controls", [3, 4, 5])
def test_decompose_truth_table(num_controls):
    # Alternate polarities; target is the last original qubit.
    controls = tuple((q, q % 2) for q in range(num_controls))
    target = num_controls
    circuit = Circuit(num_qubits=num_controls + 1)
    circuit.append(MultiControlledX(controls, target))
    out = decompose(circuit)
    assert all(
        not isinstance(g, MultiControlledX) or len(g.controls) <= 2 for g in out.gates
    )
    for key in range(1 << (num_controls + 1)):
        ones = [q for q in range(num_controls + 1) if (key >> q) & 1]
        state = apply_circuit(init_basis(out.num_qubits, ones), out)
        assert len(state.amplitudes) == 1
        (result,) = state.amplitudes
        satisfied = all((key >> q) & 1 == v for q, v in controls)
        expected = key ^ (1 << target) if satisfied else key
        # Borrowed scratch must come back to zero on every input.
        assert result == expected


@pytest.mark.parametrize("corrected", [True, False])
def test_decompose_preserves_layer_semantics(ref_graph, corrected):
    circuit = mixer_layer_circuit(ref_graph, [0.37], corrected=corrected)
    initial = (1, 0, 0, 0, 0, 1, 0, 0, 1, 0)
    direct = apply_circuit(init_basis(circuit.layout, initial), circuit)
    expanded = decompose(circuit)
    # Borrowed scratch qubits sit past the layout and start at zero.
    rebuilt = apply_circuit(init_basis(circuit.layout, initial), expanded)
    assert set(direct.amplitudes) == set(rebuilt.amplitudes)
    for key, amp in direct.amplitudes.items():
        assert abs(amp - rebuilt.amplitudes[key]) < 1e-12


def test_gate_count_report_structure():
    graphs = [build_graph(scaling_instance(n)) for n in (8, 12, 16)]
    report = gate_count_report(graphs)
    assert [row["n"] for row in report["rows"]] == [8, 12, 16]
    for row in report["rows"]:
        assert set(row) == {"n", "p_size", "toffoli", "cnot", "single_qubit", "ancilla"}
        assert all(v > 0 for v in row.values())
    assert len(report["partial_mixer_control"]) == 3
    slopes = report["slopes"]
    assert set(slopes) == {
        "p_size",
        "toffoli",
        "cnot",
        "single_qubit",
        "ancilla",
        "partial_mixer_control",
        "layer_control",
    }
    assert all(math.isfinite(v) for v in slopes.values())
    # CNOTs come from the copy block (linear in n) and two per move
    # gate, so their growth tracks the family size, roughly quadratic.
    assert 1.0 <= slopes["cnot"] <= 2.5
