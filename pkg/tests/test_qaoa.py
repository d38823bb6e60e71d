"""Verification oracles, the exact layer reduction, and the optimizer."""

import math

import numpy as np
import pytest

from fjspmix import (
    OptimizeConfig,
    QaoaParams,
    apply_permutation,
    build_ansatz,
    chi,
    decode,
    default_beta_grid,
    encode,
    enumerate_feasible,
    expected_cost,
    explorability_sweep,
    greedy_schedule,
    init_basis,
    layer_marginal,
    main_marginal,
    makespan,
    makespan_cost,
    optimize,
    phase_separate,
    str_to_bits,
    transposition_family,
    verify_explorability,
    verify_feasibility,
)
from fjspmix.circuit import RegisterLayout
from fjspmix.qaoa import ExplorabilityVerifier

GREEDY_H2 = str_to_bits("1000010010")


def one_layer_closed_form(graph, bits, beta):
    """Independent reference for the single-layer distribution.

    Enabled moves fire in family order; each consumes a sin^2 share of
    the amplitude remaining after the moves before it, and what is left
    after all of them stays put.
    """
    stay = math.cos(beta) ** 2
    hop = math.sin(beta) ** 2
    out = {}
    fired = 0
    for tau in transposition_family(graph):
        image = apply_permutation(tau, bits)
        if image == bits or not chi(graph, tau, bits):
            continue
        out[image] = out.get(image, 0.0) + hop * stay**fired
        fired += 1
    out[bits] = out.get(bits, 0.0) + stay**fired
    return out


def test_default_beta_grid():
    grid = default_beta_grid()
    assert len(grid) == 15
    assert grid[0] == pytest.approx(math.pi / 16)
    assert grid[-1] == pytest.approx(15 * math.pi / 16)
    assert 0.0 not in grid


def test_makespan_cost_matches_decode(ref_graph):
    cost = makespan_cost(ref_graph)
    for bits in enumerate_feasible(ref_graph):
        direct = makespan(ref_graph.instance, decode(ref_graph.index, bits))
        assert cost(bits) == float(direct)
    assert cost((0,) * 10) == 0.0


def test_phase_separation_preserves_distribution(ref_graph):
    state = build_ansatz(ref_graph, GREEDY_H2, QaoaParams((0.4,), (0.0,)))
    layout = RegisterLayout(n=10, layers=1)
    before = main_marginal(state, layout.main_qubits)
    phase_separate(state, layout.main_qubits, 1.3, makespan_cost(ref_graph))
    after = main_marginal(state, layout.main_qubits)
    assert before.keys() == after.keys()
    for key in before:
        assert before[key] == pytest.approx(after[key], abs=1e-14)


def test_params_require_matching_lengths():
    with pytest.raises(ValueError):
        QaoaParams((0.1, 0.2), (0.0,))


def test_build_ansatz_validates_initial(ref_graph):
    with pytest.raises(ValueError):
        build_ansatz(ref_graph, (0,) * 10, QaoaParams((0.1,), (0.0,)))


def test_build_ansatz_zero_layers(ref_graph):
    state = build_ansatz(ref_graph, GREEDY_H2, QaoaParams((), ()))
    layout = RegisterLayout(n=10, layers=1)
    assert main_marginal(state, layout.main_qubits) == {GREEDY_H2: 1.0}


@pytest.mark.parametrize("beta", [0.3, math.pi / 4])
def test_one_layer_matches_closed_form(ref_graph, trap_graph, beta):
    for graph in (ref_graph, trap_graph):
        for bits in enumerate_feasible(graph):
            expected = one_layer_closed_form(graph, bits, beta)
            actual = layer_marginal(graph, bits, beta)
            assert set(actual) == set(expected)
            for key in expected:
                assert actual[key] == pytest.approx(expected[key], abs=1e-12)


def test_greedy_layer_distribution_frozen(ref_graph):
    marg = layer_marginal(ref_graph, GREEDY_H2, math.pi / 4)
    frozen = {
        str_to_bits("1000000110"): 0.5,
        str_to_bits("1000010001"): 0.25,
        str_to_bits("1000010010"): 0.25,
    }
    assert set(marg) == set(frozen)
    for key, value in frozen.items():
        assert marg[key] == pytest.approx(value, abs=1e-12)


def test_layer_rows_are_stochastic_over_feasible(ref_graph):
    feasible = set(enumerate_feasible(ref_graph))
    for bits in feasible:
        marg = layer_marginal(ref_graph, bits, 0.7)
        assert set(marg) <= feasible
        assert sum(marg.values()) == pytest.approx(1.0, abs=1e-12)


def test_phase_angles_do_not_change_outcomes(ref_graph):
    layout = RegisterLayout(n=10, layers=2)
    plain = build_ansatz(ref_graph, GREEDY_H2, QaoaParams((0.5, 0.9), (0.0, 0.0)))
    phased = build_ansatz(ref_graph, GREEDY_H2, QaoaParams((0.5, 0.9), (1.1, -0.7)))
    a = main_marginal(plain, layout.main_qubits)
    b = main_marginal(phased, layout.main_qubits)
    assert a.keys() == b.keys()
    for key in a:
        assert a[key] == pytest.approx(b[key], abs=1e-12)


def test_layer_factorization_is_exact(ref_graph):
    # The full two-layer gate simulation must equal the product of
    # single-layer transition matrices applied to the start vector.
    betas = (0.5, 0.9)
    layout = RegisterLayout(n=10, layers=2)
    state = build_ansatz(ref_graph, GREEDY_H2, QaoaParams(betas, (0.0, 0.0)))
    gate_level = main_marginal(state, layout.main_qubits)

    verifier = ExplorabilityVerifier(ref_graph)
    vec = np.zeros(len(verifier.states))
    vec[verifier.position[GREEDY_H2]] = 1.0
    for beta in betas:
        vec = vec @ verifier.matrix(beta)
    for i, bits in enumerate(verifier.states):
        assert gate_level.get(bits, 0.0) == pytest.approx(vec[i], abs=1e-12)


def test_verify_feasibility_corrected(ref_graph):
    report = verify_feasibility(ref_graph, betas=[0.4, math.pi / 4])
    assert report.passed
    assert report.mode == "corrected"
    assert report.predicate_consistent
    assert report.max_leakage < 1e-10
    assert report.max_multiply_moved < 1e-10
    assert report.scratch_max_mass < 1e-10
    assert report.norms_ok
    assert report.states_checked == 4
    assert report.trials == 8
    assert report.failures == []


def test_verify_feasibility_literal_leaks(ref_graph):
    report = verify_feasibility(ref_graph, corrected=False)
    assert report.mode == "literal"
    assert not report.passed
    assert not report.preserved
    # The double-move defect shows up as real escaped probability while
    # the circuit stays globally norm-preserving.
    assert report.max_leakage > 0.1
    assert report.max_multiply_moved > 0.1
    assert report.norms_ok
    assert report.predicate_consistent
    assert report.failures


def test_explorability_pair_witness(ref_graph):
    source = str_to_bits("1000010010")
    target = str_to_bits("0010010001")
    result = verify_explorability(ref_graph, source, target)
    assert result.passed
    assert result.connected
    assert not result.used_planner  # endpoints spill past the half horizon
    assert result.planned_steps >= 1
    assert 1 <= result.k <= 6
    assert result.overlap > result.threshold
    assert result.beta is not None


def test_explorability_same_state(ref_graph):
    result = verify_explorability(ref_graph, GREEDY_H2, GREEDY_H2)
    assert result.hit
    assert result.k == 0
    assert result.overlap == 1.0
    assert result.beta is None


def test_explorability_rejects_infeasible(ref_graph):
    with pytest.raises(ValueError):
        verify_explorability(ref_graph, (0,) * 10, GREEDY_H2)


def test_explorability_shared_verifier(ref_graph):
    verifier = ExplorabilityVerifier(ref_graph)
    states = enumerate_feasible(ref_graph)
    first = verify_explorability(ref_graph, states[0], states[1], verifier=verifier)
    second = verify_explorability(ref_graph, states[1], states[2], verifier=verifier)
    assert first.hit and second.hit
    # The shared verifier caches one-step matrices across calls.
    assert verifier._matrices


def test_explorability_sweep_reference(ref_graph):
    sweep = explorability_sweep(ref_graph)
    assert sweep.passed
    assert sweep.pairs_checked == 12
    assert sweep.hits == 12
    assert sweep.planner_pairs == 0
    assert sweep.fallback_pairs == 12
    assert sweep.k_max == 6
    assert sweep.step_bound == 6
    assert sweep.max_planned_steps <= 6
    assert sweep.min_overlap > sweep.threshold
    assert sweep.misses == []
    assert sum(sweep.witness_depth_histogram.values()) == 12


def test_explorability_sweep_disconnected(locked_graph):
    sweep = explorability_sweep(locked_graph)
    assert not sweep.passed
    assert not sweep.all_connected
    assert sweep.pairs_checked == 2
    assert sweep.hits == 0
    assert len(sweep.misses) == 2


def test_expected_cost_on_basis_state(ref_graph):
    layout = RegisterLayout(n=10, layers=1)
    state = init_basis(layout, GREEDY_H2)
    assert expected_cost(state, layout, makespan_cost(ref_graph)) == pytest.approx(3.0)


def test_optimize_reference_instance(ref_graph):
    result = optimize(ref_graph, OptimizeConfig(layers=1, resolution=8, shots=2048))
    # Every feasible schedule completes in three slots, so the greedy
    # start is already optimal and the identity angle wins the grid.
    assert result.initial_makespan == 3.0
    assert result.optimum_makespan == 3.0
    assert result.expected_makespan == pytest.approx(3.0, abs=1e-12)
    assert result.initial_optimum_probability == pytest.approx(1.0)
    assert result.optimum_probability == pytest.approx(1.0)
    assert result.params.betas == (0.0,)
    assert sum(result.samples.values()) == 2048
    assert result.evaluations == 64
    assert len(result.table) == 64


def test_optimize_improves_trap_instance(trap_graph):
    result = optimize(trap_graph, OptimizeConfig(layers=1, resolution=8, shots=2048))
    assert result.initial_makespan == 4.0
    assert result.optimum_makespan == 3.0
    assert result.params.betas == (pytest.approx(math.pi / 4),)
    assert result.expected_makespan == pytest.approx(3.9375, abs=1e-9)
    assert result.expected_makespan < result.initial_makespan
    assert result.initial_optimum_probability == 0.0
    assert result.optimum_probability == pytest.approx(0.125, abs=1e-9)
    assert sum(result.marginal.values()) == pytest.approx(1.0, abs=1e-12)


def test_optimize_samples_reproducible(trap_graph):
    config = OptimizeConfig(layers=1, resolution=4, seed=23, shots=512)
    assert optimize(trap_graph, config).samples == optimize(trap_graph, config).samples


def test_optimize_accepts_explicit_initial(ref_graph):
    config = OptimizeConfig(layers=1, resolution=4, initial=GREEDY_H2)
    result = optimize(ref_graph, config)
    assert result.initial_makespan == 3.0
    with pytest.raises(ValueError):
        optimize(ref_graph, OptimizeConfig(initial=(0,) * 10))


def test_optimize_refinement_does_not_regress(trap_graph):
    coarse = optimize(trap_graph, OptimizeConfig(layers=1, resolution=8))
    refined = optimize(trap_graph, OptimizeConfig(layers=1, resolution=8, refine=True))
    assert refined.expected_makespan <= coarse.expected_makespan + 1e-12
    assert refined.evaluations > coarse.evaluations
