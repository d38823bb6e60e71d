"""Verification oracles and the constraint-mixer optimization loop.

Feasibility preservation is checked two ways: the control predicate is
compared against brute-force feasibility of every permuted schedule,
and full gate-level layer simulations are inspected for probability
mass escaping the feasible set.

Explorability rests on an exact reduction: with a fresh copy register
and fresh flag qubits per layer, no two distinct move histories ever
share a basis key, so amplitudes never interfere across layers and the
measurement distribution of a k-layer mixer equals the k-step
distribution of a Markov chain whose one-step rows are the gate-level
single-layer marginals. Matrix powers then give exact k-layer
transition probabilities at any depth. The same reduction shows the
distribution does not depend on the phase-separator angles, so the
optimizer caches marginals by mixer angles alone.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .circuit import (
    Circuit,
    DiagonalPhase,
    RegisterLayout,
    build_layer_mixer,
    mixer_layer_circuit,
)
from .constraint_graph import ConstraintGraph, enumerate_feasible, is_feasible
from .control_logic import (
    apply_permutation,
    chi,
    fits_in_first_half,
    plan_transposition_path,
    shortest_transposition_path,
    transposition_family,
)
from .instance import decode, encode, greedy_schedule, makespan
from .simulator import (
    MASS_EPS,
    SimulationPrecisionError,
    SparseState,
    apply_circuit,
    apply_gate,
    init_basis,
    main_marginal,
    register_mass,
)

ROW_SUM_EPS = 1e-9
OVERLAP_EPS = 1e-9
FAILURE_ROW_CAP = 20


def default_beta_grid(resolution: int = 16) -> tuple[float, ...]:
    """Strictly interior angle grid pi*r/resolution, r = 1..resolution-1."""
    return tuple(math.pi * r / resolution for r in range(1, resolution))


def makespan_cost(graph: ConstraintGraph) -> Callable[[tuple[int, ...]], float]:
    """Diagonal cost: latest completion slot over the marked assignments."""
    inst = graph.instance
    completions = []
    for i in range(1, graph.size + 1):
        a = graph.index.assignment_of(i)
        completions.append(float(a.time + inst.duration(a.job, a.op, a.machine)))

    def cost(bits: tuple[int, ...]) -> float:
        best = 0.0
        for i, b in enumerate(bits):
            if b and completions[i] > best:
                best = completions[i]
        return best

    return cost


def phase_separate(
    state: SparseState,
    main_qubits: Sequence[int],
    gamma: float,
    cost: Callable[[tuple[int, ...]], float],
) -> SparseState:
    """Apply the diagonal cost phase to the main register."""
    return apply_gate(state, DiagonalPhase(tuple(main_qubits), gamma, cost))


@dataclass(frozen=True)
class QaoaParams:
    betas: tuple[float, ...]
    gammas: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.betas) != len(self.gammas):
            raise ValueError("need one phase angle per mixer angle")

    @property
    def layers(self) -> int:
        return len(self.betas)


def build_ansatz(
    graph: ConstraintGraph,
    initial: tuple[int, ...],
    params: QaoaParams,
    corrected: bool = True,
) -> SparseState:
    """Run the alternating ansatz from a feasible basis state.

    Layer i applies the full mixer at its angle and then the diagonal
    makespan phase. Every layer draws fresh copy and flag registers, so
    the returned sparse state spans the complete layout; project onto
    the main qubits for measurement statistics.
    """
    if not is_feasible(graph, initial):
        raise ValueError("initial bitstring must be feasible")
    layers = params.layers
    layout = RegisterLayout(n=graph.size, layers=max(layers, 1))
    state = init_basis(layout, initial)
    if layers == 0:
        return state
    cost = makespan_cost(graph)
    family = transposition_family(graph)
    for layer in range(layers):
        state = apply_circuit(
            state,
            build_layer_mixer(
                graph, layout, layer, params.betas[layer], family, corrected
            ),
        )
        state = phase_separate(
            state, layout.main_qubits, params.gammas[layer], cost
        )
    return state


def layer_marginal(
    graph: ConstraintGraph,
    bits: tuple[int, ...],
    beta: float,
    corrected: bool = True,
    circuit: Circuit | None = None,
) -> dict[tuple[int, ...], float]:
    """Gate-level measurement distribution of one mixer layer on a basis state."""
    if circuit is None:
        circuit = mixer_layer_circuit(graph, [beta], corrected=corrected)
    state = init_basis(circuit.layout, bits)
    apply_circuit(state, circuit)
    return main_marginal(state, circuit.layout.main_qubits)


@dataclass
class VerificationReport:
    """Outcome of the feasibility-preservation check for one mixer form."""

    mode: str
    betas: tuple[float, ...]
    states_checked: int
    trials: int
    predicate_consistent: bool
    predicate_failures: list[dict]
    preserved: bool
    max_leakage: float
    leakage_by_beta: dict[float, float]
    max_multiply_moved: float
    multiply_moved_by_beta: dict[float, float]
    scratch_max_mass: float
    scratch_restored: bool
    norms_ok: bool
    failures: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.predicate_consistent
            and self.preserved
            and self.scratch_restored
            and self.norms_ok
        )


def verify_feasibility(
    graph: ConstraintGraph,
    betas: Sequence[float] | None = None,
    corrected: bool = True,
) -> VerificationReport:
    """Check feasibility preservation at predicate and at gate level.

    Predicate level: for every feasible string and every family move,
    the control predicate must agree with feasibility of the permuted
    string. Gate level: a full single-layer simulation from every
    feasible basis state, at every angle in the grid, is inspected for
    probability mass on infeasible main outcomes, mass on outcomes not
    reachable by a single family move, and residual mass in the shared
    scratch registers. The corrected form must keep all three at zero;
    for the cheaper form the escaped mass is recorded, not enforced.
    """
    if betas is None:
        betas = default_beta_grid()
    mode = "corrected" if corrected else "literal"
    feasible = enumerate_feasible(graph)
    fset = set(feasible)
    family = transposition_family(graph)

    predicate_failures: list[dict] = []
    for bits in feasible:
        for perm in family:
            if chi(graph, perm, bits) != is_feasible(
                graph, apply_permutation(perm, bits)
            ):
                if len(predicate_failures) < FAILURE_ROW_CAP:
                    predicate_failures.append(
                        {
                            "bits": "".join(map(str, bits)),
                            "moved": sorted(perm.moved_points()),
                        }
                    )

    single_moves = {
        bits: {bits} | {apply_permutation(perm, bits) for perm in family}
        for bits in feasible
    }
    leakage_by_beta: dict[float, float] = {}
    multiply_moved_by_beta: dict[float, float] = {}
    scratch_max = 0.0
    norms_ok = True
    failures: list[dict] = []
    trials = 0
    for beta in betas:
        circuit = mixer_layer_circuit(graph, [beta], corrected=corrected)
        layout = circuit.layout
        scratch = [layout.a(j) for j in range(1, layout.n + 1)]
        scratch += [layout.b(j) for j in range(1, layout.n + 1)]
        worst_leak = 0.0
        worst_multi = 0.0
        for bits in feasible:
            trials += 1
            state = init_basis(layout, bits)
            try:
                apply_circuit(state, circuit)
            except SimulationPrecisionError as err:
                norms_ok = False
                if len(failures) < FAILURE_ROW_CAP:
                    failures.append(
                        {
                            "beta": beta,
                            "bits": "".join(map(str, bits)),
                            "error": str(err),
                        }
                    )
                continue
            if abs(state.norm_squared() + state.pruned_mass - 1.0) > MASS_EPS:
                norms_ok = False
            smass = register_mass(state, scratch)
            scratch_max = max(scratch_max, smass)
            marg = main_marginal(state, layout.main_qubits)
            leak = sum(p for out, p in marg.items() if out not in fset)
            multi = sum(
                p for out, p in marg.items() if out not in single_moves[bits]
            )
            worst_leak = max(worst_leak, leak)
            worst_multi = max(worst_multi, multi)
            if (leak > MASS_EPS or smass > MASS_EPS) and len(failures) < FAILURE_ROW_CAP:
                failures.append(
                    {
                        "beta": beta,
                        "bits": "".join(map(str, bits)),
                        "leakage": leak,
                        "multiply_moved": multi,
                        "scratch_mass": smass,
                    }
                )
        leakage_by_beta[beta] = worst_leak
        multiply_moved_by_beta[beta] = worst_multi
    max_leakage = max(leakage_by_beta.values()) if leakage_by_beta else 0.0
    max_multi = max(multiply_moved_by_beta.values()) if multiply_moved_by_beta else 0.0
    return VerificationReport(
        mode=mode,
        betas=tuple(betas),
        states_checked=len(feasible),
        trials=trials,
        predicate_consistent=not predicate_failures,
        predicate_failures=predicate_failures,
        preserved=max_leakage < MASS_EPS,
        max_leakage=max_leakage,
        leakage_by_beta=leakage_by_beta,
        max_multiply_moved=max_multi,
        multiply_moved_by_beta=multiply_moved_by_beta,
        scratch_max_mass=scratch_max,
        scratch_restored=scratch_max < MASS_EPS,
        norms_ok=norms_ok,
        failures=failures,
    )


class ExplorabilityVerifier:
    """Exact k-layer transition probabilities via the Markov reduction.

    One-step rows come from gate-level single-layer simulations, built
    lazily per mixer angle and cached, along with their matrix powers.
    """

    def __init__(self, graph: ConstraintGraph, corrected: bool = True):
        self.graph = graph
        self.corrected = corrected
        self.states: list[tuple[int, ...]] = enumerate_feasible(graph)
        self.position = {s: i for i, s in enumerate(self.states)}
        self._matrices: dict[float, np.ndarray] = {}
        self._powers: dict[tuple[float, int], np.ndarray] = {}

    def matrix(self, beta: float) -> np.ndarray:
        if beta not in self._matrices:
            circuit = mixer_layer_circuit(self.graph, [beta], corrected=self.corrected)
            size = len(self.states)
            m = np.zeros((size, size))
            for i, bits in enumerate(self.states):
                marg = layer_marginal(self.graph, bits, beta, self.corrected, circuit)
                for out, p in marg.items():
                    j = self.position.get(out)
                    if j is None:
                        raise RuntimeError(
                            "mixer layer leaked probability outside the feasible set"
                        )
                    m[i, j] = p
            row_err = float(np.abs(m.sum(axis=1) - 1.0).max())
            if row_err > ROW_SUM_EPS:
                raise RuntimeError(f"transition rows sum to 1 +- {row_err:.3e}")
            self._matrices[beta] = m
        return self._matrices[beta]

    def power(self, beta: float, k: int) -> np.ndarray:
        if k < 1:
            raise ValueError("power needs at least one step")
        key = (beta, k)
        if key not in self._powers:
            if k == 1:
                self._powers[key] = self.matrix(beta)
            else:
                self._powers[key] = self.power(beta, k - 1) @ self.matrix(beta)
        return self._powers[key]

    def transition(
        self, source: tuple[int, ...], target: tuple[int, ...], steps: int, beta: float
    ) -> float:
        return float(
            self.power(beta, steps)[self.position[source], self.position[target]]
        )


def _ordered_betas(betas: Sequence[float]) -> list[float]:
    # Small angles keep per-step stay factors close to one, so they tend
    # to witness long paths; try them before wider rotations.
    return sorted(betas, key=lambda b: (abs(math.sin(b)) < 1e-12, abs(b)))


def _all_pairs_hops(graph: ConstraintGraph, states: list[tuple[int, ...]]) -> np.ndarray:
    """Shortest feasibility-preserving move counts between feasible states."""
    position = {s: i for i, s in enumerate(states)}
    family = transposition_family(graph)
    neighbors: list[list[int]] = []
    for bits in states:
        out = set()
        for perm in family:
            image = apply_permutation(perm, bits)
            if image != bits and image in position:
                out.add(position[image])
        neighbors.append(sorted(out))
    size = len(states)
    hops = -np.ones((size, size), dtype=int)
    for start in range(size):
        hops[start, start] = 0
        queue = deque([start])
        while queue:
            here = queue.popleft()
            for nxt in neighbors[here]:
                if hops[start, nxt] < 0:
                    hops[start, nxt] = hops[start, here] + 1
                    queue.append(nxt)
    return hops


@dataclass
class ExplorabilityResult:
    """Witness search outcome for one ordered pair of feasible states."""

    source: tuple[int, ...]
    target: tuple[int, ...]
    connected: bool
    hit: bool
    k: int
    beta: float | None
    overlap: float
    planned_steps: int
    used_planner: bool
    threshold: float

    @property
    def passed(self) -> bool:
        return self.hit


def verify_explorability(
    graph: ConstraintGraph,
    source: tuple[int, ...],
    target: tuple[int, ...],
    betas: Sequence[float] | None = None,
    k_max: int | None = None,
    threshold: float = OVERLAP_EPS,
    corrected: bool = True,
    verifier: ExplorabilityVerifier | None = None,
) -> ExplorabilityResult:
    """Search for a mixer-angle witness carrying source onto target.

    For each angle in the grid, layer counts climb from one up to k_max
    (twice the operation count by default) and the exact k-layer
    transition probability is read off the Markov reduction; the first
    combination exceeding the threshold is returned. The reported step
    budget comes from the constructive detour plan when both endpoints
    fit inside the first half of the horizon, and from the
    breadth-first shortest move count otherwise. A miss is reported
    with the best overlap seen, never raised.
    """
    if not is_feasible(graph, source) or not is_feasible(graph, target):
        raise ValueError("explorability is defined between feasible bitstrings")
    if betas is None:
        betas = default_beta_grid()
    if verifier is None:
        verifier = ExplorabilityVerifier(graph, corrected=corrected)
    if source == target:
        return ExplorabilityResult(
            source, target, True, True, 0, None, 1.0, 0, False, threshold
        )
    if k_max is None:
        k_max = 2 * graph.operation_count

    used_planner = False
    planned = -1
    if fits_in_first_half(graph, source) and fits_in_first_half(graph, target):
        planned = len(plan_transposition_path(graph, source, target))
        used_planner = True
    else:
        path = shortest_transposition_path(graph, source, target)
        if path is not None:
            planned = len(path)
    connected = planned >= 0

    best_overlap = 0.0
    best_k = 1
    best_beta: float | None = None
    for beta in _ordered_betas(betas):
        for k in range(1, k_max + 1):
            prob = verifier.transition(source, target, k, beta)
            if prob > best_overlap:
                best_overlap, best_k, best_beta = prob, k, beta
            if prob > threshold:
                return ExplorabilityResult(
                    source, target, connected, True, k, beta, prob,
                    planned, used_planner, threshold,
                )
    return ExplorabilityResult(
        source, target, connected, False, best_k, best_beta, best_overlap,
        planned, used_planner, threshold,
    )


@dataclass
class ExplorabilitySweep:
    """Aggregate witness search over every ordered pair of feasible states."""

    threshold: float
    k_max: int
    step_bound: int
    pairs_checked: int
    planner_pairs: int
    fallback_pairs: int
    hits: int
    all_connected: bool
    all_above_threshold: bool
    min_overlap: float
    worst_pair: tuple[tuple[int, ...], tuple[int, ...]] | None
    max_planned_steps: int
    bound_respected: bool
    betas_used: tuple[float, ...]
    witness_depth_histogram: dict[int, int]
    misses: list[tuple[tuple[int, ...], tuple[int, ...]]]

    @property
    def passed(self) -> bool:
        return (
            self.all_connected
            and self.all_above_threshold
            and self.bound_respected
        )


def explorability_sweep(
    graph: ConstraintGraph,
    betas: Sequence[float] | None = None,
    k_max: int | None = None,
    threshold: float = OVERLAP_EPS,
    corrected: bool = True,
) -> ExplorabilitySweep:
    """Run the pairwise witness search across the whole feasible set.

    Angles are tried lazily, smallest net rotation first, and dropped
    from consideration once every pair has a witness; each angle costs
    one batch of gate-level single-layer simulations, after which all
    powers and pair lookups are cheap matrix work. Step budgets per
    pair come from the constructive plan (both endpoints in the first
    half of the horizon) or breadth-first search, and the witness layer
    count is capped at twice the operation count.
    """
    if betas is None:
        betas = default_beta_grid()
    verifier = ExplorabilityVerifier(graph, corrected=corrected)
    states = verifier.states
    if k_max is None:
        k_max = 2 * graph.operation_count
    step_bound = 2 * graph.operation_count

    hops = _all_pairs_hops(graph, states)
    fits = [fits_in_first_half(graph, s) for s in states]
    planned: dict[tuple[int, int], int] = {}
    planner_pairs = 0
    fallback_pairs = 0
    max_planned = 0
    all_connected = True
    for i, src in enumerate(states):
        for j, dst in enumerate(states):
            if i == j:
                continue
            if fits[i] and fits[j]:
                planned[(i, j)] = len(plan_transposition_path(graph, src, dst))
                planner_pairs += 1
            else:
                fallback_pairs += 1
                if hops[i, j] < 0:
                    all_connected = False
                    planned[(i, j)] = -1
                    continue
                planned[(i, j)] = int(hops[i, j])
            max_planned = max(max_planned, planned[(i, j)])

    pending = {pair for pair, steps in planned.items() if steps >= 0}
    unreachable = {pair for pair, steps in planned.items() if steps < 0}
    best: dict[tuple[int, int], float] = {pair: 0.0 for pair in planned}
    witnesses: dict[tuple[int, int], tuple[int, float, float]] = {}
    betas_used: list[float] = []
    for beta in _ordered_betas(betas):
        if not pending:
            break
        betas_used.append(beta)
        m = verifier.matrix(beta)
        powers = [m]
        for _ in range(1, k_max):
            powers.append(powers[-1] @ m)
        for pair in sorted(pending):
            i, j = pair
            hit = None
            for step_index, mat in enumerate(powers):
                prob = float(mat[i, j])
                if prob > best[pair]:
                    best[pair] = prob
                if prob > threshold:
                    hit = (step_index + 1, beta, prob)
                    break
            if hit is not None:
                witnesses[pair] = hit
                pending.discard(pair)

    min_overlap = float("inf")
    worst_pair = None
    for pair in planned:
        overlap = witnesses[pair][2] if pair in witnesses else best[pair]
        if overlap < min_overlap:
            min_overlap = overlap
            worst_pair = (states[pair[0]], states[pair[1]])
    if not planned:
        min_overlap = 0.0
    depth_hist: dict[int, int] = {}
    for k, _, _ in witnesses.values():
        depth_hist[k] = depth_hist.get(k, 0) + 1
    misses = [
        (states[i], states[j]) for i, j in sorted(pending | unreachable)
    ]
    return ExplorabilitySweep(
        threshold=threshold,
        k_max=k_max,
        step_bound=step_bound,
        pairs_checked=len(planned),
        planner_pairs=planner_pairs,
        fallback_pairs=fallback_pairs,
        hits=len(witnesses),
        all_connected=all_connected,
        all_above_threshold=len(witnesses) == len(planned),
        min_overlap=min_overlap,
        worst_pair=worst_pair,
        max_planned_steps=max_planned,
        bound_respected=max_planned <= step_bound,
        betas_used=tuple(betas_used),
        witness_depth_histogram=dict(sorted(depth_hist.items())),
        misses=misses,
    )


def expected_cost(
    state: SparseState,
    layout: RegisterLayout,
    cost: Callable[[tuple[int, ...]], float],
) -> float:
    """Mean cost of measuring the main register of a prepared state."""
    marginal = main_marginal(state, layout.main_qubits)
    return sum(p * cost(bits) for bits, p in marginal.items())


@dataclass(frozen=True)
class OptimizeConfig:
    layers: int = 1
    resolution: int = 8
    seed: int = 11
    shots: int = 2048
    corrected: bool = True
    refine: bool = False
    initial: tuple[int, ...] | None = None


@dataclass
class OptimizeResult:
    params: QaoaParams
    expected_makespan: float
    initial_makespan: float
    optimum_makespan: float
    initial_optimum_probability: float
    optimum_probability: float
    marginal: dict[tuple[int, ...], float]
    samples: dict[tuple[int, ...], int]
    table: list[dict]
    evaluations: int


def optimize(graph: ConstraintGraph, config: OptimizeConfig = OptimizeConfig()) -> OptimizeResult:
    """Grid-search the alternating ansatz for minimum expected makespan.

    The measurement distribution is computed exactly through the Markov
    reduction. It does not depend on the phase angles (no two move
    histories interfere), so the search evaluates each mixer-angle
    tuple once and sweeps phase angles only for the record; ties are
    broken toward the first grid point scanned. A seeded multinomial
    sample of the best distribution is attached to the result.
    """
    inst = graph.instance
    index = graph.index
    if config.initial is not None:
        initial = config.initial
    else:
        initial = encode(index, greedy_schedule(inst))
    if not is_feasible(graph, initial):
        raise ValueError("initial bitstring must be feasible")

    verifier = ExplorabilityVerifier(graph, corrected=config.corrected)
    states = verifier.states
    position = verifier.position
    costs = np.array(
        [float(makespan(inst, decode(index, bits))) for bits in states]
    )
    optimum = float(costs.min())
    argmin = costs <= optimum + 1e-12
    start = np.zeros(len(states))
    start[position[initial]] = 1.0

    def distribution(betas: Sequence[float]) -> np.ndarray:
        v = start
        for beta in betas:
            v = v @ verifier.matrix(beta)
        return v

    grid = [math.pi * r / config.resolution for r in range(config.resolution)]
    cache: dict[tuple[float, ...], np.ndarray] = {}
    table: list[dict] = []
    best_value = float("inf")
    best_params: QaoaParams | None = None
    evaluations = 0
    for beta_tuple in product(grid, repeat=config.layers):
        v = cache.get(beta_tuple)
        if v is None:
            v = distribution(beta_tuple)
            cache[beta_tuple] = v
        value = float(v @ costs)
        for gamma_tuple in product(grid, repeat=config.layers):
            evaluations += 1
            table.append(
                {
                    "betas": list(beta_tuple),
                    "gammas": list(gamma_tuple),
                    "expected_makespan": value,
                }
            )
            if value < best_value - 1e-12:
                best_value = value
                best_params = QaoaParams(beta_tuple, gamma_tuple)

    if config.refine and best_params is not None:
        from scipy.optimize import minimize

        def objective(vec: np.ndarray) -> float:
            return float(distribution(tuple(vec)) @ costs)

        polished = minimize(
            objective,
            np.array(best_params.betas),
            method="Nelder-Mead",
            options={"xatol": 1e-4, "fatol": 1e-9, "maxiter": 200},
        )
        evaluations += int(polished.nfev)
        if polished.fun < best_value:
            best_value = float(polished.fun)
            best_params = QaoaParams(tuple(float(b) for b in polished.x), best_params.gammas)

    assert best_params is not None
    final = distribution(best_params.betas)
    marginal = {bits: float(p) for bits, p in zip(states, final) if p > 0.0}
    rng = np.random.default_rng(config.seed)
    outcomes = sorted(marginal)
    probs = np.array([marginal[o] for o in outcomes])
    counts = rng.multinomial(config.shots, probs / probs.sum())
    samples = {o: int(c) for o, c in zip(outcomes, counts) if c}
    return OptimizeResult(
        params=best_params,
        expected_makespan=best_value,
        initial_makespan=float(costs[position[initial]]),
        optimum_makespan=optimum,
        initial_optimum_probability=float(start @ argmin),
        optimum_probability=float(final @ argmin),
        marginal=marginal,
        samples=samples,
        table=table,
        evaluations=evaluations,
    )
