"""Permutations of assignment vertices and the feasibility control predicate.

The mixer moves schedule weight along transpositions that swap two
assignments of the same operation. Whether a move is allowed is decided
by a predicate over the current bitstring: a vertex may only be carried
onto a target whose graph neighborhood is unoccupied after the move.
The conjunction over all vertices holds exactly when the permuted
bitstring is again an independent set, so conditioning the move on it
keeps the feasible subspace closed.

This module also constructs explicit transposition paths between any
two feasible schedules whose assignments fit in the first half of the
horizon: detour through the second half, then settle into the target.
Every prefix of the path stays feasible.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import combinations

from .constraint_graph import ConstraintGraph, is_feasible
from .instance import Assignment


class PlanPreconditionError(ValueError):
    """Endpoints do not satisfy the first-half requirement of the planner."""


class PlanPrefixError(RuntimeError):
    """A constructed path visited an infeasible intermediate state."""


@dataclass(frozen=True)
class Permutation:
    """A permutation of vertex labels 1..size, stored as an image table."""

    size: int
    images: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.images) != list(range(1, self.size + 1)):
            raise ValueError("images must be a rearrangement of 1..size")

    @classmethod
    def identity(cls, size: int) -> "Permutation":
        return cls(size, tuple(range(1, size + 1)))

    @classmethod
    def transposition(cls, size: int, u: int, v: int) -> "Permutation":
        if u == v:
            raise ValueError("a transposition needs two distinct points")
        images = list(range(1, size + 1))
        images[u - 1], images[v - 1] = v, u
        return cls(size, tuple(images))

    def image(self, j: int) -> int:
        return self.images[j - 1]

    def preimage(self, l: int) -> int:
        return self.images.index(l) + 1

    def inverse(self) -> "Permutation":
        inv = [0] * self.size
        for j, l in enumerate(self.images, start=1):
            inv[l - 1] = j
        return Permutation(self.size, tuple(inv))

    def moved_points(self) -> tuple[int, ...]:
        return tuple(j for j in range(1, self.size + 1) if self.images[j - 1] != j)

    def __repr__(self) -> str:
        moved = self.moved_points()
        if not moved:
            return f"Permutation.identity({self.size})"
        pairs = ", ".join(f"{j}->{self.image(j)}" for j in moved)
        return f"Permutation({self.size}, {pairs})"


def apply_permutation(perm: Permutation, bits: tuple[int, ...]) -> tuple[int, ...]:
    """Move the bit at position j to position perm(j)."""
    if len(bits) != perm.size:
        raise ValueError(f"bitstring length {len(bits)} != permutation size {perm.size}")
    out = [0] * perm.size
    for j in range(1, perm.size + 1):
        out[perm.image(j) - 1] = bits[j - 1]
    return tuple(out)


def chi_j(graph: ConstraintGraph, perm: Permutation, bits: tuple[int, ...], j: int) -> bool:
    """Single-vertex clause of the control predicate.

    True when vertex j carries no weight, or when every graph neighbor
    of its destination is unoccupied in the permuted string.
    """
    if not bits[j - 1]:
        return True
    return all(not bits[perm.preimage(l) - 1] for l in graph.neighbors(perm.image(j)))


def chi(graph: ConstraintGraph, perm: Permutation, bits: tuple[int, ...]) -> bool:
    """Full control predicate: true exactly when the permuted support is independent."""
    return all(chi_j(graph, perm, bits, j) for j in range(1, graph.size + 1))


def transposition_family(graph: ConstraintGraph) -> list[Permutation]:
    """All swaps of two assignments belonging to the same operation.

    These are the only moves the mixer uses; they preserve the one
    vertex per operation structure of feasible strings by construction.
    """
    n = graph.size
    family = []
    for group in graph.index.operation_vertices:
        for u, v in combinations(group, 2):
            family.append(Permutation.transposition(n, u, v))
    return family


def _first_half(graph: ConstraintGraph) -> int:
    return graph.instance.horizon // 2


def fits_in_first_half(graph: ConstraintGraph, bits: tuple[int, ...]) -> bool:
    """Every marked assignment completes within the first half of the horizon."""
    half = _first_half(graph)
    inst = graph.instance
    for i, b in enumerate(bits):
        if not b:
            continue
        a = graph.index.assignment_of(i + 1)
        if a.time + inst.duration(a.job, a.op, a.machine) - 1 > half:
            return False
    return True


@dataclass(frozen=True)
class TranspositionPlan:
    """A feasibility-preserving transposition path between two schedules."""

    source: tuple[int, ...]
    target: tuple[int, ...]
    steps: tuple[Permutation, ...]
    states: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.steps)


def _shift_vertex(graph: ConstraintGraph, v: int, half: int) -> int:
    a = graph.index.assignment_of(v)
    return graph.index.index_of(Assignment(a.job, a.op, a.machine, a.time + half))


def _chosen_vertices(graph: ConstraintGraph, bits: tuple[int, ...]) -> list[int]:
    """One chosen vertex per operation, in operation order."""
    chosen = []
    for group in graph.index.operation_vertices:
        marked = [v for v in group if bits[v - 1]]
        if len(marked) != 1:
            raise ValueError("bitstring does not mark exactly one vertex per operation")
        chosen.append(marked[0])
    return chosen


def plan_transposition_path(
    graph: ConstraintGraph, source: tuple[int, ...], target: tuple[int, ...]
) -> TranspositionPlan:
    """Build a transposition path from one feasible schedule to another.

    Both endpoints must be feasible and must fit within the first half
    of the horizon. The path detours through second-half time slots:
    first every differing operation is parked at the target assignment
    shifted by half the horizon (per job, last operation first), then
    each parked operation settles onto the target itself (per job,
    first operation first). Second-half parking can never clash with
    first-half assignments on a machine, and the chosen operation
    orders keep job precedence intact, so every prefix is feasible.

    Within each job, all operations from the first differing one onward
    are routed through the detour, even those on which the endpoints
    agree; skipping an agreeing operation between two moved ones could
    break job order mid-path.
    """
    if not is_feasible(graph, source):
        raise ValueError("source bitstring is not feasible")
    if not is_feasible(graph, target):
        raise ValueError("target bitstring is not feasible")
    for name, bits in (("source", source), ("target", target)):
        if not fits_in_first_half(graph, bits):
            raise PlanPreconditionError(
                f"{name} schedule does not fit in the first half of the horizon"
            )
    half = _first_half(graph)
    n = graph.size
    src_choice = _chosen_vertices(graph, source)
    tgt_choice = _chosen_vertices(graph, target)

    # Group operation positions by job, in op order.
    ops_by_job: dict[int, list[int]] = {}
    for pos, (job, _op) in enumerate(graph.instance.operation_ids()):
        ops_by_job.setdefault(job, []).append(pos)

    moved: dict[int, list[int]] = {}
    for job, positions in ops_by_job.items():
        diff = [p for p in positions if src_choice[p] != tgt_choice[p]]
        if diff:
            first = min(diff)
            moved[job] = [p for p in positions if p >= first]

    steps: list[Permutation] = []
    states: list[tuple[int, ...]] = [source]
    current = source

    def push(u: int, v: int) -> None:
        nonlocal current
        tau = Permutation.transposition(n, u, v)
        nxt = apply_permutation(tau, current)
        if not is_feasible(graph, nxt):
            raise PlanPrefixError(
                f"intermediate after swapping vertices {u} and {v} is infeasible"
            )
        steps.append(tau)
        states.append(nxt)
        current = nxt

    # Phase 1: park each moved operation at its shifted target, last op first.
    for job in sorted(moved):
        for pos in reversed(moved[job]):
            push(src_choice[pos], _shift_vertex(graph, tgt_choice[pos], half))
    # Phase 2: settle each parked operation onto the target, first op first.
    for job in sorted(moved):
        for pos in moved[job]:
            push(_shift_vertex(graph, tgt_choice[pos], half), tgt_choice[pos])

    if current != target:
        raise PlanPrefixError("path construction did not reach the target")
    return TranspositionPlan(
        source=source, target=target, steps=tuple(steps), states=tuple(states)
    )


def shortest_transposition_path(
    graph: ConstraintGraph,
    source: tuple[int, ...],
    target: tuple[int, ...],
    family: list[Permutation] | None = None,
) -> list[Permutation] | None:
    """Breadth-first search for a feasibility-preserving transposition path.

    Works for any pair of feasible schedules, at the cost of exploring
    the feasible set. Returns None when no path exists.
    """
    if not is_feasible(graph, source) or not is_feasible(graph, target):
        raise ValueError("both endpoints must be feasible")
    if family is None:
        family = transposition_family(graph)
    if source == target:
        return []
    parent: dict[tuple[int, ...], tuple[tuple[int, ...], Permutation]] = {}
    queue = deque([source])
    seen = {source}
    while queue:
        state = queue.popleft()
        for tau in family:
            nxt = apply_permutation(tau, state)
            if nxt in seen or not is_feasible(graph, nxt):
                continue
            parent[nxt] = (state, tau)
            if nxt == target:
                path = []
                cursor = nxt
                while cursor != source:
                    cursor, tau_back = parent[cursor]
                    path.append(tau_back)
                path.reverse()
                return path
            seen.add(nxt)
            queue.append(nxt)
    return None
