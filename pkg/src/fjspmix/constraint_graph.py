"""Conflict graph over machine-eligible assignments.

Vertices are the indexed assignments. Two assignments are joined by an
edge when they can never belong to the same valid schedule:

* assignment conflict: two distinct choices for the same operation,
* order conflict: two operations of one job scheduled so the earlier
  one finishes after the later one starts,
* machine conflict: two distinct operations occupying the same machine
  in overlapping time windows.

A bitstring is feasible exactly when it marks one vertex per operation
(total weight equals the operation count) and the marked set is
independent in this graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

from .instance import (
    Assignment,
    AssignmentIndex,
    FjspInstance,
    Schedule,
    build_index,
    decode,
)


class ConflictKind(Enum):
    ASSIGNMENT = "assignment"
    ORDER = "order"
    MACHINE = "machine"


def conflicts(inst: FjspInstance, a: Assignment, b: Assignment) -> set[ConflictKind]:
    """All conflict kinds holding between two assignments (empty if compatible)."""
    kinds: set[ConflictKind] = set()
    if a == b:
        return kinds
    if (a.job, a.op) == (b.job, b.op):
        kinds.add(ConflictKind.ASSIGNMENT)
    elif a.job == b.job:
        early, late = (a, b) if a.op < b.op else (b, a)
        if early.time + inst.duration(early.job, early.op, early.machine) > late.time:
            kinds.add(ConflictKind.ORDER)
    if (a.job, a.op) != (b.job, b.op) and a.machine == b.machine:
        da = inst.duration(a.job, a.op, a.machine)
        db = inst.duration(b.job, b.op, b.machine)
        if a.time < b.time + db and b.time < a.time + da:
            kinds.add(ConflictKind.MACHINE)
    return kinds


@dataclass(frozen=True)
class ConstraintGraph:
    instance: FjspInstance
    index: AssignmentIndex
    adjacency: tuple[frozenset[int], ...] = field(repr=False)
    edge_kinds: dict[tuple[int, int], frozenset[ConflictKind]] = field(repr=False)

    @property
    def size(self) -> int:
        return self.index.size

    @property
    def operation_count(self) -> int:
        return self.instance.operation_count

    def neighbors(self, v: int) -> frozenset[int]:
        """Open neighborhood of vertex v (1-based); v itself is excluded."""
        return self.adjacency[v - 1]

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u - 1]

    def degree(self, v: int) -> int:
        return len(self.adjacency[v - 1])

    def degree_histogram(self) -> dict[int, int]:
        """Map from degree to the number of vertices with that degree."""
        hist: dict[int, int] = {}
        for nbrs in self.adjacency:
            hist[len(nbrs)] = hist.get(len(nbrs), 0) + 1
        return dict(sorted(hist.items()))

    @property
    def edge_count(self) -> int:
        return len(self.edge_kinds)


def build_graph(inst: FjspInstance, index: AssignmentIndex | None = None) -> ConstraintGraph:
    if index is None:
        index = build_index(inst)
    n = index.size
    adjacency: list[set[int]] = [set() for _ in range(n)]
    edge_kinds: dict[tuple[int, int], frozenset[ConflictKind]] = {}
    for u, v in combinations(range(1, n + 1), 2):
        kinds = conflicts(inst, index.assignment_of(u), index.assignment_of(v))
        if kinds:
            adjacency[u - 1].add(v)
            adjacency[v - 1].add(u)
            edge_kinds[(u, v)] = frozenset(kinds)
    return ConstraintGraph(
        instance=inst,
        index=index,
        adjacency=tuple(frozenset(s) for s in adjacency),
        edge_kinds=edge_kinds,
    )


def is_feasible(graph: ConstraintGraph, bits: tuple[int, ...]) -> bool:
    """Weight equals the operation count and the support is independent."""
    support = [i + 1 for i, b in enumerate(bits) if b]
    if len(support) != graph.operation_count:
        return False
    return all(not graph.has_edge(u, v) for u, v in combinations(support, 2))


def enumerate_feasible(graph: ConstraintGraph) -> list[tuple[int, ...]]:
    """All feasible bitstrings, sorted lexicographically.

    Independence forces at most one vertex per operation group and the
    weight constraint forces exactly one, so the search assigns one
    vertex per group and backtracks as soon as a partial choice hits a
    conflict edge. Guarded to modest sizes; the output is a full
    enumeration and grows with the product of the group sizes.
    """
    n = graph.size
    if n > 28:
        raise ValueError("feasible-set enumeration is limited to 28 vertices")
    groups = graph.index.operation_vertices
    result: list[tuple[int, ...]] = []
    chosen: list[int] = []

    def extend(depth: int) -> None:
        if depth == len(groups):
            bits = [0] * n
            for v in chosen:
                bits[v - 1] = 1
            result.append(tuple(bits))
            return
        for v in groups[depth]:
            if all(not graph.has_edge(u, v) for u in chosen):
                chosen.append(v)
                extend(depth + 1)
                chosen.pop()

    extend(0)
    return sorted(result)


def schedule_satisfies_constraints(inst: FjspInstance, schedule: Schedule) -> bool:
    """Direct semantic validity check, independent of the graph.

    Requires exactly one assignment per operation, job order respected
    (an operation finishes no later than its successor starts), and no
    two operations overlapping on one machine.
    """
    table = schedule.by_operation()
    if sorted(table) != inst.operation_ids():
        return False
    if any(len(choices) != 1 for choices in table.values()):
        return False
    chosen = {op_id: choices[0] for op_id, choices in table.items()}
    for a in chosen.values():
        if a.machine not in inst.jobs[a.job - 1].operations[a.op - 1].eligible:
            return False
    for a, b in combinations(chosen.values(), 2):
        if a.job == b.job:
            early, late = (a, b) if a.op < b.op else (b, a)
            if early.time + inst.duration(early.job, early.op, early.machine) > late.time:
                return False
        if a.machine == b.machine:
            da = inst.duration(a.job, a.op, a.machine)
            db = inst.duration(b.job, b.op, b.machine)
            if a.time < b.time + db and b.time < a.time + da:
                return False
    return True


def graph_semantic_equivalence(graph: ConstraintGraph, bits: tuple[int, ...]) -> bool:
    """Graph feasibility of one bitstring agrees with the semantic oracle.

    The graph side tests weight and independence; the oracle decodes the
    bitstring into timed assignments and checks the scheduling rules
    directly. Returns True when the two verdicts match.
    """
    semantic = schedule_satisfies_constraints(graph.instance, decode(graph.index, bits))
    return is_feasible(graph, bits) == semantic
