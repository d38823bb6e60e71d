"""Flexible job-shop instances and their binary encoding.

An instance is a list of jobs, each an ordered sequence of operations;
every operation carries the machines that may run it and the integer
duration on each. Time is divided into slots 1..horizon. A schedule
assigns every operation one (machine, start-slot) pair.

The binary encoding enumerates all machine-eligible (job, op, machine,
time) assignments in lexicographic order with 1-based indices; a
schedule is then a bitstring marking the chosen assignments.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class InstanceError(ValueError):
    """Base class for instance file problems."""


class InstanceSyntaxError(InstanceError):
    """The instance file is not well-formed JSON."""


class InstanceSemanticError(InstanceError):
    """The instance file parses but violates the schema."""


class HorizonTooSmallError(RuntimeError):
    """No feasible schedule exists within the horizon."""


class Assignment(NamedTuple):
    """One (job, op, machine, time) choice; all fields 1-based indices."""

    job: int
    op: int
    machine: int
    time: int


@dataclass(frozen=True)
class Operation:
    """One operation: eligible machine index (1-based) -> duration."""

    eligible: dict[int, int]


@dataclass(frozen=True)
class Job:
    name: str
    operations: tuple[Operation, ...]


@dataclass(frozen=True)
class FjspInstance:
    machines: tuple[str, ...]
    horizon: int
    jobs: tuple[Job, ...]

    def duration(self, job: int, op: int, machine: int) -> int:
        """Duration of operation (job, op) on an eligible machine; 1-based args."""
        eligible = self.jobs[job - 1].operations[op - 1].eligible
        if machine not in eligible:
            raise InstanceSemanticError(
                f"machine {machine} not eligible for job {job} op {op}"
            )
        return eligible[machine]

    @property
    def operation_count(self) -> int:
        return sum(len(j.operations) for j in self.jobs)

    def operation_ids(self) -> list[tuple[int, int]]:
        """All (job, op) pairs in order, 1-based."""
        return [
            (j + 1, o + 1)
            for j, job in enumerate(self.jobs)
            for o in range(len(job.operations))
        ]


@dataclass(frozen=True)
class Schedule:
    """A set of assignments; no structural validity implied."""

    assignments: frozenset[Assignment]

    def by_operation(self) -> dict[tuple[int, int], list[Assignment]]:
        table: dict[tuple[int, int], list[Assignment]] = {}
        for a in sorted(self.assignments):
            table.setdefault((a.job, a.op), []).append(a)
        return table


def _require_keys(obj: dict, required: Iterable[str], where: str) -> None:
    required = set(required)
    present = set(obj)
    missing = required - present
    unknown = present - required
    if missing:
        raise InstanceSemanticError(f"{where}: missing keys {sorted(missing)}")
    if unknown:
        raise InstanceSemanticError(f"{where}: unknown keys {sorted(unknown)}")


def _positive_int(value, where: str) -> int:
    # bool is an int subclass; reject it explicitly
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise InstanceSemanticError(f"{where}: expected a positive integer, got {value!r}")
    return value


def parse_instance(text: str) -> FjspInstance:
    """Parse the JSON instance format.

    Schema: {"machines": [name...], "horizon": int,
             "jobs": [{"name": str, "operations": [{"eligible": {machine: duration}}]}]}
    Unknown keys are rejected.
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceSyntaxError(
            f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(raw, dict):
        raise InstanceSemanticError("top level must be an object")
    _require_keys(raw, ("machines", "horizon", "jobs"), "instance")

    machines = raw["machines"]
    if not isinstance(machines, list) or not machines:
        raise InstanceSemanticError("machines must be a non-empty list")
    for m in machines:
        if not isinstance(m, str):
            raise InstanceSemanticError(f"machine name must be a string, got {m!r}")
    if len(set(machines)) != len(machines):
        raise InstanceSemanticError("duplicate machine names")
    machine_index = {name: i + 1 for i, name in enumerate(machines)}

    horizon = _positive_int(raw["horizon"], "horizon")

    raw_jobs = raw["jobs"]
    if not isinstance(raw_jobs, list) or not raw_jobs:
        raise InstanceSemanticError("jobs must be a non-empty list")
    jobs = []
    seen_names = set()
    for jpos, rj in enumerate(raw_jobs, start=1):
        where = f"jobs[{jpos}]"
        if not isinstance(rj, dict):
            raise InstanceSemanticError(f"{where}: must be an object")
        _require_keys(rj, ("name", "operations"), where)
        name = rj["name"]
        if not isinstance(name, str) or not name:
            raise InstanceSemanticError(f"{where}: name must be a non-empty string")
        if name in seen_names:
            raise InstanceSemanticError(f"{where}: duplicate job name {name!r}")
        seen_names.add(name)
        raw_ops = rj["operations"]
        if not isinstance(raw_ops, list) or not raw_ops:
            raise InstanceSemanticError(f"{where}: operations must be a non-empty list")
        ops = []
        for opos, ro in enumerate(raw_ops, start=1):
            owhere = f"{where}.operations[{opos}]"
            if not isinstance(ro, dict):
                raise InstanceSemanticError(f"{owhere}: must be an object")
            _require_keys(ro, ("eligible",), owhere)
            raw_elig = ro["eligible"]
            if not isinstance(raw_elig, dict) or not raw_elig:
                raise InstanceSemanticError(f"{owhere}: eligible must be non-empty")
            eligible = {}
            for mname, dur in raw_elig.items():
                if mname not in machine_index:
                    raise InstanceSemanticError(f"{owhere}: unknown machine {mname!r}")
                eligible[machine_index[mname]] = _positive_int(
                    dur, f"{owhere}.eligible[{mname!r}]"
                )
            ops.append(Operation(eligible=dict(sorted(eligible.items()))))
        jobs.append(Job(name=name, operations=tuple(ops)))
    return FjspInstance(machines=tuple(machines), horizon=horizon, jobs=tuple(jobs))


def with_horizon(inst: FjspInstance, horizon: int) -> FjspInstance:
    """Same instance re-indexed with a different number of time slots."""
    if horizon < 1:
        raise InstanceSemanticError("horizon must be positive")
    return FjspInstance(machines=inst.machines, horizon=horizon, jobs=inst.jobs)


@dataclass(frozen=True)
class AssignmentIndex:
    """Bijection between machine-eligible assignments and indices 1..N.

    Enumeration order is lexicographic over (job, op, machine, time),
    so every operation's assignments occupy one contiguous index range.
    """

    forward: dict[Assignment, int]
    backward: tuple[Assignment, ...]
    operation_vertices: tuple[tuple[int, ...], ...] = field(repr=False)

    @property
    def size(self) -> int:
        return len(self.backward)

    def index_of(self, a: Assignment) -> int:
        if a not in self.forward:
            raise InstanceSemanticError(f"assignment {a} is not machine-eligible")
        return self.forward[a]

    def assignment_of(self, i: int) -> Assignment:
        if not 1 <= i <= len(self.backward):
            raise InstanceSemanticError(f"index {i} out of range 1..{len(self.backward)}")
        return self.backward[i - 1]


def build_index(inst: FjspInstance) -> AssignmentIndex:
    backward: list[Assignment] = []
    groups: list[tuple[int, ...]] = []
    for j, job in enumerate(inst.jobs, start=1):
        for o, op in enumerate(job.operations, start=1):
            group = []
            for m in sorted(op.eligible):
                for t in range(1, inst.horizon + 1):
                    backward.append(Assignment(j, o, m, t))
                    group.append(len(backward))
            groups.append(tuple(group))
    forward = {a: i + 1 for i, a in enumerate(backward)}
    return AssignmentIndex(
        forward=forward, backward=tuple(backward), operation_vertices=tuple(groups)
    )


def encode(index: AssignmentIndex, schedule: Schedule) -> tuple[int, ...]:
    """Schedule -> bitstring of length N (tuple of 0/1)."""
    bits = [0] * index.size
    for a in schedule.assignments:
        bits[index.index_of(a) - 1] = 1
    return tuple(bits)


def decode(index: AssignmentIndex, bits: tuple[int, ...]) -> Schedule:
    """Bitstring -> schedule of the marked assignments."""
    if len(bits) != index.size:
        raise InstanceSemanticError(
            f"bitstring length {len(bits)} != index size {index.size}"
        )
    marked = frozenset(
        index.backward[i] for i, b in enumerate(bits) if b
    )
    return Schedule(assignments=marked)


def bits_to_str(bits: tuple[int, ...]) -> str:
    return "".join("1" if b else "0" for b in bits)


def str_to_bits(s: str) -> tuple[int, ...]:
    if any(ch not in "01" for ch in s):
        raise InstanceSemanticError(f"bitstring must be over 0/1, got {s!r}")
    return tuple(1 if ch == "1" else 0 for ch in s)


def makespan(inst: FjspInstance, schedule: Schedule) -> int:
    """Latest completion slot over the assignments; 0 for the empty schedule."""
    best = 0
    for a in schedule.assignments:
        best = max(best, a.time + inst.duration(a.job, a.op, a.machine))
    return best


def scaling_instance(vertex_count: int, seed: int = 7) -> FjspInstance:
    """Family of growing instances for resource sweeps.

    Two single-operation jobs, each eligible on both of two machines,
    with the horizon set to a quarter of the requested vertex count, so
    the encoding has exactly `vertex_count` assignments. Durations are
    drawn reproducibly from the seed.
    """
    if vertex_count < 8 or vertex_count % 4:
        raise InstanceSemanticError("vertex count must be a multiple of 4, at least 8")
    horizon = vertex_count // 4
    rng = random.Random(f"{seed}:{vertex_count}")
    top = max(1, horizon // 2)

    def operation() -> Operation:
        return Operation(eligible={1: rng.randint(1, top), 2: rng.randint(1, top)})

    jobs = (Job("J1", (operation(),)), Job("J2", (operation(),)))
    return FjspInstance(machines=("M1", "M2"), horizon=horizon, jobs=jobs)


def greedy_schedule(inst: FjspInstance) -> Schedule:
    """List scheduling in job/operation order.

    Each operation takes the earliest slot on the first eligible machine
    that admits it, respecting order within the job and machine busy
    intervals placed so far.
    """
    busy: dict[int, list[tuple[int, int]]] = {}  # machine -> [start, end) intervals
    chosen: list[Assignment] = []
    for j, job in enumerate(inst.jobs, start=1):
        ready = 1  # earliest admissible start for the next operation of this job
        for o, op in enumerate(job.operations, start=1):
            placed = None
            for t in range(ready, inst.horizon + 1):
                for m in sorted(op.eligible):
                    d = op.eligible[m]
                    if t + d - 1 > inst.horizon:
                        continue
                    overlap = any(
                        t < e and s < t + d for s, e in busy.get(m, [])
                    )
                    if not overlap:
                        placed = Assignment(j, o, m, t)
                        break
                if placed:
                    break
            if placed is None:
                raise HorizonTooSmallError(
                    f"job {job.name} operation {o} does not fit within horizon"
                    f" {inst.horizon}"
                )
            d = op.eligible[placed.machine]
            busy.setdefault(placed.machine, []).append((placed.time, placed.time + d))
            ready = placed.time + d
            chosen.append(placed)
    return Schedule(assignments=frozenset(chosen))
