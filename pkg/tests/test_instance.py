"""Instance parsing, the assignment bijection, and list scheduling."""

import json

import pytest

from fjspmix import (
    Assignment,
    HorizonTooSmallError,
    InstanceSemanticError,
    InstanceSyntaxError,
    Schedule,
    bits_to_str,
    build_index,
    decode,
    encode,
    greedy_schedule,
    makespan,
    parse_instance,
    scaling_instance,
    str_to_bits,
    with_horizon,
)
from conftest import REFERENCE, TRAP


def test_parse_reference():
    inst = parse_instance(REFERENCE)
    assert inst.machines == ("M1", "M2")
    assert inst.horizon == 2
    assert [j.name for j in inst.jobs] == ["J1", "J2"]
    assert len(inst.jobs[0].operations) == 2
    assert len(inst.jobs[1].operations) == 1
    # Machine names become 1-based indices in eligibility maps.
    assert inst.jobs[0].operations[0].eligible == {1: 1, 2: 1}
    assert inst.jobs[1].operations[0].eligible == {2: 1}
    assert inst.operation_count == 3
    assert inst.operation_ids() == [(1, 1), (1, 2), (2, 1)]


def test_parse_rejects_bad_json():
    with pytest.raises(InstanceSyntaxError):
        parse_instance("{not json")


def _payload(**overrides):
    base = json.loads(REFERENCE)
    base.update(overrides)
    return json.dumps(base)


@pytest.mark.parametrize(
    "text",
    [
        "[1, 2]",
        _payload(horizon=0),
        _payload(horizon=True),
        _payload(horizon="2"),
        _payload(machines=[]),
        _payload(machines=["M1", "M1"]),
        _payload(machines=["M1", 7]),
        _payload(jobs=[]),
        _payload(extra=1),
        _payload(jobs=[{"name": "J1"}]),
        _payload(jobs=[{"name": "", "operations": [{"eligible": {"M1": 1}}]}]),
        _payload(
            jobs=[
                {"name": "J1", "operations": [{"eligible": {"M1": 1}}]},
                {"name": "J1", "operations": [{"eligible": {"M1": 1}}]},
            ]
        ),
        _payload(jobs=[{"name": "J1", "operations": []}]),
        _payload(jobs=[{"name": "J1", "operations": [{"eligible": {}}]}]),
        _payload(jobs=[{"name": "J1", "operations": [{"eligible": {"MX": 1}}]}]),
        _payload(jobs=[{"name": "J1", "operations": [{"eligible": {"M1": 0}}]}]),
        _payload(jobs=[{"name": "J1", "operations": [{"eligible": {"M1": True}}]}]),
        _payload(jobs=[{"name": "J1", "operations": [{"eligible": {"M1": 1}, "x": 2}]}]),
    ],
)
def test_parse_rejects_schema_violations(text):
    with pytest.raises(InstanceSemanticError):
        parse_instance(text)


def test_duration_requires_eligibility(ref_instance):
    assert ref_instance.duration(2, 1, 2) == 1
    with pytest.raises(InstanceSemanticError):
        ref_instance.duration(2, 1, 1)


def test_with_horizon(ref_instance):
    wider = with_horizon(ref_instance, 4)
    assert wider.horizon == 4
    assert wider.jobs == ref_instance.jobs
    with pytest.raises(InstanceSemanticError):
        with_horizon(ref_instance, 0)


def test_index_enumeration_order(ref_instance):
    index = build_index(ref_instance)
    assert index.size == 10
    # Lexicographic over (job, op, machine, time), 1-based throughout.
    assert index.backward[:4] == (
        Assignment(1, 1, 1, 1),
        Assignment(1, 1, 1, 2),
        Assignment(1, 1, 2, 1),
        Assignment(1, 1, 2, 2),
    )
    assert index.backward[8] == Assignment(2, 1, 2, 1)
    assert index.operation_vertices == ((1, 2, 3, 4), (5, 6, 7, 8), (9, 10))


def test_index_bijection(ref_instance):
    index = build_index(ref_instance)
    for i in range(1, index.size + 1):
        assert index.index_of(index.assignment_of(i)) == i
    with pytest.raises(InstanceSemanticError):
        index.index_of(Assignment(2, 1, 1, 1))  # machine 1 not eligible
    with pytest.raises(InstanceSemanticError):
        index.assignment_of(11)
    with pytest.raises(InstanceSemanticError):
        index.assignment_of(0)


def test_encode_decode_round_trip(ref_instance):
    index = build_index(ref_instance)
    schedule = Schedule(
        frozenset(
            {Assignment(1, 1, 1, 1), Assignment(1, 2, 1, 2), Assignment(2, 1, 2, 1)}
        )
    )
    bits = encode(index, schedule)
    assert bits_to_str(bits) == "1000010010"
    assert decode(index, bits) == schedule
    with pytest.raises(InstanceSemanticError):
        decode(index, bits[:-1])


def test_bitstring_conversions():
    assert str_to_bits("0101") == (0, 1, 0, 1)
    assert bits_to_str((1, 0, 0, 1)) == "1001"
    with pytest.raises(InstanceSemanticError):
        str_to_bits("01a1")


def test_makespan(ref_instance):
    assert makespan(ref_instance, Schedule(frozenset())) == 0
    schedule = Schedule(
        frozenset(
            {Assignment(1, 1, 1, 1), Assignment(1, 2, 1, 2), Assignment(2, 1, 2, 1)}
        )
    )
    assert makespan(ref_instance, schedule) == 3


def test_greedy_reference(ref_instance):
    index = build_index(ref_instance)
    bits = encode(index, greedy_schedule(ref_instance))
    assert bits_to_str(bits) == "1000010010"


def test_greedy_respects_busy_machines():
    inst = parse_instance(TRAP)
    chosen = sorted(greedy_schedule(inst).assignments)
    # J1 takes the fast machine first; J2 falls back to the slow one.
    assert chosen == [Assignment(1, 1, 1, 1), Assignment(2, 1, 2, 1)]
    assert makespan(inst, greedy_schedule(inst)) == 4


def test_greedy_raises_when_nothing_fits():
    inst = parse_instance(
        json.dumps(
            {
                "machines": ["M1"],
                "horizon": 1,
                "jobs": [
                    {
                        "name": "J1",
                        "operations": [
                            {"eligible": {"M1": 1}},
                            {"eligible": {"M1": 1}},
                        ],
                    }
                ],
            }
        )
    )
    with pytest.raises(HorizonTooSmallError):
        greedy_schedule(inst)


@pytest.mark.parametrize("n", [8, 12, 20, 40])
def test_scaling_instance_vertex_count(n):
    inst = scaling_instance(n)
    assert build_index(inst).size == n
    assert inst.horizon == n // 4


def test_scaling_instance_deterministic():
    assert scaling_instance(16, seed=3) == scaling_instance(16, seed=3)


@pytest.mark.parametrize("n", [4, 10, 7])
def test_scaling_instance_rejects_bad_sizes(n):
    with pytest.raises(InstanceSemanticError):
        scaling_instance(n)
