import json
from fractions import Fraction as F

import numpy as np
import pytest

from cmot import serialization as ser
from cmot.costs import INF, CostSpec
from cmot.discretization import convergence_report, plan_partition
from cmot.experiments import rotation_plan, shift_plan
from cmot.measures import FactorSpace, marginal, to_float
from cmot.monotonicity import check_icm, verify_certificate
from cmot.solvers import MotInstance, solve

from conftest import random_plan


def roundtrip(obj, enc, dec):
    data = json.loads(ser.dumps(enc(obj)))
    return dec(data)


def test_numbers():
    assert ser.encode_number(F(1, 3)) == "1/3"
    assert ser.encode_number(2) == "2"
    assert ser.encode_number(0.25) == 0.25
    assert ser.encode_number(INF) == "inf"
    assert ser.decode_number("inf") == INF
    assert ser.decode_number("2/6") == F(1, 3)
    assert ser.decode_number(3) == F(3)
    with pytest.raises(ser.FormatError):
        ser.decode_number("x/y")
    with pytest.raises(ser.FormatError):
        ser.decode_number(True)


def test_measure_and_coupling_roundtrip(rng):
    plan = random_plan(rng, 7, n_marg=3)
    assert roundtrip(plan, ser.coupling_to_json, ser.coupling_from_json) == plan
    m = marginal(plan, 1)
    assert roundtrip(m, ser.measure_to_json, ser.measure_from_json) == m
    fplan = to_float(plan)
    assert roundtrip(fplan, ser.coupling_to_json, ser.coupling_from_json) == fplan


def test_measure_layout():
    m = marginal(shift_plan(2), 0)
    d = ser.measure_to_json(m)
    assert d == {"space": {"dim": 1, "bounds": [["0", "1"]]}, "mode": "rational",
                 "atoms": [{"point": ["0"], "weight": "1/2"}, {"point": ["1/2"], "weight": "1/2"}]}


@pytest.mark.parametrize("cost", [CostSpec.power_distance(2), CostSpec.power_distance(F(1, 2)),
                                  CostSpec.squared_sum_barycenter(3),
                                  CostSpec.equality_indicator(1, 2)])
def test_cost_roundtrip(cost):
    assert roundtrip(cost, ser.cost_to_json, ser.cost_from_json) == cost


def test_tensor_roundtrip_with_inf():
    c = CostSpec.tensor([[0, "inf"], [F(1, 2), 3]], points=[[0, 1], [0, 1]])
    d = ser.cost_to_json(c)
    assert d["values"] == [["0", "inf"], ["1/2", "3"]]
    back = ser.cost_from_json(json.loads(ser.dumps(d)))
    assert back.points == c.points
    assert back.values.tolist() == c.values.tolist()


def test_certificate_roundtrip_revalidates():
    plan = rotation_plan("1/3", 30)
    ind = CostSpec.equality_indicator(1, 2)
    cert = check_icm(plan.support, ind, 3)
    d = ser.certificate_to_json(cert)
    assert set(d) == {"k", "tuples", "permutations", "before", "after", "aggregate"}
    back = ser.certificate_from_json(json.loads(ser.dumps(d)))
    assert verify_certificate(back, ind, plan.support)


def test_instance_and_solution_roundtrip():
    plan = shift_plan(3)
    inst = MotInstance(tuple(marginal(plan, k) for k in range(2)), CostSpec.power_distance(2), "sum")
    back = roundtrip(inst, ser.instance_to_json, ser.instance_from_json)
    assert back == inst
    sol = solve(inst)
    d = ser.solution_to_json(sol)
    assert d["value"] == "1/4" and d["status"] == "optimal"
    again = ser.solution_from_json(json.loads(ser.dumps(d)))
    assert again.plan == sol.plan and again.value == sol.value


def test_partition_json():
    plan = shift_plan(4)
    d = ser.partition_to_json(plan_partition(plan, 2))
    assert d["level"] == 2 and len(d["marginals"]) == 2
    first = d["marginals"][0]
    assert [c["id"] for c in first["cells"]] == list(range(len(first["cells"])))
    assert set(first["nesting"]) == {str(c["id"]) for c in first["cells"]}


def test_convergence_csv():
    rows = convergence_report(shift_plan(4), CostSpec.power_distance(2), "sum", [1, 2])
    lines = ser.convergence_csv(rows).splitlines()
    assert lines[0] == "n,delta_n,discrepancy,objective,epsilon_envelope"
    assert len(lines) == 3 and lines[1].startswith("1,")


def test_bad_layouts():
    with pytest.raises(ser.FormatError):
        ser.measure_from_json({"space": {"bounds": [[0, 1]]}, "atoms": [{"point": [2], "weight": 1}]})
    with pytest.raises(ser.FormatError):
        ser.cost_from_json({"kind": "cosine"})
    with pytest.raises(ser.FormatError):
        ser.coupling_from_json({"spaces": [], "mode": "exact", "atoms": []})
    with pytest.raises(ser.FormatError):
        ser.measure_from_json([1, 2])


def test_load_json_reports_byte_offset(tmp_path):
    p = tmp_path / "bad.json"
    p.write_bytes('{"é": [1,}'.encode("utf-8"))
    with pytest.raises(ser.FormatError) as info:
        ser.load_json(p)
    # "é" takes two bytes, so the character offset 9 is byte 10
    assert info.value.offset == 10
    assert str(p) in str(info.value)
