import json
import math
from pathlib import Path

import pytest

import acpo

DATA = Path(__file__).resolve().parents[1] / "data"


def test_k3_at_ratio_two():
    assert acpo.k3(math.log(0.25), math.log(0.5)) == pytest.approx(1 - math.log(2), abs=1e-12)


def test_group_advantage_is_standardized():
    adv = acpo.group_base_advantage([1.0, 0.0, 0.0, 1.0])
    assert adv == [1.0, -1.0, -1.0, 1.0]
    assert acpo.group_base_advantage([1.0, 1.0]) == [0.0, 0.0]


def test_weight_cases():
    assert acpo.modulation_weight(1.0, 0.5, 1.0) == 1.5
    assert acpo.modulation_weight(1.0, 0.5, -1.0) == pytest.approx(0.7)
    assert acpo.modulation_weight(0.5, 0.5, 0.0) == 1.0


def test_information_quantities():
    assert acpo.entropy([0.5, 0.5]) == pytest.approx(math.log(2))
    assert acpo.mutual_information([[0.5, 0.0], [0.0, 0.5]]) == pytest.approx(math.log(2))
    with pytest.raises(acpo.ValidationError):
        acpo.mutual_information([[0.5, 0.6], [0.0, 0.5]])
    assert acpo.theorem_sweep(joints=50, chains=20)["passed"]


def test_segment_fixture():
    lines = (DATA / "trace_fixture.jsonl").read_text().splitlines()
    assert acpo.segment(lines[0], quantile=0.3, boundary_ids=[21]) == [3]
    assert acpo.segment(lines[1], quantile=0.3, boundary_ids=[21]) == [3, 6]


def test_policy_round_trip(tmp_path):
    p = acpo.Policy(10)
    path = tmp_path / "base.ckpt"
    p.save(str(path))
    assert acpo.Policy.load(str(path)) == p
    assert 0.0 <= p.acc_at_k(tasks=10, k=2) <= 1.0


def test_cli_analyze(tmp_path):
    out = tmp_path / "seg.jsonl"
    code, _, err = acpo.run_cli(
        ["analyze-trace", "--in", str(DATA / "trace_fixture.jsonl"), "--quantile", "0.3",
         "--boundary-text", ".", "--out", str(out)])
    assert code == 0, err
    rows = [json.loads(l) for l in out.read_text().splitlines()]
    assert [r["boundaries"] for r in rows] == [[3], [3, 6], []]
    code, _, err = acpo.run_cli(["train", "--config", "/missing.ini", "--out", str(tmp_path)])
    assert code == 1 and "/missing.ini" in err
