import json

import numpy as np
import pytest

from convexbp.harness import SpinGlassSpec, generate_spin_glass, parse_uai, write_uai
from convexbp.harness.cli import main

from conftest import two_node_graph


@pytest.fixture
def model_file(tmp_path):
    path = tmp_path / "model.uai"
    path.write_text(write_uai(generate_spin_glass(SpinGlassSpec(seed=1003))))
    return str(path)


def test_solve_max_with_extraction(model_file, tmp_path, capsys):
    out = tmp_path / "out.json"
    code = main(["solve", model_file, "--semiring", "max", "--extract", "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["converged"] is True
    assert payload["tier"] == "no_ties"
    assert "energy" in payload and "assignment" in payload


def test_solve_sum_beliefs(model_file, tmp_path):
    out = tmp_path / "out.json"
    code = main(["solve", model_file, "--semiring", "sum", "--temperature", "0.8",
                 "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    vec = payload["var_beliefs"]["v0"]
    assert abs(sum(vec) - 1.0) < 1e-9


def test_solve_failed_extraction_exit_code(tmp_path):
    path = tmp_path / "two_node.uai"
    path.write_text(write_uai(two_node_graph()))
    out = tmp_path / "out.json"
    # Bethe on a single factor certifies, the beliefs are fully tied, and
    # the cascade's partial tier has nothing non-tied to certify
    code = main(["solve", str(path), "--semiring", "max", "--extract",
                 "--preset", "trivial", "--component-cap", "2",
                 "--search-limit", "1", "--output", str(out)])
    assert code == 2
    assert json.loads(out.read_text())["tier"] == "failed"


def test_anneal(model_file, tmp_path):
    out = tmp_path / "lp.json"
    code = main(["anneal", model_file, "--output", str(out)])
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["integrality"] in ("easy", "hard", "intermediate")
    assert len(payload["stage_trace"]) >= 10


def test_anneal_hard_regime_instance(tmp_path):
    # an all-fractional instance exercises the slow stages near the tie
    # formation temperature; the default stage tolerances must survive it
    path = tmp_path / "hard.uai"
    path.write_text(write_uai(generate_spin_glass(SpinGlassSpec(seed=1000))))
    out = tmp_path / "lp.json"
    assert main(["anneal", str(path), "--output", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert payload["integrality"] == "hard"


def test_certify_exit_codes(model_file, tmp_path):
    assert main(["certify", model_file, "--preset", "default",
                 "--output", str(tmp_path / "c1.json")]) == 0
    # Bethe on a loopy grid with unaries is not coverable by the flow
    assert main(["certify", model_file, "--preset", "bethe",
                 "--output", str(tmp_path / "c2.json")]) == 2


def test_convert_round_trip(model_file, tmp_path):
    out = tmp_path / "copy.uai"
    assert main(["convert", model_file, "--output", str(out)]) == 0
    g1 = parse_uai(open(model_file).read())
    g2 = parse_uai(out.read_text())
    for t1, t2 in zip(g1.tables, g2.tables):
        finite = np.isfinite(t1)
        assert np.allclose(t1[finite], t2[finite], atol=1e-9)


def test_contour(tmp_path):
    out = tmp_path / "contour.csv"
    code = main(["contour", "--temperatures", "1.0", "--resolution", "11",
                 "--mode", "bethe", "--output", str(out)])
    assert code == 0
    assert out.read_text().startswith("T,x,y,F")


def test_spinglass_study(tmp_path):
    records = tmp_path / "records.ndjson"
    aggregates = tmp_path / "agg.csv"
    code = main(["spinglass-study", "--count", "3", "--seed", "5",
                 "--records", str(records), "--output", str(aggregates)])
    assert code == 0
    assert len(records.read_text().strip().splitlines()) == 3
    assert aggregates.read_text().startswith("metric,key,value")


def test_ldpc_curve(tmp_path):
    records = tmp_path / "records.ndjson"
    aggregates = tmp_path / "agg.csv"
    code = main(["ldpc-curve", "--trials", "5", "--crossover", "0.02",
                 "--records", str(records), "--output", str(aggregates)])
    assert code == 0
    assert len(records.read_text().strip().splitlines()) == 5


def test_input_error_exit_code(tmp_path):
    bad = tmp_path / "bad.uai"
    bad.write_text("BAYES\n1\n2\n")
    assert main(["solve", str(bad)]) == 3
    assert main(["solve", str(tmp_path / "missing.uai")]) == 3


def test_budget_exit_code():
    # n=48 makes the ML enumeration need 2^24 codewords, over the budget
    assert main(["ldpc-curve", "--n", "48", "--trials", "1", "--crossover", "0.02"]) == 4
