import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from dtwa_ising import acceptance, cli
from dtwa_ising.config import ExperimentConfig, config_from_mapping, load_config
from dtwa_ising.model import QuenchSpec, SpecError, parse_key_values


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def read_rows(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


@given(
    n=st.integers(1, 10).map(lambda k: 2 * k),
    h_f=st.floats(0.0, 10.0),
    seed=st.integers(0, 2**64 - 1),
    order=st.sampled_from([1, 2]),
    scheme=st.sampled_from(["s4", "s8"]),
    analyses=st.lists(st.sampled_from(["xi1", "xi2", "plateau"]), unique=True),
)
def test_header_round_trip(n, h_f, seed, order, scheme, analyses):
    cfg = ExperimentConfig(
        QuenchSpec(n, 1000.0, h_f, (0.0, 0.5)), "dtwa", order, scheme, 100, seed, analyses=tuple(analyses)
    )
    back = config_from_mapping(parse_key_values("\n".join(cfg.header_lines())))
    assert back == cfg


def test_config_invariants():
    spec = QuenchSpec(20, 1000.0, 1.1, (0.0,))
    with pytest.raises(SpecError):
        ExperimentConfig(spec, "ed").validated()
    with pytest.raises(SpecError):
        ExperimentConfig(QuenchSpec(20, 1000.0, 0.9, (0.0,)), "approx").validated()
    with pytest.raises(SpecError):
        config_from_mapping({"n": "4", "h_i": "2", "h_f": "1", "colour": "red"})
    with pytest.raises(SpecError):
        ExperimentConfig(spec, analyses=("magic",)).validated()


def test_correlate_exact_csv(capsys):
    code, out, _ = run(capsys, "correlate", "--n", "8", "--h-f", "1.1", "--times", "0:1:0.5")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# dtwa-ising correlate" and lines[1] == "# schema_version = 1"
    assert "#: seed = 0" in lines
    rows = read_rows(out)
    assert list(rows[0]) == ["t", "d", "C", "stderr", "method"]
    assert len(rows) == 3 * 5
    assert float(rows[0]["C"]) == 1.0 and rows[0]["method"] == "exact"


def test_dtwa_output_reproduces_from_its_header(tmp_path, capsys):
    first = tmp_path / "a.csv"
    again = tmp_path / "b.csv"
    code, _, _ = run(
        capsys, "correlate", "--method", "dtwa", "--n", "6", "--h-f", "1.0001", "--times", "0,0.5",
        "--samples", "40", "--seed", "12345678901234567890", "--out", str(first),
    )
    assert code == 0
    assert run(capsys, "correlate", "--config", str(first), "--out", str(again))[0] == 0
    assert first.read_bytes() == again.read_bytes()
    assert load_config(first).seed == 12345678901234567890


def test_json_mirror(tmp_path, capsys):
    code, out, _ = run(capsys, "correlate", "--n", "6", "--h-f", "2", "--times", "0,1", "--json")
    doc = json.loads(out)
    assert code == 0 and doc["schema_version"] == 1 and doc["command"] == "correlate"
    assert doc["columns"] == ["t", "d", "C", "stderr", "method"]
    assert len(doc["rows"]) == 8
    path = tmp_path / "o.json"
    path.write_text(out)
    assert run(capsys, "correlate", "--config", str(path), "--json")[1] == out


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "correlate", "--no-such-flag")[0] == 1
    assert run(capsys, "correlate", "--order", "3")[0] == 1
    assert run(capsys, "correlate", "--times", "0:1")[0] == 1
    code, _, err = run(capsys, "correlate", "--method", "ed", "--n", "20")
    assert code == 2
    doc = json.loads(err.strip().splitlines()[-1])
    assert doc["error"] == "SpecError" and doc["invariant"] == "method"
    assert run(capsys, "correlate", "--n", "7")[0] == 2
    assert run(capsys, "correlate", "--config", str(tmp_path / "missing.cfg"))[0] == 2
    assert run(capsys, "scan", "--n", "8")[0] == 2
    assert run(capsys, "verify", "--only", "A99")[0] == 1


def test_scan_records_failures_in_row(capsys):
    code, out, _ = run(
        capsys, "scan", "--n", "40", "--times", "2", "--scan", "h_f", "--values", "0.5,1.5,10",
        "--analyses", "xi1,xi2",
    )
    assert code == 0
    rows = read_rows(out)
    assert [float(r["value"]) for r in rows] == [0.5, 1.5, 10.0]
    assert rows[1]["xi1"] and float(rows[1]["xi1"]) > 0
    assert "xi2" in rows[0]["error"]


def test_epsilon_scan_reference_columns(capsys):
    code, out, _ = run(
        capsys, "scan", "--n", "20", "--times", "2", "--scan", "epsilon", "--values", "0.001,10",
        "--analyses", "xi1", "--reference-n", "100", "--reference-t", "18",
    )
    rows = read_rows(out)
    assert code == 0
    for row in rows:
        eps = float(row["value"])
        assert float(row["xi_gge"]) == pytest.approx(1 / np.log(2 * eps + 2))
        assert float(row["reference_xi1"]) == pytest.approx(float(row["xi_gge"]), rel=0.1)


def test_samples_scan_power_law_note(capsys):
    code, out, _ = run(
        capsys, "scan", "--method", "dtwa", "--n", "50", "--times", "0", "--scan", "samples",
        "--values", "100,400,1600", "--analyses", "plateau,power-law",
    )
    assert code == 0
    assert any(line.startswith("# power_law a = ") for line in out.splitlines())
    assert len(read_rows(out)) == 3


def test_verify_reports_and_fails_loudly(capsys, monkeypatch):
    code, out, _ = run(capsys, "verify", "--only", "A2")
    assert code == 0 and out.startswith("A2 PASS")
    # a sign error in the dispersion breaks the analytic light-cone check
    monkeypatch.setattr(acceptance, "max_group_velocity", lambda h, j=1.0: -2.0)
    code, out, _ = run(capsys, "verify", "--only", "A5")
    assert code == 3 and "A5 FAIL" in out


def test_figure_recipes_are_valid():
    from pathlib import Path

    recipes = sorted(Path(__file__).resolve().parent.parent.joinpath("figures").glob("*.cfg"))
    assert len(recipes) >= 9
    for path in recipes:
        load_config(path).validated()
