from __future__ import annotations

import json
from pathlib import Path

import jsonschema

from lanefair.cli import main

from conftest import DATA, REPO

SCHEMAS = REPO / "src" / "lanefair" / "schemas"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def check_schema(payload: str, name: str):
    schema = json.loads((SCHEMAS / f"{name}.json").read_text())
    jsonschema.validate(json.loads(payload), schema)


def test_fit_text_report(capsys):
    code, out, err = run(capsys, "fit", str(DATA / "swc1994.csv"))
    assert code == 0 and not err
    assert "1994 Calgary" in out
    assert "outliers removed: T.Hamamichi, P.Tahmindjis" in out


def test_fit_json_validates(capsys):
    code, out, _ = run(capsys, "fit", str(DATA / "swc1994.csv"),
                       str(DATA / "swc1993.csv"), "--format", "json")
    assert code == 0
    check_schema(out, "fit")
    payload = json.loads(out)
    assert [e["label"] for e in payload["events"]] == ["1994 Calgary", "1993 Ikaho"]
    fit94 = payload["events"][0]["fit"]
    assert fit94["n"] == 28
    assert abs(fit94["d"] - 0.0091) < 5e-4
    assert payload["events"][1]["fit"]["warnings"]  # same-lane record noted


def test_fit_outputs_are_deterministic(capsys, tmp_path):
    args = ("fit", str(DATA / "swc1990.csv"), "--format", "json")
    _, first, _ = run(capsys, *args)
    _, second, _ = run(capsys, *args)
    assert first == second


def test_fit_missing_file_is_io_error(capsys):
    code, _, err = run(capsys, "fit", "no-such-file.csv")
    assert code == 3
    assert "cannot read" in err


def test_fit_malformed_file_is_parse_error(capsys, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("#event,V,1990\nA,q,9.82,35.96,ok,i,9.75,35.76,ok\n")
    code, _, err = run(capsys, "fit", str(bad))
    assert code == 4
    assert "lane token" in err


def test_fit_degenerate_design_is_compute_error(capsys, tmp_path):
    rows = ["#event,V,1990"]
    for i in range(6):
        rows.append(f"S{i},i,10.0{i},37.1{i},ok,o,10.1{i},37.2{i},ok")
    one_lane = tmp_path / "onelane.csv"
    one_lane.write_text("\n".join(rows) + "\n")
    code, _, err = run(capsys, "fit", str(one_lane))
    assert code == 5
    assert "lane" in err


def test_fit_writes_output_file(capsys, tmp_path):
    out_path = tmp_path / "report.csv"
    code, out, _ = run(capsys, "fit", str(DATA / "swc1994.csv"),
                       "--format", "csv", "--out", str(out_path))
    assert code == 0 and out == ""
    lines = out_path.read_text().splitlines()
    assert lines[0].startswith("label,a1,a2")
    assert lines[1].startswith("1994 Calgary,")


def test_meta_over_all_events(capsys):
    files = [str(DATA / f"swc{y}.csv") for y in range(1984, 1995)]
    code, out, _ = run(capsys, "meta", *files, "--format", "json")
    assert code == 0
    check_schema(out, "meta")
    grand = json.loads(out)["grand"]
    assert abs(grand["d"] - 0.048) <= 0.005
    assert abs(grand["se"] - 0.016) <= 0.003
    assert grand["K"] == 11


def test_meta_from_summary_csv(capsys):
    code, out, _ = run(capsys, "meta", "--summary",
                       str(DATA / "summaries_women.csv"), "--format", "json")
    assert code == 0
    check_schema(out, "meta")
    grand = json.loads(out)["grand"]
    assert abs(grand["d"] - (-0.015)) <= 0.001
    assert abs(grand["se"] - 0.020) <= 0.001


def test_meta_single_event_equals_event(capsys):
    code, out, _ = run(capsys, "meta", str(DATA / "swc1989.csv"), "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert payload["grand"]["d"] == payload["events"][0]["d"]
    assert payload["grand"]["se"] == payload["events"][0]["se"]


def test_meta_split_half_flag(capsys):
    files = [str(DATA / f"swc{y}.csv") for y in range(1984, 1995)]
    code, out, _ = run(capsys, "meta", *files, "--split-half")
    assert code == 0
    assert "split-half contrast" in out
    assert "-0.042" in out


def test_meta_requires_input(capsys):
    code, _, err = run(capsys, "meta")
    assert code == 4 and "needs" in err


def test_speculate_csv_and_schema(capsys):
    code, out, _ = run(capsys, "speculate", str(DATA / "oly1994.csv"),
                       "--d", "0.05", "--format", "json")
    assert code == 0
    check_schema(out, "speculate")
    payload = json.loads(out)
    assert payload["d"] == 0.05
    assert payload["entries"][0] == {"rank": 1, "name": "Aleksandr Golubyev",
                                     "time": 36.38}


def test_speculate_text_layout(capsys):
    code, out, _ = run(capsys, "speculate", str(DATA / "oly1988.csv"))
    assert code == 0
    assert "real list:" in out and "speculative list:" in out
    assert "Uwe-Jens Mey" in out


def test_validate_outputs(capsys, tmp_path):
    prefix = tmp_path / "kde"
    code, out, _ = run(capsys, "validate", str(DATA / "swc1994.csv"),
                       "--format", "json", "--kde-prefix", str(prefix))
    assert code == 0
    check_schema(out, "validate")
    payload = json.loads(out)
    assert payload["n"] == 28
    assert abs(payload["moments"]["corr"] - 0.249) < 0.001
    for suffix in ("_diff.csv", "_ave.csv"):
        lines = Path(str(prefix) + suffix).read_text().splitlines()
        assert lines[0] == "x,density"
        assert len(lines) == 513


def test_validate_fixed_bandwidth(capsys):
    code, out, _ = run(capsys, "validate", str(DATA / "swc1994.csv"),
                       "--bandwidth", "0.4")
    assert code == 0


def test_validate_adjusted_differences_output(capsys, tmp_path):
    out_csv = tmp_path / "adjusted.csv"
    code, _, _ = run(capsys, "validate", str(DATA / "swc1994.csv"),
                     "--adjusted-out", str(out_csv))
    assert code == 0
    lines = out_csv.read_text().splitlines()
    assert lines[0] == "name,w,D,D_star"
    assert len(lines) == 29
    out_json = tmp_path / "adjusted.json"
    code, _, _ = run(capsys, "validate", str(DATA / "swc1994.csv"),
                     "--format", "json", "--adjusted-out", str(out_json))
    assert code == 0
    payload = json.loads(out_json.read_text())
    assert len(payload["skaters"]) == 28
    assert {"name", "w", "D", "D_star"} <= set(payload["skaters"][0])


def test_power_reference(capsys):
    code, out, _ = run(capsys, "power", "--sigma", "0.25", "--se", "0.02",
                       "--d", "0.05", "--format", "json")
    assert code == 0
    check_schema(out, "power")
    payload = json.loads(out)
    assert payload["N_required"] == 313
    assert abs(payload["power"] - 0.80) <= 0.01


def test_mc_smoke_and_determinism(capsys):
    args = ("mc", "--n", "20", "--reps", "40", "--seed", "3", "--format", "json")
    code, out, _ = run(capsys, *args)
    assert code == 0
    check_schema(out, "mc")
    _, again, _ = run(capsys, *args)
    assert out == again
    payload = json.loads(out)
    assert payload["reps"] == 40 and payload["seed"] == 3
