import json
import subprocess
import sys

import pytest

from clf_denoise.cli import main
from clf_denoise.events import read_csv


@pytest.fixture()
def mix(tmp_path):
    out = tmp_path / "mix.csv"
    assert main(["synth", "--geometry", "128x96", "--scene", '{"standard": {"duration": 60000}}',
                 "--noise-ratio", "1.29", "--seed", "2", "--output", str(out)]) == 0
    return out


def manifest(path):
    return json.loads((path.parent / f"{path.name}.manifest.json").read_text())


def test_synth_manifest_records_ratio(mix):
    m = manifest(mix)
    assert m["command"] == "synth"
    assert abs(m["results"]["achieved_ratio"] - 1.29) < 0.05 * 1.29
    assert m["seeds"] == {"seed": 2, "rng": "PCG64"}
    assert m["wall_clock_s"] >= 0 and m["tool_version"]


def test_synth_ratio_zero(tmp_path):
    out = tmp_path / "sig.csv"
    scene = json.dumps({"shape": {"kind": "box", "w": 3, "h": 3}, "velocity": 500, "duration": 20000,
                        "origin": [2, 2]})
    assert main(["synth", "--geometry", "32x16", "--scene", scene, "--output", str(out)]) == 0
    s = read_csv(out)
    assert len(s) > 0 and set(s.label.tolist()) == {1}


def test_synth_noise_rate(tmp_path):
    out = tmp_path / "n.csv"
    scene = tmp_path / "scene.json"
    scene.write_text(json.dumps([{"shape": "edge", "velocity": 1000, "duration": 10000}]))
    assert main(["synth", "--geometry", "10x4", "--scene", str(scene), "--noise-rate", "100",
                 "--output", str(out)]) == 0
    assert read_csv(out).count(0) > 0


def test_bad_geometry_is_usage_error(tmp_path, capsys):
    assert main(["synth", "--geometry", "12x", "--scene", "{}", "--output", str(tmp_path / "x")]) == 1
    assert main(["nonsense"]) == 1
    assert main(["denoise", "--input", "a.csv"]) == 1


def test_denoise_metrics_schema(mix, tmp_path):
    out, met = tmp_path / "out.csv", tmp_path / "m.json"
    assert main(["denoise", "--input", str(mix), "--config", '{"T_th": 800}', "--filter", "clf",
                 "--output", str(out), "--metrics", str(met)]) == 0
    doc = json.loads(met.read_text())
    assert {"precision", "recall", "accuracy", "tp", "fp", "tn", "fn"} <= set(doc)
    header = [l for l in out.read_text().splitlines() if l.startswith("# t_us")][0]
    assert header.endswith(",label,decision")
    assert manifest(out)["results"]["metrics"] == doc


def test_denoise_pipelined_appends_stats(mix, tmp_path):
    out, met, tr = tmp_path / "out.csv", tmp_path / "m.json", tmp_path / "trace.csv"
    assert main(["denoise", "--input", str(mix), "--pipelined", "--output", str(out),
                 "--metrics", str(met), "--trace", str(tr)]) == 0
    doc = json.loads(met.read_text())
    assert doc["pipeline"]["latency_min"] == 5
    assert tr.read_text().startswith("cycle,module,bank,block,kind\n")


def test_denoise_is_deterministic(mix, tmp_path):
    outs = []
    for k in range(2):
        out, met = tmp_path / f"o{k}.csv", tmp_path / f"m{k}.json"
        assert main(["denoise", "--input", str(mix), "--filter", "stcf", "--config", '{"N_CR": 2}',
                     "--output", str(out), "--metrics", str(met)]) == 0
        outs.append((out.read_bytes(), met.read_bytes()))
    assert outs[0] == outs[1]


def test_denoise_unlabeled_metrics_exit3(tmp_path, capsys):
    src = tmp_path / "u.csv"
    src.write_text("0,1,1,1\n10,1,1,0\n")
    rc = main(["denoise", "--input", str(src), "--output", str(tmp_path / "o.csv"),
               "--metrics", str(tmp_path / "m.json")])
    assert rc == 3
    assert "labels required" in capsys.readouterr().err


def test_denoise_geometry_from_data_extent(tmp_path):
    src = tmp_path / "u.csv"
    src.write_text("0,9,3,1\n10,9,3,0\n")
    assert main(["denoise", "--input", str(src), "--output", str(tmp_path / "o.csv")]) == 0
    assert manifest(tmp_path / "o.csv")["inputs"]["geometry"] == "10x4"


@pytest.mark.parametrize("argv,code", [
    (["--filter", "clf", "--config", '{"N_RM": 3}'], 3),
    (["--filter", "clf", "--config", '{"N_CR": 2}', "--pipelined"], 3),
    (["--filter", "baf", "--pipelined"], 3),
    (["--filter", "clf", "--config", '{"nope": 1}'], 3),
    (["--filter", "clf", "--config", "{not json"], 3),
    (["--filter", "clf", "--config", "missing.json"], 2),
])
def test_denoise_error_codes(mix, tmp_path, argv, code):
    assert main(["denoise", "--input", str(mix), "--output", str(tmp_path / "o.csv"), *argv]) == code


def test_denoise_io_errors(tmp_path):
    assert main(["denoise", "--input", str(tmp_path / "none.csv"), "--output", str(tmp_path / "o.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("10,1,1,1\n5,1,1,1\n")
    assert main(["denoise", "--input", str(bad), "--output", str(tmp_path / "o.csv")]) == 2


def test_sweep_jobs_identical(mix, tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"axes": {"s": [1, 2], "T_th": [200, 400]},
                                "datasets": [{"name": "mix", "path": mix.name}]}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--spec", str(spec), "--output", str(a), "--jobs", "1"]) == 0
    assert main(["sweep", "--spec", str(spec), "--output", str(b), "--jobs", "4", "--json",
                 str(tmp_path / "rows.json")]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert len(a.read_text().splitlines()) == 5
    assert len(json.loads((tmp_path / "rows.json").read_text())) == 4


def test_sweep_one_row(mix, tmp_path):
    spec = json.dumps({"datasets": [{"name": "m", "path": str(mix)}]})
    out = tmp_path / "o.csv"
    assert main(["sweep", "--spec", spec, "--output", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2
    assert main(["sweep", "--spec", '{"datasets": [], "x": 1}', "--output", str(out)]) == 3


def test_bitwidth_rows(tmp_path):
    out = tmp_path / "bw.csv"
    assert main(["bitwidth", "--lambda", "2000", "--tth", "200", "--bwt-list", "4,6,8,10,12",
                 "--trials", "100000", "--seed", "1", "--output", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "BW_T,T_s_us,fp_analytic,fp_montecarlo,stderr"
    rows = [[float(v) for v in l.split(",")] for l in lines[1:]]
    assert [r[1] for r in rows] == [1024, 4096, 16384, 65536, 262144]
    for _, _, a, mc, _ in rows:
        assert abs(mc - a) <= 3 * (a * (1 - a) / 100000) ** 0.5 + 1e-12
    mcs = [r[3] for r in rows]
    assert mcs == sorted(mcs, reverse=True)


def test_bitwidth_zero_rate_and_bad_window(tmp_path):
    out = tmp_path / "bw.csv"
    assert main(["bitwidth", "--lambda", "0", "--tth", "200", "--output", str(out)]) == 0
    assert all(l.split(",")[2:4] == ["0", "0"] for l in out.read_text().splitlines()[1:])
    assert main(["bitwidth", "--lambda", "5", "--tth", "200", "--tick-us", "1", "--bwt-list", "4",
                 "--output", str(out)]) == 3
    assert main(["bitwidth", "--lambda", "5", "--tth", "200", "--bwt-list", "4,x", "--output", str(out)]) == 1


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "clf_denoise", "--version"], capture_output=True, text=True)
    assert r.returncode == 0 and "clf-denoise" in r.stdout
