import csv
import json
from pathlib import Path

import pytest

from balancedvrp.cli import OUT_ENV, main


def run(args, out):
    before = set(Path(out).glob("*")) if Path(out).exists() else set()
    rc = main(args + ["--out", str(out), "--jobs", "1"])
    new = sorted(set(Path(out).glob("*")) - before)
    return rc, (new[-1] if new else None)


def manifest(d):
    return json.loads((d / "run_manifest.json").read_text())


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    out = tmp_path_factory.mktemp("runs")
    rc, gen = run(["gen", "--random-base", "18", "--seed", "3", "--block", "9", "--k", "3"], out)
    assert rc == 0
    insts = sorted(p for p in gen.glob("*-blk*.vrp"))
    rc, ex = run(["solve-exact", "--instance", *map(str, insts), "--specs", "all"], out)
    assert rc == 0
    return out, gen, insts, ex


def test_gen_outputs(pipeline):
    out, gen, insts, _ = pipeline
    m = manifest(gen)
    assert len(insts) == 2
    assert all((gen / f).exists() for f in m["files"])
    assert m["seeds"] == [3] and m["status"] == "ok"


def test_gen_from_base_file(pipeline, tmp_path):
    out, gen, _, _ = pipeline
    base = next(p for p in gen.glob("*.vrp") if "blk" not in p.name)
    rc, d = run(["gen", "--base", str(base), "--block", "6", "--k", "2"], tmp_path)
    assert rc == 0 and len(list(d.glob("*-blk*.vrp"))) == 3


def test_exact_writes_eighteen_fronts_each(pipeline):
    out, gen, insts, ex = pipeline
    m = manifest(ex)
    assert m["regime"] == "exact" and len(m["specs"]) == 18
    for inst in insts:
        assert len(list(ex.glob(f"{inst.stem}__*.csv"))) == 18
    assert all((ex / f).exists() for f in m["files"])


def test_agreement_diagonal(pipeline):
    out, _, _, ex = pipeline
    rc, d = run(["analyze", "agreement", "--fronts", str(ex)], out)
    assert rc == 0
    rows = list(csv.reader(open(next(d.glob("agreement*.csv")))))
    assert len(rows) == 19 and len(rows[0]) == 19
    for i in range(1, 19):
        assert float(rows[i][i]) == 100.0


@pytest.mark.parametrize("kind", ["cardinality", "tradeoff", "overlap", "similarity"])
def test_other_analyses(pipeline, kind):
    out, _, _, ex = pipeline
    rc, d = run(["analyze", kind, "--fronts", str(ex)], out)
    assert rc == 0
    m = manifest(d)
    assert m["files"] and all((d / f).exists() for f in m["files"])


def test_report_bundle(pipeline):
    out, _, _, ex = pipeline
    rc, d = run(["report", "--fronts", str(ex)], out)
    assert rc == 0
    names = {p.suffix for p in d.iterdir()}
    assert ".csv" in names and ".svg" in names


def test_heuristic_outputs_repeatable(pipeline):
    out, _, insts, _ = pipeline
    args = ["solve-heur", "--instance", str(insts[0]), "--specs", "distance:gini,load:lex",
            "--runs", "2", "--directions", "3", "--iterations", "5", "--seed", "4"]
    rc, a = run(args, out)
    rc2, b = run(args, out)
    assert rc == rc2 == 0
    fa = sorted(p.name for p in a.glob("*.csv"))
    assert fa == sorted(p.name for p in b.glob("*.csv"))
    assert any("__run" in n for n in fa)
    for n in fa:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    m = manifest(a)
    assert m["regime"] == "heuristic" and all((a / f).exists() for f in m["files"])


def test_heuristic_config_file(pipeline, tmp_path):
    out, _, insts, _ = pipeline
    cfg = tmp_path / "h.cfg"
    cfg.write_text("spec = stops:mad\nruns = 1\ndirections = 2\niterations = 3\n")
    rc, d = run(["solve-heur", "--instance", str(insts[0]), "--config", str(cfg)], out)
    assert rc == 0
    assert len([p for p in d.glob("*.csv") if "__run" not in p.name]) == 1


def test_exact_outputs_repeatable(pipeline):
    out, _, insts, ex = pipeline
    rc, again = run(["solve-exact", "--instance", str(insts[0]), "--specs", "load:gini,distance:range"], out)
    assert rc == 0
    for p in again.glob("*.csv"):
        assert p.read_bytes() == (ex / p.name).read_bytes()


def test_errors(tmp_path, capsys):
    rc, _ = run(["solve-exact", "--instance", str(tmp_path / "missing.vrp")], tmp_path)
    assert rc == 1 and "not found" in capsys.readouterr().err
    assert main(["frobnicate"]) == 2
    assert main(["solve-exact", "--bogus"]) == 2
    rc, _ = run(["solve-exact", "--instance", str(tmp_path / "x.vrp"), "--specs", "distance:theil"], tmp_path)
    assert rc == 1


def test_output_env_override(tmp_path, monkeypatch, pipeline):
    _, _, insts, _ = pipeline
    monkeypatch.setenv(OUT_ENV, str(tmp_path / "envout"))
    assert main(["solve-exact", "--instance", str(insts[0]), "--specs", "stops:max", "--jobs", "1"]) == 0
    assert len(list((tmp_path / "envout").iterdir())) == 1
