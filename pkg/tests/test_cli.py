import csv
import io
import subprocess
import sys

import pytest

from tydic.cli import main
from tydic.driver import STAGES


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_build_success_writes_outputs(tmp_path, capsys):
    code, _, err = run(["build", "corpus/cookbook/parallelize.td", "--top", "adder_8x",
                        "--outdir", str(tmp_path)], capsys)
    assert code == 0 and err == ""
    assert (tmp_path / "adder_8x.tir").read_text().startswith("tydi-ir 1")
    assert (tmp_path / "vhdl" / "adder_8x.vhd").exists()


@pytest.mark.parametrize("emit,tir,vhd", [("ir", True, False), ("vhdl", False, True)])
def test_emit_selection(tmp_path, capsys, emit, tir, vhd):
    code, _, _ = run(["build", "corpus/cookbook/union.td", "--top", "nic", "--emit", emit,
                      "--outdir", str(tmp_path)], capsys)
    assert code == 0
    assert (tmp_path / "nic.tir").exists() == tir
    assert (tmp_path / "vhdl").exists() == vhd


def test_diagnostics_exit_one_and_write_nothing(tmp_path, capsys):
    code, _, err = run(["build", "corpus/bad/e005_clock.td", "--top", "top", "--outdir", str(tmp_path)], capsys)
    assert code == 1
    assert err == "corpus/bad/e005_clock.td:16:3: error[E005]: clock domain mismatch in 'a.out => b.in': @fast vs @slow\n"
    assert list(tmp_path.iterdir()) == []


def test_no_sugar_reports_e004(tmp_path, capsys):
    args = ["build", "corpus/cookbook/fanout.td", "--top", "fanout_top", "--outdir", str(tmp_path)]
    assert run(args, capsys)[0] == 0
    code, _, err = run(args + ["--no-sugar"], capsys)
    assert code == 1
    assert err.count("error[E004]") == 2


@pytest.mark.parametrize("argv", [
    ["build", "corpus/cookbook/union.td", "--top", "nic"],               # no outdir
    ["build", "missing.td", "--top", "x", "--outdir", "o"],
    ["build", "corpus/cookbook/union.td", "--outdir", "o"],              # no top
    ["build", "corpus/cookbook/union.td", "--top", "nic", "--drc", "loose", "--outdir", "o"],
    ["frobnicate"],
    ["loc", "--counts", "0", "1", "1", "1"],
    ["loc", "--query", "corpus/tpch/q6.td"],
])
def test_usage_and_config_errors_exit_two(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == 2


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "build.cfg"
    cfg.write_text(f"# q6 build\ninputs = corpus/tpch/q6.td\ntop = q6_i\noutdir = {tmp_path / 'out'}\nemit = ir\n")
    code, _, _ = run(["build", "--config", str(cfg)], capsys)
    assert code == 0
    assert (tmp_path / "out" / "q6_i.tir").exists()
    # flags win over the file
    code, _, _ = run(["build", "--config", str(cfg), "--emit", "vhdl"], capsys)
    assert (tmp_path / "out" / "vhdl").exists()


def test_bad_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert run(["build", "--config", str(cfg)], capsys)[0] == 2


def test_depth_limit_from_environment(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("TYDIC_TEMPLATE_DEPTH", "1")
    code, _, err = run(["build", "corpus/cookbook/parallelize.td", "--top", "adder_8x",
                        "--outdir", str(tmp_path)], capsys)
    assert code == 1 and "E009" in err
    monkeypatch.setenv("TYDIC_TEMPLATE_DEPTH", "many")
    assert run(["build", "corpus/cookbook/parallelize.td", "--top", "adder_8x",
                "--outdir", str(tmp_path)], capsys)[0] == 2


def test_verbose_logs_stages_in_order(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "tydic", "build", "corpus/tpch/q6.td", "--top", "q6_i",
                           "--outdir", str(tmp_path), "-v"], capture_output=True, text=True)
    assert proc.returncode == 0
    stages = [line.split("stage: ")[1] for line in proc.stderr.splitlines() if "stage: " in line]
    assert stages == list(STAGES)


def test_loc_counts_csv(capsys):
    code, out, _ = run(["loc", "--counts", "284", "166", "151", "7547"], capsys)
    assert code == 0
    rows = dict(list(csv.reader(io.StringIO(out)))[1:])
    assert rows["LoC_a"] == "601" and rows["R_q"] == "26.57" and rows["R_a"] == "12.56"


def test_loc_from_files_with_figure(tmp_path, capsys):
    vhdl = tmp_path / "q6"
    assert run(["build", "corpus/tpch/q6.td", "--top", "q6_i", "--outdir", str(vhdl)], capsys)[0] == 0
    fig = tmp_path / "loc.png"
    code, out, _ = run(["loc", "--query", "corpus/tpch/q6.td", "corpus/tpch/kit.td",
                        "--fletcher", "corpus/tpch/fletcher", "--stdlib", "src/tydic/stdlib/std.td",
                        "--vhdl", str(vhdl / "vhdl"), "--name", "q6", "--figure", str(fig)], capsys)
    assert code == 0
    rows = dict(list(csv.reader(io.StringIO(out)))[1:])
    assert int(rows["LoC_vhdl"]) > int(rows["LoC_a"]) > int(rows["LoC_q"]) > 0
    assert fig.stat().st_size > 1000
