import json
from pathlib import Path

import pytest

from automoose.cli import main
from conftest import BENCHMARK_PROMPT, DATA_DIR


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestPlan:
    def test_benchmark_prompt_prints_sweep(self, capsys):
        code, out, _ = run_cli(capsys, "plan", BENCHMARK_PROMPT)
        assert code == 0
        doc = json.loads(out)
        assert doc["sweep"]["values"] == [300, 450, 600, 750]

    def test_rejection_exits_one(self, capsys):
        code, out, _ = run_cli(capsys, "plan", "Run a solidification study")
        assert code == 1
        assert json.loads(out)["code"] == "unsupported_physics"


class TestGenerate:
    def test_golden_bytes(self, capsys):
        code, out, _ = run_cli(
            capsys, "generate",
            "--param", "T=450", "--param", "file_base=grain_growth_T450",
        )
        assert code == 0
        assert out == (DATA_DIR / "generated_T450.i").read_text()

    def test_preset(self, capsys):
        code, out, _ = run_cli(capsys, "generate", "--preset", "2d_test")
        assert code == 0 and "[Mesh]" in out

    def test_unknown_preset_exits_one(self, capsys):
        code, _, err = run_cli(capsys, "generate", "--preset", "nope")
        assert code == 1 and "available" in err

    def test_json_mode_is_tool_payload(self, capsys):
        code, out, _ = run_cli(capsys, "generate", "--preset", "2d_test", "--json")
        assert code == 0
        assert set(json.loads(out)) == {"input_file"}


class TestDiff:
    def test_golden_pair_summary_line(self, capsys):
        code, out, _ = run_cli(
            capsys, "diff",
            str(DATA_DIR / "reference_human.i"),
            str(DATA_DIR / "generated_T450.i"),
        )
        assert code == 0
        assert "6 exact, 4 equivalent, 2 differ" in out
        assert "[Materials]" in out and "✓" in out

    def test_identical_inputs_all_exact(self, capsys, tmp_path):
        path = DATA_DIR / "generated_T450.i"
        code, out, _ = run_cli(capsys, "diff", str(path), str(path))
        assert code == 0
        assert "12 exact, 0 equivalent, 0 differ" in out


class TestUsage:
    def test_unknown_subcommand_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["frobnicate"])
        assert exc.value.code == 2

    def test_unknown_flag_exits_two(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["plan", "--bogus", "x"])
        assert exc.value.code == 2

    def test_missing_file_exits_one(self, capsys):
        code, _, err = run_cli(capsys, "diff", "/nope/a.i", "/nope/b.i")
        assert code == 1


class TestEndToEnd:
    def test_run_status_results_report(self, capsys, tmp_path):
        input_path = tmp_path / "case.i"
        code, out, _ = run_cli(
            capsys, "generate",
            "--param", "grain_num=6", "--param", "op_num=6",
            "--param", "nx=24", "--param", "ny=24",
            "--param", "uniform_refine=0", "--param", "end_time=120",
            "--param", "exodus=false", "--param", "file_base=case",
        )
        assert code == 0
        input_path.write_text(out)

        runs_dir = str(tmp_path / "runs")
        code, out, _ = run_cli(
            capsys, "--runs-dir", runs_dir, "run", "-i", str(input_path), "--no-tail",
        )
        assert code == 0
        run_id = out.splitlines()[0].split("run_id: ")[1]

        code, out, _ = run_cli(capsys, "--runs-dir", runs_dir, "status", run_id)
        assert code == 0
        assert json.loads(out)["status"] == "done"

        code, out, _ = run_cli(capsys, "--runs-dir", runs_dir, "results", run_id,
                               "--narrative")
        assert code == 0
        assert "coarsening" in out or "grain" in out

        report_dir = tmp_path / "report"
        code, out, _ = run_cli(capsys, "--runs-dir", runs_dir, "report", run_id,
                               "-o", str(report_dir))
        assert code == 0
        written = out.splitlines()
        assert (report_dir / "results.json").exists()
        assert (report_dir / "summary.csv").exists()
        assert (report_dir / "kinetics.png").exists()
        header = (report_dir / "summary.csv").read_text().splitlines()[0]
        assert header == "case,T_K,k_per_ns,R2,N0,N_final,suppressed"

        code, out, _ = run_cli(
            capsys, "reproduce", str(Path(runs_dir) / run_id),
        )
        assert code == 0
        assert out.strip() == "automoose-solver -i sim.i"

    def test_sweep_wait_and_sweep_report(self, capsys, tmp_path):
        runs_dir = str(tmp_path / "runs")
        code, out, _ = run_cli(
            capsys, "--runs-dir", runs_dir, "sweep",
            "--sweep-param", "T", "--values", "450,600",
            "--param", "grain_num=10", "--param", "op_num=10",
            "--param", "nx=32", "--param", "ny=32",
            "--param", "xmax=400", "--param", "ymax=400",
            "--param", "uniform_refine=0", "--param", "end_time=1400",
            "--param", "exodus=false",
            "--wait", "--json",
        )
        assert code == 0
        payload = json.loads(out.splitlines()[0])
        assert len(payload["run_ids"]) == 2
        sweep_id = payload["sweep_id"]

        code, out, _ = run_cli(capsys, "--runs-dir", runs_dir, "results", sweep_id,
                               "--json")
        assert code == 0
        results = json.loads(out)
        assert results["status"] == "done" and results["Q_fit"] is not None

        report_dir = tmp_path / "sweep-report"
        code, out, _ = run_cli(capsys, "--runs-dir", runs_dir, "report", sweep_id,
                               "-o", str(report_dir))
        assert code == 0
        assert (report_dir / "arrhenius.png").exists()
        assert (report_dir / "kinetics.png").exists()
