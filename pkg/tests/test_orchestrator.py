import json
import shutil
import time

import pytest

from automoose.orchestrator import (
    Orchestrator,
    RunStateError,
    UnknownRunError,
    reproduce_command,
    reproduce_run,
)
from automoose.plan import SimulationPlan, plan_from_json
from automoose.plugins import registry_load
from conftest import make_sleeper, wait_for_status


@pytest.fixture()
def orch(tmp_path):
    return Orchestrator(runs_dir=str(tmp_path / "runs"))


def small_input(**overrides):
    plugin = registry_load().get("grain_growth")
    params = {"grain_num": 6, "op_num": 6, "nx": 24, "ny": 24, "uniform_refine": 0,
              "end_time": 120, "exodus": False, "file_base": "case"}
    params.update(overrides)
    return plugin.generate_input(params)


def sleep_plan(values):
    return plan_from_json({
        "formulation": "GBEvolution", "dim": 2, "periodic": True,
        "sweep": {"param": "T", "values": list(values)}, "params": {},
    })


class TestLaunch:
    def test_reference_command_has_no_mpiexec_prefix(self, orch):
        assert Orchestrator.build_command("automoose-solver", "sim.i", 1) == (
            "automoose-solver -i sim.i"
        )

    def test_external_command_with_ranks(self):
        cmd = Orchestrator.build_command("$MOOSE_EXEC", "sim.i", 4)
        assert cmd == "mpiexec -n 4 $MOOSE_EXEC -i sim.i"

    def test_launch_and_immediate_status(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        assert orch.get_record(run_id).status in ("queued", "running", "done")
        record = wait_for_status(orch, run_id)
        assert record.status == "done" and record.exit_code == 0

    def test_input_copied_before_spawn(self, orch):
        text = small_input()
        run_id = orch.launch_input(text, label="t")
        assert (orch.run_directory(run_id) / "sim.i").read_text() == text
        wait_for_status(orch, run_id)

    def test_missing_executable_fails_immediately(self, tmp_path):
        orch = Orchestrator(runs_dir=str(tmp_path), backend="external",
                            moose_exec=str(tmp_path / "nope"))
        run_id = orch.launch_input("[Mesh]\n[]\n", label="t")
        record = wait_for_status(orch, run_id, timeout=10)
        assert record.status == "failed"

    def test_directory_collision_gets_suffix(self, orch):
        a = orch.launch_input(small_input(), label="same", run_id="fixed-id")
        b = orch.launch_input(small_input(), label="same", run_id="fixed-id")
        assert orch.run_directory(a) != orch.run_directory(b)
        wait_for_status(orch, a)
        wait_for_status(orch, b)


class TestRunDirectory:
    def test_terminal_run_has_all_five_artifacts(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        d = orch.run_directory(run_id)
        assert (d / "sim.i").exists()
        assert (d / "case.csv").exists()
        assert (d / "run.log").exists()
        assert (d / "metadata.json").exists()
        assert (d / "record.json").exists()

    def test_record_field_set(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.2)
        record = json.loads((orch.run_directory(run_id) / "record.json").read_text())
        required = {"run_id", "input_file", "moose_exec", "n_mpi", "hostname",
                    "wall_time_s", "exit_code", "timestamp_utc"}
        assert required <= set(record)
        assert record["exit_code"] == 0 and record["wall_time_s"] >= 0

    def test_metadata_contains_plan_fields(self, tmp_path):
        orch = Orchestrator(runs_dir=str(tmp_path))
        plan = SimulationPlan()
        from dataclasses import replace
        plan = replace(plan, mesh=replace(plan.mesh, uniform_refine=0, nx=24, ny=24),
                       physics=replace(plan.physics, grain_num=6, op_num=6),
                       solver=replace(plan.solver, end_time=120.0),
                       outputs=replace(plan.outputs, exodus=False, file_base="case"))
        run_id = orch.launch_run(plan)
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.2)
        meta = json.loads((orch.run_directory(run_id) / "metadata.json").read_text())
        assert meta["plan"]["T"] == 450.0
        assert meta["plan"]["rand_seed"] == 42
        assert meta["n_mpi"] == 1 and meta["hostname"]


class TestSweep:
    def test_concurrent_sleep_sweep_bounded_by_longest(self, tmp_path):
        sleeper = make_sleeper(tmp_path)
        orch = Orchestrator(runs_dir=str(tmp_path / "runs"), backend="external",
                            moose_exec=sleeper)
        start = time.monotonic()
        run_ids = orch.expand_and_dispatch(sleep_plan([1, 2, 3, 4]))
        orch.wait_all(run_ids, timeout=30)
        wall = time.monotonic() - start
        assert len(run_ids) == 4
        assert wall < 1.5 * 4, f"sweep took {wall:.2f}s"
        assert all(orch.get_record(r).status == "done" for r in run_ids)

    def test_single_plan_sweep_equals_launch(self, orch):
        run_ids = orch.expand_and_dispatch(_single_plan())
        assert len(run_ids) == 1
        record = wait_for_status(orch, run_ids[0])
        assert record.status == "done"

    def test_sibling_failure_does_not_abort_others(self, orch):
        from dataclasses import replace
        good = _single_plan()
        bad = replace(good, physics=replace(good.physics, op_num=99))  # fails validate()
        run_ids = orch.dispatch_sweep([good, bad])
        assert len(run_ids) == 1
        record = wait_for_status(orch, run_ids[0], timeout=60)
        assert record.status == "done"


def _single_plan():
    from dataclasses import replace
    plan = SimulationPlan()
    return replace(plan, mesh=replace(plan.mesh, uniform_refine=0, nx=24, ny=24),
                   physics=replace(plan.physics, grain_num=6, op_num=6,
                                   params=replace(plan.physics.params, temperature=450.0)),
                   solver=replace(plan.solver, end_time=120.0),
                   outputs=replace(plan.outputs, exodus=False, file_base="case"))


class TestRouteExit:
    def test_zero_exit_routes_to_analysis(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        assert orch.route_exit(run_id) == "analyze"

    def test_nonzero_exit_routes_to_review(self, orch):
        bad = small_input() + "\n[TestHarness]\n  fail_mode = force_nan\n[]\n"
        run_id = orch.launch_input(bad, label="t")
        wait_for_status(orch, run_id, settled=True)
        assert orch.route_exit(run_id) == "review"

    def test_unterminated_run_raises(self, tmp_path):
        sleeper = make_sleeper(tmp_path)
        orch = Orchestrator(runs_dir=str(tmp_path / "runs"), backend="external",
                            moose_exec=sleeper)
        run_id = orch.launch_input(small_input(T=5), label="t", backend="external")
        with pytest.raises(RunStateError):
            orch.route_exit(run_id)
        orch.stop_run(run_id)


class TestLogs:
    def test_unknown_run_id(self, orch):
        with pytest.raises(UnknownRunError):
            orch.get_log_tail("nope")
        with pytest.raises(UnknownRunError):
            orch.stream_log("nope", 0)

    def test_tail_zero_is_empty(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id)
        assert orch.get_log_tail(run_id, 0) == []

    def test_tail_ends_with_final_solver_line(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.3)
        tail = orch.get_log_tail(run_id, 50)
        log_lines = (orch.run_directory(run_id) / "run.log").read_text().splitlines()
        assert tail[-1] == log_lines[-1]
        assert tail[-1].startswith("Run complete:")

    def test_stream_is_resumable_by_offset(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.3)
        whole, size = orch.stream_log(run_id, 0)
        half, size2 = orch.stream_log(run_id, size // 2)
        assert size == size2
        assert whole[size // 2:] == half

    def test_log_is_byte_faithful_to_file(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.3)
        data, _ = orch.stream_log(run_id, 0)
        assert data == (orch.run_directory(run_id) / "run.log").read_bytes()


class TestStop:
    def test_stop_sleeping_run(self, tmp_path):
        sleeper = make_sleeper(tmp_path)
        orch = Orchestrator(runs_dir=str(tmp_path / "runs"), backend="external",
                            moose_exec=sleeper)
        run_id = orch.launch_input(small_input(T=30), label="t", backend="external")
        wait_for_status(orch, run_id, statuses=("running",), timeout=10)
        start = time.monotonic()
        ack = orch.stop_run(run_id)
        assert time.monotonic() - start < 2.0
        assert ack == {"run_id": run_id, "status": "stopped"}
        record = wait_for_status(orch, run_id, statuses=("stopped",), settled=True)
        assert record.exit_code != 0

    def test_stop_twice_is_a_state_error(self, tmp_path):
        sleeper = make_sleeper(tmp_path)
        orch = Orchestrator(runs_dir=str(tmp_path / "runs"), backend="external",
                            moose_exec=sleeper)
        run_id = orch.launch_input(small_input(T=30), label="t", backend="external")
        wait_for_status(orch, run_id, statuses=("running",), timeout=10)
        orch.stop_run(run_id)
        with pytest.raises(RunStateError):
            orch.stop_run(run_id)

    def test_stop_done_run_is_a_state_error(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        with pytest.raises(RunStateError):
            orch.stop_run(run_id)


class TestReproduce:
    def test_fresh_run_command_matches_record(self, orch):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.2)
        assert reproduce_command(orch.run_directory(run_id)) == orch.get_record(run_id).command

    def test_relocated_directory_reproduces_identical_csv(self, orch, tmp_path):
        run_id = orch.launch_input(small_input(), label="t")
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.2)
        moved = tmp_path / "elsewhere" / "copy"
        shutil.copytree(orch.run_directory(run_id), moved)
        before = (moved / "case.csv").read_bytes()
        assert reproduce_run(moved) == 0
        assert (moved / "case.csv").read_bytes() == before

    def test_single_rank_has_no_mpiexec(self, orch):
        run_id = orch.launch_input(small_input(), label="t", n_mpi=1)
        wait_for_status(orch, run_id, settled=True)
        time.sleep(0.2)
        assert "mpiexec" not in reproduce_command(orch.run_directory(run_id))


class TestLinearizability:
    def test_concurrent_status_reads_see_only_valid_states(self, orch):
        import threading

        valid = {"queued", "running", "done", "failed", "reviewing", "stopped"}
        observed = set()
        stop_flag = threading.Event()
        run_id_box = []

        def reader():
            while not stop_flag.is_set():
                if run_id_box:
                    observed.add(orch.get_record(run_id_box[0]).status)

        threads = [threading.Thread(target=reader, daemon=True) for _ in range(4)]
        for t in threads:
            t.start()
        run_id_box.append(orch.launch_input(small_input(), label="t"))
        wait_for_status(orch, run_id_box[0], settled=True)
        stop_flag.set()
        for t in threads:
            t.join(timeout=5)
        assert observed <= valid and "done" in observed
