"""CLI: exit codes, diagnostics format, stdout purity, state persistence."""

from __future__ import annotations

import re

from adaptkit.cli import main

from conftest import FIXTURES

PRINTER = FIXTURES / "printer"
CASCADE = FIXTURES / "cascade"
WAREHOUSE = FIXTURES / "warehouse"


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


class TestCheck:
    def test_clean_printer_fixture(self, capsys):
        code = run_cli(
            "check", "--rules", PRINTER / "printer.rules", "--scene", PRINTER / "printer.scene"
        )
        assert code == 0
        assert capsys.readouterr().err == ""

    def test_dangling_condition_ref(self, tmp_path, capsys):
        bad = tmp_path / "bad.rules"
        bad.write_text("rule R when missing do set_visible(a, true) category Style\n")
        code = run_cli("check", "--rules", bad)
        assert code == 2
        err = capsys.readouterr().err
        assert err.startswith(f"{bad}:1: error:")

    def test_conflict_warning_keeps_exit_zero(self, tmp_path, capsys):
        rules = tmp_path / "c.rules"
        rules.write_text(
            "condition c: env.x == true\n"
            "rule A when c do set_text_size(panel, 24) category Style\n"
            "rule B when c do set_text_size(panel, 30) category Style\n"
        )
        scene = tmp_path / "c.scene"
        scene.write_text("element panel at (0.0,1.0,0.0)\n")
        code = run_cli("check", "--rules", rules, "--scene", scene)
        assert code == 0
        err = capsys.readouterr().err
        assert "warning" in err and "panel.text_size" in err

    def test_workflow_cross_checked(self, tmp_path, capsys):
        wf = tmp_path / "w.workflow"
        wf.write_text('workflow w\nstep a "x" until ghost_cond terminal\n')
        code = run_cli(
            "check",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--workflow", wf,
        )
        assert code == 2
        assert "ghost_cond" in capsys.readouterr().err

    def test_missing_file(self, capsys):
        assert run_cli("check", "--rules", "/no/such/file.rules") == 2


class TestRun:
    def test_trace_on_stdout_and_nothing_else(self, capsys):
        code = run_cli(
            "run",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "dark_switch.scenario",
        )
        assert code == 0
        out = capsys.readouterr().out
        assert out
        for line in out.splitlines():
            assert re.match(r"^E\d+ C\d+ S\d+ ", line), line

    def test_trace_to_file(self, tmp_path, capsys):
        out_file = tmp_path / "out.trace"
        code = run_cli(
            "run",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "dark_switch.scenario",
            "--trace", out_file,
        )
        assert code == 0
        assert capsys.readouterr().out == ""
        golden = (PRINTER / "golden" / "dark_switch.trace").read_text()
        assert out_file.read_text() == golden

    def test_oscillator_exits_three(self, capsys):
        code = run_cli(
            "run",
            "--rules", CASCADE / "oscillator.rules",
            "--scene", CASCADE / "oscillator.scene",
            "--scenario", CASCADE / "oscillator.scenario",
        )
        assert code == 3
        captured = capsys.readouterr()
        assert captured.out.strip().endswith("NONQUIESCENT depth=16")
        assert "runtime error" in captured.err

    def test_max_cascade_flag(self, capsys):
        code = run_cli(
            "run",
            "--rules", CASCADE / "oscillator.rules",
            "--scene", CASCADE / "oscillator.scene",
            "--scenario", CASCADE / "oscillator.scenario",
            "--max-cascade", 5,
        )
        assert code == 3
        assert capsys.readouterr().out.strip().endswith("NONQUIESCENT depth=5")

    def test_parse_error_exits_two(self, tmp_path, capsys):
        bad = tmp_path / "bad.scenario"
        bad.write_text("scenario s\nat 10 set env.a = 1\nat 5 set env.a = 2\n")
        code = run_cli(
            "run",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", bad,
        )
        assert code == 2
        assert f"{bad}:3: error:" in capsys.readouterr().err

    def test_unset_feature_exits_three(self, capsys):
        # first_uses references user.app_use_count but no state file provides it
        code = run_cli(
            "run",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "first_uses.scenario",
        )
        assert code == 3


class TestStateFile:
    def test_counter_strictly_increments(self, tmp_path, capsys):
        state = tmp_path / "app.state"
        for expected in (1, 2, 3):
            code = run_cli(
                "run",
                "--rules", PRINTER / "printer.rules",
                "--scene", PRINTER / "printer.scene",
                "--scenario", PRINTER / "first_uses.scenario",
                "--state-file", state,
                "--trace", tmp_path / "out.trace",
            )
            assert code == 0
            assert state.read_text() == f"user.app_use_count={expected}\n"
        capsys.readouterr()

    def test_extra_persisted_keys_survive(self, tmp_path, capsys):
        state = tmp_path / "app.state"
        state.write_text("env.calibration=1.250000\nuser.app_use_count=7\n")
        run_cli(
            "run",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "first_uses.scenario",
            "--state-file", state,
            "--trace", tmp_path / "out.trace",
        )
        assert state.read_text() == "env.calibration=1.250000\nuser.app_use_count=8\n"
        capsys.readouterr()

    def test_malformed_state_file_exits_two(self, tmp_path, capsys):
        state = tmp_path / "app.state"
        state.write_text("user.app_use_count\n")
        code = run_cli(
            "run",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "first_uses.scenario",
            "--state-file", state,
        )
        assert code == 2
        capsys.readouterr()


class TestVerify:
    def test_golden_match(self, capsys):
        code = run_cli(
            "verify",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "dark_switch.scenario",
            "--golden", PRINTER / "golden" / "dark_switch.trace",
        )
        assert code == 0
        capsys.readouterr()

    def test_workflow_golden_match(self, capsys):
        code = run_cli(
            "verify",
            "--rules", WAREHOUSE / "warehouse.rules",
            "--scene", WAREHOUSE / "warehouse.scene",
            "--scenario", WAREHOUSE / "single_order.scenario",
            "--workflow", WAREHOUSE / "single_order.workflow",
            "--golden", WAREHOUSE / "golden" / "single_order.trace",
        )
        assert code == 0
        capsys.readouterr()

    def test_edited_golden_mismatch_names_line(self, tmp_path, capsys):
        lines = (PRINTER / "golden" / "dark_switch.trace").read_text().splitlines()
        lines[2] = "E0 C1 S2 COND distance_to_user_big -> true"
        edited = tmp_path / "edited.trace"
        edited.write_text("\n".join(lines) + "\n")
        code = run_cli(
            "verify",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "dark_switch.scenario",
            "--golden", edited,
        )
        assert code == 1
        assert "mismatch at line 3" in capsys.readouterr().err

    def test_missing_golden_exits_two(self, capsys):
        code = run_cli(
            "verify",
            "--rules", PRINTER / "printer.rules",
            "--scene", PRINTER / "printer.scene",
            "--scenario", PRINTER / "dark_switch.scenario",
            "--golden", "/no/such/golden.trace",
        )
        assert code == 2
        capsys.readouterr()
