import subprocess
import sys

from flexreflect.cli import main


def test_run_and_report(tmp_path, capsys):
    a, b = tmp_path / "fcrf", tmp_path / "rr"
    assert main(["run", "--out", str(a)]) == 0
    assert main(["run", "--strategy", "ReasoningReflection", "--backend", "scripted:rr_demo", "--out", str(b)]) == 0
    capsys.readouterr()
    assert main(["report", str(a), str(b), "--out", str(tmp_path / "cmp")]) == 0
    text = capsys.readouterr().out
    header = text.splitlines()[1].split()
    assert header == ["strategy", "PickPlace", "ExamineInLight", "CleanPlace", "HeatPlace", "CoolPlace", "PickTwoPlace", "ALL"]
    assert "FCRF" in text and "ReasoningReflection" in text
    for name in ("sr_table.csv", "flexibility_table.csv", "comparison.png", "tables.txt"):
        assert (tmp_path / "cmp" / name).exists()


def test_report_marks_absent_flexibility(tmp_path, capsys):
    out = tmp_path / "po"
    assert main(["run", "--strategy", "PlanningOnly", "--backend", "scripted:planning_only", "--out", str(out)]) == 0
    capsys.readouterr()
    assert main(["report", str(out)]) == 0
    flex_row = capsys.readouterr().out.strip().splitlines()[-1]
    assert flex_row.split() == ["PlanningOnly", "absent", "absent", "absent", "absent"]


def test_report_on_truncated_trace(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["run", "--out", str(out)]) == 0
    trace = out / "run.jsonl"
    lines = trace.read_text().splitlines()
    trace.write_text("\n".join(lines[:40]) + "\n")
    capsys.readouterr()
    assert main(["report", str(out)]) != 0
    err = capsys.readouterr().err
    assert "incomplete trace" in err and "last valid event is #39" in err


def test_inject_lesson_command(tmp_path, capsys):
    pool = tmp_path / "pool.jsonl"
    assert main(["inject-lesson", "--pool", str(pool), "--text", "Open drawers first."]) == 0
    assert main(["inject-lesson", "--pool", str(pool), "--text", "open drawers first"]) == 0
    out = capsys.readouterr().out
    assert "added lesson 1" in out and "notice" in out
    assert len(pool.read_text().splitlines()) == 1


def test_configuration_errors(tmp_path, capsys):
    assert main(["run", "--strategy", "Nope", "--out", str(tmp_path / "x")]) == 2
    assert main(["run", "--episodes", "0", "--out", str(tmp_path / "x")]) == 2
    assert main(["run", "--backend", "scripted:/no/such/file.jsonl", "--out", str(tmp_path / "x")]) != 0
    assert main(["run", "--suite", str(tmp_path / "missing"), "--out", str(tmp_path / "x")]) != 0
    assert main(["report", str(tmp_path / "nothing")]) != 0


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "flexreflect", "run", "--episodes", "5", "--out", str(tmp_path / "m")],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "Success rate" in proc.stdout
