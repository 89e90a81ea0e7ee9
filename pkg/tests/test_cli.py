import numpy as np
import pytest

from pyramidreg.cli import EXIT_FAILED, EXIT_INPUT, EXIT_OK, main
from pyramidreg.geometry import parse_matrix
from pyramidreg.bench import OUTDOOR_CRITERIA

from helpers import easy_instance, write_instance, write_xyz


@pytest.fixture
def files(tmp_path):
    inst = easy_instance(11)
    return inst, write_instance(tmp_path, inst)


def _args(f, *extra):
    return ["register", "--src", f["src"], "--tgt", f["tgt"],
            "--src-landmarks", f["src_lm"], "--tgt-landmarks", f["tgt_lm"], *extra]


def test_register_writes_report(files, tmp_path):
    inst, f = files
    out = tmp_path / "r.txt"
    assert main(_args(f, "--out", str(out))) == EXIT_OK
    lines = out.read_text().splitlines()
    T = parse_matrix("\n".join(lines[1:5]))
    assert OUTDOOR_CRITERIA.ok(T, inst.T_gt)


def test_register_stdout_and_timings(files, capsys):
    _, f = files
    assert main(_args(f, "--timings", "--seed", "3")) == EXIT_OK
    assert "timing_ms:" in capsys.readouterr().out


def test_bad_input_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.xyz"
    bad.write_text("1 2\n")
    assert main(["register", "--src", str(bad), "--tgt", str(bad)]) == EXIT_INPUT
    assert "line 1" in capsys.readouterr().err
    assert main(["register", "--src", str(tmp_path / "nope.xyz"), "--tgt", str(bad)]) == EXIT_INPUT


def test_bad_config_exit_code(files, tmp_path):
    _, f = files
    cfg = tmp_path / "c.cfg"
    cfg.write_text("thresholds = 0.5, 0.1\n")
    assert main(_args(f, "--config", str(cfg))) == EXIT_INPUT
    assert main(_args(f, "--set", "nonsense")) == EXIT_INPUT


def test_registration_failure_exit_code(tmp_path, capsys):
    lm = write_xyz(tmp_path / "lm.xyz", [[0, 0, 0], [5, 0, 0]], [10, 50])
    cloud = write_xyz(tmp_path / "c.xyz", np.zeros((3, 3)))
    code = main(["register", "--src", cloud, "--tgt", cloud, "--src-landmarks", lm, "--tgt-landmarks", lm])
    assert code == EXIT_FAILED
    err = capsys.readouterr().err
    assert "registration failed" in err and "clique" in err


def test_usage_errors_exit_2():
    with pytest.raises(SystemExit) as ei:
        main(["register"])
    assert ei.value.code == EXIT_INPUT
    assert main(["bench", "--trials", "0"]) == EXIT_INPUT


def test_bench_and_ablate_small(tmp_path):
    csv = tmp_path / "t.csv"
    out = tmp_path / "t.txt"
    assert main(["bench", "--trials", "2", "--out", str(out), "--csv", str(csv)]) == EXIT_OK
    assert csv.read_text().splitlines()[0].startswith("scene,config,trials,success_pct")
    assert len(csv.read_text().splitlines()) == 1 + 2 * 5
    assert main(["ablate", "--variant", "scores", "--trials", "2", "--out", str(out)]) == EXIT_OK
    assert "Tu-1" in out.read_text() and "Eu" in out.read_text()
    assert main(["ablate", "--variant", "thresholds", "--trials", "2", "--out", str(out)]) == EXIT_OK
    assert "[0.01, 0.02, 0.04, 0.08]" in out.read_text()


def test_identical_files_give_identity(tmp_path, capsys):
    rng = np.random.default_rng(3)
    centers = rng.uniform(-20, 20, size=(8, 3))
    pts = np.repeat(centers, 30, axis=0) + rng.normal(scale=0.1, size=(240, 3))
    labels = np.repeat([10, 10, 10, 10, 50, 50, 50, 50], 30)
    f = write_xyz(tmp_path / "same.xyz", pts, labels)
    cfg = tmp_path / "c.cfg"
    cfg.write_text("preset = outdoor\n")
    assert main(["register", "--src", f, "--tgt", f, "--config", str(cfg)]) == EXIT_OK
    text = capsys.readouterr().out
    T = parse_matrix("\n".join(text.splitlines()[1:5]))
    assert np.allclose(T.matrix(), np.eye(4), atol=1e-9)


def test_bench_deterministic(tmp_path):
    a, b = tmp_path / "a.txt", tmp_path / "b.txt"
    assert main(["bench", "--trials", "2", "--seed", "7", "--out", str(a)]) == EXIT_OK
    assert main(["bench", "--trials", "2", "--seed", "7", "--out", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
