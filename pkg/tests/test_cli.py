from dpope.cli import main


def test_run_writes_outputs_and_is_deterministic(tmp_path, capsys):
    args = [
        "run", "--alg", "sd", "--adversary", "builtin:uniform",
        "--T", "60", "--d", "4", "--eps", "1", "--seed", "3",
        "--runs", "3", "--out", str(tmp_path / "a"),
    ]
    assert main(args) == 0
    args[-1] = str(tmp_path / "b")
    assert main(args) == 0
    for name in ("summary.csv", "runs/run_0.csv", "runs/run_2.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (
            tmp_path / "b" / name
        ).read_bytes()


def test_run_parallel_byte_identical(tmp_path):
    base = [
        "run", "--alg", "svt", "--adversary", "builtin:drifting",
        "--T", "300", "--d", "8", "--eps", "1", "--seed", "5", "--runs", "4",
    ]
    assert main(base + ["--out", str(tmp_path / "seq")]) == 0
    assert main(base + ["--out", str(tmp_path / "par"), "--workers", "2"]) == 0
    assert (tmp_path / "seq" / "summary.csv").read_bytes() == (
        tmp_path / "par" / "summary.csv"
    ).read_bytes()


def test_run_all_algorithms_smoke(tmp_path):
    cases = [
        ("mw", "builtin:uniform", []),
        ("sd", "builtin:bernoulli-half", []),
        ("sd-batch", "builtin:uniform", ["--delta", "1e-6", "--eps", "0.5"]),
        ("limited", "builtin:low-mean", []),
        ("svt", "builtin:drifting", []),
        ("svt-ada", "builtin:drifting", []),
        ("ftrl", "builtin:quad", ["--delta", "1e-6"]),
        ("oco-experts", "builtin:quad", ["--delta", "1e-6", "--d", "1"]),
    ]
    for i, (algname, advname, extra) in enumerate(cases):
        args = [
            "run", "--alg", algname, "--adversary", advname,
            "--T", "64", "--d", "4", "--eps", "1", "--seed", "2",
            "--runs", "2", "--out", str(tmp_path / algname),
        ] + extra
        assert main(args) == 0, algname
        assert (tmp_path / algname / "summary.csv").exists()


def test_params_prints_key_value_lines(capsys):
    assert main(["params", "--alg", "sd", "--T", "10000", "--d", "16", "--eps", "1"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    kv = dict(line.split("=", 1) for line in out)
    assert float(kv["p"]) == 0.01
    assert float(kv["eta"]) == 5e-4
    assert int(kv["K"]) == 400


def test_params_svt(capsys):
    assert main(
        ["params", "--alg", "svt", "--T", "10000", "--d", "16", "--eps", "1"]
    ) == 0
    kv = dict(l.split("=", 1) for l in capsys.readouterr().out.strip().splitlines())
    assert int(kv["K"]) == 96


def test_validation_error_exit_code(tmp_path, capsys):
    # pure dartboard requires eps <= 1
    code = main(
        ["run", "--alg", "sd", "--adversary", "builtin:zeros", "--T", "50",
         "--d", "4", "--eps", "2", "--seed", "1", "--runs", "1",
         "--out", str(tmp_path / "x")]
    )
    assert code == 1
    assert "error" in capsys.readouterr().err


def test_matrix_shape_mismatch_is_validation_error(tmp_path, capsys):
    mat = tmp_path / "m.csv"
    mat.write_text("0,1\n1,0\n", encoding="utf-8")
    code = main(
        ["run", "--alg", "mw", "--adversary", str(mat), "--T", "5", "--d", "2",
         "--eps", "1", "--seed", "1", "--runs", "1", "--out", str(tmp_path / "y")]
    )
    assert code == 1


def test_verify_marginal_exit_codes(capsys):
    assert main(
        ["verify-marginal", "--T", "25", "--d", "3", "--p", "0.25",
         "--eta", "0.1", "--runs", "5000", "--seed", "4"]
    ) == 0
    out = capsys.readouterr().out
    assert "PASS" in out


def test_audit_cli(tmp_path, capsys):
    out = tmp_path / "audit.txt"
    assert main(
        ["audit", "--T", "2", "--d", "2", "--eta", "0.05", "--p", "0.4",
         "--diff-round", "2", "--out", str(out)]
    ) == 0
    text = out.read_text()
    assert "max_log_ratio" in text and "passed=True" in text


def test_check_lemmas_cli(capsys):
    assert main(["check-lemmas", "--runs", "20000", "--seed", "6"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_sweep_cli(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text(
        "alg=mw\nadversary=builtin:uniform\nT=60\nd=4\nruns=2\nseed=2\n"
        f"out={tmp_path / 'swp'}\nx=eps\ny=normalized_regret\n"
        "point.0.eps=1.0\npoint.1.eps=0.5\npoint.2.eps=0.25\n",
        encoding="utf-8",
    )
    assert main(["sweep", "--config", str(cfg)]) == 0
    data = (tmp_path / "swp" / "sweep.dat").read_text().splitlines()
    assert data[0] == "# dpope-plot v1"
    assert len(data) == 2 + 3
