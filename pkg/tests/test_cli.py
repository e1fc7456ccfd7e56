import pytest

from nbiot_noma.cli import (
    EXIT_OK,
    EXIT_RUNTIME,
    EXIT_USAGE,
    main,
)


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "cell.cfg"
    path.write_text(
        "num_urllc = 3\n"
        "num_mmtc = 9\n"
        "num_clusters = 3\n"
        "max_rank = 4\n"
        "num_subcarriers = 12\n"
        "rb_bandwidth = 45000\n"
        "rng_seed = 11\n"
    )
    return path


def test_run_writes_csv(tmp_path, config_file, capsys):
    out = tmp_path / "results.csv"
    code = main(
        ["run", "--config", str(config_file), "--out", str(out), "--trials", "2"]
    )
    assert code == EXIT_OK
    lines = out.read_text().splitlines()
    assert lines[0].startswith("seed,scheme,sweep_value")
    assert len(lines) == 1 + 2 * 2  # 2 trials x {noma, ofdma}
    assert "sum rate" in capsys.readouterr().out


def test_sweep_command(tmp_path, config_file):
    out = tmp_path / "sweep.csv"
    code = main(
        [
            "sweep",
            "--config", str(config_file),
            "--var", "total_devices",
            "--values", "8,12",
            "--out", str(out),
            "--trials", "1",
            "--schemes", "ofdma",
        ]
    )
    assert code == EXIT_OK
    assert len(out.read_text().splitlines()) == 1 + 2


def test_validate_command(config_file, capsys):
    code = main(["validate", "--config", str(config_file)])
    captured = capsys.readouterr().out
    assert code == EXIT_OK
    assert "[PASS]" in captured
    assert "[FAIL]" not in captured


def test_solve_power_prints_solution(capsys):
    code = main(
        ["solve-power", "--lambdas", "1,2", "--thresholds", "1,1", "--pmax", "3"]
    )
    assert code == EXIT_OK
    captured = capsys.readouterr().out
    assert "powers_w:" in captured
    assert "grid_oracle_bps:" in captured


def test_solve_power_infeasible(capsys):
    code = main(
        ["solve-power", "--lambdas", "1,2", "--thresholds", "40,40", "--pmax", "3"]
    )
    assert code == EXIT_OK
    assert "infeasible" in capsys.readouterr().out


def test_usage_error_exit_code(capsys):
    assert main(["run", "--config"]) == EXIT_USAGE
    assert main(["frobnicate"]) == EXIT_USAGE


def test_missing_config_is_runtime_failure(tmp_path, capsys):
    code = main(
        ["run", "--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path / "o.csv")]
    )
    assert code == EXIT_RUNTIME
