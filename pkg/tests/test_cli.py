import pytest

from noma_esg import acceptance, cli
from noma_esg.harness import CSV_COLUMNS, read_csv

CONFIG = """
name = "cli_demo"
kind = "SISO"
k_users = 8
sweep_name = "snr_db"
sweep_values = [0.0, 10.0]
trials = 10
seed = 1
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "demo.toml"
    path.write_text(CONFIG)
    return path


def test_analytic_prints(config, capsys):
    assert cli.main(["analytic", "--config", str(config)]) == 0
    out = capsys.readouterr().out
    assert "esg_analytic" in out and "snr_db=10" in out


def test_simulate_writes_csv(config, tmp_path):
    out = tmp_path / "o.csv"
    assert cli.main(["simulate", "--config", str(config), "--trials", "3", "--seed", "5", "--out", str(out)]) == 0
    rows = read_csv(out).rows
    assert [r.trials for r in rows] == [3, 3] and rows[0].seed == 5


def test_configuration_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text('kind = "SISO"\nnope = 2\n')
    assert cli.main(["simulate", "--config", str(bad)]) == cli.EXIT_CONFIG
    assert "nope" in capsys.readouterr().err


def test_figure_analytic_only(tmp_path):
    out = tmp_path / "fig"
    assert cli.main(["figure", "fig3a", "--analytic-only", "--out", str(out)]) == 0
    files = sorted(out.glob("*.csv"))
    assert len(files) == 3
    assert files[0].read_text().splitlines()[0] == ",".join(CSV_COLUMNS)


def test_verify_exit_codes(monkeypatch, capsys):
    ok = acceptance.CriterionResult(1, "a", True, "")
    bad = acceptance.CriterionResult(2, "b", False, "")
    monkeypatch.setattr(acceptance, "run_all", lambda threads=1, echo=None: [ok])
    assert cli.main(["verify"]) == cli.EXIT_OK
    monkeypatch.setattr(acceptance, "run_all", lambda threads=1, echo=None: [ok, bad])
    assert cli.main(["verify"]) == cli.EXIT_ACCEPTANCE
    assert "1/2 criteria passed" in capsys.readouterr().out


def test_unknown_preset_rejected():
    with pytest.raises(SystemExit):
        cli.main(["figure", "fig99"])
