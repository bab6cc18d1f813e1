import io
import json
import subprocess
import sys

import pytest

from dpplimits.cli import (
    Command,
    UsageError,
    main,
    parse_args,
    parse_config,
    render_config,
    render_report,
    run,
)
from dpplimits.sweep import Axis


def report(argv) -> str:
    return render_report(parse_args(argv)).decode()


def test_analyze_flag_mapping():
    cfg = parse_args("analyze --topo ac --n 8 --m 4 --mu 1 --cv 0.5".split())
    assert cfg.command is Command.ANALYZE
    assert cfg.dist.sigma == 0.5
    assert (cfg.dims.n_domains, cfg.dims.m_loads) == (8, 4)
    assert cfg.topologies == ("ac",)


def test_trials_bound(capsys):
    with pytest.raises(UsageError, match="--trials"):
        parse_args(["simulate", "--trials", "0"])
    assert main(["simulate", "--trials", "0"]) == 1
    assert "--trials" in capsys.readouterr().err


def test_sweep_flag_mapping():
    cfg = parse_args("sweep --axis n --from 2 --to 16 --topo ac,dc,ladder-dab,ladder-bb".split())
    assert cfg.sweep.axis is Axis.DOMAINS_N
    assert cfg.sweep.values == tuple(range(2, 17))
    assert [t.name for t in cfg.sweep.topologies] == ["ac", "dc", "ladder-dab", "ladder-bb"]
    assert cfg.output_format == "csv"


def test_cv_sweep_grid():
    cfg = parse_args("sweep --axis cv --from 0.1 --to 0.5 --step 0.1".split())
    assert cfg.sweep.values == (0.1, 0.2, 0.3, 0.4, 0.5)


@pytest.mark.parametrize(
    "argv, flag",
    [
        ("analyze --cv 0.5 --sigma 0.2", "--sigma"),
        ("analyze --mu 0 --cv 0.5", "--cv"),
        ("analyze --n 0", "--n"),
        ("analyze --topo ac,buck", "--topo"),
        ("analyze --gsw -1", "--gsw"),
        ("analyze --n two", "--n"),
        ("analyze --format csv", "--format"),
        ("sweep --axis n --from 5 --to 2", "--to"),
    ],
)
def test_usage_errors_name_flag(argv, flag):
    with pytest.raises(UsageError, match=flag):
        parse_args(argv.split())


def test_analyze_report():
    text = report("analyze --topo ac --m 4 --n 2 --cv 1 --mu 1 --v0 1 --gsw 1 --gm 1".split())
    line = next(l for l in text.splitlines() if l.startswith("ac "))
    normalized = float(line.split()[-1])
    assert normalized == pytest.approx(0.027778, abs=5e-7)
    assert "0.0277778" in line
    assert "S(M·N·σ²)" in line


def test_compare_ranks_ac_first():
    text = report("compare --m 4 --n 8 --cv 1".split())
    rows = [l.split() for l in text.splitlines()[2:]]
    assert rows[0][:2] == ["1", "ac"]
    assert rows[-1][1] == "dab-n1"


def test_simulate_zero_sigma():
    data = json.loads(report("simulate --topo ac,ladder-bb --sigma 0 --coss-fsw 0.5 --format json --trials 50".split()))
    for row in data["estimates"]:
        assert row["verdict"] == "exact match"
        assert row["std_error_w"] == 0.0
    assert data["estimates"][0]["mean_w"] == 8 * 0.5


def test_simulate_agreement_text():
    text = report("simulate --topo ac --n 8 --m 4 --cv 0.5 --trials 10000 --seed 1".split())
    assert "agree" in text


def test_config_round_trip(tmp_path):
    for argv in (
        "analyze --topo ac,dc --n 5 --m 3 --v0 2.5 --cv 0.3 --mu 2",
        "simulate --family lognormal --trials 123 --seed 9 --coss-fsw 0.01 --include-switching",
        "sweep --axis cv --from 0.2 --to 0.6 --format json --out x.json --workers 2",
        "compare --gsw 3 --gm 0.7 --format json",
    ):
        cfg = parse_args(argv.split())
        assert parse_config(render_config(cfg)) == cfg


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# test config\nn = 12\nm = 2\nsigma = 0.25\ntopo = dc\n")
    cfg = parse_args(["analyze", "--config", str(path), "--m", "6"])
    assert cfg.dims.n_domains == 12 and cfg.dims.m_loads == 6
    assert cfg.dist.sigma == 0.25 and cfg.topologies == ("dc",)
    cfg = parse_args(["analyze", "--config", str(path), "--cv", "1", "--mu", "3"])
    assert cfg.dist.sigma == 3.0


def test_bad_config_file(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("colour = blue\n")
    with pytest.raises(UsageError, match="colour"):
        parse_args(["analyze", "--config", str(path)])
    with pytest.raises(UsageError, match="--config"):
        parse_args(["analyze", "--config", str(tmp_path / "missing.cfg")])


def test_env_seed(monkeypatch):
    monkeypatch.setenv("DPP_SEED", "42")
    assert parse_args(["simulate"]).seed == 42
    assert parse_args(["simulate", "--seed", "3"]).seed == 3


def test_infeasible_exit_code(capsys):
    cfg = parse_args("simulate --family uniform --mu 1 --sigma 1 --trials 10".split())
    assert run(cfg, stdout=io.BytesIO()) == 2
    assert "infeasible" in capsys.readouterr().err


def test_degenerate_baseline_exit_code():
    cfg = parse_args("analyze --mu 0 --sigma 0".split())
    assert run(cfg, stdout=io.BytesIO()) == 2


def test_reports_are_deterministic():
    argv = "simulate --topo ac,dc --trials 2000 --seed 5".split()
    assert report(argv) == report(argv)


def test_out_file(tmp_path):
    out = tmp_path / "sweep.csv"
    cfg = parse_args(["sweep", "--axis", "m", "--from", "1", "--to", "3", "--trials", "20", "--out", str(out)])
    assert run(cfg) == 0
    assert out.read_text().splitlines()[0] == "axis,value,topology,analytic,simulated,ci_low,ci_high"
    assert len(out.read_text().splitlines()) == 1 + 3 * 4


def test_sweep_text_format():
    text = report("sweep --axis n --values 2,3 --trials 20 --format text --topo ac".split())
    assert text.splitlines()[0] == "sweep over n"
    assert len(text.splitlines()) == 4


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "dpplimits", "compare", "--n", "4", "--format", "json"],
        capture_output=True, text=True, check=True,
    )
    ranking = json.loads(proc.stdout)["ranking"]
    assert ranking[0]["topology"] == "ac"
    bad = subprocess.run([sys.executable, "-m", "dpplimits", "bogus"], capture_output=True, text=True)
    assert bad.returncode == 1
