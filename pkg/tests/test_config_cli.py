import csv
import math
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from varcap.cli import main, study_table
from varcap.config import ConfigError, parse_config, parse_mask
from varcap.grid import build_grid

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

INTERVAL = """
[grid]
dim = 1
origin = -1
extent = 2
nodes = 257

[exponent]
type = constant
p0 = {p0}

[task]
name = relative_cap
inner = box(lo=-0.25, hi=0.25)
outer = ball(center=0, r=1, closed=False)
"""


def _results(path):
    with open(path / "results.csv", newline="") as fh:
        return {r["quantity"]: r for r in csv.DictReader(fh)}


def test_config_round_trip():
    cfg = parse_config(INTERVAL.format(p0=3))
    again = parse_config(cfg.to_text())
    assert again == cfg and again.digest() == cfg.digest()
    assert cfg.task_name == "relative_cap" and cfg.grid.nodes == (257,)


@pytest.mark.parametrize("text, key", [
    (INTERVAL.format(p0="two"), "exponent.p0"),
    (INTERVAL.format(p0=0.5), "exponent"),
    (INTERVAL.format(p0=2).replace("nodes = 257", "nodes = 1"), "grid.nodes"),
    (INTERVAL.format(p0=2).replace("relative_cap", "nonsense"), "task.name"),
    (INTERVAL.format(p0=2).replace("dim = 1\n", ""), "grid.dim"),
])
def test_bad_config_names_key(text, key):
    with pytest.raises(ConfigError) as err:
        cfg = parse_config(text)
        cfg.fields_on(cfg.build_grid())
    assert err.value.key.startswith(key)


def test_mask_language():
    g = build_grid(2, (-1, -1), (2, 2), 33)
    m = parse_mask("ball(center=(0, 0), r=0.5) - box(lo=(0, 0), hi=(1, 1))", g)
    assert m.count > 0 and not m.membership[24, 24]
    assert parse_mask("full(kind='open')", g).kind == "open"
    with pytest.raises(ConfigError, match="task.inner"):
        parse_mask("__import__('os')", g, key="task.inner")
    with pytest.raises(ConfigError):
        parse_mask("ball(center=(0, 0), r=0.5) + full()", g)


def test_run_interval(tmp_path, capsys):
    cfg = tmp_path / "interval.ini"
    cfg.write_text(INTERVAL.format(p0=2))
    assert main(["run", str(cfg), "--out", str(tmp_path / "a")]) == 0
    res = _results(tmp_path / "a")
    assert float(res["value"]["value"]) == pytest.approx(8 / 3, rel=0.02)
    for name in ("manifest.ini", "config.ini", "results.csv"):
        assert (tmp_path / "a" / name).exists()


def test_malformed_config_exits_2(tmp_path, capsys):
    cfg = tmp_path / "bad.ini"
    cfg.write_text(INTERVAL.format(p0="x"))
    assert main(["run", str(cfg), "--out", str(tmp_path / "o")]) == 2
    assert "exponent.p0" in capsys.readouterr().err


def test_rerun_is_byte_identical(tmp_path):
    cfg = tmp_path / "interval.ini"
    cfg.write_text(INTERVAL.format(p0=3))
    for d in ("a", "b"):
        assert main(["run", str(cfg), "--seed", "7", "--out", str(tmp_path / d)]) == 0
    for name in ("results.csv", "config.ini"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    # the saved effective config reproduces the run
    assert main(["run", str(tmp_path / "a" / "config.ini"), "--out", str(tmp_path / "c")]) == 0
    assert (tmp_path / "a" / "results.csv").read_bytes() == \
        (tmp_path / "c" / "results.csv").read_bytes()


def test_grid_scale(tmp_path):
    cfg = tmp_path / "interval.ini"
    cfg.write_text(INTERVAL.format(p0=2).replace("nodes = 257", "nodes = 65"))
    assert main(["run", str(cfg), "--grid-scale", "4", "--out", str(tmp_path / "s")]) == 0
    text = (tmp_path / "s" / "config.ini").read_text()
    assert "nodes = 257" in text


def test_several_configs_share_out(tmp_path):
    a, b = tmp_path / "p2.ini", tmp_path / "p3.ini"
    a.write_text(INTERVAL.format(p0=2))
    b.write_text(INTERVAL.format(p0=3))
    assert main(["run", str(a), str(b), "--workers", "2", "--out", str(tmp_path / "o")]) == 0
    v3 = float(_results(tmp_path / "o" / "p3")["value"]["value"])
    assert v3 == pytest.approx(32 / 9, rel=0.02)


def test_verify_quick_reports_check_failure(tmp_path):
    out = tmp_path / "v"
    code = main(["verify", str(CONFIGS / "verify_quick.ini"), "--out", str(out),
                 "--seed", "0"])
    # the displayed annulus constant fails on the wide annulus; every other check passes
    assert code == 1
    summary = (out / "summary.txt").read_text()
    assert "[FAIL] annulus_bound" in summary
    assert summary.count("[PASS]") == 7
    assert (out / "check_outer_measure.csv").exists()


def test_study_table_orders():
    vals = [(0.1, 1.0, True), (0.05, 1.5, True), (0.025, 1.75, True)]
    rows = study_table(vals, reference=2.0)
    assert rows[1][3] == pytest.approx(1.0) and rows[2][3] == pytest.approx(1.0)
    assert rows[2][4] == pytest.approx(1.0) and math.isnan(rows[1][4])


@given(st.floats(0.5, 3.0), st.floats(0.1, 5.0))
def test_study_table_recovers_power_law(order, c):
    vals = [(h, 3.0 + c * h ** order, True) for h in (0.1, 0.05, 0.025, 0.0125)]
    rows = study_table(vals)
    assert rows[-1][4] == pytest.approx(order, rel=1e-6)
    assert rows[-1][3] != rows[-1][3]
