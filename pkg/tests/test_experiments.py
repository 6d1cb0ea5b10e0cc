import io
import math

import numpy as np
import pytest

from irsop import cli
from irsop import experiments as ex
from irsop import moments as mom
from irsop.errors import ConfigError, DomainError, SearchRangeError
from irsop.lognormal import fit_sinr, outage_probability
from irsop.model import link_gains

SMALL = ex.Scenario(M=2, N=4, K=3)


def test_default_scenario_is_study_layout():
    sc = ex.Scenario()
    assert (sc.M, sc.N, sc.K, sc.beta, sc.p_dbm, sc.noise_dbm) == (8, 50, 10, 2.0, 56.0, -96.0)
    assert sc.center == (175.0, 0.0) and sc.irs == (0.0, 5.0)
    xy = np.array(sc.user_positions())
    assert xy.shape == (10, 2)
    assert xy[:, 0].min() >= 150 and xy[:, 0].max() <= 200 and np.abs(xy[:, 1]).max() <= 25
    # the drop depends only on the layout seed
    assert sc.user_positions() == sc.replace(irs=(75.0, 5.0), N=300).user_positions()
    assert sc.user_positions() != sc.replace(user_seed=1).user_positions()


def test_single_point_sweep_matches_direct_pipeline():
    spec = ex.SweepSpec("irs_x", (25.0,), SMALL)
    res = ex.run_sweep(spec)
    sc = SMALL.replace(irs=(25.0, 5.0))
    cfg = sc.config()
    gains = link_gains(sc.geometry(), cfg)
    for r in res.rows:
        fit = fit_sinr(mom.analytic_moments(cfg, gains, r.user)).gamma
        assert r.analytic_op == outage_probability(fit, 10 ** (sc.threshold_db / 10))
        assert r.empirical_op is None and r.empirical_se is None
    assert len(res.rows) == SMALL.K


def test_sweep_with_overlay_and_ordering():
    spec = ex.SweepSpec("n_elements", (2, 4, 8), SMALL, mc_trials=2000, seed=3)
    res = ex.run_sweep(spec)
    assert [r.value for r in res.rows] == [2.0] * 3 + [4.0] * 3 + [8.0] * 3
    assert all(0 <= r.empirical_op <= 1 and r.empirical_se >= 0 for r in res.rows)
    assert all(0 <= r.analytic_op <= 1 for r in res.rows)


def test_threshold_sweep():
    res = ex.run_sweep(ex.SweepSpec("threshold_db", (-5.0, 0.0, 5.0), SMALL, mc_trials=2000))
    by_user = {}
    for r in res.rows:
        assert r.value == r.threshold_db
        by_user.setdefault(r.user, []).append(r.analytic_op)
    for ops in by_user.values():
        assert ops == sorted(ops)


@pytest.mark.parametrize("variable, grid", [("irs_x", ()), ("irs_x", (1.0, 1.0)), ("irs_x", (2.0, 1.0)),
                                            ("bogus", (1.0,)), ("n_elements", (1.5, 2.0))])
def test_sweep_spec_validation(variable, grid):
    with pytest.raises(ConfigError):
        ex.SweepSpec(variable, grid)


def test_csv_is_self_describing():
    res = ex.run_sweep(ex.SweepSpec("irs_x", (0.0, 50.0), SMALL, mc_trials=1000, seed=1))
    text = ex.csv_text(res)
    head = [l for l in text.splitlines() if l.startswith("#")]
    assert any(l.startswith("# scenario = ") for l in head)
    assert any(l.startswith("# moment_variant = \"corrected\"") for l in head)
    body = [l for l in text.splitlines() if not l.startswith("#")]
    assert body[0] == ",".join(ex.CSV_COLUMNS)
    assert len(body) == 1 + 2 * SMALL.K
    for line in body[1:]:
        for cell in line.split(",")[3:8]:
            assert cell == f"{float(cell):.10g}"


def test_infeasible_point_is_flagged(monkeypatch):
    bad = mom.MomentSet(EX=1.0, EX2=1.01, EZ=1.0, EZ2=1.01, EY=1.0, EY2=1.01, EXZ=3.0, CovXY=2.0)
    monkeypatch.setattr(ex.mom, "analytic_moments", lambda *a, **k: bad)
    res = ex.run_sweep(ex.SweepSpec("irs_x", (0.0,), SMALL))
    assert res.infeasible
    assert all(r.status.startswith("infeasible") and r.analytic_op is None for r in res.rows)
    assert ",,,,,infeasible: InfeasibleCorrelationError" in ex.csv_text(res)


def test_aggregate_op():
    ops = [0.1, 0.5, 0.3]
    assert ex.aggregate_op(ops, "mean") == pytest.approx(0.3)
    assert ex.aggregate_op(ops, "worst") == 0.5
    assert ex.aggregate_op(ops, "2") == 0.3


def test_compensate_at_range_minimum():
    sc = SMALL.replace(irs=(100.0, 5.0))
    target = ex.analytic_op(sc.replace(N=5), "mean")
    assert ex.find_compensating_N(sc, target, (5, 200), "mean") == (5, target)


def test_compensate_matches_linear_scan():
    sc = SMALL.replace(threshold_db=-3.0)
    target = 0.5 * (ex.analytic_op(sc.replace(N=2), "mean") + ex.analytic_op(sc.replace(N=60), "mean"))
    n, op = ex.find_compensating_N(sc, target, (2, 60), "mean")
    scan = next(m for m in range(2, 61) if ex.analytic_op(sc.replace(N=m), "mean") <= target)
    assert n == scan and op <= target


def test_compensate_unreachable():
    with pytest.raises(SearchRangeError) as err:
        ex.find_compensating_N(SMALL, 1e-9, (1, 50), "mean")
    assert set(err.value.endpoints) == {1, 50}
    with pytest.raises(DomainError):
        ex.find_compensating_N(SMALL, 1.5, (1, 50))


def test_compensate_monotonicity_guard(monkeypatch):
    monkeypatch.setattr(ex, "analytic_op", lambda sc, metric: math.sin(sc.N) ** 2)
    with pytest.raises(SearchRangeError, match="monotone"):
        ex.find_compensating_N(SMALL, 0.5, (1, 100))


# --- config files -------------------------------------------------------------------

CONFIG = """
[system]
M = 2
N = 4
K = 3
P_dbm = 50.0
noise_dbm = -90.0
variant = "corrected"

[geometry]
source = [0.0, 0.0]
irs = [10.0, 5.0]
L = 50.0
D = 150.0
center = [175.0, 0.0]
user_seed = 4

[sweep]
variable = "irs_x"
start = 0.0
stop = 100.0
step = 50.0
threshold_db = -2.0

[mc]
trials = 1000
seed = 11
"""


def test_load_config(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(CONFIG)
    cfg = ex.load_config(p)
    sc = cfg["scenario"]
    assert (sc.M, sc.N, sc.K, sc.p_dbm, sc.noise_dbm, sc.irs, sc.user_seed) == (2, 4, 3, 50.0, -90.0, (10.0, 5.0), 4)
    assert sc.center == (175.0, 0.0) and sc.threshold_db == -2.0
    spec = ex.sweep_spec_from(cfg)
    assert spec.grid == (0.0, 50.0, 100.0) and spec.mc_trials == 1000 and spec.seed == 11
    spec = ex.sweep_spec_from(cfg, mc_trials=0, seed=2, grid=(1.0, 2.0))
    assert (spec.mc_trials, spec.seed, spec.grid) == (0, 2, (1.0, 2.0))


@pytest.mark.parametrize("bad", [
    CONFIG.replace("[mc]", "[other]"),
    CONFIG.replace("M = 2", "Q = 2"),
    CONFIG.replace("center = [175.0, 0.0]", "center = [180.0, 0.0]"),
    CONFIG.replace('variant = "corrected"', 'variant = "nope"'),
    "not [valid toml",
])
def test_load_config_errors(tmp_path, bad):
    p = tmp_path / "s.toml"
    p.write_text(bad)
    with pytest.raises(ConfigError):
        ex.sweep_spec_from(ex.load_config(p))


def test_explicit_users(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text("[system]\nK = 2\nM = 1\nN = 2\n[geometry]\nusers = [[150.0, 0.0], [160.0, 3.0]]\n")
    sc = ex.load_config(p)["scenario"]
    assert sc.user_positions() == ((150.0, 0.0), (160.0, 3.0))


# --- CLI -----------------------------------------------------------------------------

def test_cli_op(tmp_path, capsys):
    out = tmp_path / "op.csv"
    rc = cli.main(["op", "-M", "2", "-N", "4", "-K", "3", "--thresholds-db", "-3", "0", "--mc-trials", "1000",
                   "-o", str(out)])
    assert rc == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert len(lines) == 1 + 3 * 2


def test_cli_sweep_config_and_flag_precedence(tmp_path):
    p = tmp_path / "s.toml"
    p.write_text(CONFIG)
    out = tmp_path / "sweep.csv"
    assert cli.main(["sweep", "--config", str(p), "-N", "6", "--mc-trials", "0", "-o", str(out)]) == 0
    text = out.read_text()
    assert '"N": 6' in text and "# mc_trials = 0\n" in text


def test_cli_config_error(tmp_path, capsys):
    p = tmp_path / "s.toml"
    p.write_text("[bogus]\n")
    assert cli.main(["sweep", "--config", str(p)]) == 2
    assert cli.main(["sweep", "--variable", "irs_x", "--grid", "5", "1"]) == 2


def test_cli_infeasible_exit_code(monkeypatch, tmp_path):
    bad = mom.MomentSet(EX=1.0, EX2=1.01, EZ=1.0, EZ2=1.01, EY=1.0, EY2=1.01, EXZ=3.0, CovXY=2.0)
    monkeypatch.setattr(ex.mom, "analytic_moments", lambda *a, **k: bad)
    out = tmp_path / "x.csv"
    assert cli.main(["sweep", "-K", "2", "--variable", "irs_x", "--grid", "0", "-o", str(out)]) == 3
    assert "infeasible" in out.read_text()


def test_cli_verify_writes_table(tmp_path, capsys):
    out = tmp_path / "v.csv"
    assert cli.main(["verify", "-M", "1", "-N", "1", "-K", "2", "--trials", "200000", "--csv", str(out)]) == 0
    text = out.read_text()
    assert '# pipeline_variant = "corrected"' in text
    assert "E[XZ] published" in text and "E[XZ] corrected" in text
    assert "E[XZ] published" in capsys.readouterr().out


def test_cli_compensate(capsys):
    rc = cli.main(["compensate", "-M", "2", "-K", "3", "--threshold-db", "-3", "--x", "100", "--n-ref", "4",
                   "--n-max", "200", "--metric", "mean"])
    out = capsys.readouterr().out
    assert rc in (0, 3)
    assert "reference: x_R=0" in out
    assert ("delta_N=" in out) == (rc == 0)


def test_empirical_moment_mode_tracks_analytic():
    sc = SMALL.replace(empirical_moments=("EXZ",), moment_trials=20_000)
    base = ex.evaluate_point(SMALL, [0.0])
    emp = ex.evaluate_point(sc, [0.0], seed=3)
    # corrected E[XZ] is exact, so swapping in its estimate moves OP only by MC noise
    assert [r.status for r in emp] == ["ok"] * SMALL.K
    assert np.allclose([r.analytic_op for r in emp], [r.analytic_op for r in base], atol=0.05)
    assert emp != base


def test_empirical_moment_mode_fixes_printed_cross_moment():
    published = SMALL.replace(variant="published")
    fixed = published.replace(empirical_moments=("EXZ", "EZ2", "EX2"), moment_trials=50_000)
    corr = np.array([r.analytic_op for r in ex.evaluate_point(SMALL, [0.0])])
    gap_published = np.abs(np.array([r.analytic_op for r in ex.evaluate_point(published, [0.0])]) - corr).max()
    gap_fixed = np.abs(np.array([r.analytic_op for r in ex.evaluate_point(fixed, [0.0], seed=1)]) - corr).max()
    assert gap_fixed < gap_published


def test_empirical_moment_validation(tmp_path):
    with pytest.raises(ConfigError):
        ex.Scenario(empirical_moments=("CovXY",))
    with pytest.raises(ConfigError):
        ex.Scenario(empirical_moments=("EXZ",), moment_trials=10)
    p = tmp_path / "c.toml"
    p.write_text('[mc]\ntrials = 0\nempirical_moments = ["EXZ"]\nmoment_trials = 5000\n')
    sc = ex.load_config(p)["scenario"]
    assert sc.empirical_moments == ("EXZ",) and sc.moment_trials == 5000
    p.write_text('[mc]\nbogus = 1\n')
    with pytest.raises(ConfigError):
        ex.load_config(p)


def test_cli_empirical_moments_recorded(tmp_path):
    out = tmp_path / "o.csv"
    rc = cli.main(["op", "-M", "2", "-N", "4", "-K", "3", "--thresholds-db", "0",
                   "--empirical-moments", "EXZ", "--moment-trials", "5000", "-o", str(out)])
    assert rc == 0
    assert '"empirical_moments": ["EXZ"]' in out.read_text()
