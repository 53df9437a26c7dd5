import json
import math

import numpy as np
import pytest

from oracles import dn_lump_antipode, uniform_energy
from ring_crystal.analytic import asymptotic_delta_energy
from ring_crystal.fields import RingGrid, WaveField
from ring_crystal.harness import (
    CSV_COLUMNS,
    HarnessError,
    SweepRecord,
    SweepTable,
    analytic_consistency,
    aligned_profile,
    asymptotic_check,
    flux_ramp_experiment,
    flux_sweep,
    fwhm_and_antipode,
    ground_state_point,
    parse_range,
    read_table,
    threshold_scan,
    write_plot_data,
    write_table,
)
from ring_crystal.solver import SolverConfig

SMALL = SolverConfig(n_points=64)


def _record(lam=1.0, alpha=0.0, n=64, **kw):
    base = dict(lam=lam, alpha=alpha, eps_numeric=-0.1, eps_uniform_best=-0.05, eps_wilczek=-0.1,
                eps_analytic_half_flux=None, delta_eps=0.0, delta_eps_asymptotic=0.0,
                residual=1e-10, converged=True, n_points=n, wall_time_s=1.5)
    base.update(kw)
    return SweepRecord(**base)


def test_parse_range():
    assert parse_range("0:0.5:5") == [0.0, 0.125, 0.25, 0.375, 0.5]
    assert parse_range("1,2.5") == [1.0, 2.5]
    assert parse_range("3:3:1") == [3.0]
    for bad in ("0:1", "0:1:0", "a:b:c"):
        with pytest.raises(ValueError):
            parse_range(bad)


def test_records_unique_per_point():
    with pytest.raises(HarnessError):
        SweepTable({}, [_record(), _record()])
    SweepTable({}, [_record(), _record(n=128)])


def test_csv_format_and_round_trip(tmp_path):
    table = SweepTable({"x": 1}, [_record(alpha=0.5, eps_analytic_half_flux=-0.2), _record(alpha=0.1, converged=False)])
    text = table.to_csv()
    lines = text.split("\r\n")
    assert lines[0] == ",".join(CSV_COLUMNS)
    assert lines[1].endswith(",true,64,")  # wall time blank by default
    assert ",false,64," in lines[2]
    assert lines[2].split(",")[5] == ""  # half-flux analytic only at alpha = 1/2
    assert "1.5" in table.to_csv(include_timing=True).split("\r\n")[1]
    csv_path, json_path = write_table(table, tmp_path, "t")
    rows = read_table(csv_path)
    assert rows[0]["eps_analytic_half_flux"] == -0.2 and rows[1]["converged"] is False
    assert rows[0]["n_points"] == 64 and rows[0]["wall_time_s"] is None
    assert json.loads(json_path.read_text()) == {"x": 1}


def test_seventeen_digit_round_trip():
    x = 0.1 + 0.2
    text = SweepTable({}, [_record(eps_numeric=x)]).to_csv()
    assert float(text.split("\r\n")[1].split(",")[2]) == x


def test_plot_data(tmp_path):
    p = write_plot_data(tmp_path / "a" / "c.dat", [0, 1], [2.5, 3.5], "x y")
    assert p.read_text().splitlines() == ["# x y", "0 2.5", "1 3.5"]


def test_timestamp_follows_source_date_epoch(monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    _, table = ground_state_point(1.0, 0.0, SMALL)
    assert table.metadata["timestamp_iso8601"] is None
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    _, table = ground_state_point(1.0, 0.0, SMALL)
    assert table.metadata["timestamp_iso8601"].startswith("1970-01-01T00:00:00")


def test_config_hash_tracks_config():
    _, a = ground_state_point(1.0, 0.0, SMALL)
    _, b = ground_state_point(1.0, 0.0, SMALL.with_(seed=1))
    _, c = ground_state_point(1.0, 0.0, SMALL)
    assert a.metadata["config_hash"] != b.metadata["config_hash"]
    assert a.metadata["config_hash"] == c.metadata["config_hash"]
    assert a.to_csv() == c.to_csv()


def test_weak_coupling_sweep_follows_uniform_branch_inside_stability_region():
    lam = 1.0
    alphas = [-0.25, 0.0, 0.125, 0.25]
    table = flux_sweep(lam, alphas, SMALL, jobs=1)
    assert [r.alpha for r in table.records] == sorted(alphas)
    for r in table.records:
        assert r.converged
        assert r.eps_numeric == pytest.approx(uniform_energy(lam, r.alpha), abs=1e-9)
        assert r.eps_uniform_best == pytest.approx(uniform_energy(lam, r.alpha), abs=1e-15)
        assert r.delta_eps_asymptotic == asymptotic_delta_energy(lam, r.alpha)
    assert table.wilczek_margin() >= -1e-9


def test_flux_range_checked():
    with pytest.raises(ValueError):
        flux_sweep(1.0, [2.0], SMALL)


def test_parallel_sweep_matches_serial():
    serial = flux_sweep(5.0, [0.25, 0.5], SMALL, jobs=1)
    parallel = flux_sweep(5.0, [0.5, 0.25], SMALL, jobs=2)
    assert serial.to_csv() == parallel.to_csv()
    rec = serial.lookup(5.0, 0.5)
    assert rec.eps_analytic_half_flux is not None
    assert abs(rec.eps_numeric - rec.eps_analytic_half_flux) < 1e-8
    assert serial.lookup(5.0, 0.25).eps_analytic_half_flux is None


def test_threshold_scan_needs_a_bracket():
    with pytest.raises(HarnessError):
        threshold_scan([1.0, 1.2], SMALL.with_(dtau=1e-2))
    with pytest.raises(ValueError):
        threshold_scan([1.0, 2.0], SMALL, alphas=(0.5,))


def test_threshold_examples():
    res = threshold_scan([1.2, 2.0], SMALL.with_(dtau=1e-2), lambda_tol=1.0)
    assert res.contrasts[1.2] < 1e-6
    assert res.contrasts[2.0] > 0.1
    assert res.bracket == (1.2, 2.0)


def test_asymptotic_check_requires_tight_tolerance():
    with pytest.raises(ValueError):
        asymptotic_check([5.0], SolverConfig(residual_tol=1e-9))


def test_fwhm_and_antipode_on_the_dn_lump():
    # build the closed-form dn lump at lam = 6 and shift it off-grid
    import mpmath as mp

    lam = 6.0
    g = RingGrid(512)
    target = mp.pi * lam / 2
    t = mp.findroot(lambda t: mp.ellipk(1 - mp.exp(-2 * t)) * mp.ellipe(1 - mp.exp(-2 * t)) - target,
                    (mp.mpf("1e-8"), mp.mpf(30)), solver="illinois")
    m = 1 - mp.exp(-2 * t)
    K = mp.ellipk(m)
    amp = float(K / (mp.pi * mp.sqrt(lam)))
    shift = 1.2345
    vals = [amp * float(mp.ellipfun("dn", (p - shift) * K / mp.pi, m=m)) for p in g.nodes]
    f = WaveField(g, np.array(vals))
    width, anti, peak = fwhm_and_antipode(f)
    assert peak == pytest.approx(shift, abs=1e-6)
    assert anti == pytest.approx(dn_lump_antipode(lam), rel=1e-6)
    # FWHM of sech^2(lam x / 2) is 2 arccosh(sqrt 2) * 2 / lam
    assert width == pytest.approx(4 * math.acosh(math.sqrt(2)) / lam, rel=1e-3)
    phi, dens = aligned_profile(f)
    assert np.argmax(dens) == 256


def test_ramp_without_flux_leaves_the_lump_at_rest():
    rep = flux_ramp_experiment(5.0, 0.0, 1.0, SolverConfig(n_points=128), t_final=6.0, fit_window=(2.0, 6.0))
    assert abs(rep.omega_fit) < 1e-6


def test_ramp_preconditions():
    with pytest.raises(ValueError):
        flux_ramp_experiment(1.0, 0.3)
    with pytest.raises(ValueError):
        flux_ramp_experiment(5.0, 0.7)


def test_ramp_sets_the_lump_drifting():
    rep = flux_ramp_experiment(5.0, 0.2, 1.0, SolverConfig(n_points=128), t_final=6.0, fit_window=(2.0, 6.0))
    assert rep.omega_fit == pytest.approx(-0.2, rel=1e-6)
    assert rep.kinetic_momentum[-1] == pytest.approx(-0.2, rel=1e-6)
    assert abs(rep.angular_momentum[-1]) < 1e-8


def test_analytic_consistency_numbers():
    d = analytic_consistency(5.0)
    assert abs(d["modulus_residual"]) < 1e-12
    assert abs(d["norm_error"]) < 1e-10
    assert abs(d["identity_error"]) < 1e-8
