import json

import numpy as np
import pytest

from risjam.channel import EnvironmentSpec, Position, move_device
from risjam.scenarios import (
    DESK_CLUSTERS,
    DESK_DEVICES,
    OptimizerSettings,
    PowerSettings,
    RssiOracle,
    ScenarioError,
    ScenarioSpec,
    desk_environment_spec,
    desk_scenario,
    directional_baseline,
    directional_gain_db,
    displacement_scan,
    element_sweep,
    heatmap_scan,
    hidden_device_eval,
    perturbation_run,
    random_config_eval,
    run_exclusion,
    run_jsr_matrix,
    run_multi_target,
    run_single_target,
    run_scenario,
    scenario_from_dict,
    scenario_to_dict,
)

MINI_DEVICES = {
    "D0": Position(3.0, 3.6, 1.2),
    "A": Position(1.6, 3.0, 0.9),
    "B": Position(1.9, 2.8, 0.9),
    "C": Position(3.6, 1.2, 0.9),
    "D": Position(3.9, 1.0, 0.9),
    "E": Position(2.9, 3.1, 0.9),
}

MINI_ENV = EnvironmentSpec(devices=MINI_DEVICES,
                           attacker_position=Position(0.4, 0.9, 1.0),
                           n_elements=192, scatter_count=64)

FAST_OPT = OptimizerSettings(steps=1500, reeval_period=500, table_size=60)


def mini_scenario(mode="packet-rate", targets=("A",), seed=5, **overrides):
    kwargs = dict(environment=MINI_ENV, mode=mode, targets=targets, seed=seed,
                  optimizer=FAST_OPT, name="mini")
    kwargs.update(overrides)
    return ScenarioSpec(**kwargs)


# -- validation ---------------------------------------------------------------


def test_unknown_mode_lists_valid_modes():
    with pytest.raises(ScenarioError, match="jsr-matrix"):
        mini_scenario(mode="frobnicate")


def test_target_nontarget_overlap_names_device():
    with pytest.raises(ScenarioError, match="'A'"):
        mini_scenario(non_targets=("A", "B"))


def test_ap_cannot_be_target():
    with pytest.raises(ScenarioError, match="access point"):
        mini_scenario(targets=("D0",))


def test_unknown_target_rejected():
    with pytest.raises(ScenarioError, match="no position"):
        mini_scenario(targets=("Z",))


def test_jamming_mode_needs_targets():
    with pytest.raises(ScenarioError, match="non-empty target"):
        mini_scenario(targets=())


def test_hidden_must_be_nontarget():
    with pytest.raises(ScenarioError, match="hidden"):
        mini_scenario(hidden=("A",))


def test_default_non_targets_include_ap():
    spec = mini_scenario()
    assert "D0" in spec.non_targets
    assert set(spec.non_targets) == {"D0", "B", "C", "D", "E"}


def test_exclusion_needs_exclude_param():
    with pytest.raises(ScenarioError, match="exclude"):
        mini_scenario(mode="exclusion", targets=())


def test_sweep_settings_validated():
    with pytest.raises(ScenarioError, match="sweep"):
        PowerSettings(sweep_from_dbm=0.0, sweep_to_dbm=-10.0)


# -- measurement oracle -------------------------------------------------------


def test_oracle_excludes_hidden_devices():
    spec = mini_scenario(hidden=("C", "D"))
    env = spec.build_environment()
    oracle = RssiOracle(env, spec.targets, spec.visible_non_targets(), 15.0,
                        np.random.default_rng(0))
    t, n = oracle(spec_config(spec))
    assert t.shape == (1,)
    assert n.shape == (3,)      # D0, B, E


def spec_config(spec):
    from risjam.ris import random_config
    env = spec.build_environment()
    return random_config(env.n_elements, 0)


def test_oracle_reciprocity_with_delivery():
    # the eavesdropped magnitude equals the jamming-delivery magnitude
    spec = mini_scenario()
    env = spec.build_environment()
    oracle = RssiOracle(env, ("A",), ("D0", "B", "C", "D", "E"), 15.0,
                        np.random.default_rng(0), sigma_db=0.0, quantize=False)
    cfg = spec_config(spec)
    t, _ = oracle(cfg)
    from risjam.scenarios import _composed_gain_db
    delivered = _composed_gain_db(env, cfg, ("A",))
    assert t[0] == pytest.approx(15.0 + delivered[0], abs=1e-9)


# -- single target ------------------------------------------------------------


@pytest.fixture(scope="module")
def single_result():
    return run_single_target(mini_scenario())


def test_single_target_requires_one_target():
    with pytest.raises(ScenarioError):
        run_single_target(mini_scenario(targets=("A", "B")))


def test_single_target_disrupts_only_target(single_result):
    row = single_result.rows[0]
    assert row.packet_rate["A"] <= 5.0
    for dev in ("B", "C", "D", "E"):
        assert row.packet_rate[dev] >= 90.0


def test_normalized_jsr_definition(single_result):
    row = single_result.rows[0]
    assert row.norm_jsr_db["A"] == 0.0
    for dev, value in row.norm_jsr_db.items():
        assert value == pytest.approx(row.jsr_db[dev] - row.jsr_db["A"])


def test_single_target_margin_positive(single_result):
    row = single_result.rows[0]
    assert row.margin_db is not None and row.margin_db > 5.0
    assert row.operating_jam_dbm == pytest.approx(row.target_knee_dbm + 3.0)


def test_run_result_deterministic():
    a = run_single_target(mini_scenario()).to_json_dict()
    b = run_single_target(mini_scenario()).to_json_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


def test_power_sweep_monotone(single_result):
    sweep = single_result.extras["sweep"]
    for dev, rates in sweep["rates"].items():
        increases = np.sum(np.diff(rates) > 2.0)
        assert increases == 0
    powers = sweep["powers_dbm"]
    rates0 = [sweep["rates"][d][0] for d in single_result.devices]
    assert min(rates0) >= 98.0          # no jamming at the bottom of the sweep


def test_sweep_saturates_at_high_power():
    spec = mini_scenario(powers=PowerSettings(sweep_from_dbm=-80,
                                              sweep_to_dbm=20))
    res = run_single_target(spec)
    sweep = res.extras["sweep"]
    top = [sweep["rates"][d][-1] for d in res.devices]
    assert max(top) <= 5.0


def test_long_records_and_csv(tmp_path, single_result):
    records = list(single_result.long_records())
    metrics = {r[3] for r in records}
    assert {"attacker_rssi_dbm", "ap_rssi_dbm", "jsr_db", "norm_jsr_db",
            "packet_rate"} <= metrics
    path = tmp_path / "res.csv"
    single_result.write_csv(path)
    header = path.read_text().splitlines()[0]
    assert header == "scenario,target_set,device,metric,value"


# -- multi target / exclusion --------------------------------------------------


def test_multi_target_disrupts_cluster():
    # two neighbours from the same cluster
    res = run_multi_target(mini_scenario(targets=("A", "B")))
    row = res.rows[0]
    assert row.packet_rate["A"] <= 5.0 and row.packet_rate["B"] <= 5.0
    healthy = [d for d in ("C", "D", "E") if row.packet_rate[d] >= 90.0]
    assert len(healthy) >= 2
    assert set(res.extras["delivered_gain_db"]) == {"A", "B"}


def test_multi_target_across_clusters():
    # one device per cluster, far apart
    res = run_multi_target(mini_scenario(targets=("A", "C")))
    row = res.rows[0]
    assert row.packet_rate["A"] <= 5.0 and row.packet_rate["C"] <= 5.0
    healthy = [d for d in ("B", "D", "E") if row.packet_rate[d] >= 90.0]
    assert len(healthy) >= 2


def test_multi_target_requires_two():
    with pytest.raises(ScenarioError):
        run_multi_target(mini_scenario())


def test_exclusion_keeps_excluded_operational():
    spec = mini_scenario(mode="exclusion", targets=(),
                         mode_params={"exclude": "E"})
    res = run_exclusion(spec)
    row = res.rows[0]
    assert set(row.targets) == {"A", "B", "C", "D"}
    assert row.packet_rate["E"] >= 90.0
    assert max(row.packet_rate[t] for t in row.targets) <= 5.0


# -- matrix / hidden ------------------------------------------------------------


def test_jsr_matrix_diagonal_dominance():
    spec = mini_scenario(mode="jsr-matrix", targets=())
    res = run_jsr_matrix(spec)
    assert [row.targets[0] for row in res.rows] == list(res.devices)
    for row in res.rows:
        target = row.targets[0]
        others = [v for d, v in row.norm_jsr_db.items() if d != target]
        assert max(others) < 0.0


def test_jsr_matrix_threads_match_sequential():
    spec = mini_scenario(mode="jsr-matrix", targets=())
    seq = run_jsr_matrix(spec, threads=1).to_json_dict()
    par = run_jsr_matrix(spec, threads=3).to_json_dict()
    assert json.dumps(seq, sort_keys=True) == json.dumps(par, sort_keys=True)


def test_hidden_eval_still_concentrates():
    # Hidden devices receive no explicit minimization, so their rejection is
    # weaker than in the visible experiment; the diagonal still dominates.
    spec = mini_scenario(mode="jsr-matrix", targets=("A", "B"))
    res = hidden_device_eval(spec)
    assert len(res.rows) == 2
    for row in res.rows:
        target = row.targets[0]
        others = [v for d, v in row.norm_jsr_db.items() if d != target]
        assert np.median(others) < 0.0
        assert sum(v < 0.0 for v in others) >= len(others) - 1
    assert set(res.extras["before_norm_jsr_db"]) == {"A", "B"}


# -- spatial scans ---------------------------------------------------------------


def test_heatmap_shape_and_focus():
    spec = mini_scenario(mode="heatmap",
                         mode_params={"x_extent_m": 0.2, "y_extent_m": 0.1,
                                      "step_m": 0.01})
    res = heatmap_scan(spec)
    hm = res.extras["heatmap"]
    grid = np.array(hm["normalized_db"])
    assert grid.shape == (11, 21)
    fx, fy, _ = hm["focus"]
    ix = int(np.argmin(np.abs(np.array(hm["x_m"]) - fx)))
    iy = int(np.argmin(np.abs(np.array(hm["y_m"]) - fy)))
    assert grid[iy, ix] >= -3.0         # the focus cell sits at the peak
    assert grid.max() <= 6.0


def test_heatmap_grid_must_contain_focus():
    spec = mini_scenario(mode="heatmap",
                         mode_params={"x_min_m": 0.0, "x_max_m": 0.5,
                                      "y_min_m": 0.0, "y_max_m": 0.5})
    with pytest.raises(ScenarioError, match="excludes"):
        heatmap_scan(spec)


def test_displacement_scan_shapes_and_notch():
    spec = mini_scenario(mode="displacement",
                         mode_params={"minimized": "B", "step_mm": 2.0,
                                      "max_mm": 40.0})
    res = displacement_scan(spec)
    disp = res.extras["displacement"]
    d_mm = np.array(disp["displacements_mm"])
    mx = np.array(disp["maximized_db"])
    mn = np.array(disp["minimized_db"])
    assert d_mm[0] == 0.0 and len(d_mm) == len(mx) == len(mn)
    # zero displacement matches the optimization-time values
    assert disp["fixed_maximized_db"] == mx[0]
    assert disp["fixed_minimized_db"] == mn[0]
    # the maximized channel decays toward the background near the null
    window = (d_mm >= 14) & (d_mm <= 30)
    assert mx[window].min() <= mx[0] - 6.0
    # the minimized channel rises from its notch
    assert mn.max() >= mn[0] + 3.0


# -- element sweep ----------------------------------------------------------------


def test_element_sweep_counts_and_consistency():
    spec = mini_scenario(mode="element-sweep",
                         mode_params={"counts": [16, 192]})
    res = element_sweep(spec)
    sw = res.extras["element_sweep"]
    assert sw["counts"] == [16, 192]
    assert sw["separation_db"]["192"][0] > sw["separation_db"]["16"][0]
    # full-surface sweep run is bit-identical to run_single_target
    single = run_single_target(mini_scenario(seed=5))
    full_cfg = res.extras["configs"]["192:0"]
    assert full_cfg == single.extras["config"]


def test_element_sweep_count_exceeds_surface():
    spec = mini_scenario(mode="element-sweep",
                         mode_params={"counts": [16, 500]})
    with pytest.raises(ScenarioError, match="exceeds"):
        element_sweep(spec)


def test_element_sweep_counts_sorted():
    with pytest.raises(ScenarioError, match="sorted"):
        mini_scenario(mode="element-sweep", mode_params={"counts": [64, 16]})


# -- directional baseline -----------------------------------------------------------


def test_directional_pattern_values():
    assert directional_gain_db(0.0) == pytest.approx(19.0)
    assert directional_gain_db(10.0, beamwidth_deg=10.0) == pytest.approx(16.0)
    # the back lobe saturates at the front-to-back ratio
    assert directional_gain_db(180.0) == pytest.approx(19.0 - 25.0)


def test_directional_baseline_runs():
    spec = mini_scenario(mode="directional-baseline")
    res = directional_baseline(spec)
    row = res.rows[0]
    assert row.packet_rate["A"] <= 5.0
    assert res.extras["antenna"]["gain_dbi"] == 19.0
    assert row.margin_db is not None


# -- perturbation ----------------------------------------------------------------


def test_perturbation_identity_schedule():
    spec = mini_scenario(mode="perturbation",
                         mode_params={"schedule": [], "duration": 3})
    res = perturbation_run(spec)
    series = res.extras["timeseries"]
    rates = np.array([series["rates"][d] for d in res.devices])
    np.testing.assert_allclose(rates[:, 0], rates[:, 1])
    np.testing.assert_allclose(rates[:, 0], rates[:, 2])
    row_rates = [res.rows[0].packet_rate[d] for d in res.devices]
    np.testing.assert_allclose(rates[:, 0], row_rates)


def test_perturbation_small_fraction_keeps_target_jammed():
    spec = mini_scenario(mode="perturbation",
                         mode_params={"schedule": [
                             {"time": 1, "fraction": 0.05, "seed": 6}],
                             "duration": 3})
    res = perturbation_run(spec)
    target_rates = res.extras["timeseries"]["rates"]["A"]
    assert max(target_rates) <= 10.0


def test_moving_target_half_wavelength_releases_it():
    lam = 299792458.0 / 5.56e9
    new_pos = [MINI_DEVICES["A"].x + lam / 2, MINI_DEVICES["A"].y,
               MINI_DEVICES["A"].z]
    spec = mini_scenario(mode="perturbation",
                         mode_params={"schedule": [
                             {"time": 1, "device": "A", "position": new_pos}],
                             "duration": 3})
    res = perturbation_run(spec)
    rates = res.extras["timeseries"]["rates"]["A"]
    assert rates[0] <= 5.0
    assert rates[2] >= 80.0


def test_reoptimization_restores_separation():
    base = mini_scenario()
    original = run_single_target(base)
    orig_sep = original.rows[0].separation_db()
    env = base.build_environment()
    moved = env
    for dev, pos in (("A", (2.2, 2.2, 0.9)), ("B", (1.0, 3.4, 0.9)),
                     ("C", (3.0, 2.0, 0.9))):
        moved = move_device(moved, dev, Position(*pos))
    renewed = run_single_target(mini_scenario(environment=moved))
    assert renewed.rows[0].separation_db() >= 0.8 * orig_sep


# -- random configs / dispatcher ---------------------------------------------------


def test_random_config_eval_shape():
    out = random_config_eval(mini_scenario(mode="jsr-matrix", targets=()), 7)
    assert out["rssi_dbm"].shape == (7, 5)
    assert len(out["configs"]) == 7


def test_run_scenario_dispatch():
    res = run_scenario(mini_scenario())
    assert res.mode == "packet-rate" and len(res.rows) == 1
    res2 = run_scenario(mini_scenario(mode="exclusion", targets=(),
                                      mode_params={"exclude": "E"}))
    assert res2.mode == "exclusion"


def test_matrix_dispatch_routes_hidden_variants():
    # E sits right next to the access point, so its disruption knee needs a
    # wider sweep than the default range.
    wide = PowerSettings(sweep_to_dbm=20.0)
    # everything hidden: the dedicated hidden-device experiment
    spec_all = mini_scenario(mode="jsr-matrix", targets=(),
                             hidden=("A", "B", "C", "D", "E"), powers=wide)
    res_all = run_scenario(spec_all)
    assert "before_norm_jsr_db" in res_all.extras
    # a partial hidden set stays with the plain matrix but still shields
    # the hidden device from the optimizer
    spec_part = mini_scenario(mode="jsr-matrix", targets=(), hidden=("C",),
                              powers=wide)
    res_part = run_scenario(spec_part)
    assert "before_norm_jsr_db" not in res_part.extras
    plain = run_scenario(mini_scenario(mode="jsr-matrix", targets=(),
                                       powers=wide))
    row_part = res_part.row_for("A").norm_jsr_db
    row_plain = plain.row_for("A").norm_jsr_db
    assert row_part != row_plain

    # The un-minimized hidden devices end up with noticeably higher JSR
    # than in the experiment where they are visible to the optimizer.
    def others_mean(result):
        vals = []
        for row in result.rows:
            vals.extend(v for d, v in row.norm_jsr_db.items()
                        if d != row.targets[0])
        return np.mean(vals)

    assert others_mean(res_all) > others_mean(plain) + 10.0


def test_hidden_concentration_emerges_at_full_scale():
    # Needs the full surface: selective focus with only the access point
    # visible relies on the large-surface focusing advantage.
    spec = desk_scenario("jsr-matrix", seed=28,
                         powers=PowerSettings(sweep_to_dbm=10.0),
                         optimizer=OptimizerSettings(steps=4000))
    res = hidden_device_eval(spec, threads=4)

    def frac_at_least_target(rows):
        vals = []
        for label, row in rows:
            vals.extend(v >= 0 for d, v in row.items() if d != label)
        return np.mean(vals)

    before = frac_at_least_target(res.extras["before_norm_jsr_db"].items())
    after = frac_at_least_target(
        (r.targets[0], r.norm_jsr_db) for r in res.rows)
    # pre-optimization: scatter around the target; afterwards: diagonal
    assert 0.3 <= before <= 0.7
    assert after <= before - 0.2


# -- dict round trip ----------------------------------------------------------------


def test_scenario_dict_round_trip():
    spec = mini_scenario(hidden=("C",))
    doc = scenario_to_dict(spec)
    rebuilt = scenario_from_dict(doc)
    assert scenario_to_dict(rebuilt) == doc


def test_scenario_from_dict_defaults_to_desk():
    spec = scenario_from_dict({"mode": "packet-rate", "targets": ["D1"]})
    assert spec.optimizer.steps == 10000
    assert spec.optimizer.table_size == 100
    assert set(spec.eval_devices()) == set(DESK_DEVICES) - {"D0"}
    env = spec.environment
    assert env.frequency_hz == pytest.approx(5.56e9)


def test_scenario_from_dict_rejects_unknown_fields():
    with pytest.raises(ScenarioError, match="unknown field"):
        scenario_from_dict({"mode": "packet-rate", "targets": ["D1"],
                            "bogus": 1})
    with pytest.raises(ScenarioError, match="optimizer"):
        scenario_from_dict({"mode": "packet-rate", "targets": ["D1"],
                            "optimizer": {"steppes": 3}})


def test_desk_roster_shape():
    spec = desk_environment_spec()
    assert len(spec.devices) == 11
    assert sum(len(v) for v in DESK_CLUSTERS.values()) == 10
    scenario = desk_scenario("packet-rate", targets=("D1",))
    assert scenario.ap_id == "D0"
