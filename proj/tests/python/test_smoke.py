"""End-to-end smoke tests for the python bindings.

Heavy numerical verification lives in the C++ suites; these tests prove the
binding layer carries data faithfully in both directions.
"""

import math

import pytest

import todsec as td


@pytest.fixture(scope="module")
def dataset():
    cfg = td.SyntheticGenConfig()
    cfg.count_left = cfg.count_right = cfg.count_uturn = 4
    cfg.trace_len_s = 30.0
    cfg.seed = 99
    return td.generate_synthetic_dataset(cfg)


def test_generate_shapes(dataset):
    assert len(dataset) == 12
    labels = [st.trace.label for st in dataset]
    assert labels.count(td.ManeuverClass.LeftTurn) == 4
    assert labels.count(td.ManeuverClass.UTurn) == 4
    trace = dataset[0].trace
    assert trace.sample_period_s == pytest.approx(0.1)
    assert len(trace) == 300
    assert trace.duration_s() == pytest.approx(30.0)


def test_attack_injection_bounds(dataset):
    trace = dataset[0].trace
    spec = td.AttackSpec()
    spec.placement = td.AttackPlacement.P1_TurnOnset
    spec.window.duration_s = 2.0
    spec.noise.kind = td.NoiseKind.ConstantOffset
    spec.noise.amplitude_deg = 45.0
    attacked = td.inject_fdi(trace, spec)

    assert td.window_length_samples(2.0, trace.sample_period_s) == 20
    changed = [
        i
        for i, (a, b) in enumerate(zip(trace.samples, attacked.samples))
        if a.swa_deg != b.swa_deg
    ]
    assert changed, "the attack must modify the steering channel"
    assert max(changed) - min(changed) < 20
    for a, b in zip(trace.samples, attacked.samples):
        assert a.app_pct == b.app_pct and a.bp == b.bp


def test_simulate_and_window(dataset):
    result = td.simulate(dataset[0].trace, td.VehicleConfig())
    physical = result.physical
    assert len(physical) == len(dataset[0].trace)
    sample = td.extract_maneuver_window(physical, td.WindowConfig())
    assert sample.steps() > 0
    assert sample.channels() == physical.feature_count()
    assert sample.label == dataset[0].trace.label


def test_train_and_detect(dataset):
    windows = [
        td.extract_maneuver_window(td.simulate(st.trace, td.VehicleConfig()).physical,
                                   td.WindowConfig())
        for st in dataset
    ]
    cfg = td.TrainConfig()
    cfg.validation_fraction = 0.0
    model = td.train(windows, td.ModelKind.Tree, cfg)
    assert model.kind == td.ModelKind.Tree

    scores = model.predict_scores(windows[0])
    assert math.isclose(sum(scores.p), 1.0, abs_tol=1e-9)
    assert scores.argmax() in (0, 1, 2)

    physical = td.simulate(dataset[0].trace, td.VehicleConfig()).physical
    result = td.detect_trace(physical, model, td.WindowConfig())
    assert result.trace_id == physical.trace_id
    assert result.verdict.kind == td.VerdictKind.PhysicsScore
    # Tree fitted on all samples classifies its own training data.
    assert not result.verdict.flagged


def test_score_anomaly_rule():
    scores = td.ClassScores()
    scores.p = [0.05, 0.92, 0.03]
    assert not td.score_anomaly(scores, td.ManeuverClass.RightTurn)
    assert td.score_anomaly(scores, td.ManeuverClass.UTurn)
    with pytest.raises(ValueError):
        td.score_anomaly(scores, td.ManeuverClass.Straight)


def test_context_route_fixture():
    route = td.route_fixture(12, 7)
    store = td.build_expectation_store(route)
    assert len(store) == 12

    events = td.drive_log_with_flips(store, 3, 1, 11)
    alg1 = td.detect_incorrect_maneuver(events, store)
    alg3 = td.detect_with_alert_filter(events, store)
    assert sum(v.flagged for v in alg1) == 3
    assert sum(v.flagged for v in alg3) == 2
    assert sum(v.suppressed_by_alert for v in alg3) == 1


def test_metrics_round_trip():
    cm = td.confusion_matrix(
        [td.ManeuverClass.LeftTurn, td.ManeuverClass.RightTurn, td.ManeuverClass.RightTurn],
        [td.ManeuverClass.LeftTurn, td.ManeuverClass.RightTurn, td.ManeuverClass.UTurn],
    )
    assert cm.total() == 3 and cm.diagonal() == 2
    per_class = td.metrics_per_class(cm)
    assert per_class[0].f1 == pytest.approx(1.0)
    assert "macro-F1" in td.format_metrics_table(cm, "smoke")


def test_run_experiment_smoke(tmp_path):
    cfg = td.smoke_experiment_config()
    report = td.run_experiment(cfg, tmp_path / "run")
    assert (tmp_path / "run" / "report.json").read_text() == report.report_json
    assert report.context.n_intersections == 12
    assert all(row.n_detected <= row.n_tested for row in report.detection)
    kinds = {(c.kind, c.focused) for c in report.clean}
    assert (td.ModelKind.Tree, True) in kinds and (td.ModelKind.Tree, False) in kinds
