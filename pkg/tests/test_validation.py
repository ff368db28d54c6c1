import json

import pytest

from spiralscat.filterbank import InvalidParameterError
from spiralscat.validation import (Scenario, attack_scenario, quadrant_winner, release_scenario,
                                   ridge_scenario, run_scenario, validate)


def test_scenario_rejects_bad_window():
    with pytest.raises(InvalidParameterError, match="window"):
        Scenario(window=(1.0, 5.0))


def test_scenario_rejects_unknown_check():
    with pytest.raises(InvalidParameterError, match="unknown checks"):
        Scenario(checks=("speed",))


def test_scenario_rejects_partial_out_of_range():
    with pytest.raises(InvalidParameterError):
        Scenario(partial=20, partial_count=16)


def test_scenario_from_dict():
    s = ridge_scenario()
    assert Scenario.from_dict(json.loads(json.dumps(s.to_dict()))) == s
    with pytest.raises(InvalidParameterError, match="unknown scenario keys"):
        Scenario.from_dict({"colour": 1})


def test_ridge_scenario_geometry():
    s = ridge_scenario()
    spec = s.source_filter()
    assert spec.f0(s.window[0]) == pytest.approx(220.0)
    assert spec.f0(s.window[1]) == pytest.approx(440.0)
    assert spec.cutoff(s.t_mid) == pytest.approx(s.cutoff_ratio * s.f0)


@pytest.fixture(scope="module")
def attack_run():
    return run_scenario(attack_scenario())


def test_attack_quadrant(attack_run):
    winner, info = quadrant_winner(attack_run)
    assert winner == (-1, -1)
    assert len(info["maxima"]) == 4


def test_release_quadrant():
    winner, _ = quadrant_winner(run_scenario(release_scenario()))
    assert winner == (1, 1)


def test_report_is_json(attack_run):
    report = validate(attack_run.scenario, attack_run)
    text = json.dumps(report, allow_nan=False)
    assert json.loads(text)["passed"] is True
    assert set(report["checks"]) >= {"assumptions", "quadrant", "v_theta", "closed_form"}
    # wall-clock time is not reported
    assert "runtime" not in report and "runtime" not in report["fit"]


def test_report_is_deterministic(attack_run):
    a = json.dumps(validate(attack_run.scenario, attack_run), sort_keys=True)
    b = json.dumps(validate(attack_run.scenario), sort_keys=True)
    assert a == b
