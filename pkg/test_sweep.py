import csv
import json
import math
import warnings

import numpy as np
import pytest
from pydantic import ValidationError

from config import DetectorSection
from core import GaussianBallProfile, Placement, PointProfile
from errors import DomainError, OutputError
from information import delta_capacity_bits
from models import Model
from sweep import (
    CSV_COLUMNS,
    FixedParameters,
    Observable,
    PresetFamily,
    SweepAxis,
    SweepPlan,
    SweepRange,
    emit,
    evaluate_point,
    finite_or_none,
    parse_profile,
    preset,
    preset_plans,
    render_csv,
    render_json,
    run_sweep,
)
from bilinear import QuadratureSpec


def _nu_plan(steps=3, models=(Model.QC, Model.QUANTUM)):
    return SweepPlan(axis=SweepAxis.NU_B, range=SweepRange(min=0.5, max=1.0, steps=steps),
                     models=models, observable=Observable.CAPACITY_DELTA)


def _values(rows, model):
    return np.array([r.value for r in rows if r.model is model])


def test_sweep_range_validation():
    with pytest.raises(ValidationError):
        SweepRange(min=1.0, max=0.0, steps=3)
    with pytest.raises(ValidationError):
        SweepRange(min=0.0, max=1.0, steps=1)
    grid = SweepRange(min=0.0, max=1.0, steps=5).grid()
    assert grid == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_parse_profile():
    assert parse_profile("point") == PointProfile()
    assert parse_profile("ball:0.2") == GaussianBallProfile(width=0.2)
    for bad in ("ball:", "cube:1", "ball:-1", "ball:x"):
        with pytest.raises(DomainError):
            parse_profile(bad)


def test_preset_parameters():
    fig2, fig3, fig4, fig5 = (preset(n).plan for n in ("fig2", "fig3", "fig4", "fig5"))
    assert fig2.models == (Model.QC,) and fig3.models == (Model.QUANTUM,)
    for plan in (fig2, fig3, fig5):
        assert plan.axis is SweepAxis.THETA
        assert (plan.fixed.omega_t, plan.fixed.l_over_t) == (10.0, 10.0)
        assert plan.range.steps == 100
    assert fig4.axis is SweepAxis.OMEGA_T
    assert (fig4.fixed.l_over_t, fig4.fixed.t0_over_t, fig4.fixed.placement) == (2.0, 0.0, Placement.DELAY)
    assert fig5.models == (Model.QC, Model.QUANTUM)


def test_preset_families_expand_into_tagged_series():
    fig4 = preset_plans("fig4")
    assert [p.fixed.l_over_t for p in fig4] == [2.0, 4.0, 6.0]
    assert [p.series for p in fig4] == ["l_over_t=2", "l_over_t=4", "l_over_t=6"]
    fig5 = preset_plans("fig5")
    assert [p.fixed.omega_t for p in fig5] == [1.0, 2.0, 5.0, 10.0]
    assert fig5[-1].series == "omega_t=10"
    assert all(p.fixed.l_over_t == 10.0 and p.range == fig5[0].range for p in fig5)
    assert [p.series for p in preset_plans("fig2")] == [""]


def test_family_validation():
    plan = _nu_plan()
    with pytest.raises(ValidationError):
        PresetFamily(plan=plan, series_key="no_such_parameter", series_values=(1.0,))
    with pytest.raises(ValidationError):
        PresetFamily(plan=preset("fig4").plan, series_key="omega_t", series_values=(1.0,))
    with pytest.raises(ValidationError):
        PresetFamily(plan=plan, series_key="theta_e", series_values=())


@pytest.mark.parametrize("name", ["fig2", "fig3", "fig5"])
def test_theta_presets_stop_short_of_the_singular_angle(name):
    grid = preset(name).plan.range.grid()
    assert grid[0] == 0.0
    assert grid[-1] < math.pi / 2
    rows = evaluate_point(preset_plans(name)[0], QuadratureSpec(), grid[-1])
    assert all(r.error is None and math.isfinite(r.value) for r in rows)


def test_unknown_preset():
    with pytest.raises(DomainError):
        preset("fig9")


def test_nu_axis_needs_delta_capacity():
    with pytest.raises(ValidationError):
        SweepPlan(axis=SweepAxis.NU_B, range=SweepRange(min=0.5, max=1.0, steps=3))


def test_axis_value_overrides_fixed_parameters():
    fixed = FixedParameters(placement=Placement.DELAY)
    a, b, g = fixed.detectors(SweepAxis.THETA, 0.3)
    assert g.mode is Placement.THETA and g.theta == 0.3
    a, b, g = fixed.detectors(SweepAxis.OMEGA_T, 4.0)
    assert a.gap == b.gap == 4.0
    assert a.initial_state != b.initial_state


def test_singular_point_is_recorded_in_row():
    plan = SweepPlan(axis=SweepAxis.THETA, range=SweepRange(min=0.0, max=math.pi / 2, steps=2))
    rows = evaluate_point(plan, QuadratureSpec(), math.pi / 2)
    assert len(rows) == 2
    for row in rows:
        assert math.isnan(row.value)
        assert "coincident" in row.error


def test_nu_axis_rows():
    rows = run_sweep(_nu_plan())
    assert len(rows) == 6
    np.testing.assert_allclose(_values(rows, Model.QUANTUM), [delta_capacity_bits(0.3, nu) for nu in (0.5, 0.75, 1.0)])
    np.testing.assert_allclose(_values(rows, Model.QC), delta_capacity_bits(0.3, 1.0))
    assert all(r.error is None for r in rows)


def test_serial_and_parallel_sweeps_agree():
    plan = _nu_plan(steps=5)
    assert run_sweep(plan, workers=1) == run_sweep(plan, workers=2)


def test_two_row_csv(tmp_path):
    rows = run_sweep(_nu_plan(steps=2, models=(Model.QUANTUM,)))
    path = tmp_path / "sweep.csv"
    emit(rows, "csv", path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 3
    assert lines[0].split(",") == CSV_COLUMNS
    parsed = list(csv.DictReader(lines))
    assert float(parsed[1]["value"]) == rows[1].value


def test_identical_plans_give_identical_files(tmp_path):
    plan = _nu_plan()
    for name in ("a.csv", "b.csv"):
        emit(run_sweep(plan), "csv", tmp_path / name, plan)
    for name in ("a.json", "b.json"):
        emit(run_sweep(plan), "json", tmp_path / name, plan)
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


def test_json_round_trip(tmp_path):
    plan = _nu_plan()
    rows = run_sweep(plan)
    path = tmp_path / "sweep.json"
    emit(rows, "json", path, plan)
    document = json.loads(path.read_text(encoding="utf-8"))
    assert [p["axis"] for p in document["meta"]["plans"]] == ["nu_b"]
    assert "version" in document["meta"] and "spec" in document["meta"]
    assert [r["value"] for r in document["rows"]] == [r.value for r in rows]
    assert [r["axis_value"] for r in document["rows"]] == [r.axis_value for r in rows]


def test_emit_errors(tmp_path):
    rows = run_sweep(_nu_plan())
    with pytest.raises(DomainError):
        emit([], "csv", tmp_path / "empty.csv")
    with pytest.raises(DomainError):
        emit(rows, "xml", tmp_path / "rows.xml")
    with pytest.raises(OutputError):
        emit(rows, "csv", tmp_path / "missing" / "rows.csv")


def test_failed_rows_render_as_nan():
    plan = SweepPlan(axis=SweepAxis.THETA, range=SweepRange(min=0.0, max=math.pi / 2, steps=2), models=(Model.QC,))
    text = render_csv(evaluate_point(plan, QuadratureSpec(), math.pi / 2))
    assert list(csv.DictReader(text.splitlines()))[0]["value"] == "nan"


def _strict(constant):
    raise AssertionError(f"non-standard JSON token {constant}")


def test_failed_rows_render_as_json_null():
    plan = SweepPlan(axis=SweepAxis.THETA, range=SweepRange(min=0.0, max=math.pi / 2, steps=2), models=(Model.QC,))
    rows = evaluate_point(plan, QuadratureSpec(), math.pi / 2)
    document = json.loads(render_json(rows, plan), parse_constant=_strict)
    assert document["rows"][0]["value"] is None
    assert document["rows"][0]["est_error"] is None
    assert "coincident" in document["rows"][0]["error"]


def test_finite_or_none_walks_nested_values():
    assert finite_or_none({"a": [1.0, math.nan, {"b": -math.inf}], "c": "x", "d": 2}) == \
        {"a": [1.0, None, {"b": None}], "c": "x", "d": 2}


def test_render_json_serializes_states_without_warnings():
    plan = _nu_plan(steps=2)
    rows = run_sweep(plan)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        text = render_json(rows, plan)
    receiver = json.loads(text)["meta"]["plans"][0]["fixed"]["receiver"]
    assert len(receiver) == 2


def test_family_rows_carry_series_and_split_csv_by_series(tmp_path):
    family = PresetFamily(plan=_nu_plan(models=(Model.QUANTUM,)), series_key="theta_e", series_values=(0.3, 0.6))
    plans = family.expand()
    rows = [row for plan in plans for row in run_sweep(plan)]
    assert {r.series for r in rows} == {"theta_e=0.3", "theta_e=0.6"}

    written = emit(rows, "csv", tmp_path / "nu.csv", plans)
    assert written == [tmp_path / "nu_theta_e_0.3.csv", tmp_path / "nu_theta_e_0.6.csv"]
    assert not (tmp_path / "nu.csv").exists()
    second = list(csv.DictReader(written[1].read_text(encoding="utf-8").splitlines()))
    assert list(second[0]) == CSV_COLUMNS
    np.testing.assert_allclose([float(r["value"]) for r in second], [delta_capacity_bits(0.6, nu) for nu in (0.5, 0.75, 1.0)])

    emit(rows, "json", tmp_path / "nu.json", plans)
    document = json.loads((tmp_path / "nu.json").read_text(encoding="utf-8"))
    assert [p["series"] for p in document["meta"]["plans"]] == ["theta_e=0.3", "theta_e=0.6"]
    assert [r["series"] for r in document["rows"]] == [r.series for r in rows]


def test_sweep_detectors_honour_per_detector_settings():
    fixed = FixedParameters(omega_t=4.0, detector_a=DetectorSection(width=2.0), detector_b=DetectorSection(omega_t=6.0))
    a, b, _ = fixed.detectors(SweepAxis.THETA, 0.3)
    assert (a.gap, a.switching.width, b.gap, b.switching.width) == (4.0, 2.0, 6.0, 1.0)
    a, b, _ = fixed.detectors(SweepAxis.OMEGA_T, 3.0)
    assert a.gap == b.gap == 3.0
    assert a.switching.width == 2.0


@pytest.mark.slow
def test_qc_theta_sweep_is_flat_in_the_spacelike_region():
    plan = SweepPlan(axis=SweepAxis.THETA, range=SweepRange(min=0.0, max=math.pi / 2, steps=21), models=(Model.QC,))
    rows = run_sweep(plan)
    spacelike = [r for r in rows if r.causal_class == "effectively-spacelike"]
    assert spacelike
    assert all(r.value < 1e-12 for r in spacelike)


@pytest.mark.slow
def test_theta_sweep_peaks_on_the_lightcone():
    plan = preset_plans("fig5")[-1]
    rows = run_sweep(plan)
    grid = np.array(plan.range.grid())
    step = grid[1] - grid[0]
    for model in plan.models:
        values = _values(rows, model)
        peak = grid[int(np.nanargmax(values))]
        assert abs(peak - math.pi / 4) <= step


@pytest.mark.slow
def test_gap_sweep_has_threshold_then_single_peak():
    plan = preset("fig4").plan
    values = _values(run_sweep(plan), Model.QUANTUM)
    assert not np.isnan(values).any()
    assert values[0] == 0.0
    top = int(np.argmax(values))
    assert 0 < top < len(values) - 1
    assert values[-1] < values[top]
    first = int(np.flatnonzero(values > 0)[0])
    assert np.all(np.diff(values[first:top + 1]) >= 0)
