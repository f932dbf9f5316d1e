import json
import math

import pytest

from cli import build_parser, main, resolve_fixed, resolve_pair, resolve_plans, resolve_spec
from config import RunConfig, load_run_config
from core import DiracSwitching, Placement
from models import Model
from sweep import SweepAxis

CONFIG = """
[detector.a]
omega_t = 4.0
coupling = 0.02

[detector.b]
omega_t = 4.0
switching = "gaussian"
width = 2.0
beta = [0.0, 1.0]
alpha = [0.0, 0.0]

[geometry]
l_over_t = 6.0
t0_over_t = 1.0
placement = "delay"

[quadrature]
rel_tol = 1e-9
"""


def _config(tmp_path):
    path = tmp_path / "run.toml"
    path.write_text(CONFIG, encoding="utf-8")
    return load_run_config(str(path))


def test_flags_override_config_file(tmp_path):
    cfg = _config(tmp_path)
    args = build_parser().parse_args(["negativity", "--omega-t", "7", "--l-over-t", "9"])
    fixed = resolve_fixed(args, cfg)
    assert fixed.omega_t == 7.0
    assert fixed.l_over_t == 9.0
    assert fixed.coupling == 0.02
    assert fixed.t0_over_t == 1.0 and fixed.placement is Placement.DELAY


def test_config_file_reaches_each_detector(tmp_path):
    cfg = _config(tmp_path)
    a, b, g = resolve_pair(build_parser().parse_args(["state"]), cfg)
    assert a.gap == b.gap == 4.0
    assert b.switching.width == 2.0 and a.switching.width == 1.0
    assert b.initial_state.beta == 1j
    assert (g.L, g.t0) == (6.0, 1.0)


def test_theta_flag_selects_theta_placement():
    args = build_parser().parse_args(["negativity", "--theta", "0.5"])
    fixed = resolve_fixed(args, RunConfig())
    assert fixed.placement is Placement.THETA and fixed.theta == 0.5


def test_tolerances_from_file_and_flags(tmp_path):
    cfg = _config(tmp_path)
    spec = resolve_spec(build_parser().parse_args(["state", "--abs-tol", "1e-12"]), cfg)
    assert (spec.abs_tol, spec.rel_tol) == (1e-12, 1e-9)


def test_switching_flag_builds_flashes():
    args = build_parser().parse_args(["capacity-delta", "--switching", "delta", "--profile", "ball:0.1"])
    a, b, _ = resolve_pair(args, RunConfig())
    assert isinstance(a.switching, DiracSwitching) and a.profile.sigma == 0.1


def test_preset_plan_takes_flag_overrides():
    args = build_parser().parse_args(["sweep", "--preset", "fig5", "--omega-t", "50", "--model", "quantum", "--steps", "11"])
    plans = resolve_plans(args, RunConfig())
    assert len(plans) == 1
    plan = plans[0]
    assert plan.axis is SweepAxis.THETA
    assert plan.fixed.omega_t == 50.0
    assert plan.models == (Model.QUANTUM,)
    assert plan.range.steps == 11 and plan.range.max == pytest.approx(math.pi / 2 * 0.99)


def test_preset_family_expands_with_shared_overrides():
    args = build_parser().parse_args(["sweep", "--preset", "fig4", "--steps", "5", "--lambda", "0.02"])
    plans = resolve_plans(args, RunConfig())
    assert [p.fixed.l_over_t for p in plans] == [2.0, 4.0, 6.0]
    assert [p.series for p in plans] == ["l_over_t=2", "l_over_t=4", "l_over_t=6"]
    assert all(p.range.steps == 5 and p.fixed.coupling == 0.02 for p in plans)
    pinned = build_parser().parse_args(["sweep", "--preset", "fig4", "--l-over-t", "3"])
    assert [p.fixed.l_over_t for p in resolve_plans(pinned, RunConfig())] == [3.0]


def test_sweep_and_single_point_see_the_same_detectors(tmp_path):
    path = tmp_path / "pair.toml"
    path.write_text("[detector.a]\nomega_t = 4.0\nwidth = 2.0\n\n[detector.b]\nomega_t = 6.0\n", encoding="utf-8")
    cfg = load_run_config(str(path))
    a, b, _ = resolve_pair(build_parser().parse_args(["state"]), cfg)
    assert (a.gap, a.switching.width, b.gap) == (4.0, 2.0, 6.0)
    args = build_parser().parse_args(["sweep", "--sweep-axis", "theta", "--min", "0", "--max", "1", "--steps", "2"])
    plan, = resolve_plans(args, cfg)
    sa, sb, _ = plan.fixed.detectors(plan.axis, 0.5)
    assert (sa.gap, sa.switching.width, sb.gap, sb.switching.width) == (a.gap, a.switching.width, b.gap, b.switching.width)
    flagged = resolve_pair(build_parser().parse_args(["state", "--omega-t", "7"]), cfg)
    assert flagged[0].gap == flagged[1].gap == 7.0


def test_multi_series_csv_needs_an_output_path():
    assert main(["sweep", "--preset", "fig5", "--steps", "2"]) == 1


def test_capacity_delta_command(tmp_path):
    out = tmp_path / "report.json"
    code = main(["capacity-delta", "--switching", "delta", "--profile", "ball:0.1",
                 "--l-over-t", "10", "--t0-over-t", "2", "--out", str(out)])
    assert code == 0
    document = json.loads(out.read_text(encoding="utf-8"))
    assert document["causal_class"] == "effectively-spacelike"
    assert [r["model"] for r in document["results"]] == ["qc", "quantum"]
    assert all(r["capacity"] == 0.0 for r in document["results"])


def test_state_command_prints_json(capsys):
    assert main(["state", "--omega-t", "1", "--l-over-t", "10", "--theta", "0", "--model", "quantum"]) == 0
    document = json.loads(capsys.readouterr().out)
    rho = document["results"][0]["rho"]
    assert len(rho) == 4 and rho[0][0][0] == pytest.approx(1.0, abs=1e-4)


def test_sweep_command_writes_csv(tmp_path):
    out = tmp_path / "nu.csv"
    code = main(["sweep", "--sweep-axis", "nu_b", "--observable", "capacity_delta",
                 "--min", "0.5", "--max", "1.0", "--steps", "3", "--format", "csv", "--out", str(out)])
    assert code == 0
    assert len(out.read_text(encoding="utf-8").splitlines()) == 7


def test_sweep_without_axis_fails():
    assert main(["sweep"]) == 1


def test_ordering_error_exit_code():
    assert main(["capacity-delta", "--switching", "delta", "--profile", "ball:0.1", "--t0-over-t", "-1"]) == 1


def test_unwritable_output_exit_code(tmp_path):
    out = tmp_path / "missing" / "nu.csv"
    code = main(["sweep", "--sweep-axis", "nu_b", "--observable", "capacity_delta",
                 "--min", "0.5", "--max", "1.0", "--steps", "2", "--out", str(out)])
    assert code == 4


def test_verify_reports_each_check(capsys):
    assert main(["verify", "--check", "reduced-kernel-algebra", "--check", "delta-capacity-ordering"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines == [line for line in lines if line.startswith("✅")]
    assert len(lines) == 2


def test_verify_rejects_unknown_check():
    assert main(["verify", "--check", "no-such-check"]) == 1


def test_single_point_json_is_strict(capsys):
    # pointlike Dirac receiver before the sender's cone has no coherence to report
    code = main(["capacity-perturbative", "--switching", "delta", "--l-over-t", "5", "--t0-over-t", "-10", "--model", "quantum"])
    assert code == 0
    text = capsys.readouterr().out
    assert "NaN" not in text
    assert json.loads(text)["results"][0]["nu_b"] is None
