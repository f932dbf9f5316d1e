"""
Command-line front end.

    python main.py negativity --omega-t 10 --l-over-t 10 --theta 0.785
    python main.py sweep --preset fig4 --format csv --out fig4.csv
    python main.py verify

Parameters resolve as built-in defaults < config file (``--config`` or
``UDW_CONFIG``) < flags. Single-point commands print one JSON document.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

from pydantic import ValidationError

from bilinear import QuadratureSpec
from config import DEFAULT_WORKERS, VERSION, DetectorSection, RunConfig, configure_logging, load_run_config
from core import Detector, PairGeometry, Placement, causal_class
from errors import DomainError, OutputError, UDWError
from information import capacity_delta, capacity_perturbative, negativity_exact, negativity_leading, purity
from models import Model, assemble_qc_state, assemble_qft_state, compute_amplitudes
from sweep import (
    PRESETS,
    FixedParameters,
    Observable,
    SweepAxis,
    SweepPlan,
    SweepRange,
    dump_json,
    emit,
    preset,
    render_csv,
    render_json,
    run_sweep,
)
from verification import CHECKS, run_checks

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    # Every value flag defaults to None so an unset flag never masks the config file
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="TOML run file (default: $UDW_CONFIG)")
    common.add_argument("--omega-t", type=float, help="Detector gap ΩT")
    common.add_argument("--l-over-t", type=float, help="Separation L/T")
    common.add_argument("--t0-over-t", type=float, help="Delay of B, t0/T (delay placement)")
    common.add_argument("--theta", type=float, help="Angle in [0, π/2] (θ placement)")
    common.add_argument("--lambda", dest="coupling", type=float, help="Coupling λ (default 0.01)")
    common.add_argument("--model", choices=("qc", "quantum", "both"), help="Mediation model (default both)")
    common.add_argument("--switching", choices=("gaussian", "delta"))
    common.add_argument("--profile", help="'point' or 'ball:<sigma>'")
    common.add_argument("--abs-tol", type=float)
    common.add_argument("--rel-tol", type=float)
    common.add_argument("--format", choices=("csv", "json"), help="Sweep output format (default csv)")
    common.add_argument("--out", help="Write output to this path instead of stdout")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    parser = argparse.ArgumentParser(prog="udw", description="Detector entanglement and signalling through quantum or qc fields")
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("negativity", parents=[common], help="Leading-order and exact negativity")
    sub.add_parser("capacity-perturbative", parents=[common], help="Collect-calling capacity lower bound")
    sub.add_parser("capacity-delta", parents=[common], help="Capacity of the delta-coupled channel")
    sub.add_parser("state", parents=[common], help="Joint two-qubit density matrices")

    sweep = sub.add_parser("sweep", parents=[common], help="Parameter sweep to CSV/JSON")
    sweep.add_argument("--preset", choices=sorted(PRESETS))
    sweep.add_argument("--sweep-axis", choices=[a.value for a in SweepAxis])
    sweep.add_argument("--min", type=float)
    sweep.add_argument("--max", type=float)
    sweep.add_argument("--steps", type=int)
    sweep.add_argument("--observable", choices=[o.value for o in Observable])
    sweep.add_argument("--theta-e", type=float, help="Phase θ_E for the nu_b axis")
    sweep.add_argument("--workers", type=int, help="Worker processes (default $UDW_WORKERS)")

    verify = sub.add_parser("verify", help="Run the invariant suite")
    verify.add_argument("--check", action="append", help="Run only this check (repeatable)")
    verify.add_argument("--verbose", "-v", action="store_true")
    return parser


# Parameter resolution

def _pick(*values):
    """First value that is not None."""
    return next((v for v in values if v is not None), None)


def _state(section: DetectorSection, fallback: Tuple[complex, complex]) -> Tuple[complex, complex]:
    alpha = complex(*section.alpha) if section.alpha is not None else fallback[0]
    beta = complex(*section.beta) if section.beta is not None else fallback[1]
    return alpha, beta


def _masked(section: DetectorSection, args: argparse.Namespace) -> DetectorSection:
    """Drop the file keys a flag overrides; the initial state is carried separately."""
    flags = {"omega_t": args.omega_t, "coupling": args.coupling, "switching": args.switching, "profile": args.profile}
    update: Dict[str, Any] = {k: None for k, v in flags.items() if v is not None}
    update.update(alpha=None, beta=None)
    return section.model_copy(update=update)


def resolve_fixed(args: argparse.Namespace, cfg: RunConfig, base: Optional[FixedParameters] = None) -> FixedParameters:
    """Merge defaults (or a preset's fixed parameters), the config file and flags."""
    base = base or FixedParameters()
    geo, da, db = cfg.geometry, cfg.detector.a, cfg.detector.b
    theta = _pick(args.theta, geo.theta)
    t0 = _pick(args.t0_over_t, geo.t0_over_t)

    if args.theta is not None:
        placement = Placement.THETA
    elif args.t0_over_t is not None:
        placement = Placement.DELAY
    elif geo.placement is not None:
        placement = Placement(geo.placement)
    elif theta is not None or t0 is not None:
        placement = Placement.THETA if theta is not None else Placement.DELAY
    else:
        placement = base.placement

    update = {
        "omega_t": _pick(args.omega_t, da.omega_t, base.omega_t),
        "l_over_t": _pick(args.l_over_t, geo.l_over_t, base.l_over_t),
        "t0_over_t": _pick(t0, base.t0_over_t),
        "theta": _pick(theta, base.theta),
        "placement": placement,
        "coupling": _pick(args.coupling, da.coupling, base.coupling),
        "switching": _pick(args.switching, da.switching, base.switching),
        "profile": _pick(args.profile, da.profile, base.profile),
        "sender": _state(da, base.sender),
        "receiver": _state(db, base.receiver),
        "theta_e": _pick(getattr(args, "theta_e", None), cfg.sweep.theta_e, base.theta_e),
        "detector_a": _masked(da, args),
        "detector_b": _masked(db, args),
    }
    return FixedParameters.model_validate({**base.model_dump(), **update})


def resolve_pair(args: argparse.Namespace, cfg: RunConfig) -> Tuple[Detector, Detector, PairGeometry]:
    return resolve_fixed(args, cfg).detectors()


def resolve_spec(args: argparse.Namespace, cfg: RunConfig) -> QuadratureSpec:
    q = cfg.quadrature
    values = {
        "abs_tol": _pick(args.abs_tol, q.abs_tol),
        "rel_tol": _pick(args.rel_tol, q.rel_tol),
        "max_subdivisions": q.max_subdivisions,
        "integration_window_sigmas": q.integration_window_sigmas,
    }
    return QuadratureSpec(**{k: v for k, v in values.items() if v is not None})


def resolve_models(args: argparse.Namespace, cfg: RunConfig, fallback: Sequence[Model] = (Model.QC, Model.QUANTUM)) -> List[Model]:
    if args.model == "both":
        return [Model.QC, Model.QUANTUM]
    if args.model is not None:
        return [Model(args.model)]
    if cfg.sweep.models:
        return [Model(m) for m in cfg.sweep.models]
    return list(fallback)


def resolve_plans(args: argparse.Namespace, cfg: RunConfig) -> List[SweepPlan]:
    """The sweep to run; a preset family expands unless its series parameter was set explicitly."""
    name = _pick(args.preset, cfg.sweep.preset)
    family = preset(name) if name else None
    base = family.plan if family else None
    axis = _pick(args.sweep_axis, cfg.sweep.axis, base.axis.value if base else None)
    if axis is None:
        raise DomainError("A sweep needs --preset or --sweep-axis")
    bounds = {
        "min": _pick(args.min, cfg.sweep.min, base.range.min if base else None),
        "max": _pick(args.max, cfg.sweep.max, base.range.max if base else None),
        "steps": _pick(args.steps, cfg.sweep.steps, base.range.steps if base else None),
    }
    missing = [k for k, v in bounds.items() if v is None]
    if missing:
        raise DomainError(f"Sweep over {axis} needs --{', --'.join(missing)}")
    observable = _pick(args.observable, cfg.sweep.observable,
                       base.observable.value if base else Observable.NEGATIVITY_LEADING.value)
    try:
        plan = SweepPlan(
            axis=SweepAxis(axis),
            range=SweepRange(**bounds),
            fixed=resolve_fixed(args, cfg, base.fixed if base else None),
            models=tuple(resolve_models(args, cfg, base.models if base else (Model.QC, Model.QUANTUM))),
            observable=Observable(observable),
        )
    except ValueError as e:
        raise DomainError(f"Invalid sweep: {e}") from e

    if family is None or family.series_key is None or family.series_key == plan.axis.value:
        return [plan]
    explicit = {
        "omega_t": _pick(args.omega_t, cfg.detector.a.omega_t),
        "l_over_t": _pick(args.l_over_t, cfg.geometry.l_over_t),
    }
    if explicit.get(family.series_key) is not None:
        return [plan]
    return family.expand(plan)


# Commands

def _pair(z: complex) -> List[float]:
    return [z.real, z.imag]


def _header(a: Detector, b: Detector, g: PairGeometry, command: str) -> Dict[str, Any]:
    return {
        "command": command,
        "version": VERSION,
        "causal_class": causal_class(a, b, g).value,
        "geometry": g.model_dump(mode="json"),
    }


def cmd_negativity(args, cfg) -> Dict[str, Any]:
    a, b, g = resolve_pair(args, cfg)
    amps = compute_amplitudes(a, b, g, resolve_spec(args, cfg))
    results = []
    for model in resolve_models(args, cfg):
        state = assemble_qc_state(amps) if model is Model.QC else assemble_qft_state(amps)
        results.append({
            "model": model.value,
            "negativity_leading": negativity_leading(amps, model),
            "negativity_exact": negativity_exact(state),
        })
    return {**_header(a, b, g, "negativity"), "results": results}


def _capacity(args, cfg, command, compute) -> Dict[str, Any]:
    a, b, g = resolve_pair(args, cfg)
    spec = resolve_spec(args, cfg)
    results = [compute(a, b, g, model, spec).model_dump(mode="json", exclude={"params"})
               for model in resolve_models(args, cfg)]
    return {**_header(a, b, g, command), "results": results}


def cmd_capacity_perturbative(args, cfg) -> Dict[str, Any]:
    return _capacity(args, cfg, "capacity-perturbative", capacity_perturbative)


def cmd_capacity_delta(args, cfg) -> Dict[str, Any]:
    return _capacity(args, cfg, "capacity-delta", capacity_delta)


def cmd_state(args, cfg) -> Dict[str, Any]:
    a, b, g = resolve_pair(args, cfg)
    amps = compute_amplitudes(a, b, g, resolve_spec(args, cfg))
    results = []
    for model in resolve_models(args, cfg):
        state = assemble_qc_state(amps) if model is Model.QC else assemble_qft_state(amps)
        results.append({
            "model": model.value,
            "order_tag": state.order_tag.value,
            "rho": [[_pair(x) for x in row] for row in state.rho.tolist()],
            "purity": purity(state),
        })
    amplitudes = {k: _pair(complex(getattr(amps, k))) for k in ("m_c", "n_c", "m", "l_ab")}
    amplitudes.update(l_aa=amps.l_aa, l_bb=amps.l_bb, est_error=amps.est_error)
    return {**_header(a, b, g, "state"), "amplitudes": amplitudes, "results": results}


def _write(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputError(f"Cannot write {out}: {e}") from e
    logger.info(f"💾 Wrote {out}")


def cmd_sweep(args, cfg) -> int:
    plans = resolve_plans(args, cfg)
    spec = resolve_spec(args, cfg)
    workers = _pick(args.workers, cfg.sweep.workers, DEFAULT_WORKERS)
    fmt = args.format or "csv"
    if fmt == "csv" and len(plans) > 1 and not args.out:
        raise DomainError("A multi-series CSV sweep needs --out (one file per series) or --format json")
    rows = [row for plan in plans for row in run_sweep(plan, spec, workers=workers)]
    if args.out:
        emit(rows, fmt, args.out, plans, spec)
        return 0
    if not rows:
        raise DomainError("Nothing to emit: no rows")
    _write(render_csv(rows) if fmt == "csv" else render_json(rows, plans, spec), None)
    return 0


def cmd_verify(args) -> int:
    names = args.check
    if names:
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise DomainError(f"Unknown check(s): {', '.join(unknown)}")
    failed = 0
    for result in run_checks(names):
        mark = "✅" if result.passed else "❌"
        print(f"{mark} {result.name}: {result.detail}")
        failed += not result.passed
    if failed:
        logger.error(f"❌ {failed} check(s) failed")
        return 1
    logger.info("✅ All checks passed")
    return 0


SINGLE_POINT = {
    "negativity": cmd_negativity,
    "capacity-perturbative": cmd_capacity_perturbative,
    "capacity-delta": cmd_capacity_delta,
    "state": cmd_state,
}


def run(args: argparse.Namespace) -> int:
    if args.command == "verify":
        return cmd_verify(args)
    cfg = load_run_config(args.config)
    if args.command == "sweep":
        return cmd_sweep(args, cfg)
    document = SINGLE_POINT[args.command](args, cfg)
    _write(dump_json(document), args.out)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging("DEBUG" if args.verbose else None)
    try:
        return run(args)
    except UDWError as e:
        logger.error(f"❌ {type(e).__name__}: {e.detail}")
        return e.exit_code
    except ValidationError as e:
        logger.error(f"❌ Invalid parameters: {e}")
        return 1
