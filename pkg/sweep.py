"""
Parameter sweeps, named presets and CSV/JSON emission.
"""

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from enum import Enum
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from bilinear import QuadratureSpec
from config import VERSION, DetectorSection
from core import (
    Detector,
    DiracSwitching,
    GaussianBallProfile,
    GaussianSwitching,
    PairGeometry,
    Placement,
    PointProfile,
    QubitState,
    causal_class,
)
from errors import DomainError, OutputError, UDWError
from information import capacity_delta, capacity_perturbative, delta_capacity_bits, negativity_exact, negativity_leading, purity
from models import Model, assemble_qc_state, assemble_qft_state, compute_amplitudes

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["axis_name", "axis_value", "model", "observable", "value", "est_error", "causal_class"]
SQRT_HALF = 1 / math.sqrt(2)


class SweepAxis(str, Enum):
    THETA = "theta"
    OMEGA_T = "omega_t"
    L_OVER_T = "l_over_t"
    T0_OVER_T = "t0_over_t"
    NU_B = "nu_b"


class Observable(str, Enum):
    NEGATIVITY_LEADING = "negativity_leading"
    NEGATIVITY_EXACT = "negativity_exact"
    CAPACITY_PERTURBATIVE = "capacity_perturbative"
    CAPACITY_DELTA = "capacity_delta"
    AMPLITUDES = "amplitudes"
    PURITY = "purity"


class _Frozen(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class SweepRange(_Frozen):
    min: float
    max: float
    steps: int = Field(..., ge=2)

    @model_validator(mode="after")
    def _ordered(self):
        if not self.min < self.max:
            raise ValueError(f"Sweep range needs min < max, got [{self.min}, {self.max}]")
        return self

    def grid(self) -> List[float]:
        return [float(x) for x in np.linspace(self.min, self.max, self.steps)]


def parse_profile(text: str):
    """'point' or 'ball:<sigma>'."""
    if text == "point":
        return PointProfile()
    kind, _, sigma = text.partition(":")
    if kind != "ball" or not sigma:
        raise DomainError(f"Profile must be 'point' or 'ball:<sigma>', got {text!r}")
    try:
        return GaussianBallProfile(width=float(sigma))
    except (ValueError, ValidationError) as e:
        raise DomainError(f"Invalid ball width in {text!r}") from e


class FixedParameters(_Frozen):
    """Every parameter of a sweep point; the swept axis overrides one of them."""

    omega_t: float = Field(10.0, ge=0)
    l_over_t: float = Field(10.0, gt=0)
    t0_over_t: float = 0.0
    theta: float = Field(math.pi / 4, ge=0, le=math.pi / 2)
    placement: Placement = Placement.THETA
    coupling: float = Field(0.01, ge=0)
    switching: str = Field("gaussian", pattern="^(gaussian|delta)$")
    profile: str = "point"
    sender: Tuple[complex, complex] = (complex(SQRT_HALF), complex(SQRT_HALF))
    receiver: Tuple[complex, complex] = (complex(SQRT_HALF), SQRT_HALF * 1j)
    theta_e: float = 0.3
    # per-detector settings from the run file, applied over the shared ones
    detector_a: DetectorSection = DetectorSection()
    detector_b: DetectorSection = DetectorSection()

    def detectors(self, axis: Optional[SweepAxis] = None, value: Optional[float] = None) -> Tuple[Detector, Detector, PairGeometry]:
        params = self.model_dump()
        if axis is not None and axis is not SweepAxis.NU_B:
            params[axis.value] = value
            if axis is SweepAxis.THETA:
                params["placement"] = Placement.THETA
            elif axis is SweepAxis.T0_OVER_T:
                params["placement"] = Placement.DELAY
        p = FixedParameters.model_validate(params)
        switching = GaussianSwitching() if p.switching == "gaussian" else DiracSwitching()
        profile = parse_profile(p.profile)
        a = Detector(gap=p.omega_t, coupling=p.coupling, switching=switching, profile=profile,
                     initial_state=QubitState(alpha=p.sender[0], beta=p.sender[1]))
        b = a.model_copy(update={"initial_state": QubitState(alpha=p.receiver[0], beta=p.receiver[1])})
        swept_gap = axis is SweepAxis.OMEGA_T
        a = refine_detector(a, p.detector_a, swept_gap)
        b = refine_detector(b, p.detector_b, swept_gap)
        g = PairGeometry(L=p.l_over_t, t0=p.t0_over_t, theta=p.theta, mode=p.placement)
        return a, b, g


def refine_detector(d: Detector, section: DetectorSection, keep_gap: bool = False) -> Detector:
    """Apply one detector's run-file settings; ``keep_gap`` leaves a swept gap alone."""
    update: Dict[str, Any] = {}
    if section.omega_t is not None and not keep_gap:
        update["gap"] = section.omega_t
    if section.coupling is not None:
        update["coupling"] = section.coupling
    if section.profile is not None:
        update["profile"] = parse_profile(section.profile)
    switching = d.switching
    if section.switching is not None:
        switching = GaussianSwitching() if section.switching == "gaussian" else DiracSwitching()
    if isinstance(switching, GaussianSwitching) and section.width is not None:
        switching = switching.model_copy(update={"width": section.width})
    if isinstance(switching, DiracSwitching) and section.strength is not None:
        switching = switching.model_copy(update={"strength": section.strength})
    update["switching"] = switching
    return d.model_copy(update=update)


class SweepPlan(_Frozen):
    axis: SweepAxis
    range: SweepRange
    fixed: FixedParameters = FixedParameters()
    models: Tuple[Model, ...] = (Model.QC, Model.QUANTUM)
    observable: Observable = Observable.NEGATIVITY_LEADING
    series: str = Field("", description="Curve label within a preset family, e.g. 'omega_t=5'")

    @model_validator(mode="after")
    def _consistent(self):
        if not self.models:
            raise ValueError("A sweep needs at least one model")
        if self.axis is SweepAxis.NU_B and self.observable is not Observable.CAPACITY_DELTA:
            raise ValueError("The nu_b axis only applies to capacity_delta")
        return self


class SweepRow(_Frozen):
    axis_name: str
    axis_value: float
    model: Model
    observable: Observable
    value: float
    est_error: float
    causal_class: str
    series: str = ""
    error: Optional[str] = None


def _observe(observable: Observable, model: Model, a: Detector, b: Detector, g: PairGeometry,
             spec: QuadratureSpec, cache: Dict) -> Tuple[float, float]:
    def amplitudes():
        if "amps" not in cache:
            cache["amps"] = compute_amplitudes(a, b, g, spec)
        return cache["amps"]

    if observable is Observable.CAPACITY_PERTURBATIVE:
        return capacity_perturbative(a, b, g, model, spec).capacity, 0.0
    if observable is Observable.CAPACITY_DELTA:
        return capacity_delta(a, b, g, model, spec).capacity, 0.0

    amps = amplitudes()
    if observable is Observable.NEGATIVITY_LEADING:
        value = negativity_leading(amps, model)
    elif observable is Observable.AMPLITUDES:
        value = abs(amps.m_c) if model is Model.QC else abs(amps.m)
    else:
        state = assemble_qc_state(amps) if model is Model.QC else assemble_qft_state(amps)
        value = negativity_exact(state) if observable is Observable.NEGATIVITY_EXACT else purity(state)
    return value, amps.est_error


def evaluate_point(plan: SweepPlan, spec: QuadratureSpec, value: float) -> List[SweepRow]:
    """All rows of one grid point; failures are recorded in-row."""
    rows = []
    cache: Dict = {}
    try:
        a, b, g = plan.fixed.detectors(plan.axis, value)
        tag = causal_class(a, b, g).value
    except (UDWError, ValidationError) as e:
        a = b = g = None
        tag, setup_error = "invalid", str(getattr(e, "detail", e))
    else:
        setup_error = None

    for model in plan.models:
        error = setup_error
        result, err = math.nan, math.nan
        if error is None:
            try:
                if plan.axis is SweepAxis.NU_B:
                    theta_e = plan.fixed.theta_e
                    result, err = delta_capacity_bits(theta_e, value if model is Model.QUANTUM else 1.0), 0.0
                else:
                    result, err = _observe(plan.observable, model, a, b, g, spec, cache)
            except UDWError as e:
                error = e.detail
                result, err = math.nan, math.nan
        if error is not None:
            logger.warning(f"⚠️ {plan.axis.value}={value:.6g} model={model.value}: {error}")
        rows.append(SweepRow(axis_name=plan.axis.value, axis_value=value, model=model, observable=plan.observable,
                             value=result, est_error=err, causal_class=tag, series=plan.series, error=error))
    return rows


def run_sweep(plan: SweepPlan, spec: Optional[QuadratureSpec] = None, workers: int = 1) -> List[SweepRow]:
    spec = spec or QuadratureSpec()
    grid = plan.range.grid()
    task = partial(evaluate_point, plan, spec)
    label = f" [{plan.series}]" if plan.series else ""
    logger.info(f"📦 Sweeping {plan.axis.value}{label} over {len(grid)} points ({', '.join(m.value for m in plan.models)})")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_point = list(pool.map(task, grid))
    else:
        per_point = [task(v) for v in grid]
    rows = [row for point in per_point for row in point]
    failed = sum(r.error is not None for r in rows)
    logger.info(f"✅ Sweep finished: {len(rows)} rows, {failed} failed")
    return rows


def _number(x: float) -> str:
    return repr(float(x))


def render_csv(rows: List[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({
            "axis_name": row.axis_name,
            "axis_value": _number(row.axis_value),
            "model": row.model.value,
            "observable": row.observable.value,
            "value": _number(row.value),
            "est_error": _number(row.est_error),
            "causal_class": row.causal_class,
        })
    return buffer.getvalue()


def finite_or_none(value: Any) -> Any:
    """Replace NaN and ±inf by None anywhere in a JSON-ready structure."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, dict):
        return {k: finite_or_none(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [finite_or_none(v) for v in value]
    return value


def dump_json(document: Any) -> str:
    """Strict JSON: non-finite numbers become null."""
    return json.dumps(finite_or_none(document), sort_keys=True, indent=2, allow_nan=False) + "\n"


PlanArg = Union[SweepPlan, Sequence[SweepPlan], None]


def _plans(plans: PlanArg) -> List[SweepPlan]:
    if plans is None:
        return []
    if isinstance(plans, SweepPlan):
        return [plans]
    return list(plans)


def render_json(rows: List[SweepRow], plans: PlanArg = None, spec: Optional[QuadratureSpec] = None) -> str:
    meta = {
        "version": VERSION,
        "plans": [p.model_dump(mode="json") for p in _plans(plans)],
        "spec": (spec or QuadratureSpec()).model_dump(mode="json"),
    }
    document = {"meta": meta, "rows": [row.model_dump(mode="json") for row in rows]}
    return dump_json(document)


def series_path(path: Path, series: str) -> Path:
    """fig5.csv + 'omega_t=5' -> fig5_omega_t_5.csv"""
    return path.with_name(f"{path.stem}_{series.replace('=', '_')}{path.suffix}")


def _write_text(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise OutputError(f"Cannot write {path}: {e}") from e


def emit(rows: List[SweepRow], format: str, path, plans: PlanArg = None,
         spec: Optional[QuadratureSpec] = None) -> List[Path]:
    """
    Write rows to ``path``. JSON keeps every series in one document; CSV has
    no series column, so a multi-series sweep gets one file per series.
    """
    if not rows:
        raise DomainError("Nothing to emit: no rows")
    if format not in ("csv", "json"):
        raise DomainError(f"Unknown output format {format!r}")
    path = Path(path)
    if format == "json":
        _write_text(path, render_json(rows, plans, spec))
        written = [path]
    else:
        series = list(dict.fromkeys(r.series for r in rows))
        if len(series) == 1:
            _write_text(path, render_csv(rows))
            written = [path]
        else:
            written = []
            for label in series:
                target = series_path(path, label)
                _write_text(target, render_csv([r for r in rows if r.series == label]))
                written.append(target)
    logger.info(f"💾 Wrote {len(rows)} rows to {', '.join(str(p) for p in written)}")
    return written


# Named presets

class PresetFamily(_Frozen):
    """A preset plan, optionally repeated over several values of one fixed parameter."""

    plan: SweepPlan
    series_key: Optional[str] = None
    series_values: Tuple[float, ...] = ()

    @model_validator(mode="after")
    def _series(self):
        if self.series_key is not None:
            if self.series_key not in FixedParameters.model_fields:
                raise ValueError(f"Unknown series parameter {self.series_key!r}")
            if self.series_key == self.plan.axis.value:
                raise ValueError("A family cannot vary its own sweep axis")
            if not self.series_values:
                raise ValueError("A family needs at least one series value")
        return self

    def expand(self, plan: Optional[SweepPlan] = None) -> List[SweepPlan]:
        """One plan per series value, tagged ``key=value``; ``plan`` replaces the stored one."""
        plan = self.plan if plan is None else plan
        if self.series_key is None:
            return [plan]
        plans = []
        for v in self.series_values:
            fixed = FixedParameters.model_validate({**plan.fixed.model_dump(), self.series_key: v})
            plans.append(plan.model_copy(update={"fixed": fixed, "series": f"{self.series_key}={v:g}"}))
        return plans


# θ = π/2 puts B on the worldline of A, which is singular for pointlike detectors
_THETA_RANGE = SweepRange(min=0.0, max=math.pi / 2 * (1 - 1 / 100), steps=100)

PRESETS: Dict[str, PresetFamily] = {
    # negativity vs θ, qc field, ΩT = 10, L = 10T
    "fig2": PresetFamily(plan=SweepPlan(axis=SweepAxis.THETA, range=_THETA_RANGE,
                                        fixed=FixedParameters(omega_t=10.0, l_over_t=10.0), models=(Model.QC,))),
    # negativity vs θ, quantum field, same placement
    "fig3": PresetFamily(plan=SweepPlan(axis=SweepAxis.THETA, range=_THETA_RANGE,
                                        fixed=FixedParameters(omega_t=10.0, l_over_t=10.0), models=(Model.QUANTUM,))),
    # negativity vs gap, quantum field, simultaneous switching, one curve per separation
    "fig4": PresetFamily(
        plan=SweepPlan(axis=SweepAxis.OMEGA_T, range=SweepRange(min=0.2, max=8.0, steps=79),
                       fixed=FixedParameters(l_over_t=2.0, t0_over_t=0.0, placement=Placement.DELAY),
                       models=(Model.QUANTUM,)),
        series_key="l_over_t", series_values=(2.0, 4.0, 6.0),
    ),
    # both fields vs θ at L = 10T, one curve per gap
    "fig5": PresetFamily(
        plan=SweepPlan(axis=SweepAxis.THETA, range=_THETA_RANGE,
                       fixed=FixedParameters(omega_t=10.0, l_over_t=10.0)),
        series_key="omega_t", series_values=(1.0, 2.0, 5.0, 10.0),
    ),
}


def preset(name: str) -> PresetFamily:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(f"Unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None


def preset_plans(name: str) -> List[SweepPlan]:
    return preset(name).expand()
