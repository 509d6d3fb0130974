"""Combinatorial Ricci flow ``dl/dt = K(l)`` on edge-length metrics.

The right-hand side is the extended curvature, so trajectories are defined
even when tetrahedra degenerate.  Integration is classical RK4, either with a
fixed step or with step-doubling error control.  Along the way the change of
``h_value`` is tracked by Simpson's rule applied to ``-|K|²``.
"""

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import tetra
from . import triangulation as tri
from .errors import DomainError, NumericError


class FlowStatus(enum.Enum):
    CONVERGED = "Converged"
    MAX_TIME = "MaxTimeReached"
    DIVERGENCE = "DivergenceSuspected"

    def __str__(self):
        return self.value


EXIT_CODES = {
    FlowStatus.CONVERGED: 0,
    FlowStatus.MAX_TIME: 2,
    FlowStatus.DIVERGENCE: 3,
}


@dataclass
class FlowConfig:
    step_mode: str = "adaptive"
    initial_step: float = 0.05
    tolerance_curvature: float = 1e-9
    max_time: float = 1000.0
    divergence_bound: float = 1e3
    sample_stride: int = 1
    normalize_decorations: bool = False
    step_tolerance: float = 1e-9
    max_step: float = 1.0
    min_step: float = 1e-12

    def __post_init__(self):
        if self.step_mode not in ("fixed", "adaptive"):
            raise DomainError(f"step_mode must be 'fixed' or 'adaptive', got {self.step_mode!r}")
        if not self.initial_step > 0:
            raise DomainError("initial_step must be positive")
        if not 0 < self.tolerance_curvature < 1:
            raise DomainError("tolerance_curvature must lie in (0, 1)")
        if not self.max_time >= 0:
            raise DomainError("max_time must be non-negative")
        if not self.divergence_bound > 0:
            raise DomainError("divergence_bound must be positive")
        if int(self.sample_stride) < 1:
            raise DomainError("sample_stride must be at least 1")


@dataclass
class FlowState:
    t: float
    lengths: np.ndarray
    curvature: np.ndarray
    h_delta: float


@dataclass
class FlowResult:
    status: FlowStatus
    final: FlowState
    trajectory: list
    complex: object = field(repr=False, default=None)
    h_initial: float = math.nan
    steps: int = 0
    rejected_steps: int = 0
    max_length_trace: list = field(default_factory=list)
    h_closed_form: float | None = None

    @property
    def exit_code(self):
        return EXIT_CODES[self.status]


class FlowNumericError(NumericError):
    """Non-finite values during integration.

    ``stages`` holds the offending stage vectors; ``state`` is the last
    accepted FlowState once the error has passed through ``run_flow``.
    """

    def __init__(self, msg, stages=None, state=None):
        super().__init__(msg)
        self.stages = stages or []
        self.state = state


def _rhs(cx, l):
    if not np.all(np.isfinite(l)):
        raise FlowNumericError("non-finite lengths during integration", stages=[np.array(l)])
    K = tri.extended_curvature(cx, l)
    if not np.all(np.isfinite(K)):
        raise FlowNumericError("curvature evaluation produced non-finite values", stages=[np.array(l)])
    return K


def _rk4(cx, l, dt, k1=None):
    if k1 is None:
        k1 = _rhs(cx, l)
    k2 = _rhs(cx, l + 0.5 * dt * k1)
    k3 = _rhs(cx, l + 0.5 * dt * k2)
    k4 = _rhs(cx, l + dt * k3)
    return l + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def _simpson_dh(cx, l0, K0, l1, K1, dt):
    """Simpson estimate of ∫ -|K|² over one step.

    The midpoint state comes from the cubic Hermite interpolant of the step.
    """
    lm = 0.5 * (l0 + l1) + dt / 8.0 * (K0 - K1)
    Km = _rhs(cx, lm)
    return -dt / 6.0 * (K0 @ K0 + 4.0 * (Km @ Km) + K1 @ K1)


def flow_step(cx, state, dt):
    """One RK4 step of size ``dt``; returns the new state with its ledger update."""
    l0 = np.asarray(state.lengths, dtype=float)
    K0 = np.asarray(state.curvature, dtype=float)
    l1 = _rk4(cx, l0, dt, K0)
    K1 = _rhs(cx, l1)
    dh = _simpson_dh(cx, l0, K0, l1, K1, dt)
    if dh > 1e-12:  # pragma: no cover - a sum of non-positive terms
        raise NumericError("h ledger increased")
    return FlowState(state.t + dt, l1, K1, state.h_delta + dh)


def _normalizer(cx, l0):
    A = cx.decoration_matrix()
    if A.shape[1] == 0:
        return None
    target = A.T @ l0
    pinv = np.linalg.pinv(A.T @ A)

    def project(l):
        return l + A @ (pinv @ (target - A.T @ l))

    return project


def _is_converged(cx, K, l, tol):
    return float(np.max(np.abs(K), initial=0.0)) <= tol and tri.is_realizable(cx, l)


def run_flow(cx, m0, config=None):
    """Integrate the flow from ``m0`` until convergence, time-out or divergence."""
    cfg = config or FlowConfig()
    l = tri._check_metric(cx, m0).copy()
    project = _normalizer(cx, l) if cfg.normalize_decorations else None
    try:
        h0 = tri.h_value(cx, l)
    except Exception:  # noqa: BLE001 - the ledger start value is informative only
        h0 = math.nan
    state = FlowState(0.0, l, _rhs(cx, l), 0.0)
    traj = [state]
    trace = [(0.0, float(np.max(np.abs(l), initial=0.0)))]
    dt = cfg.initial_step
    steps = rejected = 0
    stride = int(cfg.sample_stride)

    def finish(status):
        if traj[-1] is not state:
            traj.append(state)
        h_end = tri.h_value(cx, state.lengths) if tri.is_realizable(cx, state.lengths) else None
        return FlowResult(status, state, traj, cx, h0, steps, rejected, trace, h_end)

    while True:
        if _is_converged(cx, state.curvature, state.lengths, cfg.tolerance_curvature):
            return finish(FlowStatus.CONVERGED)
        if float(np.max(np.abs(state.lengths), initial=0.0)) >= cfg.divergence_bound:
            return finish(FlowStatus.DIVERGENCE)
        remaining = cfg.max_time - state.t
        if remaining <= 1e-12 * max(1.0, cfg.max_time):
            return finish(FlowStatus.MAX_TIME)
        try:
            if cfg.step_mode == "fixed":
                new = flow_step(cx, state, min(dt, remaining))
            else:
                new, dt, nrej = _adaptive_step(cx, state, min(dt, remaining), cfg)
                rejected += nrej
        except FlowNumericError as exc:
            exc.state = state
            raise
        if project is not None:
            new.lengths = project(new.lengths)
        state = new
        steps += 1
        trace.append((state.t, float(np.max(np.abs(state.lengths), initial=0.0))))
        if steps % stride == 0:
            traj.append(state)


def _adaptive_step(cx, state, dt, cfg):
    """Step doubling: compare one step of ``dt`` with two of ``dt/2``."""
    rejected = 0
    l0, K0 = state.lengths, state.curvature
    while True:
        full = _rk4(cx, l0, dt, K0)
        half = _rk4(cx, l0, 0.5 * dt, K0)
        two = _rk4(cx, half, 0.5 * dt)
        scale = max(1.0, float(np.max(np.abs(two))))
        err = float(np.max(np.abs(two - full))) / 15.0
        tol = cfg.step_tolerance * scale
        if err <= tol or dt <= cfg.min_step:
            break
        rejected += 1
        dt *= max(0.2, 0.9 * (tol / err) ** 0.2)
    K_half = _rhs(cx, half)
    K1 = _rhs(cx, two)
    h = 0.5 * dt
    dh = _simpson_dh(cx, l0, K0, half, K_half, h) + _simpson_dh(cx, half, K_half, two, K1, h)
    new = FlowState(state.t + dt, two, K1, state.h_delta + dh)
    growth = 4.0 if err == 0.0 else min(4.0, max(0.2, 0.9 * (tol / err) ** 0.2))
    return new, min(dt * growth, cfg.max_step), rejected


def convergence_report(result):
    """Summary dictionary of a finished flow."""
    cx = result.complex
    st = result.final
    l = st.lengths
    realizable = tri.realizable_tets(cx, l)
    angles = tri.tet_angles(cx, l, extended=True)
    report = {
        "status": str(result.status),
        "t": st.t,
        "steps": result.steps,
        "rejected_steps": result.rejected_steps,
        "max_abs_curvature": float(np.max(np.abs(st.curvature), initial=0.0)),
        "final_metric": l.tolist(),
        "normalized_metric": tri.strip_decoration(cx, l).tolist(),
        "curvature": st.curvature.tolist(),
        "edge_valences": list(cx.valences),
        "all_valences_at_least_10": all(v >= 10 for v in cx.valences),
        "tets": [
            {
                "shape": tetra.SHAPE_NAMES[k],
                "edges": cx.tet_edges[t].tolist(),
                "angles": angles[t].tolist(),
                "realizable": bool(realizable[t]),
            }
            for t, k in enumerate(cx.shapes)
        ],
        "vertex_length_sums": tri.vertex_length_sums(cx, l).tolist(),
        "h_delta": st.h_delta,
        "h_initial": result.h_initial,
        "volume": None,
        "h_final": None,
    }
    if all(realizable):
        report["volume"] = tri.total_volume(cx, l)
        report["h_final"] = result.h_closed_form
    if result.status is FlowStatus.DIVERGENCE:
        report["max_length_trace"] = [list(p) for p in result.max_length_trace]
        report["caveat"] = (
            "lengths left the divergence bound; this suggests, but does not prove, "
            "that no zero-curvature metric exists"
        )
    return report


def trajectory_csv(result):
    """CSV text with one row per sampled state."""
    n = result.complex.n_edges
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t"] + [f"l{i}" for i in range(n)] + [f"K{i}" for i in range(n)] + ["h_delta"])
    for s in result.trajectory:
        w.writerow([repr(float(s.t))] + [repr(float(x)) for x in s.lengths]
                   + [repr(float(x)) for x in s.curvature] + [repr(float(s.h_delta))])
    return buf.getvalue()


def report_json(result):
    return json.dumps({"schema": 1, **convergence_report(result)}, indent=2, sort_keys=True)
