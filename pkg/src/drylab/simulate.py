"""ODE assembly, integration, steady-state solving, duration selection.

A :class:`RateSystem` is the compiled form of a model: the signed
stoichiometry matrix over dynamic species, one compiled rate callable per
reaction (constants folded in), and per-species volume scaling so that
``d[S_j]/dt = (1/v_j) * sum_i s_ij * r_i`` for concentration-tracked species
(no volume factor for substance-units species).

Integration uses scipy's LSODA: an adaptive error-controlled method that
switches between non-stiff and stiff (BDF) modes automatically, which the
mixed-timescale kinetics in curated models require. Sampling is by dense
output onto a uniform grid, so the grid never steers the integration.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import null_space

from .expressions import Expression, compile_rate, free_symbols
from .model import Model, signed_stoichiometry, validate_model

__all__ = [
    "RateSystem",
    "Trajectory",
    "SimulationError",
    "IntegrationError",
    "NegativeConcentrationError",
    "RTOL",
    "ATOL",
    "assemble",
    "simulate",
    "solve_steady_state",
    "determine_duration",
    "trajectory_to_csv",
    "STEADY_STATE_THRESHOLD",
]

RTOL = 1e-8
ATOL = 1e-12

# Caps on right-hand-side evaluations per integration: LSODA does not fail
# fast at finite-time singularities (it keeps shrinking the step and
# continuing), so runaway integrations are cut off and reported instead.
DEFAULT_RHS_BUDGET = 500_000
PROBE_RHS_BUDGET = 20_000

STEADY_STATE_THRESHOLD = 1e-6
CHECK_STEP = 0.05
MAX_SIMULATION_BUDGET = 10_000.0
DEFAULT_END_TIME = 10.0

TERMINATED_STEADY = "steady-state"
TERMINATED_FAILURE = "integrator-failure"
TERMINATED_BUDGET = "budget"


class SimulationError(Exception):
    """Base class for assembly and integration failures."""


class IntegrationError(SimulationError):
    """The integrator failed; ``time`` is the last time it reached."""

    def __init__(self, message: str, time: float):
        super().__init__(f"{message} (at t={time:g})")
        self.time = time


class NegativeConcentrationError(SimulationError):
    """A sampled concentration fell below the clamping band."""


class _RhsBlowup(Exception):
    def __init__(self, time: float, detail: str):
        self.time = time
        self.detail = detail


@dataclass(eq=False)
class Trajectory:
    """Uniform-grid time series: one concentration column per model species."""

    times: np.ndarray
    columns: dict[str, np.ndarray]

    def __post_init__(self):
        n = len(self.times)
        assert all(len(col) == n for col in self.columns.values())

    @property
    def species_ids(self) -> list[str]:
        return list(self.columns)

    def equals(self, other: "Trajectory") -> bool:
        return (
            np.array_equal(self.times, other.times)
            and self.species_ids == other.species_ids
            and all(np.array_equal(self.columns[k], other.columns[k]) for k in self.columns)
        )


def _fmt(x: float) -> str:
    text = repr(float(x))
    return text[:-2] if text.endswith(".0") else text


def trajectory_to_csv(traj: Trajectory) -> str:
    """Render as CSV with a Time column, shortest round-trip decimals."""
    lines = [",".join(["Time", *traj.species_ids])]
    cols = [traj.times, *(traj.columns[sid] for sid in traj.species_ids)]
    for row in zip(*cols):
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


class RateSystem:
    """Compiled ODE right-hand side for one model.

    Immutable after construction; all evaluation methods are pure, so one
    instance can serve many concurrent simulations.
    """

    def __init__(self, model: Model):
        self.species_ids: tuple[str, ...] = tuple(model.species_ids())
        self.dynamic_ids: tuple[str, ...] = tuple(
            s.id for s in model.species if not s.boundary_condition and not s.constant
        )
        self.fixed_values: dict[str, float] = {
            s.id: s.initial_value
            for s in model.species
            if s.boundary_condition or s.constant
        }
        self.initial_state: np.ndarray = np.array(
            [model.get_species(sid).initial_value for sid in self.dynamic_ids]
        )
        self.compartment_sizes: dict[str, float] = {c.id: c.size for c in model.compartments}
        self.rate_expressions: tuple[Expression, ...] = tuple(
            r.kinetic_law for r in model.reactions
        )

        index = {sid: i for i, sid in enumerate(self.dynamic_ids)}
        # 1/v_j for concentration species, 1 for substance-units species
        scales = np.ones(len(self.dynamic_ids))
        for s in model.species:
            if s.id in index and not s.has_only_substance_units:
                scales[index[s.id]] = 1.0 / model.get_compartment(s.compartment).size
        self._scales = scales

        self._stoich = np.zeros((len(model.reactions), len(self.dynamic_ids)))
        for i, reaction in enumerate(model.reactions):
            for sid in index:
                self._stoich[i, index[sid]] = signed_stoichiometry(reaction, sid)

        self._rate_fns = []
        self.rate_sources: list[str] = []
        for reaction in model.reactions:
            names: dict[str, str] = {}
            for cid, size in self.compartment_sizes.items():
                names[cid] = repr(size)
            for p in model.parameters:
                names[p.id] = repr(p.value)
            for p in reaction.local_parameters:
                names[p.id] = repr(p.value)
            for sid, value in self.fixed_values.items():
                names[sid] = repr(value)
            for sid, i in index.items():
                names[sid] = f"y[{i}]"
            for symbol in sorted(free_symbols(reaction.kinetic_law)):
                if symbol not in names:
                    raise SimulationError(
                        f"kinetic law of {reaction.id!r} references unresolved symbol {symbol!r}"
                    )
            fn, source = compile_rate(reaction.kinetic_law, names)
            self._rate_fns.append(fn)
            self.rate_sources.append(source)

    @property
    def n_dynamic(self) -> int:
        return len(self.dynamic_ids)

    @property
    def stoichiometry(self) -> np.ndarray:
        return self._stoich.copy()

    def rates(self, state: np.ndarray) -> np.ndarray:
        """Reaction rates at one state (shape (n,)) or many (shape (n, k))."""
        state = np.asarray(state, dtype=float)
        tail_shape = state.shape[1:]
        out = np.empty((len(self._rate_fns), *tail_shape))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with np.errstate(all="ignore"):
                for i, fn in enumerate(self._rate_fns):
                    out[i] = np.broadcast_to(np.asarray(fn(state), dtype=float), tail_shape)
        return out

    def derivatives(self, state: np.ndarray) -> np.ndarray:
        """d(state)/dt; broadcasts over a trailing sample axis like :meth:`rates`."""
        rates = self.rates(state)
        dy = self._stoich.T @ rates
        if dy.ndim == 1:
            return self._scales * dy
        return self._scales[:, None] * dy

    def conservation_basis(self) -> np.ndarray:
        """Orthonormal basis (columns) of directions conserved by the dynamics."""
        if not len(self._rate_fns):
            return np.eye(self.n_dynamic)
        return null_space(self._stoich * self._scales[None, :])


def assemble(model: Model) -> RateSystem:
    """Compile a validated model into its ODE system.

    Fixed (boundary or constant) species contribute to rates but carry zero
    derivative; everything else becomes integration state.
    """
    diagnostics = validate_model(model)
    if diagnostics:
        raise SimulationError(
            "cannot assemble invalid model: " + "; ".join(str(d) for d in diagnostics)
        )
    return RateSystem(model)


def _initial_state(system: RateSystem, overrides: dict[str, float]) -> np.ndarray:
    y0 = system.initial_state.copy()
    index = {sid: i for i, sid in enumerate(system.dynamic_ids)}
    for sid, value in overrides.items():
        if sid not in index:
            if sid in system.fixed_values:
                raise ValueError(f"cannot override fixed (boundary/constant) species {sid!r}")
            raise ValueError(f"unknown species {sid!r} in overrides")
        if not (math.isfinite(value) and value >= 0):
            raise ValueError(f"override for {sid!r} must be a finite nonnegative number")
        y0[index[sid]] = value
    return y0


def _integrate(system: RateSystem, y0: np.ndarray, t_span: tuple[float, float],
               t_eval: np.ndarray, rhs_budget: int = DEFAULT_RHS_BUDGET) -> np.ndarray:
    """LSODA integration sampled at t_eval; returns samples (n_dyn, len(t_eval)).

    Samples come from the dense output, evaluated one grid point at a time:
    batch evaluation routes through size-dependent BLAS kernels whose last
    ulp differs between grids, which would break the rule that refining the
    grid only refines the interpolation. The initial sample is the initial
    state itself, by definition rather than by interpolation.
    """
    state = {"t": t_span[0], "nfev": 0}

    def rhs(t, y):
        state["t"] = t
        state["nfev"] += 1
        if state["nfev"] > rhs_budget:
            raise _RhsBlowup(t, "integration stalled (evaluation budget exceeded)")
        dy = system.derivatives(y)
        if not np.all(np.isfinite(dy)):
            raise _RhsBlowup(t, "non-finite derivative")
        return dy

    if system.n_dynamic == 0:
        return np.zeros((0, len(t_eval)))
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            sol = solve_ivp(
                rhs, t_span, y0, method="LSODA", dense_output=True, rtol=RTOL, atol=ATOL
            )
    except _RhsBlowup as exc:
        raise IntegrationError(exc.detail, exc.time) from None
    if not sol.success:
        t_reached = float(sol.t[-1]) if len(sol.t) else float(state["t"])
        raise IntegrationError(f"integrator failed: {sol.message}", t_reached)
    samples = np.empty((system.n_dynamic, len(t_eval)))
    for k, t in enumerate(t_eval):
        samples[:, k] = y0 if t == t_span[0] else sol.sol(t)
    return samples


def _clamp_negatives(samples: np.ndarray, times: np.ndarray,
                     dynamic_ids: tuple[str, ...]) -> np.ndarray:
    worst = samples.min(initial=0.0)
    if worst < -ATOL:
        j, k = np.unravel_index(np.argmin(samples), samples.shape)
        raise NegativeConcentrationError(
            f"species {dynamic_ids[j]!r} reached {samples[j, k]:g} at t={times[k]:g}, "
            f"below the -{ATOL:g} clamping band"
        )
    return np.where(samples < 0.0, 0.0, samples)


def simulate(system: RateSystem, overrides: dict[str, float] | None,
             duration: float, n_points: int,
             rhs_budget: int = DEFAULT_RHS_BUDGET) -> Trajectory:
    """Integrate from the (optionally overridden) initial state.

    The grid is ``n_points`` uniform samples from 0 to ``duration``
    inclusive. Deterministic: identical inputs give bit-identical output.
    Overrides may only name dynamic species.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    y0 = _initial_state(system, overrides or {})
    times = np.linspace(0.0, float(duration), int(n_points))
    samples = _integrate(system, y0, (0.0, float(duration)), times, rhs_budget)
    samples = _clamp_negatives(samples, times, system.dynamic_ids)

    columns: dict[str, np.ndarray] = {}
    index = {sid: i for i, sid in enumerate(system.dynamic_ids)}
    for sid in system.species_ids:
        if sid in index:
            columns[sid] = samples[index[sid]].copy()
        else:
            columns[sid] = np.full(len(times), system.fixed_values[sid])
    return Trajectory(times=times, columns=columns)


def _max_rate(system: RateSystem, state: np.ndarray) -> float:
    dy = system.derivatives(state)
    if dy.size == 0:
        return 0.0
    return float(np.max(np.abs(dy)))


def solve_steady_state(system: RateSystem,
                       threshold: float = STEADY_STATE_THRESHOLD,
                       max_newton_iterations: int = 60,
                       march_budget: float = MAX_SIMULATION_BUDGET) -> dict[str, float] | None:
    """Find a state where every species' rate of change is below ``threshold``.

    Damped Newton iteration on the derivative map with a finite-difference
    Jacobian, constrained to the conservation subspace of the initial state
    so that totals implied by the stoichiometry are respected. Falls back to
    long time-marching when Newton stalls. Returns None when no steady state
    is found — a legitimate outcome (e.g. constant production), not an error.
    """
    x = system.initial_state.copy()
    if _max_rate(system, x) < threshold:
        return _steady_result(system, x)

    solved = _newton_steady_state(system, x, threshold, max_newton_iterations)
    if solved is not None:
        return _steady_result(system, solved)

    marched = _march_to_steady_state(system, threshold, march_budget)
    if marched is not None:
        return _steady_result(system, marched)
    return None


def _steady_result(system: RateSystem, state: np.ndarray) -> dict[str, float]:
    out = {sid: float(v) for sid, v in zip(system.dynamic_ids, state)}
    out.update(system.fixed_values)
    return {sid: out[sid] for sid in system.species_ids}


def _newton_steady_state(system: RateSystem, x0: np.ndarray, threshold: float,
                         max_iterations: int) -> np.ndarray | None:
    n = system.n_dynamic
    if n == 0:
        return x0
    conservation = system.conservation_basis()  # (n, k)
    zeros = np.zeros(conservation.shape[1])
    x = x0.copy()
    fx = system.derivatives(x)
    # polish well past the acceptance threshold so the state itself is accurate,
    # not merely its residual
    target = threshold * 1e-8
    for _ in range(max_iterations):
        if not np.all(np.isfinite(fx)):
            return None
        if np.max(np.abs(fx)) < target:
            return x
        jac = _fd_jacobian(system, x, fx)
        if not np.all(np.isfinite(jac)):
            return None
        lhs = np.vstack([jac, conservation.T])
        rhs = np.concatenate([-fx, zeros])
        step, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)

        # backtracking damping on the residual norm
        base = np.linalg.norm(fx)
        lam = 1.0
        improved = False
        while lam >= 1e-6:
            candidate = np.maximum(x + lam * step, 0.0)
            f_candidate = system.derivatives(candidate)
            if np.all(np.isfinite(f_candidate)) and np.linalg.norm(f_candidate) < base:
                x, fx = candidate, f_candidate
                improved = True
                break
            lam *= 0.5
        if not improved:
            break
    if np.max(np.abs(fx)) < threshold:
        return x
    return None


def _fd_jacobian(system: RateSystem, x: np.ndarray, fx: np.ndarray) -> np.ndarray:
    n = len(x)
    jac = np.empty((n, n))
    for j in range(n):
        h = 1e-7 * max(abs(x[j]), 1e-3)
        xj = x.copy()
        xj[j] += h
        jac[:, j] = (system.derivatives(xj) - fx) / h
    return jac


def _march_to_steady_state(system: RateSystem, threshold: float,
                           budget: float) -> np.ndarray | None:
    y = system.initial_state.copy()
    t, horizon = 0.0, 1.0
    while t < budget:
        horizon = min(horizon, budget - t)
        t_eval = np.linspace(0.0, horizon, 33)
        try:
            samples = _integrate(system, y, (0.0, horizon), t_eval)
        except IntegrationError:
            return None
        rates = system.derivatives(samples)
        below = np.max(np.abs(rates), axis=0) < threshold
        hit = np.flatnonzero(below)
        if hit.size:
            return samples[:, hit[0]]
        y = samples[:, -1]
        t += horizon
        horizon *= 4.0
    return None


def determine_duration(model: Model,
                       threshold: float = STEADY_STATE_THRESHOLD,
                       check_step: float = CHECK_STEP,
                       budget: float = MAX_SIMULATION_BUDGET,
                       default_end: float = DEFAULT_END_TIME) -> tuple[float, str]:
    """Select the benchmark simulation duration for one model.

    The time course is observed on a fixed ``check_step`` grid (the
    integrator's internal steps stay adaptive) until every species' rate of
    change drops below ``threshold``, the integrator fails, or the budget is
    exhausted. The returned duration is the largest of the time-course end
    and ``default_end``, so short-lived systems still get a usable window.
    """
    system = assemble(model)
    n_total = int(round(budget / check_step))

    termination = TERMINATED_BUDGET
    end_index = n_total
    y = system.initial_state.copy()
    chunk = 2000  # grid points per integrator call
    start = 0
    while start <= n_total:
        stop = min(start + chunk, n_total)
        times = np.arange(start, stop + 1) * check_step
        if len(times) == 1:
            break
        try:
            samples = _integrate(system, y, (times[0], times[-1]), times)
        except IntegrationError as exc:
            termination = TERMINATED_FAILURE
            end_index = max(start, int(exc.time / check_step))
            break
        rates = system.derivatives(samples)
        max_rates = np.max(np.abs(rates), axis=0) if rates.size else np.zeros(len(times))
        below = np.flatnonzero(max_rates < threshold)
        if below.size:
            termination = TERMINATED_STEADY
            end_index = start + int(below[0])
            break
        y = samples[:, -1]
        start = stop
    duration = max(end_index * check_step, default_end)
    return duration, termination
