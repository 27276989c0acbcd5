"""The agent-facing discovery session.

A session owns one curated task. Agents see the partial model and an
experiment manual, request perturbation experiments that are simulated
against the hidden reference, and finally submit a candidate document. The
reference model never crosses the boundary: every experiment builds a fresh
perturbed variant, and responses carry only trajectories and summaries.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .curation import TaskInstance, leakage_scan
from .model import Model, validate_model
from .sbml import SbmlParseError, parse_sbml, serialize_sbml
from .simulate import (
    PROBE_RHS_BUDGET,
    SimulationError,
    Trajectory,
    assemble,
    simulate,
    trajectory_to_csv,
)

__all__ = [
    "ACTION_OBSERVE",
    "ACTION_CHANGE_CONCENTRATION",
    "ACTION_KNOCKOUT",
    "SessionConfig",
    "ExperimentRequest",
    "Observation",
    "ExperimentError",
    "SubmissionOutcome",
    "Session",
    "start_session",
    "experiment_manual",
    "knockout_model",
]

ACTION_OBSERVE = "observe"
ACTION_CHANGE_CONCENTRATION = "change_initial_concentration"
ACTION_KNOCKOUT = "species_knockout"

_BASE_MANUAL = '''## Available Experiment Actions

### Observe
This experiment runs the system with default settings.

```json
{
   "action": "observe",
   "meta_data": {}
}
```

### change initial concentrations

This perturbation changes the initial concentrations of the given species. You cannot change the concentration of boundary and constant species.

```json
{
    "action": "change_initial_concentration",
    "meta_data": {
        "id_species1": 0.2, // Set the initial concentration of species id_species1 to 0.2.
        "id_species2": 0.5
        // Only include the id of the species you want to modify. Any species not listed will keep their default values
    }
}
```
'''

_KNOCKOUT_MANUAL = '''
### species knockout

This perturbation completely removes the given species from the system by eliminating all reactions where they participate and setting their initial concentrations to zero.

```json
{
    "action": "species_knockout",
    "meta_data": {
        "species_ids": ["id_species1"]
    }
}
```
'''


def experiment_manual(allow_knockout: bool = False) -> str:
    return _BASE_MANUAL + (_KNOCKOUT_MANUAL if allow_knockout else "")


@dataclass(frozen=True)
class SessionConfig:
    max_iterations: int = 20
    debug_attempts: int = 3
    allow_knockout: bool = False


@dataclass(frozen=True)
class ExperimentRequest:
    action: str
    meta_data: dict


@dataclass(eq=False, frozen=True)
class Observation:
    iteration: int
    trajectory: Trajectory
    summary: dict[str, dict[str, float]]

    def as_payload(self) -> dict:
        return {
            "iteration": self.iteration,
            "trajectory_csv": trajectory_to_csv(self.trajectory),
            "summary": self.summary,
        }


class ExperimentError(Exception):
    """A refused request; carries a stable machine-readable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass(frozen=True)
class SubmissionOutcome:
    accepted: bool
    model: Model | None = None
    diagnostics: tuple[str, ...] = ()
    debug_attempts_remaining: int = 0
    terminated: bool = False


def _summarize(trajectory: Trajectory) -> dict[str, dict[str, float]]:
    out = {}
    for sid in trajectory.species_ids:
        col = trajectory.columns[sid]
        out[sid] = {
            "initial": float(col[0]),
            "final": float(col[-1]),
            "min": float(col.min()),
            "max": float(col.max()),
        }
    return out


def knockout_model(model: Model, species_ids: list[str]) -> Model:
    """Fresh model with the given species knocked out.

    Every reaction in which a knocked-out species participates in any role
    is removed, and the species' initial concentration is set to zero. The
    input model is not touched.
    """
    targets = set(species_ids)

    def participates(reaction) -> bool:
        roles = {sid for sid, _ in reaction.reactants}
        roles |= {sid for sid, _ in reaction.products}
        roles |= set(reaction.modifiers)
        return bool(roles & targets)

    return replace(
        model,
        reactions=tuple(r for r in model.reactions if not participates(r)),
        species=tuple(
            replace(s, initial_value=0.0) if s.id in targets else s
            for s in model.species
        ),
    )


class Session:
    """One discovery session: a single-threaded state machine.

    History is append-only; observations are immutable once recorded.
    Experiments do not affect each other - each one simulates a fresh
    variant of the hidden reference.
    """

    def __init__(self, task: TaskInstance, config: SessionConfig = SessionConfig()):
        if task.duration_s is None or task.n_points is None:
            raise ValueError("task has no simulation window; curate it first")
        leaks = leakage_scan(task)
        if leaks:
            raise ValueError(f"refusing leaking task; leaked identifiers: {leaks}")
        self.task = task
        self.config = config
        self.iteration = 1
        self.debug_attempts_remaining = config.debug_attempts
        self.history: dict[int, Observation] = {}
        self.submitted: Model | None = None
        self.terminated = False
        self._reference_system = assemble(task.reference)
        self._fixed_ids = set(self._reference_system.fixed_values)
        self._species_ids = set(task.reference.species_ids())

    # -- start payload ------------------------------------------------------

    def start_payload(self) -> dict:
        return {
            "partial_sbml": serialize_sbml(self.task.partial).decode("utf-8"),
            "manual": experiment_manual(self.config.allow_knockout),
            "max_iterations": self.config.max_iterations,
            "debug_attempts": self.config.debug_attempts,
            "iteration": self.iteration,
        }

    # -- experiments --------------------------------------------------------

    def run_experiment(self, request: ExperimentRequest) -> Observation:
        if self.terminated:
            raise ExperimentError("session-terminated", "the session has ended")
        if self.iteration > self.config.max_iterations:
            raise ExperimentError(
                "iteration-budget-exhausted",
                f"the {self.config.max_iterations}-iteration budget is spent; submit a model",
            )

        if request.action == ACTION_OBSERVE:
            trajectory = self._simulate_reference({})
        elif request.action == ACTION_CHANGE_CONCENTRATION:
            overrides = self._validated_overrides(request.meta_data)
            trajectory = self._simulate_reference(overrides)
        elif request.action == ACTION_KNOCKOUT:
            trajectory = self._simulate_knockout(request.meta_data)
        else:
            raise ExperimentError("unknown-action", f"unknown action {request.action!r}")

        observation = Observation(
            iteration=self.iteration,
            trajectory=trajectory,
            summary=_summarize(trajectory),
        )
        self.history[self.iteration] = observation
        self.iteration += 1
        return observation

    def _validated_overrides(self, meta_data: dict) -> dict[str, float]:
        if not isinstance(meta_data, dict) or not meta_data:
            raise ExperimentError(
                "bad-request", "meta_data must map species ids to concentrations"
            )
        overrides: dict[str, float] = {}
        for sid, raw in meta_data.items():
            if sid not in self._species_ids:
                raise ExperimentError("unknown-species", f"unknown species {sid!r}")
            if sid in self._fixed_ids:
                raise ExperimentError(
                    "constant-or-boundary-species",
                    f"cannot change the concentration of boundary or constant species {sid!r}",
                )
            try:
                value = float(raw)
            except (TypeError, ValueError):
                raise ExperimentError(
                    "bad-request", f"concentration for {sid!r} is not a number"
                ) from None
            if not value >= 0:
                raise ExperimentError(
                    "negative-concentration",
                    f"concentration for {sid!r} must be nonnegative",
                )
            overrides[sid] = value
        return overrides

    def _simulate_reference(self, overrides: dict[str, float]) -> Trajectory:
        try:
            return simulate(
                self._reference_system, overrides,
                self.task.duration_s, self.task.n_points,
            )
        except SimulationError as exc:
            raise ExperimentError("integration-failure", str(exc)) from exc

    def _simulate_knockout(self, meta_data: dict) -> Trajectory:
        if not self.config.allow_knockout:
            raise ExperimentError(
                "knockout-disabled", "species knockout is not enabled for this session"
            )
        species_ids = meta_data.get("species_ids") if isinstance(meta_data, dict) else None
        if not isinstance(species_ids, list) or not species_ids:
            raise ExperimentError("bad-request", "meta_data.species_ids must be a nonempty list")
        for sid in species_ids:
            if sid not in self._species_ids:
                raise ExperimentError("unknown-species", f"unknown species {sid!r}")
        variant = knockout_model(self.task.reference, species_ids)
        try:
            system = assemble(variant)
            return simulate(system, {}, self.task.duration_s, self.task.n_points)
        except SimulationError as exc:
            raise ExperimentError("integration-failure", str(exc)) from exc

    # -- submission ---------------------------------------------------------

    def submit(self, document: bytes | str) -> SubmissionOutcome:
        if self.terminated:
            raise ExperimentError("session-terminated", "the session has ended")

        diagnostics = self._submission_diagnostics(document)
        if diagnostics is None:
            self.submitted = parse_sbml(document)
            self.terminated = True
            return SubmissionOutcome(
                accepted=True,
                model=self.submitted,
                debug_attempts_remaining=self.debug_attempts_remaining,
                terminated=True,
            )

        self.debug_attempts_remaining -= 1
        if self.debug_attempts_remaining <= 0:
            # out of debugging attempts: evaluation falls back to the partial
            self.terminated = True
        return SubmissionOutcome(
            accepted=False,
            diagnostics=tuple(diagnostics),
            debug_attempts_remaining=self.debug_attempts_remaining,
            terminated=self.terminated,
        )

    def _submission_diagnostics(self, document: bytes | str) -> list[str] | None:
        try:
            model = parse_sbml(document)
        except SbmlParseError as exc:
            return [f"parse-failure: {exc}"]
        problems = validate_model(model)
        if problems:
            return [str(d) for d in problems]
        try:
            system = assemble(model)
            simulate(system, {}, duration=1.0, n_points=11, rhs_budget=PROBE_RHS_BUDGET)
        except (SimulationError, ValueError) as exc:
            return [f"simulation-failure: {exc}"]
        return None

    def effective_submission(self) -> Model:
        """What evaluation runs against: the accepted model, else the partial."""
        return self.submitted if self.submitted is not None else self.task.partial


def start_session(task: TaskInstance, config: SessionConfig = SessionConfig()) -> Session:
    """Open a session; refuses tasks whose partial model leaks hidden ids."""
    return Session(task, config)
