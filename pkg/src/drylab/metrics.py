"""Scoring a candidate model against the hidden reference.

Three metric families: network-topology recovery over species-pair edges
(precision/recall/F1 by role category), reaction matching by role-set
equality (with and without modifiers), and a bounded symmetric trajectory
error averaged over species and experimental conditions. A seeded noise
sweep on initial concentrations probes how much a candidate overfits the
conditions it was built from.
"""

from __future__ import annotations

from dataclasses import dataclass
from collections import Counter

import numpy as np

from .model import Model, Reaction
from .simulate import (
    RateSystem,
    SimulationError,
    Trajectory,
    assemble,
    simulate,
)

__all__ = [
    "CATEGORY_RP",
    "CATEGORY_RM",
    "CATEGORY_MP",
    "CATEGORIES",
    "PRF",
    "EdgeSet",
    "MetricsReport",
    "edge_set",
    "network_topology_score",
    "reaction_matching_score",
    "simulation_trajectory_error",
    "robustness_sweep",
    "evaluate_models",
    "report_to_rows",
    "render_report",
    "report_as_dict",
    "smape",
    "perturbed_condition",
]

CATEGORY_RP = "reactant-product"
CATEGORY_RM = "reactant-modifier"
CATEGORY_MP = "modifier-product"
CATEGORIES = (CATEGORY_RP, CATEGORY_RM, CATEGORY_MP)

Edge = tuple[str, str, str]  # (source species, target species, category)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def prf_from_counts(tp: int, fp: int, fn: int) -> PRF:
    # empty-prediction convention: zero denominators score 0, not undefined
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return PRF(precision, recall, f1)


@dataclass(frozen=True)
class EdgeSet:
    """Directed species-pair relationships, duplicates collapsed."""

    edges: frozenset[Edge]

    def in_category(self, category: str) -> frozenset[Edge]:
        return frozenset(e for e in self.edges if e[2] == category)


def edge_set(model: Model) -> EdgeSet:
    """Every (source, target, category) pair implied by the model's reactions.

    A reaction contributes reactant->product, reactant->modifier, and
    modifier->product pairs for its listed roles; repeating a relationship
    in several reactions counts once.
    """
    edges: set[Edge] = set()
    for r in model.reactions:
        reactants = [sid for sid, _ in r.reactants]
        products = [sid for sid, _ in r.products]
        for a in reactants:
            for b in products:
                edges.add((a, b, CATEGORY_RP))
            for m in r.modifiers:
                edges.add((a, m, CATEGORY_RM))
        for m in r.modifiers:
            for b in products:
                edges.add((m, b, CATEGORY_MP))
    return EdgeSet(frozenset(edges))


def _set_prf(predicted: frozenset, reference: frozenset) -> PRF:
    tp = len(predicted & reference)
    return prf_from_counts(tp, len(predicted - reference), len(reference - predicted))


def network_topology_score(predicted: Model, reference: Model) -> tuple[PRF, dict[str, PRF]]:
    """Edge-recovery precision/recall/F1, overall and per role category."""
    pred_edges = edge_set(predicted)
    ref_edges = edge_set(reference)
    overall = _set_prf(pred_edges.edges, ref_edges.edges)
    per_category = {
        cat: _set_prf(pred_edges.in_category(cat), ref_edges.in_category(cat))
        for cat in CATEGORIES
    }
    return overall, per_category


def _reaction_key(reaction: Reaction, with_modifiers: bool):
    key = (
        frozenset(sid for sid, _ in reaction.reactants),
        frozenset(sid for sid, _ in reaction.products),
    )
    if with_modifiers:
        return (*key, frozenset(reaction.modifiers))
    return key


def reaction_matching_score(predicted: Model, reference: Model,
                            with_modifiers: bool) -> PRF:
    """Precision/recall/F1 of reaction recovery.

    Two reactions match when their reactant and product species-id sets are
    equal (and modifier sets too, when requested); stoichiometry and
    reversibility are deliberately ignored. Matching is maximum-cardinality
    over the equivalence classes, so duplicated predictions cannot claim one
    reference reaction twice.
    """
    pred_keys = Counter(_reaction_key(r, with_modifiers) for r in predicted.reactions)
    ref_keys = Counter(_reaction_key(r, with_modifiers) for r in reference.reactions)
    tp = sum(min(pred_keys[k], ref_keys[k]) for k in pred_keys)
    fp = sum(pred_keys.values()) - tp
    fn = sum(ref_keys.values()) - tp
    return prf_from_counts(tp, fp, fn)


# ---------------------------------------------------------------------------
# Trajectory error


def smape(actual: np.ndarray, predicted: np.ndarray) -> float:
    """Symmetric mean absolute percentage error in [0, 1].

    Per-sample denominator |y_i| + |yhat_i|; samples where both are zero
    contribute 0, keeping N fixed at the grid size.
    """
    actual = np.asarray(actual, dtype=float)
    predicted = np.asarray(predicted, dtype=float)
    numerator = np.abs(actual - predicted)
    denominator = np.abs(actual) + np.abs(predicted)
    terms = np.divide(
        numerator, denominator, out=np.zeros_like(numerator), where=denominator > 0
    )
    return float(terms.mean())


def _trajectory_smape(reference: Trajectory, predicted: Trajectory,
                      species_ids: list[str]) -> float:
    scores = []
    for sid in species_ids:
        if sid not in predicted.columns:
            scores.append(1.0)
            continue
        scores.append(smape(reference.columns[sid], predicted.columns[sid]))
    return float(np.mean(scores))


def simulation_trajectory_error(predicted: Model, reference: Model,
                                conditions: list[dict[str, float]] | None,
                                duration: float, n_points: int) -> float:
    """Mean SMAPE between the two models' trajectories.

    Averaged over the reference model's species, then over conditions
    (initial-concentration override maps, applied identically to both
    models). A predicted model that fails to build or simulate under a
    condition scores 1.0 for that condition; a reference failure means the
    task itself is broken and raises.
    """
    conditions = conditions if conditions else [{}]
    reference_system = assemble(reference)
    species_ids = list(reference.species_ids())

    predicted_system: RateSystem | None
    try:
        predicted_system = assemble(predicted)
    except SimulationError:
        predicted_system = None

    per_condition: list[float] = []
    for overrides in conditions:
        reference_traj = simulate(reference_system, overrides, duration, n_points)
        if predicted_system is None:
            per_condition.append(1.0)
            continue
        try:
            predicted_traj = simulate(predicted_system, overrides, duration, n_points)
        except (SimulationError, ValueError):
            per_condition.append(1.0)
            continue
        per_condition.append(_trajectory_smape(reference_traj, predicted_traj, species_ids))
    return float(np.mean(per_condition))


# ---------------------------------------------------------------------------
# Robustness sweep


def perturbed_condition(reference_system: RateSystem, level: float,
                        rng: np.random.Generator,
                        proportional_sigma: bool = False) -> dict[str, float]:
    """One noisy initial-concentration assignment for all dynamic species.

    Default reading: zero-mean Gaussian with variance ``level * c0`` (sigma
    = sqrt(level * c0)); the ``proportional_sigma`` alternative uses sigma =
    level * c0. Species starting at zero stay untouched either way, and
    draws are clamped at zero.
    """
    condition: dict[str, float] = {}
    for sid, c0 in zip(reference_system.dynamic_ids, reference_system.initial_state):
        c0 = float(c0)
        sigma = level * c0 if proportional_sigma else float(np.sqrt(level * c0))
        value = c0 + rng.normal(0.0, sigma)
        condition[sid] = max(value, 0.0)
    return condition


def robustness_sweep(predicted: Model, reference: Model,
                     noise_levels: list[float], replicates: int, seed: int,
                     duration: float, n_points: int,
                     proportional_sigma: bool = False) -> list[tuple[float, float]]:
    """Mean trajectory error under increasingly noisy initial conditions.

    Each (level, replicate) draws one perturbed condition from a Philox
    stream keyed by ``seed`` and scores it with the same conditions applied
    to both models; results are reproducible for a fixed seed.
    """
    reference_system = assemble(reference)
    rng = np.random.Generator(np.random.Philox(key=seed))
    curve: list[tuple[float, float]] = []
    for level in noise_levels:
        if level < 0:
            raise ValueError("noise levels must be nonnegative")
        scores = []
        for _ in range(replicates):
            condition = perturbed_condition(reference_system, level, rng, proportional_sigma)
            scores.append(simulation_trajectory_error(
                predicted, reference, [condition], duration, n_points
            ))
        curve.append((float(level), float(np.mean(scores))))
    return curve


# ---------------------------------------------------------------------------
# Combined report


@dataclass(frozen=True)
class MetricsReport:
    ste: float
    rms_with_modifiers: PRF
    rms_without_modifiers: PRF
    nts_overall: PRF
    nts_per_category: tuple[tuple[str, PRF], ...]
    robustness: tuple[tuple[float, float], ...] = ()


def evaluate_models(predicted: Model, reference: Model,
                    conditions: list[dict[str, float]] | None,
                    duration: float, n_points: int,
                    noise_levels: list[float] | None = None,
                    replicates: int = 3, seed: int = 0,
                    proportional_sigma: bool = False) -> MetricsReport:
    """Run all metric families; the robustness sweep only when levels are given."""
    overall, per_category = network_topology_score(predicted, reference)
    robustness: tuple[tuple[float, float], ...] = ()
    if noise_levels:
        robustness = tuple(robustness_sweep(
            predicted, reference, noise_levels, replicates, seed,
            duration, n_points, proportional_sigma,
        ))
    return MetricsReport(
        ste=simulation_trajectory_error(predicted, reference, conditions, duration, n_points),
        rms_with_modifiers=reaction_matching_score(predicted, reference, True),
        rms_without_modifiers=reaction_matching_score(predicted, reference, False),
        nts_overall=overall,
        nts_per_category=tuple((cat, per_category[cat]) for cat in CATEGORIES),
        robustness=robustness,
    )


def _prf_rows(prefix: str, prf: PRF) -> list[tuple[str, str]]:
    return [
        (f"{prefix}_precision", repr(prf.precision)),
        (f"{prefix}_recall", repr(prf.recall)),
        (f"{prefix}_f1", repr(prf.f1)),
    ]


def report_to_rows(report: MetricsReport) -> list[tuple[str, str]]:
    """Flatten to (key, value) rows: trajectory error, reaction matching
    with/without modifiers, then per-category topology scores."""
    rows: list[tuple[str, str]] = [("ste", repr(report.ste))]
    rows += _prf_rows("rms_with_modifiers", report.rms_with_modifiers)
    rows += _prf_rows("rms_without_modifiers", report.rms_without_modifiers)
    rows += _prf_rows("nts_overall", report.nts_overall)
    for category, prf in report.nts_per_category:
        rows += _prf_rows(f"nts_{category.replace('-', '_')}", prf)
    for level, ste in report.robustness:
        rows.append((f"robustness_ste_at_{level:g}", repr(ste)))
    return rows


def render_report(report: MetricsReport) -> str:
    return "".join(f"{key}\t{value}\n" for key, value in report_to_rows(report))


def report_as_dict(report: MetricsReport) -> dict:
    """JSON-friendly form used by the session protocol."""
    def prf(p: PRF) -> dict:
        return {"precision": p.precision, "recall": p.recall, "f1": p.f1}

    return {
        "ste": report.ste,
        "rms_with_modifiers": prf(report.rms_with_modifiers),
        "rms_without_modifiers": prf(report.rms_without_modifiers),
        "nts_overall": prf(report.nts_overall),
        "nts_per_category": {cat: prf(p) for cat, p in report.nts_per_category},
        "robustness": [[level, ste] for level, ste in report.robustness],
    }
