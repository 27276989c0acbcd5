"""drylab: a dry-lab environment for reaction-network mechanism discovery.

Parses a restricted subset of SBML reaction-network models, simulates them
as deterministic ODE systems, curates them into anonymized discovery tasks,
serves perturbation experiments to agents over a line-delimited JSON
protocol, and scores candidate models against the hidden reference.
"""

from importlib import resources

from .curation import (
    IdMap,
    TaskInstance,
    anonymize,
    curate_document,
    leakage_scan,
    mask_reactions,
    read_bundle,
    write_bundle,
)
from .environment import (
    ExperimentRequest,
    Observation,
    Session,
    SessionConfig,
    start_session,
)
from .expressions import Expression, evaluate as evaluate_expression
from .metrics import (
    EdgeSet,
    MetricsReport,
    PRF,
    edge_set,
    evaluate_models,
    network_topology_score,
    reaction_matching_score,
    robustness_sweep,
    simulation_trajectory_error,
)
from .model import (
    Compartment,
    Model,
    Parameter,
    Reaction,
    Species,
    validate_model,
)
from .sbml import (
    EligibilityReport,
    SbmlParseError,
    check_eligibility,
    parse_sbml,
    serialize_sbml,
)
from .simulate import (
    RateSystem,
    Trajectory,
    assemble,
    determine_duration,
    simulate,
    solve_steady_state,
    trajectory_to_csv,
)

__version__ = "0.1.0"


def sample_model_bytes(name: str) -> bytes:
    """Load one of the bundled sample documents (e.g. "enzyme_process")."""
    return resources.files(__package__).joinpath("models", f"{name}.xml").read_bytes()


def sample_model_names() -> list[str]:
    models = resources.files(__package__).joinpath("models")
    return sorted(path.name[:-4] for path in models.iterdir() if path.name.endswith(".xml"))
