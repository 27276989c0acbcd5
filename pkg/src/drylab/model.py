"""In-memory representation of the reduced reaction-network model.

A :class:`Model` holds species, global parameters, compartments, reactions
with their kinetic-law expressions, and a list of opaque passthrough XML
fragments for tags this package does not interpret (unit definitions, notes,
and so on). All types are frozen dataclasses: construct once, share freely.

Species state values are normalized at construction time by the parser:
``initial_value`` is a concentration unless ``has_only_substance_units`` is
set, in which case it is the raw amount (the value kinetic laws see either
way, following the substance-units convention).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .expressions import Expression, free_symbols

__all__ = [
    "Species",
    "Parameter",
    "Compartment",
    "Reaction",
    "Model",
    "PassthroughFragment",
    "Diagnostic",
    "validate_model",
    "signed_stoichiometry",
    "reaction_symbol_scope",
]


@dataclass(frozen=True)
class Species:
    id: str
    compartment: str
    initial_value: float
    name: str | None = None
    boundary_condition: bool = False
    constant: bool = False
    has_only_substance_units: bool = False
    substance_units: str | None = None


@dataclass(frozen=True)
class Parameter:
    id: str
    value: float
    constant: bool = True
    units: str | None = None
    name: str | None = None


@dataclass(frozen=True)
class Compartment:
    id: str
    size: float
    spatial_dimensions: int = 3
    constant: bool = True
    units: str | None = None
    name: str | None = None


@dataclass(frozen=True)
class Reaction:
    """A process consuming reactants, producing products, tuned by modifiers.

    Stoichiometries are stored unsigned; the sign comes from the role (see
    :func:`signed_stoichiometry`).
    """

    id: str
    reactants: tuple[tuple[str, float], ...]
    products: tuple[tuple[str, float], ...]
    kinetic_law: Expression
    modifiers: tuple[str, ...] = ()
    local_parameters: tuple[Parameter, ...] = ()
    reversible: bool = False
    name: str | None = None


@dataclass(frozen=True)
class PassthroughFragment:
    """An uninterpreted model-level XML subtree, kept verbatim.

    ``tag`` is the element's local name (e.g. "listOfUnitDefinitions"),
    ``xml`` the serialized subtree.
    """

    tag: str
    xml: str


@dataclass(frozen=True)
class Model:
    species: tuple[Species, ...] = ()
    parameters: tuple[Parameter, ...] = ()
    compartments: tuple[Compartment, ...] = ()
    reactions: tuple[Reaction, ...] = ()
    passthrough: tuple[PassthroughFragment, ...] = ()
    id: str | None = None
    name: str | None = None
    attributes: tuple[tuple[str, str], ...] = ()

    def species_ids(self) -> list[str]:
        return [s.id for s in self.species]

    def get_species(self, sid: str) -> Species:
        for s in self.species:
            if s.id == sid:
                return s
        raise KeyError(sid)

    def get_compartment(self, cid: str) -> Compartment:
        for c in self.compartments:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def with_reactions(self, reactions: tuple[Reaction, ...]) -> "Model":
        return replace(self, reactions=reactions)


# Tags whose semantics are not implemented; their presence disqualifies a
# model from simulation and curation.
FORBIDDEN_FRAGMENT_TAGS = frozenset(
    {
        "listOfRules",
        "listOfEvents",
        "listOfInitialAssignments",
        "listOfFunctionDefinitions",
        "listOfConstraints",
        "rule",
        "algebraicRule",
        "assignmentRule",
        "rateRule",
        "event",
        "initialAssignment",
        "functionDefinition",
        "constraint",
    }
)


@dataclass(frozen=True)
class Diagnostic:
    """One validation finding: a machine-readable code plus the offending id."""

    code: str
    subject: str
    detail: str = ""

    def __str__(self) -> str:
        msg = f"{self.code}({self.subject})"
        return f"{msg}: {self.detail}" if self.detail else msg


def signed_stoichiometry(reaction: Reaction, species_id: str) -> float:
    """Net signed coefficient of a species in one reaction.

    Negative for reactants, positive for products, zero otherwise; a species
    on both sides contributes the signed sum.
    """
    total = 0.0
    for sid, stoich in reaction.reactants:
        if sid == species_id:
            total -= stoich
    for sid, stoich in reaction.products:
        if sid == species_id:
            total += stoich
    return total


def reaction_symbol_scope(model: Model, reaction: Reaction) -> dict[str, float]:
    """Constant symbol values visible to one reaction's kinetic law.

    Local parameters shadow globals; species are absent here because their
    values vary (the simulator binds them per state).
    """
    scope: dict[str, float] = {}
    for c in model.compartments:
        scope[c.id] = c.size
    for p in model.parameters:
        scope[p.id] = p.value
    for p in reaction.local_parameters:
        scope[p.id] = p.value
    return scope


def _check_duplicates(ids: list[str], code: str, out: list[Diagnostic]) -> None:
    seen: set[str] = set()
    for i in ids:
        if i in seen:
            out.append(Diagnostic(code, i))
        seen.add(i)


def validate_model(model: Model) -> list[Diagnostic]:
    """Check every structural invariant; empty list means the model is sound.

    Diagnostics are the result, not exceptions: callers that need a gate
    raise on a nonempty list themselves.
    """
    out: list[Diagnostic] = []
    species_ids = set(model.species_ids())

    _check_duplicates(model.species_ids(), "duplicate-id", out)
    _check_duplicates([p.id for p in model.parameters], "duplicate-id", out)
    _check_duplicates([c.id for c in model.compartments], "duplicate-id", out)
    _check_duplicates([r.id for r in model.reactions], "duplicate-id", out)

    compartment_ids = {c.id for c in model.compartments}
    for c in model.compartments:
        if not c.size > 0:
            out.append(Diagnostic("bad-compartment-size", c.id, f"size {c.size!r}"))

    for s in model.species:
        if s.compartment not in compartment_ids:
            out.append(Diagnostic("unresolved-compartment", s.id, s.compartment))
        if not (math.isfinite(s.initial_value) and s.initial_value >= 0):
            out.append(Diagnostic("bad-initial", s.id, repr(s.initial_value)))

    global_scope = {c.id for c in model.compartments} | {p.id for p in model.parameters}
    for r in model.reactions:
        _check_duplicates([p.id for p in r.local_parameters], "duplicate-id", out)
        for role_name, refs in (("reactant", r.reactants), ("product", r.products)):
            seen_role: set[str] = set()
            for sid, stoich in refs:
                if sid not in species_ids:
                    out.append(Diagnostic("unresolved-species", sid, f"{role_name} of {r.id}"))
                if sid in seen_role:
                    out.append(Diagnostic("duplicate-role-entry", sid, f"{role_name} of {r.id}"))
                seen_role.add(sid)
                if not (math.isfinite(stoich) and stoich > 0):
                    out.append(Diagnostic("bad-stoichiometry", sid, f"{stoich!r} in {r.id}"))
        seen_mods: set[str] = set()
        for sid in r.modifiers:
            if sid not in species_ids:
                out.append(Diagnostic("unresolved-species", sid, f"modifier of {r.id}"))
            if sid in seen_mods:
                out.append(Diagnostic("duplicate-role-entry", sid, f"modifier of {r.id}"))
            seen_mods.add(sid)

        local_scope = global_scope | {p.id for p in r.local_parameters} | species_ids
        for name in sorted(free_symbols(r.kinetic_law)):
            if name not in local_scope:
                out.append(Diagnostic("unresolved-symbol", name, f"kinetic law of {r.id}"))

    for frag in model.passthrough:
        if frag.tag in FORBIDDEN_FRAGMENT_TAGS:
            out.append(Diagnostic("forbidden-tag", frag.tag))

    return out
