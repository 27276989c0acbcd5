import pytest

import drylab
from drylab import expressions as ex
from drylab.model import Compartment, Model, Parameter, Reaction, Species

UNIT_CELL = Compartment(id="cell", size=1.0)


def mass_action(*terms):
    return ex.call("times", *terms)


def make_model(reactions, species, parameters=(), compartments=(UNIT_CELL,)):
    return Model(
        species=tuple(species),
        parameters=tuple(parameters),
        compartments=tuple(compartments),
        reactions=tuple(reactions),
    )


def simple_species(sid, value, **kwargs):
    return Species(id=sid, compartment="cell", initial_value=value, **kwargs)


def decay_model(k=1.0, a0=1.0):
    """A -> nothing at rate k*[A]."""
    return make_model(
        reactions=[Reaction(
            id="deg", reactants=(("A", 1.0),), products=(),
            kinetic_law=mass_action(ex.sym("cell"), ex.sym("k"), ex.sym("A")),
        )],
        species=[simple_species("A", a0)],
        parameters=[Parameter(id="k", value=k)],
    )


def reversible_pair_model(k1=1.0, k2=1.0, a0=2.0, b0=0.0):
    """A <=> B as two mass-action reactions."""
    return make_model(
        reactions=[
            Reaction(id="fwd", reactants=(("A", 1.0),), products=(("B", 1.0),),
                     kinetic_law=mass_action(ex.sym("cell"), ex.sym("k1"), ex.sym("A"))),
            Reaction(id="bwd", reactants=(("B", 1.0),), products=(("A", 1.0),),
                     kinetic_law=mass_action(ex.sym("cell"), ex.sym("k2"), ex.sym("B"))),
        ],
        species=[simple_species("A", a0), simple_species("B", b0)],
        parameters=[Parameter(id="k1", value=k1), Parameter(id="k2", value=k2)],
    )


def constant_production_model(k=0.5):
    """nothing -> A at constant rate k (no finite steady state)."""
    return make_model(
        reactions=[Reaction(
            id="make", reactants=(), products=(("A", 1.0),),
            kinetic_law=mass_action(ex.sym("cell"), ex.sym("k")),
        )],
        species=[simple_species("A", 0.0)],
        parameters=[Parameter(id="k", value=k)],
    )


@pytest.fixture(scope="session")
def enzyme_doc():
    return drylab.sample_model_bytes("enzyme_process")


@pytest.fixture(scope="session")
def modifier_doc():
    return drylab.sample_model_bytes("modifier_conversion")


@pytest.fixture()
def enzyme_model(enzyme_doc):
    return drylab.parse_sbml(enzyme_doc)


@pytest.fixture()
def modifier_model(modifier_doc):
    return drylab.parse_sbml(modifier_doc)
