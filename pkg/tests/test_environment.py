import numpy as np
import pytest

from drylab.curation import curate_document
from drylab.environment import (
    ExperimentError,
    ExperimentRequest,
    Session,
    SessionConfig,
    experiment_manual,
    knockout_model,
    start_session,
)
from drylab.sbml import serialize_sbml
from drylab.simulate import assemble, simulate


@pytest.fixture()
def enzyme_task(enzyme_doc):
    return curate_document(enzyme_doc, seed=5)


@pytest.fixture()
def session(enzyme_task):
    return Session(enzyme_task, SessionConfig())


def observe():
    return ExperimentRequest("observe", {})


class TestStartSession:
    def test_payload_has_partial_and_manual(self, enzyme_task):
        payload = start_session(enzyme_task).start_payload()
        assert "<reaction" not in payload["partial_sbml"]
        assert payload["partial_sbml"].count("<species ") == 4
        assert payload["manual"].startswith("## Available Experiment Actions")
        assert payload["max_iterations"] == 20

    def test_leaking_task_refused(self, enzyme_task):
        from dataclasses import replace
        from drylab.model import Parameter

        leaky_partial = replace(
            enzyme_task.partial,
            parameters=(Parameter(id=enzyme_task.reference.reactions[0].id, value=1.0),),
        )
        with pytest.raises(ValueError, match="leak"):
            Session(replace(enzyme_task, partial=leaky_partial))

    def test_reference_never_in_payload(self, enzyme_task):
        payload = start_session(enzyme_task).start_payload()
        blob = "".join(str(v) for v in payload.values())
        for reaction in enzyme_task.reference.reactions:
            assert reaction.id not in blob

    def test_knockout_manual_gated(self):
        assert "species_knockout" not in experiment_manual(False)
        assert "species_knockout" in experiment_manual(True)


class TestRunExperiment:
    def test_observe_equals_direct_simulation(self, enzyme_task, session):
        obs = session.run_experiment(observe())
        direct = simulate(
            assemble(enzyme_task.reference), {},
            enzyme_task.duration_s, enzyme_task.n_points,
        )
        assert obs.trajectory.equals(direct)
        assert obs.iteration == 1

    def test_summary_matches_trajectory(self, session):
        obs = session.run_experiment(observe())
        for sid, stats in obs.summary.items():
            col = obs.trajectory.columns[sid]
            assert stats["initial"] == col[0]
            assert stats["final"] == col[-1]
            assert stats["min"] == col.min()
            assert stats["max"] == col.max()

    def test_substrate_starved_system_makes_no_product(self, enzyme_task, session):
        fwd = enzyme_task.id_map.as_dict()
        request = ExperimentRequest(
            "change_initial_concentration", {fwd["S"]: 0.0, fwd["ES"]: 0.0}
        )
        obs = session.run_experiment(request)
        assert np.all(obs.trajectory.columns[fwd["P"]] == 0.0)

    def test_knockout_removes_participating_reactions(self, enzyme_task):
        session = Session(enzyme_task, SessionConfig(allow_knockout=True))
        fwd = enzyme_task.id_map.as_dict()
        obs = session.run_experiment(
            ExperimentRequest("species_knockout", {"species_ids": [fwd["E"]]})
        )
        # E participates in both reactions, so every concentration stays put
        for sid, col in obs.trajectory.columns.items():
            assert np.all(col == col[0])

    def test_knockout_model_builder(self, enzyme_model):
        variant = knockout_model(enzyme_model, ["E"])
        assert variant.reactions == ()
        assert variant.get_species("E").initial_value == 0.0
        assert enzyme_model.get_species("E").initial_value > 0  # untouched

    def test_knockout_disabled_by_default(self, session, enzyme_task):
        fwd = enzyme_task.id_map.as_dict()
        with pytest.raises(ExperimentError) as err:
            session.run_experiment(
                ExperimentRequest("species_knockout", {"species_ids": [fwd["E"]]})
            )
        assert err.value.code == "knockout-disabled"

    def test_unknown_species_rejected(self, session):
        with pytest.raises(ExperimentError) as err:
            session.run_experiment(
                ExperimentRequest("change_initial_concentration", {"nope": 1.0})
            )
        assert err.value.code == "unknown-species"

    def test_negative_concentration_rejected(self, session, enzyme_task):
        fwd = enzyme_task.id_map.as_dict()
        with pytest.raises(ExperimentError) as err:
            session.run_experiment(
                ExperimentRequest("change_initial_concentration", {fwd["S"]: -1.0})
            )
        assert err.value.code == "negative-concentration"

    def test_constant_species_rejected(self, enzyme_doc):
        doc = enzyme_doc.replace(
            b'id="P" compartment="comp" initialAmount="0" substanceUnits="mole"\n        hasOnlySubstanceUnits="false" boundaryCondition="false"',
            b'id="P" compartment="comp" initialAmount="0" substanceUnits="mole"\n        hasOnlySubstanceUnits="false" boundaryCondition="true"',
        )
        task = curate_document(doc, seed=5)
        session = Session(task)
        fwd = task.id_map.as_dict()
        with pytest.raises(ExperimentError) as err:
            session.run_experiment(
                ExperimentRequest("change_initial_concentration", {fwd["P"]: 1.0})
            )
        assert err.value.code == "constant-or-boundary-species"

    def test_errors_do_not_consume_iterations(self, session):
        with pytest.raises(ExperimentError):
            session.run_experiment(ExperimentRequest("bogus", {}))
        assert session.iteration == 1

    def test_budget_enforced(self, enzyme_task):
        session = Session(enzyme_task, SessionConfig(max_iterations=1))
        session.run_experiment(observe())
        with pytest.raises(ExperimentError) as err:
            session.run_experiment(observe())
        assert err.value.code == "iteration-budget-exhausted"

    def test_experiments_are_stateless(self, enzyme_task, session):
        fwd = enzyme_task.id_map.as_dict()
        request = ExperimentRequest("change_initial_concentration", {fwd["S"]: 2e-6})
        first = session.run_experiment(request)
        session.run_experiment(observe())
        third = session.run_experiment(request)
        assert first.trajectory.equals(third.trajectory)

    def test_history_append_only_and_stable(self, session):
        obs1 = session.run_experiment(observe())
        payload_then = obs1.as_payload()
        session.run_experiment(observe())
        assert session.history[1] is obs1
        assert session.history[1].as_payload() == payload_then
        assert sorted(session.history) == [1, 2]


class TestSubmit:
    def test_reference_accepted(self, enzyme_task, session):
        outcome = session.submit(serialize_sbml(enzyme_task.reference))
        assert outcome.accepted
        assert outcome.terminated
        assert session.effective_submission() == enzyme_task.reference

    def test_after_termination_no_actions(self, enzyme_task, session):
        session.submit(serialize_sbml(enzyme_task.reference))
        with pytest.raises(ExperimentError) as err:
            session.run_experiment(observe())
        assert err.value.code == "session-terminated"
        with pytest.raises(ExperimentError):
            session.submit(serialize_sbml(enzyme_task.reference))

    def test_three_malformed_submissions_fall_back_to_partial(self, enzyme_task, session):
        for attempt in range(3):
            outcome = session.submit(b"<broken xml")
            assert not outcome.accepted
            assert outcome.debug_attempts_remaining == 2 - attempt
        assert outcome.terminated
        assert session.effective_submission() == enzyme_task.partial

    def test_simulation_blowup_rejected_with_diagnostics(self, session):
        doc = b"""<?xml version="1.0"?>
<sbml xmlns="http://www.sbml.org/sbml/level3/version2/core" level="3" version="2">
  <model>
    <listOfCompartments><compartment id="c" size="1" constant="true"/></listOfCompartments>
    <listOfSpecies>
      <species id="A" compartment="c" initialConcentration="0" hasOnlySubstanceUnits="false" boundaryCondition="false" constant="false"/>
    </listOfSpecies>
    <listOfReactions>
      <reaction id="r" reversible="false">
        <listOfProducts><speciesReference species="A" stoichiometry="1" constant="true"/></listOfProducts>
        <kineticLaw>
          <math xmlns="http://www.w3.org/1998/Math/MathML">
            <apply><divide/><cn>1</cn><apply><minus/><cn>1</cn><ci>A</ci></apply></apply>
          </math>
        </kineticLaw>
      </reaction>
    </listOfReactions>
  </model>
</sbml>"""
        outcome = session.submit(doc)
        assert not outcome.accepted
        assert any("simulation-failure" in d for d in outcome.diagnostics)
        assert outcome.debug_attempts_remaining == 2

    def test_invalid_model_rejected_with_validation_diagnostics(self, session):
        doc = b"""<?xml version="1.0"?>
<sbml xmlns="http://www.sbml.org/sbml/level3/version2/core" level="3" version="2">
  <model>
    <listOfCompartments><compartment id="c" size="-1" constant="true"/></listOfCompartments>
    <listOfSpecies>
      <species id="A" compartment="c" initialConcentration="1" hasOnlySubstanceUnits="false" boundaryCondition="false" constant="false"/>
    </listOfSpecies>
    <listOfReactions>
      <reaction id="r" reversible="false">
        <listOfReactants><speciesReference species="A" stoichiometry="1" constant="true"/></listOfReactants>
        <kineticLaw>
          <math xmlns="http://www.w3.org/1998/Math/MathML"><ci>A</ci></math>
        </kineticLaw>
      </reaction>
    </listOfReactions>
  </model>
</sbml>"""
        outcome = session.submit(doc)
        assert not outcome.accepted
        assert any("bad-compartment-size" in d for d in outcome.diagnostics)


class TestIsolation:
    def test_reference_bytes_never_leave_the_session(self, enzyme_task):
        session = Session(enzyme_task, SessionConfig(allow_knockout=True))
        reference_markers = [r.id for r in enzyme_task.reference.reactions]
        reference_markers += [p.id for p in enzyme_task.reference.parameters]

        collected = [str(session.start_payload())]
        obs = session.run_experiment(observe())
        collected.append(str(obs.as_payload()))
        for request in (
            ExperimentRequest("change_initial_concentration", {"nope": 1.0}),
            ExperimentRequest("species_knockout", {"species_ids": ["nope"]}),
            ExperimentRequest("bogus", {}),
        ):
            try:
                session.run_experiment(request)
            except ExperimentError as exc:
                collected.append(f"{exc.code} {exc.message}")
        outcome = session.submit(b"<broken")
        collected.append(str(outcome.diagnostics))

        blob = "\n".join(collected)
        for marker in reference_markers:
            assert marker not in blob
