"""Acceptance suite: one test per release criterion, at its stated tolerance.

Each test prints a single PASS/FAIL line (visible with ``pytest -s`` or in
the captured output of a failing run), so the suite doubles as a checklist.
"""

import time
from contextlib import contextmanager

import numpy as np
from scipy.linalg import expm

import drylab
from drylab.curation import anonymize, curate_document, leakage_scan, mask_reactions
from drylab.environment import SessionConfig
from drylab.metrics import (
    network_topology_score,
    reaction_matching_score,
    robustness_sweep,
    simulation_trajectory_error,
    smape,
)
from drylab.sbml import serialize_sbml
from drylab.server import ProtocolHandler
from drylab.simulate import assemble, determine_duration, simulate

from conftest import constant_production_model, decay_model, make_model, simple_species
from test_metrics import as_model, brute_force_nts, brute_force_rms, universe_models
from test_simulate import random_linear_network


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    print(f"ACCEPTANCE {name}: PASS")


def test_michaelis_menten_fidelity(enzyme_model):
    with criterion("michaelis-menten-fidelity"):
        system = assemble(enzyme_model)
        started = time.perf_counter()
        traj = simulate(system, {}, 50.0, 501)
        elapsed = time.perf_counter() - started

        enzyme_total = traj.columns["E"] + traj.columns["ES"]
        substrate_total = traj.columns["S"] + traj.columns["ES"] + traj.columns["P"]
        for total in (enzyme_total, substrate_total):
            assert np.max(np.abs(total - total[0])) <= 1e-9 * total[0]
        assert elapsed < 1.0


def test_analytic_oracles():
    with criterion("analytic-oracle"):
        traj = simulate(assemble(decay_model(k=1.0, a0=1.0)), {}, 1.0, 101)
        exact = np.exp(-traj.times)
        assert np.max(np.abs(traj.columns["A"] - exact) / exact) <= 1e-6

        rng = np.random.Generator(np.random.Philox(key=424242))
        for _ in range(5):
            model, matrix, y0 = random_linear_network(rng)
            traj = simulate(assemble(model), {}, 2.0, 26)
            for k, t in enumerate(traj.times):
                reference = expm(matrix * t) @ y0
                got = np.array([traj.columns[f"s{j}"][k] for j in range(len(y0))])
                assert np.allclose(got, reference, rtol=1e-6, atol=1e-12)


def test_duration_determination():
    with criterion("duration-determination"):
        duration, termination = determine_duration(decay_model(k=1.0, a0=1.0))
        assert termination == "steady-state"
        assert abs(duration - 13.8) <= 0.05 + 1e-9

        flat = make_model(reactions=[], species=[simple_species("A", 1.0)])
        assert determine_duration(flat)[0] == 10.0

        duration, termination = determine_duration(constant_production_model())
        assert (duration, termination) == (10_000.0, "budget")


def test_metric_oracle_equivalence():
    with criterion("metric-oracle-equivalence"):
        models = universe_models()
        for pred in models:
            for ref in models:
                for flag in (True, False):
                    fast = reaction_matching_score(as_model(pred), as_model(ref), flag)
                    assert fast == brute_force_rms(list(pred), list(ref), flag)
                overall, _ = network_topology_score(as_model(pred), as_model(ref))
                assert overall == brute_force_nts(list(pred), list(ref))


def test_smape_hand_values():
    with criterion("smape-hand-values"):
        grid = np.linspace(0.0, 4.0, 33)
        assert smape(grid, grid.copy()) == 0.0
        assert smape(np.array([1.0, 3.0]), np.array([3.0, 1.0])) == 0.5
        rng = np.random.default_rng(7)
        for _ in range(100):
            y, z = rng.normal(size=25), rng.normal(size=25)
            assert 0.0 <= smape(y, z) <= 1.0


def test_curation_safety():
    with criterion("curation-safety"):
        for name in drylab.sample_model_names():
            model = drylab.parse_sbml(drylab.sample_model_bytes(name))
            reference_traj = simulate(assemble(model), {}, 10.0, 101)
            for seed in range(10):
                renamed, id_map = anonymize(model, seed=seed)
                renamed_traj = simulate(assemble(renamed), {}, 10.0, 101)
                forward = id_map.as_dict()
                for sid in model.species_ids():
                    a = reference_traj.columns[sid]
                    b = renamed_traj.columns[forward[sid]]
                    scale = np.maximum(np.abs(a), np.max(np.abs(a)) if np.any(a) else 1.0)
                    assert np.all(np.abs(a - b) <= 1e-9 * scale)

                task = mask_reactions(renamed, id_map)
                assert task.partial.reactions == ()
                assert leakage_scan(task) == []

        enzyme = drylab.parse_sbml(drylab.sample_model_bytes("enzyme_process"))
        partial = mask_reactions(enzyme).partial
        assert len(partial.species) == 4
        assert len(partial.reactions) == 0
        assert len(partial.parameters) == 0


def test_protocol_conformance(enzyme_doc):
    with criterion("protocol-conformance"):
        task = curate_document(enzyme_doc, seed=5)

        # scripted exchange ends with perfect scores for the reference itself
        handler = ProtocolHandler(task, SessionConfig())
        assert handler.handle({"id": 1, "type": "start"})["ok"]
        obs = handler.handle({"id": 2, "type": "experiment",
                              "action": "observe", "meta_data": {}})
        assert obs["ok"]
        sid = sorted(obs["observation"]["summary"])[0]
        change = handler.handle({"id": 3, "type": "experiment",
                                 "action": "change_initial_concentration",
                                 "meta_data": {sid: 0.0}})
        assert change["ok"]
        submit = handler.handle({"id": 4, "type": "submit",
                                 "sbml": serialize_sbml(task.reference).decode()})
        assert submit["accepted"]
        assert submit["evaluation"]["ste"] == 0.0
        assert submit["evaluation"]["rms_with_modifiers"]["f1"] == 1.0

        # three malformed submissions exhaust the debug budget; evaluation
        # falls back to the reaction-free partial
        handler = ProtocolHandler(task, SessionConfig())
        handler.handle({"id": 1, "type": "start"})
        for i in range(3):
            response = handler.handle({"id": 2 + i, "type": "submit", "sbml": "<broken"})
            assert response["ok"] and not response["accepted"]
            assert response["debug_attempts_remaining"] == 2 - i
        assert response["terminated"]
        assert response["evaluation"]["rms_with_modifiers"]["f1"] == 0.0
        assert response["evaluation"]["ste"] > 0.0

        # perturbing a boundary/constant species returns the documented code
        boundary_doc = enzyme_doc.replace(b'id="P" compartment="comp" initialAmount="0" substanceUnits="mole"\n        hasOnlySubstanceUnits="false" boundaryCondition="false"', b'id="P" compartment="comp" initialAmount="0" substanceUnits="mole"\n        hasOnlySubstanceUnits="false" boundaryCondition="true"')
        assert boundary_doc != enzyme_doc
        boundary_task = curate_document(boundary_doc, seed=5)
        handler = ProtocolHandler(boundary_task, SessionConfig())
        handler.handle({"id": 1, "type": "start"})
        target = boundary_task.id_map.as_dict()["P"]
        refusal = handler.handle({"id": 2, "type": "experiment",
                                  "action": "change_initial_concentration",
                                  "meta_data": {target: 1.0}})
        assert not refusal["ok"]
        assert refusal["error"]["code"] == "constant-or-boundary-species"


def test_robustness_sweep_determinism(enzyme_model):
    with criterion("robustness-sweep-determinism"):
        partial = mask_reactions(enzyme_model).partial
        kwargs = dict(noise_levels=[0.0, 1e-7, 1e-6], replicates=3, seed=20_24,
                      duration=10.0, n_points=51)
        first = robustness_sweep(partial, enzyme_model, **kwargs)
        second = robustness_sweep(partial, enzyme_model, **kwargs)
        assert first == second

        unperturbed = simulation_trajectory_error(partial, enzyme_model, None, 10.0, 51)
        assert first[0] == (0.0, unperturbed)
