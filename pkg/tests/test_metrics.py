import itertools

import numpy as np
import pytest

from drylab import expressions as ex
from drylab.metrics import (
    CATEGORY_MP,
    CATEGORY_RM,
    CATEGORY_RP,
    PRF,
    edge_set,
    network_topology_score,
    prf_from_counts,
    reaction_matching_score,
    robustness_sweep,
    simulation_trajectory_error,
    smape,
)
from drylab.model import Reaction
from drylab.curation import mask_reactions

from conftest import decay_model, make_model, simple_species


# --- independent brute-force oracles -----------------------------------------


def brute_force_rms(pred_rxns, ref_rxns, with_modifiers):
    """Try every injective assignment of predicted to reference reactions."""
    def equivalent(a, b):
        same = (
            {s for s, _ in a.reactants} == {s for s, _ in b.reactants}
            and {s for s, _ in a.products} == {s for s, _ in b.products}
        )
        if with_modifiers:
            same = same and set(a.modifiers) == set(b.modifiers)
        return same

    best = 0
    indices = range(len(ref_rxns))
    for size in range(min(len(pred_rxns), len(ref_rxns)), -1, -1):
        if size <= best:
            break
        for chosen_pred in itertools.permutations(range(len(pred_rxns)), size):
            for chosen_ref in itertools.combinations(indices, size):
                if all(
                    equivalent(pred_rxns[p], ref_rxns[r])
                    for p, r in zip(chosen_pred, chosen_ref)
                ):
                    best = max(best, size)
        if best == size:
            break
    tp = best
    return prf_from_counts(tp, len(pred_rxns) - tp, len(ref_rxns) - tp)


def brute_force_edges(reactions):
    edges = set()
    for rxn in reactions:
        for r, _ in rxn.reactants:
            for p, _ in rxn.products:
                edges.add((r, p, CATEGORY_RP))
            for m in rxn.modifiers:
                edges.add((r, m, CATEGORY_RM))
        for m in rxn.modifiers:
            for p, _ in rxn.products:
                edges.add((m, p, CATEGORY_MP))
    return edges


def brute_force_nts(pred_rxns, ref_rxns):
    pred, ref = brute_force_edges(pred_rxns), brute_force_edges(ref_rxns)
    tp = sum(1 for e in pred if e in ref)
    return prf_from_counts(tp, len(pred) - tp, len(ref) - tp)


def role_reaction(idx, reactants, products, modifiers=()):
    return Reaction(
        id=f"x{idx}",
        reactants=tuple((s, 1.0) for s in reactants),
        products=tuple((s, 1.0) for s in products),
        modifiers=tuple(modifiers),
        kinetic_law=ex.num(1.0),
    )


def universe_models():
    """All reaction sets of size <= 2 over a small role universe on 4 species."""
    pool = []
    idx = 0
    for reactants in (("A",), ("B",), ("A", "B")):
        for products in (("C",), ("D",), ("C", "D")):
            for modifiers in ((), ("A",), ("D",)):
                pool.append(role_reaction(idx, reactants, products, modifiers))
                idx += 1
    models = [()]
    models += [(r,) for r in pool]
    models += list(itertools.combinations(pool, 2))
    return models


SPECIES_ABCD = [simple_species(s, 1.0) for s in "ABCD"]


def as_model(reactions):
    return make_model(reactions=list(reactions), species=SPECIES_ABCD)


class TestEdgeSet:
    def test_enzyme_edges(self, enzyme_model):
        assert edge_set(enzyme_model).edges == {
            ("E", "ES", CATEGORY_RP),
            ("S", "ES", CATEGORY_RP),
            ("ES", "E", CATEGORY_RP),
            ("ES", "P", CATEGORY_RP),
        }

    def test_modifier_edges(self, modifier_model):
        assert edge_set(modifier_model).edges == {
            ("S1", "S2", CATEGORY_RP),
            ("S1", "M", CATEGORY_RM),
            ("M", "S2", CATEGORY_MP),
        }

    def test_zero_reactions_empty(self, enzyme_model):
        assert edge_set(mask_reactions(enzyme_model).partial).edges == frozenset()

    def test_duplicate_reaction_collapses(self):
        one = as_model([role_reaction(0, ("A",), ("C",))])
        two = as_model([role_reaction(0, ("A",), ("C",)), role_reaction(1, ("A",), ("C",))])
        assert edge_set(one) == edge_set(two)


class TestNetworkTopologyScore:
    def test_identity(self, enzyme_model):
        overall, per_cat = network_topology_score(enzyme_model, enzyme_model)
        assert overall == PRF(1.0, 1.0, 1.0)
        assert per_cat[CATEGORY_RP] == PRF(1.0, 1.0, 1.0)

    def test_half_recovered(self, enzyme_model):
        predicted = enzyme_model.with_reactions(enzyme_model.reactions[:1])
        overall, _ = network_topology_score(predicted, enzyme_model)
        assert overall.precision == 1.0
        assert overall.recall == 0.5
        assert overall.f1 == pytest.approx(2 / 3)

    def test_empty_prediction_scores_zero(self, enzyme_model):
        empty = enzyme_model.with_reactions(())
        overall, _ = network_topology_score(empty, enzyme_model)
        assert overall == PRF(0.0, 0.0, 0.0)

    def test_category_separation(self, modifier_model):
        # drop the modifier from the prediction: RP stays perfect, RM/MP vanish
        (rxn,) = modifier_model.reactions
        predicted = modifier_model.with_reactions((
            Reaction(id=rxn.id, reactants=rxn.reactants, products=rxn.products,
                     kinetic_law=rxn.kinetic_law),
        ))
        _, per_cat = network_topology_score(predicted, modifier_model)
        assert per_cat[CATEGORY_RP] == PRF(1.0, 1.0, 1.0)
        assert per_cat[CATEGORY_RM] == PRF(0.0, 0.0, 0.0)
        assert per_cat[CATEGORY_MP] == PRF(0.0, 0.0, 0.0)


class TestReactionMatchingScore:
    def test_identity(self, enzyme_model):
        for flag in (True, False):
            assert reaction_matching_score(enzyme_model, enzyme_model, flag) == PRF(1.0, 1.0, 1.0)

    def test_half_recovered(self, enzyme_model):
        predicted = enzyme_model.with_reactions(enzyme_model.reactions[:1])
        prf = reaction_matching_score(predicted, enzyme_model, True)
        assert prf == PRF(1.0, 0.5, pytest.approx(2 / 3))

    def test_modifier_flag_split(self, modifier_model):
        (rxn,) = modifier_model.reactions
        predicted = modifier_model.with_reactions((
            Reaction(id="guess", reactants=rxn.reactants, products=rxn.products,
                     kinetic_law=rxn.kinetic_law),
        ))
        assert reaction_matching_score(predicted, modifier_model, True) == PRF(0.0, 0.0, 0.0)
        assert reaction_matching_score(predicted, modifier_model, False) == PRF(1.0, 1.0, 1.0)

    def test_duplicate_prediction_cannot_double_claim(self):
        ref = as_model([role_reaction(0, ("A",), ("C",))])
        pred = as_model([role_reaction(1, ("A",), ("C",)), role_reaction(2, ("A",), ("C",))])
        prf = reaction_matching_score(pred, ref, False)
        assert prf.precision == 0.5
        assert prf.recall == 1.0

    def test_stoichiometry_ignored(self):
        ref = as_model([role_reaction(0, ("A",), ("C",))])
        doubled = as_model([Reaction(id="d", reactants=(("A", 2.0),), products=(("C", 1.0),),
                                     kinetic_law=ex.num(1.0))])
        assert reaction_matching_score(doubled, ref, False) == PRF(1.0, 1.0, 1.0)


class TestOracleEquivalence:
    def test_exhaustive_universe(self):
        models = universe_models()
        for pred in models:
            for ref in models:
                for flag in (True, False):
                    fast = reaction_matching_score(as_model(pred), as_model(ref), flag)
                    slow = brute_force_rms(list(pred), list(ref), flag)
                    assert fast == slow, (pred, ref, flag)
                fast_overall, _ = network_topology_score(as_model(pred), as_model(ref))
                assert fast_overall == brute_force_nts(list(pred), list(ref))

    def test_symmetry(self):
        rng = np.random.default_rng(5)
        models = universe_models()
        picks = rng.integers(0, len(models), size=(40, 2))
        for i, j in picks:
            a, b = as_model(models[i]), as_model(models[j])
            for flag in (True, False):
                ab = reaction_matching_score(a, b, flag)
                ba = reaction_matching_score(b, a, flag)
                assert ab.precision == ba.recall
                assert ab.recall == ba.precision
                assert ab.f1 == pytest.approx(ba.f1)
            nts_ab, _ = network_topology_score(a, b)
            nts_ba, _ = network_topology_score(b, a)
            assert nts_ab.precision == nts_ba.recall
            assert nts_ab.f1 == pytest.approx(nts_ba.f1)


class TestSmape:
    def test_identical_is_zero(self):
        values = np.linspace(0, 5, 20)
        assert smape(values, values.copy()) == 0.0

    def test_hand_value(self):
        assert smape(np.array([1.0, 3.0]), np.array([3.0, 1.0])) == 0.5

    def test_zero_zero_contributes_zero(self):
        assert smape(np.array([0.0, 1.0]), np.array([0.0, 1.0])) == 0.0
        assert smape(np.array([0.0, 0.0]), np.array([0.0, 2.0])) == 0.5

    def test_bounded(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            y = rng.uniform(-5, 5, 30)
            z = rng.uniform(-5, 5, 30)
            assert 0.0 <= smape(y, z) <= 1.0


class TestSimulationTrajectoryError:
    def test_identity_is_exactly_zero(self, enzyme_model):
        assert simulation_trajectory_error(enzyme_model, enzyme_model, None, 50.0, 101) == 0.0

    def test_flat_prediction_vs_decay_closed_form(self):
        reference = decay_model()
        partial = mask_reactions(reference).partial
        got = simulation_trajectory_error(partial, reference, None, 5.0, 101)
        times = np.linspace(0.0, 5.0, 101)
        exact = np.exp(-times)
        expected = np.mean(np.abs(exact - 1.0) / (exact + 1.0))
        assert 0.0 < got <= 1.0
        assert got == pytest.approx(expected, abs=1e-6)

    def test_unsimulatable_prediction_scores_one(self, enzyme_model):
        broken = decay_model()
        bad = broken.with_reactions((
            Reaction(id="boom", reactants=(("A", 1.0),), products=(),
                     kinetic_law=ex.call("divide", ex.num(1.0), ex.sym("ghost"))),
        ))
        assert simulation_trajectory_error(bad, decay_model(), None, 1.0, 11) == 1.0

    def test_adding_matching_species_cannot_increase_error(self):
        reference = decay_model()
        partial = mask_reactions(reference).partial
        base = simulation_trajectory_error(partial, reference, None, 5.0, 51)

        from dataclasses import replace
        extra_ref = replace(reference, species=reference.species + (simple_species("Z", 1.0),))
        extra_pred = replace(partial, species=partial.species + (simple_species("Z", 1.0),))
        grown = simulation_trajectory_error(extra_pred, extra_ref, None, 5.0, 51)
        assert grown <= base

    def test_mean_over_conditions(self):
        reference = decay_model()
        conditions = [{}, {"A": 0.0}]
        partial = mask_reactions(reference).partial
        both = simulation_trajectory_error(partial, reference, conditions, 5.0, 51)
        only_first = simulation_trajectory_error(partial, reference, [{}], 5.0, 51)
        only_second = simulation_trajectory_error(partial, reference, [{"A": 0.0}], 5.0, 51)
        assert both == pytest.approx((only_first + only_second) / 2)
        assert only_second == 0.0  # both flat at zero


class TestRobustnessSweep:
    def test_deterministic_given_seed(self, enzyme_model):
        partial = mask_reactions(enzyme_model).partial
        kwargs = dict(noise_levels=[0.0, 1e-7], replicates=3, seed=99,
                      duration=10.0, n_points=31)
        assert robustness_sweep(partial, enzyme_model, **kwargs) == \
               robustness_sweep(partial, enzyme_model, **kwargs)

    def test_level_zero_equals_unperturbed(self, enzyme_model):
        partial = mask_reactions(enzyme_model).partial
        curve = robustness_sweep(partial, enzyme_model, [0.0], 2, 7, 10.0, 31)
        unperturbed = simulation_trajectory_error(partial, enzyme_model, None, 10.0, 31)
        assert curve[0] == (0.0, unperturbed)

    def test_identity_stays_zero_under_noise(self, enzyme_model):
        curve = robustness_sweep(enzyme_model, enzyme_model, [0.0, 1e-7, 1e-6], 2, 3, 10.0, 31)
        assert all(ste == 0.0 for _, ste in curve)

    def test_zero_initial_never_perturbed(self):
        from drylab.metrics import perturbed_condition
        from drylab.simulate import assemble

        system = assemble(decay_model(a0=0.0))
        rng = np.random.Generator(np.random.Philox(key=1))
        condition = perturbed_condition(system, 0.5, rng)
        assert condition == {"A": 0.0}

    def test_negative_level_rejected(self, enzyme_model):
        with pytest.raises(ValueError):
            robustness_sweep(enzyme_model, enzyme_model, [-0.1], 1, 0, 1.0, 11)
