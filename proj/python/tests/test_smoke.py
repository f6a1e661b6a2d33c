"""Smoke tests for the python module: build models, run samplers, query oracles."""

import math

import pytest

import pslab


def test_tabular_model_roundtrip(tmp_path):
    model = pslab.TabularModel.random(3, 4, seed=7)
    assert model.vocab_size == 3
    assert model.max_depth == 4
    row = model.next_dist([])
    assert len(row) == 3
    assert abs(sum(row) - 1.0) < 1e-12

    path = tmp_path / "model.json"
    model.save(str(path))
    reloaded = pslab.TabularModel.load(str(path))
    assert reloaded.next_dist([0, 1]) == model.next_dist([0, 1])


def test_entropy_and_confidence():
    model = pslab.TabularModel.random(4, 3, seed=11)
    seq = pslab.sample_autoregressive(model, depth=3, seed=5)
    assert len(seq) == 4
    profile = pslab.entropy_profile(model, seq)
    jumps = pslab.entropy_jumps(profile)
    assert len(profile) == len(jumps) == 4
    assert jumps[0] == profile[0]
    assert pslab.avg_confidence(model, seq) == pytest.approx(-sum(profile) / len(profile))


def test_tree_structure_and_cut_law():
    tree = pslab.build_symmetric_tree(depth=8, branch_depths=[2, 5], branching=[2, 2])
    assert tree.leaf_count == 4
    path = tree.leaf_sequence(3)
    kinds = tree.classify_positions(path)
    assert [i for i, k in enumerate(kinds) if k == "branch"] == [2, 5]
    assert tree.sequence_to_path(path) == [2, 2]

    weights = pslab.entropy_cut_weights(tree.model(), path, beta=4.0)
    assert weights[2] == pytest.approx(0.5)
    assert weights[5] == pytest.approx(0.5)
    assert sum(weights) == pytest.approx(1.0)


def test_entropy_cut_mh_matches_oracle():
    model = pslab.TabularModel.random(3, 4, seed=31337)
    proposal = pslab.materialize_tabular(pslab.low_temperature_model(model, 2.0), 4)
    target = pslab.enumerate_power_distribution(model, depth=4, alpha=2.0)

    finals = [
        pslab.run_stagewise(model, proposal, law="entropy-cut", alpha=2.0, depth=4,
                            block=4, n_mcmc=50, seed=seed)["sequence"]
        for seed in range(3000)
    ]
    assert pslab.tv_to_empirical(target, finals) < 0.1


def test_kernel_theory_queries():
    tree = pslab.build_symmetric_tree(depth=16, branch_depths=[2, 8, 12],
                                      branching=[2, 2, 2])
    model = tree.model()
    kernel_ec = pslab.exact_mh_kernel(model, model, "entropy-cut", alpha=4.0, depth=16)
    kernel_unif = pslab.exact_mh_kernel(model, model, "uniform", alpha=4.0, depth=16)
    assert kernel_ec.stationarity_gap() < 1e-10
    assert kernel_ec.detailed_balance_gap() < 1e-10

    ok_ec, tau_ec = pslab.mixing_time(kernel_ec, eps=0.25)
    ok_unif, tau_unif = pslab.mixing_time(kernel_unif, eps=0.25)
    assert ok_ec and ok_unif
    assert tau_ec <= tau_unif

    subset = pslab.first_branch_set(tree, kernel_ec, 4.0)
    assert pslab.conductance(kernel_ec, subset) >= 1.0 / 6.0 - 1e-12
    assert pslab.m1_constant(tree, model, 4.0) == pytest.approx(1.0)


def test_baselines_and_metrics():
    model = pslab.TabularModel.random(2, 3, seed=4)
    seq = pslab.smc_sample(model, model, alpha=2.0, depth=3, particles=16, seed=1)
    assert len(seq) == 4
    seq2 = pslab.tmc_sample(model, alpha=2.0, depth=3, block=2, candidates=3,
                            rollouts=4, seed=1)
    assert len(seq2) == 4

    assert pslab.pass_at_k(5, 1, 2) == pytest.approx(0.4)
    assert pslab.levenshtein([0, 1], [0, 0]) == 1
    assert pslab.effective_sample_size([math.log(0.25)] * 4) == pytest.approx(4.0)

    construction = pslab.prop_a1_construct(2.0, 0.1)
    assert construction["R"] == 5
    assert construction["N"] == 500


def test_decile_experiment_direction():
    tree = pslab.build_symmetric_tree(depth=40, branch_depths=[20, 28], branching=[4, 4],
                                      labeling="answer")
    report = pslab.decile_resample_experiment(tree.model(), depth=40, cut_count=2,
                                              resamples=16, seed=3)
    assert report["verdict"] == "top_dominates"
    assert report["top_edit"] > report["bottom_edit"]


def test_input_errors_surface_as_value_errors():
    with pytest.raises(ValueError):
        pslab.pass_at_k(4, 5, 1)
    with pytest.raises(ValueError):
        pslab.build_symmetric_tree(depth=4, branch_depths=[0], branching=[2])
