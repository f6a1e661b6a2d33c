#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "pslab/cut_laws.hpp"
#include "pslab/errors.hpp"
#include "pslab/model_ops.hpp"
#include "pslab/reasoning_tree.hpp"

using namespace pslab;
using namespace pslab::testing;

TEST_CASE("uniform cut weights split evenly") {
    CHECK(uniform_cut_weights(4) == std::vector<double>{0.25, 0.25, 0.25, 0.25});
    CHECK(uniform_cut_weights(1) == std::vector<double>{1.0});
    CHECK_THROWS_AS(uniform_cut_weights(0), input_error);
}

TEST_CASE("uniform cut weights ignore sequence content") {
    const TabularModel model = random_tabular_model(3, 3, 10);
    const UniformCutLaw law;
    const auto a = law.weights(model, Sequence{0, 1, 2, 0});
    const auto b = law.weights(model, Sequence{2, 2, 2, 2});
    CHECK(a == b);
}

TEST_CASE("entropy-cut weights follow the jump profile") {
    // profile chosen so the jumps are (0, 1, 2)
    const std::vector<double> profile{0.0, 1.0, 3.0};
    EntropyCutParams params;
    params.beta = 2.0;
    const EntropyCutLaw law(params);
    const auto w = law.weights_from_profile(profile);
    REQUIRE(w.size() == 3);
    CHECK(w[0] == 0.0);
    CHECK(w[1] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(w[2] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("all-zero jumps fall back to uniform") {
    const std::vector<double> flat{0.7, 0.7, 0.7, 0.2};  // D0 = 0.7 though!
    EntropyCutParams params;
    params.beta = 3.0;
    const EntropyCutLaw law(params);
    const auto w = law.weights_from_profile(flat);
    CHECK(w[0] == 1.0);  // only D0 is positive

    const std::vector<double> zero{0.0, 0.0, 0.0};
    const auto u = law.weights_from_profile(zero);
    CHECK(u == uniform_cut_weights(3));
}

TEST_CASE("beta = 0 reproduces the uniform law bitwise") {
    const TabularModel model = random_tabular_model(4, 4, 77);
    EntropyCutParams params;
    params.beta = 0.0;
    const EntropyCutLaw entropy_law(params);
    const UniformCutLaw uniform_law;
    Rng rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        Sequence seq = sample_autoregressive(model, 4, rng);
        const auto a = entropy_law.weights(model, seq);
        const auto b = uniform_law.weights(model, seq);
        REQUIRE(a.size() == b.size());
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }
}

TEST_CASE("the epsilon floor keeps every position reachable") {
    const std::vector<double> profile{0.0, 2.0, 2.0, 2.0};  // one positive jump
    EntropyCutParams params;
    params.beta = 4.0;
    params.epsilon = 0.01;
    const EntropyCutLaw law(params);
    const auto w = law.weights_from_profile(profile);
    const double floor_bound = 0.01 / (std::pow(2.0, 4.0) + 4 * 0.01);
    for (double x : w) CHECK(x >= floor_bound - 1e-15);
    double sum = 0.0;
    for (double x : w) sum += x;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("entropy-cut on a symmetric tree puts 1/k on each branch depth") {
    SymmetricTreeSpec spec;
    spec.depth = 12;
    spec.branch_depths = {3, 7, 11};
    spec.branching = {2, 4, 2};
    Rng rng(8);
    const ReasoningTree tree = ReasoningTree::build_symmetric(spec, rng);
    const TreeModel model = tree.model();
    EntropyCutParams params;
    params.beta = 4.0;
    const EntropyCutLaw law(params);
    const auto w = law.weights(model, tree.leaf_sequence(5));
    double total = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) {
        total += w[m];
        const bool branch = m == 3 || m == 7 || m == 11;
        if (!branch) CHECK(w[m] == 0.0);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    // equal d keeps the mass exactly 1/k; unequal d shifts it toward the
    // larger jump, so only the equal pair is checked for 1/k here
    CHECK(w[3] == doctest::Approx(w[11]).epsilon(1e-12));
    SymmetricTreeSpec equal = spec;
    equal.branching = {3, 3, 3};
    Rng rng2(8);
    const ReasoningTree tree2 = ReasoningTree::build_symmetric(equal, rng2);
    const auto w2 = law.weights(tree2.model(), tree2.leaf_sequence(0));
    for (std::size_t m : spec.branch_depths)
        CHECK(w2[m] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("sample_cut follows the weights") {
    Rng rng(99);
    const std::vector<double> point{0.0, 1.0, 0.0};
    for (int i = 0; i < 10; ++i) CHECK(sample_cut(point, rng) == 1);

    const std::vector<double> skewed{0.2, 0.8};
    int hits = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        if (sample_cut(skewed, rng) == 1) ++hits;
    }
    CHECK(std::abs(static_cast<double>(hits) / draws - 0.8) < 0.01);

    const auto u = uniform_cut_weights(4);
    std::vector<int> counts(4, 0);
    for (int i = 0; i < draws; ++i) ++counts[sample_cut(u, rng)];
    for (int c : counts) CHECK(std::abs(static_cast<double>(c) / draws - 0.25) < 0.01);
}
