#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "pslab/errors.hpp"
#include "pslab/exact_dist.hpp"
#include "pslab/model_ops.hpp"
#include "pslab/smc.hpp"
#include "pslab/tmc.hpp"

using namespace pslab;
using namespace pslab::testing;

TEST_CASE("effective sample size") {
    const std::vector<double> uniform(8, std::log(0.125));
    CHECK(effective_sample_size(uniform) == 8.0);

    const std::vector<double> one_hot{0.0, kNegInf, kNegInf};
    CHECK(effective_sample_size(one_hot) == 1.0);

    const std::vector<double> half{std::log(0.5), std::log(0.5), kNegInf, kNegInf};
    CHECK(effective_sample_size(half) == doctest::Approx(2.0).epsilon(1e-12));

    const std::vector<double> dead{kNegInf, kNegInf};
    CHECK_THROWS_AS(effective_sample_size(dead), degeneracy_error);
}

TEST_CASE("ESS is N exactly when weights are equal, less otherwise") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t n = 2 + rng.next_u64() % 16;
        const double shift = rng.next_double() * 10 - 5;
        std::vector<double> equal(n, shift);
        CHECK(effective_sample_size(equal) == static_cast<double>(n));
        std::vector<double> skew = equal;
        skew[0] += 0.5;
        const double ess = effective_sample_size(skew);
        CHECK(ess >= 1.0);
        CHECK(ess < static_cast<double>(n));
    }
}

TEST_CASE("systematic resampling: point mass and uniform weights") {
    Rng rng(11);
    const std::vector<double> point{kNegInf, 0.0, kNegInf, kNegInf};
    for (int i = 0; i < 10; ++i) {
        for (std::size_t a : resample_systematic(point, rng)) CHECK(a == 1);
    }
    const std::vector<double> equal(6, -1.0);
    for (int i = 0; i < 10; ++i) {
        auto ancestors = resample_systematic(equal, rng);
        std::vector<int> counts(6, 0);
        for (std::size_t a : ancestors) ++counts[a];
        for (int c : counts) CHECK(c == 1);
    }
}

TEST_CASE("systematic resampling offspring counts for (0.75, 0.25) at N = 4") {
    // weight mass (0.75, 0.25) over four slots: analytically every offset
    // yields offspring counts (3, 1)
    const std::vector<double> w4{std::log(0.75), std::log(0.25), kNegInf, kNegInf};
    for (std::uint64_t seed = 0; seed < 64; ++seed) {
        Rng rng(seed);
        auto ancestors = resample_systematic(w4, rng);
        std::vector<int> counts(4, 0);
        for (std::size_t a : ancestors) ++counts[a];
        CHECK(counts[0] == 3);
        CHECK(counts[1] == 1);
    }
}

TEST_CASE("systematic resampling is unbiased over the offset") {
    // E[offspring_0] = N * w_0 = 4 * 0.55 = 2.2
    const std::vector<double> lw{std::log(0.55), std::log(0.15), std::log(0.15),
                                 std::log(0.15)};
    double mean = 0.0;
    const int trials = 200000;
    Rng rng(17);
    for (int t = 0; t < trials; ++t) {
        const auto ancestors = resample_systematic(lw, rng);
        int count = 0;
        for (std::size_t a : ancestors) count += a == 0 ? 1 : 0;
        mean += count;
    }
    mean /= trials;
    CHECK(std::abs(mean - 2.2) < 0.01);
}

TEST_CASE("SMC with base proposal at alpha 1 never resamples") {
    const TabularModel model = random_tabular_model(3, 4, 300);
    SmcOptions options;
    options.particles = 32;
    options.ess_threshold = 0.5;
    Rng rng(4);
    SmcDiagnostics diag;
    smc_sample(model, model, 1.0, 4, options, rng, &diag);
    CHECK(diag.resample_events == 0);
    CHECK(diag.min_ess == 32.0);

    // output distributed as the base model
    const ExactDistribution base = enumerate_power_distribution(model, 4, 1.0);
    std::vector<Sequence> outs;
    options.particles = 4;
    for (int i = 0; i < 20000; ++i) {
        Rng chain_rng = Rng::substream(12, static_cast<std::uint64_t>(i));
        outs.push_back(smc_sample(model, model, 1.0, 4, options, chain_rng));
    }
    CHECK(tv_to_empirical(base, outs) <= 0.05);
}

TEST_CASE("single-particle SMC is plain proposal sampling") {
    const TabularModel model = random_tabular_model(3, 4, 301);
    const LowTemperatureModel proposal(model, 2.0);
    SmcOptions options;
    options.particles = 1;
    Rng rng_a(9);
    const Sequence via_smc = smc_sample(model, proposal, 2.0, 4, options, rng_a);
    Rng rng_b(9);
    CHECK(via_smc == sample_autoregressive(proposal, 4, rng_b));
}

TEST_CASE("SMC matches the enumerated power distribution") {
    const TabularModel model = random_tabular_model(3, 4, 20260808);
    const LowTemperatureModel lowtemp(model, 2.0);
    const TabularModel proposal = materialize_tabular(lowtemp, 4);
    const ExactDistribution target = enumerate_power_distribution(model, 4, 2.0);
    SmcOptions options;
    options.particles = 256;
    options.ess_threshold = 0.5;
    std::vector<Sequence> outs;
    outs.reserve(10000);
    for (int i = 0; i < 10000; ++i) {
        Rng rng = Rng::substream(77, static_cast<std::uint64_t>(i));
        outs.push_back(smc_sample(model, proposal, 2.0, 4, options, rng));
    }
    CHECK(tv_to_empirical(target, outs) <= 0.05);
}

TEST_CASE("SMC without resampling is exact importance sampling") {
    const TabularModel model = random_tabular_model(2, 3, 911);
    // proposing from the base itself keeps every leaf frequently sampled, so
    // the per-leaf standard errors are meaningful
    const TabularModel& proposal = model;
    const ExactDistribution target = enumerate_power_distribution(model, 3, 2.0);

    SmcOptions options;
    options.particles = 1024;  // self-normalization bias shrinks as 1/N
    options.ess_threshold = 0.0;  // disabled
    const int runs = 100;
    // per-leaf weighted frequency across independent runs
    std::vector<std::vector<double>> estimates(target.size());
    for (int r = 0; r < runs; ++r) {
        Rng rng = Rng::substream(13, static_cast<std::uint64_t>(r));
        SmcDiagnostics diag;
        smc_sample(model, proposal, 2.0, 3, options, rng, &diag);
        CHECK(diag.resample_events == 0);
        std::vector<double> mass(target.size(), 0.0);
        for (std::size_t i = 0; i < diag.final_particles.size(); ++i) {
            const std::size_t idx = target.find(diag.final_particles[i]);
            REQUIRE(idx != ExactDistribution::npos);
            mass[idx] += diag.final_weights[i];
        }
        for (std::size_t idx = 0; idx < target.size(); ++idx)
            estimates[idx].push_back(mass[idx]);
    }
    for (std::size_t idx = 0; idx < target.size(); ++idx) {
        double mean = 0.0;
        for (double x : estimates[idx]) mean += x;
        mean /= runs;
        double var = 0.0;
        for (double x : estimates[idx]) var += (x - mean) * (x - mean);
        var /= (runs - 1);
        const double se = std::sqrt(var / runs);
        CHECK(std::abs(mean - target.prob[idx]) <= 3.0 * se + 1e-9);
    }
}

TEST_CASE("SMC reports degeneracy when every weight dies") {
    TabularModel base(2, 1);
    base.set_row(Sequence{}, std::vector<double>{1.0, 0.0});
    base.set_row(Sequence{0}, std::vector<double>{1.0, 0.0});
    base.set_row(Sequence{1}, std::vector<double>{1.0, 0.0});
    TabularModel proposal(2, 1);
    proposal.set_row(Sequence{}, std::vector<double>{0.0, 1.0});  // always off-support
    proposal.set_row(Sequence{0}, std::vector<double>{1.0, 0.0});
    proposal.set_row(Sequence{1}, std::vector<double>{1.0, 0.0});
    SmcOptions options;
    options.particles = 8;
    Rng rng(3);
    CHECK_THROWS_AS(smc_sample(base, proposal, 2.0, 1, options, rng), degeneracy_error);
}

TEST_CASE("single-candidate TMC is blockwise proposal sampling") {
    const TabularModel model = random_tabular_model(2, 4, 404);
    const LowTemperatureModel proposal(model, 2.0);
    TmcParams params;
    params.block = 2;
    params.candidates = 1;
    params.rollouts = 4;
    Rng rng_a(21);
    const Sequence via_tmc = tmc_sample(model, proposal, 2.0, 4, params, rng_a);
    Rng rng_b(21);
    CHECK(via_tmc == sample_autoregressive(proposal, 4, rng_b));
}

TEST_CASE("TMC lookahead beats plain low-temperature sampling") {
    const TabularModel model = random_tabular_model(2, 4, 20260808);
    const LowTemperatureModel lowtemp(model, 2.0);
    const TabularModel proposal = materialize_tabular(lowtemp, 4);
    const ExactDistribution target = enumerate_power_distribution(model, 4, 2.0);

    TmcParams params;
    params.block = 2;
    params.candidates = 4;
    params.rollouts = 16;

    const int runs = 10000;
    std::vector<Sequence> tmc_outs, lowtemp_outs;
    tmc_outs.reserve(runs);
    lowtemp_outs.reserve(runs);
    for (int i = 0; i < runs; ++i) {
        Rng rng = Rng::substream(31, static_cast<std::uint64_t>(i));
        tmc_outs.push_back(tmc_sample(model, proposal, 2.0, 4, params, rng));
        Rng rng2 = Rng::substream(32, static_cast<std::uint64_t>(i));
        lowtemp_outs.push_back(sample_autoregressive(proposal, 4, rng2));
    }
    const double tv_tmc = tv_to_empirical(target, tmc_outs);
    const double tv_lowtemp = tv_to_empirical(target, lowtemp_outs);
    CHECK(tv_tmc < tv_lowtemp);
}

TEST_CASE("argmax selection is a valid TMC mode") {
    const TabularModel model = random_tabular_model(2, 3, 71);
    TmcParams params;
    params.block = 2;
    params.candidates = 3;
    params.rollouts = 2;
    params.selection = TmcSelection::kArgmax;
    Rng rng(6);
    const Sequence out = tmc_sample(model, 2.0, 3, params, rng);
    CHECK(out.size() == 4);
}
