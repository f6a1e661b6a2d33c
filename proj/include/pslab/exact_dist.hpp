#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pslab/tabular_model.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

inline constexpr std::size_t kDefaultSequenceBudget = 10'000'000;

// Enumerated probability table over complete sequences. Support is sorted
// lexicographically and carries the base logprob of each sequence alongside
// the (power) mass.
struct ExactDistribution {
    std::vector<Sequence> support;
    std::vector<double> prob;
    std::vector<double> base_logp;
    double log_z = 0.0;  // log sum_x p(x)^alpha
    double alpha = 1.0;
    std::size_t depth = 0;
    std::size_t vocab = 0;

    std::size_t size() const { return support.size(); }
    // Index of seq in support, or npos.
    std::size_t find(std::span<const TokenId> seq) const;
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

// Exact power distribution Pi_depth over complete sequences: p(x)^alpha,
// globally renormalized. Enumeration walks only positive-probability paths;
// throws budget_error when the support exceeds the budget.
ExactDistribution enumerate_power_distribution(const TokenModel& model, std::size_t depth,
                                               double alpha,
                                               std::size_t budget = kDefaultSequenceBudget);

// Exact distribution of the locally-sharpened chain (each conditional raised
// to alpha and renormalized per position), i.e. what low-temperature
// sampling actually draws from.
ExactDistribution exact_low_temperature_distribution(const TokenModel& model, std::size_t depth,
                                                     double alpha,
                                                     std::size_t budget = kDefaultSequenceBudget);

// (1/2) sum |d1 - d2| over the union of supports.
double tv_distance(const ExactDistribution& d1, const ExactDistribution& d2);

// TV between an empirical sample of complete sequences and an exact table.
// Off-support samples count fully toward the distance.
double tv_to_empirical(const ExactDistribution& exact, const std::vector<Sequence>& samples);

// Autoregressive view of an enumerated table: conditionals are subtree-mass
// ratios, so sampling the returned model reproduces the distribution exactly.
TabularModel to_tabular_model(const ExactDistribution& dist);

// Two-token construction separating the power distribution from
// low-temperature sampling: first token a -> one deterministic completion,
// first token b -> N uniform completions, with masses 1/(1+R) and R/(1+R).
// R is the smallest integer >= 1 with 1/(1+R^alpha) <= eps/2 and N the
// smallest integer with R^alpha / N^(alpha-1) <= eps/2, which forces
// TV(Pi_1, Phi_1) >= 1 - eps.
struct PropA1Construction {
    TabularModel model;
    std::uint64_t r = 0;
    std::uint64_t n = 0;
    double power_first_a = 0.0;    // closed form Pi_1(first token = a)
    double lowtemp_first_a = 0.0;  // closed form Phi_1(first token = a)
    double tv_guarantee = 0.0;     // 1 - eps
};

PropA1Construction prop_a1_construct(double alpha, double eps);

}  // namespace pslab
