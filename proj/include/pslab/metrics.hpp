#pragma once

#include <span>
#include <string>
#include <vector>

#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

// Unbiased pass@k from n attempts with c correct: 1 - C(n-c,k)/C(n,k).
// Exact integer binomials for n <= 62, log-gamma beyond. Throws input_error
// when c > n or k is outside [1, n].
double pass_at_k(std::size_t n, std::size_t c, std::size_t k);

// Token-level Levenshtein distance.
std::size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b);

// Mean pairwise Levenshtein over unordered pairs, divided by the mean suffix
// length; 0 when every suffix is empty. Needs >= 2 suffixes.
double normalized_edit_distance(const std::vector<Sequence>& suffixes);

// |unique answers| / |answers|; needs >= 1 answer.
double distinct_answer_fraction(std::span<const TokenId> answers);

// Resampling sensitivity probe: one completion, its entropy-jump profile,
// cut_count cut positions from the top decile of jump values and cut_count
// from the bottom decile, `resamples` suffix redraws per position from the
// base model. The "answer" of a synthetic trace is its final token.
struct DecileGroup {
    std::vector<std::size_t> positions;
    std::vector<double> edit_distance;     // per position
    std::vector<double> distinct_fraction; // per position
    double mean_edit = 0.0;
    double mean_distinct = 0.0;
};

struct DecileReport {
    Sequence completion;
    DecileGroup top;
    DecileGroup bottom;
    // "top_dominates" when both top-group means strictly exceed the bottom's;
    // "degenerate" when nothing varies; "not_separated" otherwise.
    std::string verdict;
    bool approximate_model = false;  // entropies were lower-bound estimates
};

DecileReport decile_resample_experiment(const TokenModel& model, std::size_t depth,
                                        std::size_t cut_count, std::size_t resamples, Rng& rng);

}  // namespace pslab
