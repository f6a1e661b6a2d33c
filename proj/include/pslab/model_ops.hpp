#pragma once

#include <span>
#include <vector>

#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

// sum_t log p(x_t | x_{<t}); -inf when any conditional is zero; 0 for the
// empty sequence.
double seq_logprob(const TokenModel& model, std::span<const TokenId> seq);

// h_t = entropy of p(. | x_{<t}) in nats, one entry per position t = 0..l.
std::vector<double> entropy_profile(const TokenModel& model, std::span<const TokenId> seq);

// Positive entropy jumps: D_t = max{0, h_t - h_{t-1}} for t >= 1, and
// D_0 := h_0 so a cut law can put mass on redrawing the whole continuation.
std::vector<double> entropy_jumps(std::span<const double> profile);

// Mean of sum_v p log p over positions = minus the mean entropy; always <= 0.
double avg_confidence(const TokenModel& model, std::span<const TokenId> seq);

// Draws x_t ~ p(. | x_{<t}) for t = 0..depth; returns depth+1 tokens using
// exactly depth+1 model queries.
Sequence sample_autoregressive(const TokenModel& model, std::size_t depth, Rng& rng);

}  // namespace pslab
