#pragma once

#include <string>

#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

enum class TmcSelection { kSoftmax, kArgmax };

TmcSelection tmc_selection_from_string(const std::string& name);

struct TmcParams {
    std::size_t block = 192;    // tokens per block (B)
    std::size_t candidates = 8; // candidate extensions per block (K)
    std::size_t rollouts = 8;   // look-ahead rollouts per candidate (M)
    TmcSelection selection = TmcSelection::kSoftmax;

    void validate() const;
};

// Twisted blockwise sampler: at each block boundary, K candidate extensions
// are drawn from the low-temperature proposal; each candidate's twist is the
// log-mean-exp over M proposal rollouts of alpha * log p(rollout), rollout
// length min(B, tokens remaining). One candidate is kept by softmax (or
// argmax) of alpha*log p(block) + twist - log q(block). The final block has
// no look-ahead, so selection there is by the exact importance weight.
Sequence tmc_sample(const TokenModel& base, const TokenModel& proposal, double alpha,
                    std::size_t depth, const TmcParams& params, Rng& rng);

// Convenience overload that builds the low-temperature proposal internally.
Sequence tmc_sample(const TokenModel& base, double alpha, std::size_t depth,
                    const TmcParams& params, Rng& rng);

}  // namespace pslab
