#include "pslab/tmc.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/errors.hpp"
#include "pslab/token_model.hpp"

namespace pslab {

TmcSelection tmc_selection_from_string(const std::string& name) {
    if (name == "softmax") return TmcSelection::kSoftmax;
    if (name == "argmax") return TmcSelection::kArgmax;
    throw input_error("unknown TMC selection rule: " + name);
}

void TmcParams::validate() const {
    if (block < 1 || candidates < 1 || rollouts < 1)
        throw input_error("TMC parameters must all be >= 1");
}

Sequence tmc_sample(const TokenModel& base, const TokenModel& proposal, double alpha,
                    std::size_t depth, const TmcParams& params, Rng& rng) {
    params.validate();
    if (base.vocab_size() != proposal.vocab_size())
        throw input_error("base and proposal models disagree on vocab size");
    const std::size_t vocab = base.vocab_size();
    std::vector<double> bdist(vocab), pdist(vocab);

    // extends prefix by `count` proposal draws, accumulating base/proposal
    // block logprobs
    auto draw_block = [&](Sequence& prefix, std::size_t count, double& lp_base,
                          double& lp_prop) {
        for (std::size_t s = 0; s < count; ++s) {
            proposal.next_dist_into(prefix, pdist);
            const auto tok = static_cast<TokenId>(rng.categorical(pdist));
            base.next_dist_into(prefix, bdist);
            lp_prop += std::log(pdist[tok]);
            lp_base += log_or_neg_inf(bdist[tok]);
            prefix.push_back(tok);
        }
    };

    Sequence prefix;
    std::size_t remaining = depth + 1;

    // K = 1 makes selection vacuous: plain blockwise proposal sampling.
    if (params.candidates == 1) {
        double b = 0, p = 0;
        draw_block(prefix, remaining, b, p);
        return prefix;
    }

    while (remaining > 0) {
        const std::size_t blk = std::min(params.block, remaining);
        const std::size_t after = remaining - blk;
        const std::size_t rollout_len = std::min(params.block, after);

        std::vector<Sequence> candidates(params.candidates);
        std::vector<double> scores(params.candidates);
        for (std::size_t c = 0; c < params.candidates; ++c) {
            candidates[c] = prefix;
            double lp_base = 0.0, lp_prop = 0.0;
            draw_block(candidates[c], blk, lp_base, lp_prop);

            // Twist: log-mean-exp over rollouts of alpha * log p(rollout),
            // zero for the final block (nothing left to look ahead into).
            double twist = 0.0;
            if (rollout_len > 0) {
                std::vector<double> rollout_scores(params.rollouts);
                Sequence rollout;
                for (std::size_t r = 0; r < params.rollouts; ++r) {
                    rollout = candidates[c];
                    double rb = 0.0, rp = 0.0;
                    draw_block(rollout, rollout_len, rb, rp);
                    rollout_scores[r] = alpha * rb;
                }
                twist = log_sum_exp(rollout_scores) -
                        std::log(static_cast<double>(params.rollouts));
            }
            scores[c] = alpha * lp_base + twist - lp_prop;
        }

        std::size_t pick = 0;
        if (params.selection == TmcSelection::kArgmax) {
            pick = static_cast<std::size_t>(
                std::max_element(scores.begin(), scores.end()) - scores.begin());
        } else {
            double hi = *std::max_element(scores.begin(), scores.end());
            if (hi == kNegInf)
                throw degeneracy_error("every TMC candidate has zero twisted weight");
            std::vector<double> w(scores.size());
            for (std::size_t c = 0; c < scores.size(); ++c)
                w[c] = std::exp(scores[c] - hi);
            pick = rng.categorical(w);
        }
        prefix = std::move(candidates[pick]);
        remaining = after;
    }
    return prefix;
}

Sequence tmc_sample(const TokenModel& base, double alpha, std::size_t depth,
                    const TmcParams& params, Rng& rng) {
    LowTemperatureModel proposal(base, alpha);
    return tmc_sample(base, proposal, alpha, depth, params, rng);
}

}  // namespace pslab
