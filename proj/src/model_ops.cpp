#include "pslab/model_ops.hpp"

#include <cmath>

#include "pslab/errors.hpp"

namespace pslab {

double seq_logprob(const TokenModel& model, std::span<const TokenId> seq) {
    const std::size_t vocab = model.vocab_size();
    std::vector<double> dist(vocab);
    double total = 0.0;
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (seq[t] >= vocab)
            throw input_error("token id out of range: " + std::to_string(seq[t]));
        model.next_dist_into(seq.first(t), dist);
        total += log_or_neg_inf(dist[seq[t]]);
    }
    return total;
}

std::vector<double> entropy_profile(const TokenModel& model, std::span<const TokenId> seq) {
    const std::size_t vocab = model.vocab_size();
    std::vector<double> dist(vocab);
    std::vector<double> profile(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t) {
        if (seq[t] >= vocab)
            throw input_error("token id out of range: " + std::to_string(seq[t]));
        model.next_dist_into(seq.first(t), dist);
        profile[t] = entropy_of(dist);
    }
    return profile;
}

std::vector<double> entropy_jumps(std::span<const double> profile) {
    if (profile.empty()) throw input_error("entropy_jumps needs a non-empty profile");
    std::vector<double> jumps(profile.size());
    jumps[0] = profile[0];
    for (std::size_t t = 1; t < profile.size(); ++t) {
        jumps[t] = std::max(0.0, profile[t] - profile[t - 1]);
    }
    return jumps;
}

double avg_confidence(const TokenModel& model, std::span<const TokenId> seq) {
    const auto profile = entropy_profile(model, seq);
    if (profile.empty()) return 0.0;
    double mean = 0.0;
    for (double h : profile) mean += h;
    mean /= static_cast<double>(profile.size());
    return -mean;
}

Sequence sample_autoregressive(const TokenModel& model, std::size_t depth, Rng& rng) {
    const std::size_t vocab = model.vocab_size();
    std::vector<double> dist(vocab);
    Sequence seq;
    seq.reserve(depth + 1);
    for (std::size_t t = 0; t <= depth; ++t) {
        model.next_dist_into(seq, dist);
        seq.push_back(static_cast<TokenId>(rng.categorical(dist)));
    }
    return seq;
}

}  // namespace pslab
