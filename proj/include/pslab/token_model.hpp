#pragma once

#include <map>
#include <memory>
#include <shared_mutex>
#include <span>
#include <vector>

#include "pslab/types.hpp"

namespace pslab {

// Full next-token probability vector at some prefix.
struct NextTokenDistribution {
    std::vector<double> probs;

    // Shannon entropy in nats, with 0*log(0) := 0.
    double entropy() const;
    // Checks entries are >= 0 and sum to 1 within tol. Throws input_error.
    void validate(double tol = 1e-12) const;
};

double entropy_of(std::span<const double> probs);

// The one contract everything plugs into: prefix of token ids -> full
// next-token distribution. Implementations must be pure (identical vectors
// for identical prefixes) and safe for concurrent read-only queries.
class TokenModel {
  public:
    virtual ~TokenModel() = default;

    virtual std::size_t vocab_size() const = 0;

    // Writes p(. | prefix) into out; out.size() == vocab_size().
    virtual void next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const = 0;

    // False when per-token logprobs are approximations (e.g. a remote model
    // answering in top-k mode). MH acceptance computation refuses such models.
    virtual bool exact_logprobs() const { return true; }

    NextTokenDistribution next_dist(std::span<const TokenId> prefix) const;
};

// p(.|prefix)^alpha with per-position renormalization: the "temperature
// 1/alpha" view of a base model. alpha == 1 passes vectors through bitwise.
class LowTemperatureModel final : public TokenModel {
  public:
    LowTemperatureModel(const TokenModel& base, double alpha);

    std::size_t vocab_size() const override { return base_->vocab_size(); }
    void next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const override;
    bool exact_logprobs() const override { return base_->exact_logprobs(); }

    double alpha() const { return alpha_; }

  private:
    const TokenModel* base_;
    double alpha_;
};

// Prepends a fixed prompt to every query, so samplers condition on it
// without carrying it in their state.
class PromptedModel final : public TokenModel {
  public:
    PromptedModel(const TokenModel& base, Sequence prompt);

    std::size_t vocab_size() const override { return base_->vocab_size(); }
    void next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const override;
    bool exact_logprobs() const override { return base_->exact_logprobs(); }

  private:
    const TokenModel* base_;
    Sequence prompt_;
};

// Transparent memoization of next_dist results, keyed by prefix. Useful in
// front of models with expensive queries (remote backends, repeated
// low-temperature transforms). When the capacity is exceeded the cache is
// dropped wholesale and refills; results are unaffected either way.
class CachedModel final : public TokenModel {
  public:
    CachedModel(const TokenModel& base, std::size_t capacity = 1 << 20);

    std::size_t vocab_size() const override { return base_->vocab_size(); }
    void next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const override;
    bool exact_logprobs() const override { return base_->exact_logprobs(); }

  private:
    const TokenModel* base_;
    std::size_t capacity_;
    mutable std::shared_mutex mutex_;
    mutable std::map<Sequence, std::vector<double>> cache_;
};

}  // namespace pslab
