#include "pslab/token_model.hpp"

#include <cmath>
#include <mutex>

#include "pslab/errors.hpp"

namespace pslab {

double entropy_of(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return h < 0.0 ? 0.0 : h;  // clamp -0.0 and rounding dust
}

double NextTokenDistribution::entropy() const { return entropy_of(probs); }

void NextTokenDistribution::validate(double tol) const {
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw input_error("next-token distribution has a negative entry");
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol)
        throw input_error("next-token distribution sums to " + std::to_string(sum));
}

NextTokenDistribution TokenModel::next_dist(std::span<const TokenId> prefix) const {
    NextTokenDistribution dist;
    dist.probs.resize(vocab_size());
    next_dist_into(prefix, dist.probs);
    return dist;
}

LowTemperatureModel::LowTemperatureModel(const TokenModel& base, double alpha)
    : base_(&base), alpha_(alpha) {
    if (!(alpha > 0.0)) throw input_error("low-temperature model needs alpha > 0");
}

void LowTemperatureModel::next_dist_into(std::span<const TokenId> prefix,
                                         std::span<double> out) const {
    base_->next_dist_into(prefix, out);
    if (alpha_ == 1.0) return;  // identity, bitwise
    double sum = 0.0;
    for (double& p : out) {
        p = pow_nonneg(p, alpha_);
        sum += p;
    }
    if (!(sum > 0.0)) throw input_error("low-temperature transform produced an all-zero row");
    for (double& p : out) p /= sum;
}

PromptedModel::PromptedModel(const TokenModel& base, Sequence prompt)
    : base_(&base), prompt_(std::move(prompt)) {}

void PromptedModel::next_dist_into(std::span<const TokenId> prefix,
                                   std::span<double> out) const {
    Sequence full = prompt_;
    full.insert(full.end(), prefix.begin(), prefix.end());
    base_->next_dist_into(full, out);
}

CachedModel::CachedModel(const TokenModel& base, std::size_t capacity)
    : base_(&base), capacity_(capacity == 0 ? 1 : capacity) {}

void CachedModel::next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const {
    Sequence key(prefix.begin(), prefix.end());
    {
        std::shared_lock lock(mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            std::copy(it->second.begin(), it->second.end(), out.begin());
            return;
        }
    }
    base_->next_dist_into(prefix, out);
    std::unique_lock lock(mutex_);
    if (cache_.size() >= capacity_) cache_.clear();
    cache_.emplace(std::move(key), std::vector<double>(out.begin(), out.end()));
}

}  // namespace pslab
