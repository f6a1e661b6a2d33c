#include "pslab/cut_laws.hpp"

#include "pslab/errors.hpp"
#include "pslab/model_ops.hpp"

namespace pslab {

void EntropyCutParams::validate() const {
    if (!(beta >= 0.0)) throw input_error("cut power beta must be >= 0");
    if (!(epsilon >= 0.0)) throw input_error("cut floor epsilon must be >= 0");
}

std::vector<double> uniform_cut_weights(std::size_t positions) {
    if (positions == 0) throw input_error("cut weights need at least one position");
    return std::vector<double>(positions, 1.0 / static_cast<double>(positions));
}

std::vector<double> CutLaw::weights(const TokenModel& base, std::span<const TokenId> seq) const {
    return weights_from_profile(entropy_profile(base, seq));
}

std::vector<double> UniformCutLaw::weights_from_profile(std::span<const double> profile) const {
    return uniform_cut_weights(profile.size());
}

EntropyCutLaw::EntropyCutLaw(EntropyCutParams params) : params_(params) { params_.validate(); }

std::vector<double> EntropyCutLaw::weights_from_profile(std::span<const double> profile) const {
    if (profile.empty()) throw input_error("cut weights need at least one position");
    // beta = 0 means every D^beta is 1 (0^0 := 1): reproduce the uniform law
    // exactly rather than through a normalize round-trip.
    if (params_.beta == 0.0) return uniform_cut_weights(profile.size());
    std::vector<double> w(profile.size());
    double prev = 0.0;
    double total = 0.0;
    for (std::size_t t = 0; t < profile.size(); ++t) {
        const double jump = t == 0 ? profile[0] : std::max(0.0, profile[t] - prev);
        prev = profile[t];
        w[t] = pow_nonneg(jump, params_.beta) + params_.epsilon;
        total += w[t];
    }
    if (total <= 0.0) return uniform_cut_weights(profile.size());
    for (double& x : w) x /= total;
    return w;
}

std::vector<double> entropy_cut_weights(const TokenModel& base, std::span<const TokenId> seq,
                                        const EntropyCutParams& params) {
    return EntropyCutLaw(params).weights(base, seq);
}

std::size_t sample_cut(std::span<const double> weights, Rng& rng) {
    return rng.categorical(weights);
}

}  // namespace pslab
