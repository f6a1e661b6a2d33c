#pragma once

#include <span>
#include <vector>

#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

// (sum w)^2 / sum w^2 on the normalized weights; in [1, N], N iff all equal.
// Throws degeneracy_error when every log-weight is -inf.
double effective_sample_size(std::span<const double> log_weights);

// Systematic resampling with a single uniform offset: expected offspring of
// particle i is exactly N * w_i and realized counts differ from it by < 1.
std::vector<std::size_t> resample_systematic(std::span<const double> log_weights, Rng& rng);

struct SmcOptions {
    std::size_t particles = 64;   // N >= 1
    double ess_threshold = 0.5;   // resample when ESS/N < threshold; 0 disables

    void validate() const;
};

struct SmcDiagnostics {
    std::size_t resample_events = 0;
    double min_ess = 0.0;
    // normalized final weights and particles, for weighted estimates
    std::vector<double> final_weights;
    std::vector<Sequence> final_particles;
};

// Particle system targeting the power distribution: every particle extends
// one token per position from the proposal, weights pick up
// alpha*log p(x_t|.) - log q(x_t|.), and systematic resampling fires when
// ESS/N drops below the threshold. Returns one particle drawn by the final
// normalized weights.
Sequence smc_sample(const TokenModel& base, const TokenModel& proposal, double alpha,
                    std::size_t depth, const SmcOptions& options, Rng& rng,
                    SmcDiagnostics* diagnostics = nullptr);

}  // namespace pslab
