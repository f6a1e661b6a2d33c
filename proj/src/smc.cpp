#include "pslab/smc.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/errors.hpp"

namespace pslab {

void SmcOptions::validate() const {
    if (particles < 1) throw input_error("SMC needs at least one particle");
    if (!(ess_threshold >= 0.0 && ess_threshold <= 1.0))
        throw input_error("ess_threshold must lie in [0, 1]");
}

namespace {

// exp(lw - max) into out; returns false when every weight is -inf.
bool shifted_weights(std::span<const double> log_weights, std::vector<double>& out) {
    double hi = kNegInf;
    for (double lw : log_weights) hi = std::max(hi, lw);
    if (hi == kNegInf) return false;
    out.resize(log_weights.size());
    for (std::size_t i = 0; i < log_weights.size(); ++i)
        out[i] = std::exp(log_weights[i] - hi);
    return true;
}

}  // namespace

double effective_sample_size(std::span<const double> log_weights) {
    if (log_weights.empty()) throw input_error("ESS of an empty weight vector");
    std::vector<double> w;
    if (!shifted_weights(log_weights, w))
        throw degeneracy_error("every particle weight is zero");
    double sum = 0.0, sum_sq = 0.0;
    for (double x : w) {
        sum += x;
        sum_sq += x * x;
    }
    return sum * sum / sum_sq;
}

std::vector<std::size_t> resample_systematic(std::span<const double> log_weights, Rng& rng) {
    const std::size_t n = log_weights.size();
    if (n == 0) throw input_error("resampling an empty particle set");
    std::vector<double> w;
    if (!shifted_weights(log_weights, w))
        throw degeneracy_error("every particle weight is zero");
    double total = 0.0;
    for (double x : w) total += x;

    std::vector<std::size_t> ancestors(n);
    const double offset = rng.next_double();  // single uniform offset
    double cumulative = w[0];
    std::size_t i = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double point = (static_cast<double>(k) + offset) / static_cast<double>(n) * total;
        while (cumulative < point && i + 1 < n) {
            ++i;
            cumulative += w[i];
        }
        ancestors[k] = i;
    }
    return ancestors;
}

Sequence smc_sample(const TokenModel& base, const TokenModel& proposal, double alpha,
                    std::size_t depth, const SmcOptions& options, Rng& rng,
                    SmcDiagnostics* diagnostics) {
    options.validate();
    if (base.vocab_size() != proposal.vocab_size())
        throw input_error("base and proposal models disagree on vocab size");
    const std::size_t n = options.particles;
    const std::size_t vocab = base.vocab_size();

    std::vector<Sequence> particles(n);
    for (auto& p : particles) p.reserve(depth + 1);
    std::vector<double> log_w(n, 0.0);
    std::vector<double> bdist(vocab), pdist(vocab);
    double min_ess = static_cast<double>(n);
    std::size_t resample_events = 0;

    for (std::size_t t = 0; t <= depth; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            if (log_w[i] == kNegInf) {
                // dead particle: still grows so lengths stay equal
                proposal.next_dist_into(particles[i], pdist);
                particles[i].push_back(static_cast<TokenId>(rng.categorical(pdist)));
                continue;
            }
            proposal.next_dist_into(particles[i], pdist);
            const auto tok = static_cast<TokenId>(rng.categorical(pdist));
            base.next_dist_into(particles[i], bdist);
            log_w[i] += alpha * log_or_neg_inf(bdist[tok]) - std::log(pdist[tok]);
            particles[i].push_back(tok);
        }
        bool any_alive = false;
        for (double lw : log_w) any_alive = any_alive || lw > kNegInf;
        if (!any_alive)
            throw degeneracy_error("all SMC weights vanished at position " + std::to_string(t));
        const double ess = effective_sample_size(log_w);
        min_ess = std::min(min_ess, ess);
        if (options.ess_threshold > 0.0 &&
            ess < options.ess_threshold * static_cast<double>(n)) {
            const auto ancestors = resample_systematic(log_w, rng);
            std::vector<Sequence> next(n);
            for (std::size_t i = 0; i < n; ++i) next[i] = particles[ancestors[i]];
            particles.swap(next);
            std::fill(log_w.begin(), log_w.end(), 0.0);
            ++resample_events;
        }
    }

    std::vector<double> w;
    shifted_weights(log_w, w);
    const std::size_t pick = rng.categorical(w);

    if (diagnostics != nullptr) {
        diagnostics->resample_events = resample_events;
        diagnostics->min_ess = min_ess;
        double total = 0.0;
        for (double x : w) total += x;
        diagnostics->final_weights.resize(n);
        for (std::size_t i = 0; i < n; ++i) diagnostics->final_weights[i] = w[i] / total;
        diagnostics->final_particles = particles;
    }
    return particles[pick];
}

}  // namespace pslab
