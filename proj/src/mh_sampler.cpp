#include "pslab/mh_sampler.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/errors.hpp"
#include "pslab/model_ops.hpp"

namespace pslab {

void StageConfig::validate() const {
    if (block < 1) throw input_error("block size must be >= 1");
    // alpha = 1 targets the base model itself; permitted as the degenerate
    // case so ablation grids can include it.
    if (!(alpha >= 1.0)) throw input_error("power alpha must be >= 1");
}

std::size_t StageConfig::stage_count() const {
    if (depth == 0) return 1;
    return (depth + block - 1) / block;
}

ChainState::ChainState(const TokenModel& base, const TokenModel& proposal)
    : base_(&base), proposal_(&proposal) {
    if (base.vocab_size() != proposal.vocab_size())
        throw input_error("base and proposal models disagree on vocab size");
    scratch_.base_dist.resize(base.vocab_size());
    scratch_.prop_dist.resize(base.vocab_size());
}

void ChainState::extend_to_depth(std::size_t depth, Rng& rng) {
    const std::size_t target_len = depth + 1;
    if (target_len < seq_.size()) throw input_error("a chain cannot shrink");
    auto& bdist = scratch_.base_dist;
    auto& pdist = scratch_.prop_dist;
    while (seq_.size() < target_len) {
        proposal_->next_dist_into(seq_, pdist);
        const auto tok = static_cast<TokenId>(rng.categorical(pdist));
        base_->next_dist_into(seq_, bdist);
        prop_lp_.push_back(log_or_neg_inf(pdist[tok]));
        base_lp_.push_back(log_or_neg_inf(bdist[tok]));
        entropy_.push_back(entropy_of(bdist));
        seq_.push_back(tok);
    }
    cut_weights_valid_ = false;
}

double ChainState::total_base_logp() const {
    double total = 0.0;
    for (double lp : base_lp_) total += lp;
    return total;
}

// Draws the cut and the replacement suffix, fills the scratch arrays, and
// computes the acceptance probability. Does not modify the visible state.
ProposalRecord detail_make_proposal(ChainState& s, const CutLaw& law, double alpha, Rng& rng) {
    const std::size_t len = s.seq_.size();
    if (len == 0) throw input_error("cannot propose from an empty state");

    if (!s.cut_weights_valid_) {
        s.cur_cut_weights_ = law.weights_from_profile(s.entropy_);
        s.cut_weights_valid_ = true;
    }
    const std::size_t m = rng.categorical(s.cur_cut_weights_);

    auto& sc = s.scratch_;
    sc.proposed.assign(s.seq_.begin(), s.seq_.end());
    sc.base_lp.resize(len - m);
    sc.prop_lp.resize(len - m);
    sc.entropy.resize(len - m);

    double new_base_sum = 0.0;
    double new_prop_sum = 0.0;
    for (std::size_t t = m; t < len; ++t) {
        const std::span<const TokenId> prefix(sc.proposed.data(), t);
        s.proposal_->next_dist_into(prefix, sc.prop_dist);
        const auto tok = static_cast<TokenId>(rng.categorical(sc.prop_dist));
        s.base_->next_dist_into(prefix, sc.base_dist);
        sc.proposed[t] = tok;
        const double plp = log_or_neg_inf(sc.prop_dist[tok]);
        const double blp = log_or_neg_inf(sc.base_dist[tok]);
        sc.prop_lp[t - m] = plp;
        sc.base_lp[t - m] = blp;
        sc.entropy[t - m] = entropy_of(sc.base_dist);
        new_prop_sum += plp;
        new_base_sum += blp;
    }

    double old_base_sum = 0.0;
    double old_prop_sum = 0.0;
    double prefix_base_sum = 0.0;
    for (std::size_t t = 0; t < m; ++t) prefix_base_sum += s.base_lp_[t];
    for (std::size_t t = m; t < len; ++t) {
        old_base_sum += s.base_lp_[t];
        old_prop_sum += s.prop_lp_[t];
    }

    // Entropy profile of the proposal; positions < m are untouched because
    // h_t only depends on the prefix before t.
    sc.profile.assign(s.entropy_.begin(), s.entropy_.end());
    std::copy(sc.entropy.begin(), sc.entropy.end(), sc.profile.begin() + m);
    sc.new_weights = law.weights_from_profile(sc.profile);

    ProposalRecord rec;
    rec.cut = m;
    rec.logp_base_old = prefix_base_sum + old_base_sum;
    rec.logp_base_new = prefix_base_sum + new_base_sum;

    bool force_accept = false;
    bool force_reject = false;
    double log_a = 0.0;

    if (new_base_sum == kNegInf && old_base_sum == kNegInf) {
        rec.log_target_ratio = 0.0;  // both states carry zero target mass
    } else if (new_base_sum == kNegInf) {
        rec.log_target_ratio = kNegInf;
        force_reject = true;
    } else if (old_base_sum == kNegInf) {
        rec.log_target_ratio = -kNegInf;
        force_accept = true;
    } else {
        rec.log_target_ratio = alpha * (new_base_sum - old_base_sum);
        log_a += rec.log_target_ratio;
    }

    // Proposal correction: q assigning zero mass to the old suffix makes the
    // ratio +inf, so the move is always taken.
    rec.log_proposal_ratio = old_prop_sum - new_prop_sum;
    if (!force_accept && !force_reject) {
        if (old_prop_sum == kNegInf) {
            force_accept = true;
        } else {
            log_a += rec.log_proposal_ratio;
        }
    }

    const double lam_new = sc.new_weights[m];
    const double lam_cur = s.cur_cut_weights_[m];
    rec.log_cutlaw_ratio = log_or_neg_inf(lam_new) - std::log(lam_cur);
    if (!force_accept && !force_reject) {
        if (lam_new <= 0.0) {
            force_reject = true;  // reverse cut impossible
        } else {
            log_a += rec.log_cutlaw_ratio;
        }
    }

    double a = 0.0;
    if (force_reject) {
        a = 0.0;
    } else if (force_accept) {
        a = 1.0;
    } else {
        a = std::min(1.0, std::exp(log_a));
        if (!(a >= 0.0)) a = 0.0;  // NaN guard
    }
    rec.accept_prob = a;
    return rec;
}

ProposalRecord propose(ChainState& state, const CutLaw& law, double alpha, Rng& rng) {
    ProposalRecord rec = detail_make_proposal(state, law, alpha, rng);
    rec.proposed = state.scratch_.proposed;
    return rec;
}

ProposalRecord mh_step(ChainState& s, const CutLaw& law, double alpha, Rng& rng,
                       bool keep_proposed) {
    ProposalRecord rec = detail_make_proposal(s, law, alpha, rng);
    const std::size_t m = rec.cut;
    const double u = rng.next_double();
    rec.accepted = u < rec.accept_prob;
    if (rec.accepted) {
        auto& sc = s.scratch_;
        std::copy(sc.proposed.begin() + m, sc.proposed.end(), s.seq_.begin() + m);
        std::copy(sc.base_lp.begin(), sc.base_lp.end(), s.base_lp_.begin() + m);
        std::copy(sc.prop_lp.begin(), sc.prop_lp.end(), s.prop_lp_.begin() + m);
        std::copy(sc.entropy.begin(), sc.entropy.end(), s.entropy_.begin() + m);
        // lambda(.; x') was just computed; it is the new state's cut law
        s.cur_cut_weights_.swap(sc.new_weights);
        s.cut_weights_valid_ = true;
    }
    if (keep_proposed) rec.proposed = s.scratch_.proposed;
    rec.seq_hash = sequence_hash(s.seq_);
    return rec;
}

double acceptance_probability(const TokenModel& base, const TokenModel& proposal,
                              const CutLaw& law, double alpha,
                              std::span<const TokenId> current,
                              std::span<const TokenId> proposed, std::size_t m) {
    if (current.size() != proposed.size())
        throw input_error("current and proposed sequences differ in length");
    if (m >= current.size()) throw input_error("cut position out of range");
    for (std::size_t t = 0; t < m; ++t) {
        if (current[t] != proposed[t])
            throw input_error("sequences disagree before the cut position");
    }

    const std::size_t len = current.size();
    const std::size_t vocab = base.vocab_size();
    std::vector<double> dist(vocab);
    double old_base = 0.0, new_base = 0.0, old_prop = 0.0, new_prop = 0.0;
    for (std::size_t t = m; t < len; ++t) {
        base.next_dist_into(current.first(t), dist);
        old_base += log_or_neg_inf(dist[current[t]]);
        base.next_dist_into(proposed.first(t), dist);
        new_base += log_or_neg_inf(dist[proposed[t]]);
        proposal.next_dist_into(current.first(t), dist);
        old_prop += log_or_neg_inf(dist[current[t]]);
        proposal.next_dist_into(proposed.first(t), dist);
        new_prop += log_or_neg_inf(dist[proposed[t]]);
    }
    const double lam_cur = law.weights(base, current)[m];
    const double lam_new = law.weights(base, proposed)[m];
    if (lam_cur <= 0.0)
        throw input_error("cut law assigns zero mass to the realized cut position");
    if (new_prop == kNegInf)
        throw input_error("proposed suffix has zero proposal mass (unreachable move)");

    if (new_base == kNegInf && old_base > kNegInf) return 0.0;
    if (old_base == kNegInf && new_base > kNegInf) return 1.0;
    double log_a = (new_base == kNegInf) ? 0.0 : alpha * (new_base - old_base);
    if (old_prop == kNegInf) return 1.0;
    if (lam_new <= 0.0) return 0.0;
    log_a += old_prop - new_prop;
    log_a += std::log(lam_new) - std::log(lam_cur);
    const double a = std::min(1.0, std::exp(log_a));
    return a >= 0.0 ? a : 0.0;
}

StagewiseResult run_stagewise(const TokenModel& base, const TokenModel& proposal,
                              const CutLaw& law, const StageConfig& config, Rng& rng,
                              const StagewiseOptions& options) {
    config.validate();
    ChainState state(base, proposal);
    StagewiseResult result;
    const std::size_t stages = config.stage_count();
    for (std::size_t k = 1; k <= stages; ++k) {
        const std::size_t target = std::min(k * config.block, config.depth);
        state.extend_to_depth(target, rng);
        if (k == 1 && (!base.exact_logprobs() || !proposal.exact_logprobs()))
            throw capability_error(
                "MH acceptance needs exact sequence logprobs; the model only provides "
                "top-k approximations");
        for (std::size_t n = 1; n <= config.n_mcmc; ++n) {
            ProposalRecord rec =
                mh_step(state, law, config.alpha, rng, options.keep_proposed_sequences);
            rec.stage = k;
            rec.step = n;
            result.total_steps += 1;
            if (rec.accepted) result.accepted_steps += 1;
            if (options.record_trace) result.trace.push_back(std::move(rec));
        }
    }
    result.sequence = state.sequence();
    return result;
}

}  // namespace pslab
