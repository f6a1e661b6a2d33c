#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pslab/cut_laws.hpp"
#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

struct StageConfig {
    std::size_t depth = 0;   // T: final sequences are x_{0:T}
    std::size_t block = 1;   // B >= 1
    std::size_t n_mcmc = 10; // MH steps per stage
    double alpha = 4.0;      // sharpening power, > 1

    void validate() const;
    std::size_t stage_count() const;  // K = ceil(T/B), at least 1
};

// One MH proposal and its fate. Log-ratio components are the three factors
// of the acceptance probability before the min with 1.
struct ProposalRecord {
    std::size_t stage = 0;
    std::size_t step = 0;
    std::size_t cut = 0;              // m
    Sequence proposed;                // kept only when requested
    double accept_prob = 0.0;         // A_m in [0, 1]
    bool accepted = false;
    double log_target_ratio = 0.0;    // alpha * (log p(x') - log p(x))
    double log_cutlaw_ratio = 0.0;    // log lambda(m;x') - log lambda(m;x)
    double log_proposal_ratio = 0.0;  // log q(old suffix) - log q(new suffix)
    double logp_base_old = 0.0;       // full-sequence base logprob before
    double logp_base_new = 0.0;       // ... of the proposal
    std::uint64_t seq_hash = 0;       // hash of the post-step state
};

// Current sequence of one chain plus caches: per-position base/proposal
// logprobs and the base entropy profile. Caches are refreshed from the cut
// position on acceptance only.
class ChainState {
  public:
    ChainState(const TokenModel& base, const TokenModel& proposal);

    // Stage extension: appends proposal-model draws until the sequence is
    // x_{0:depth}.
    void extend_to_depth(std::size_t depth, Rng& rng);

    const Sequence& sequence() const { return seq_; }
    std::size_t length() const { return seq_.size(); }
    std::span<const double> base_logp() const { return base_lp_; }
    std::span<const double> prop_logp() const { return prop_lp_; }
    std::span<const double> entropy() const { return entropy_; }
    double total_base_logp() const;

    const TokenModel& base_model() const { return *base_; }
    const TokenModel& proposal_model() const { return *proposal_; }

  private:
    const TokenModel* base_;
    const TokenModel* proposal_;
    Sequence seq_;
    std::vector<double> base_lp_;
    std::vector<double> prop_lp_;
    std::vector<double> entropy_;

    // per-step scratch, reused across proposals
    struct Scratch {
        Sequence proposed;
        std::vector<double> base_lp;
        std::vector<double> prop_lp;
        std::vector<double> entropy;
        std::vector<double> base_dist;
        std::vector<double> prop_dist;
        std::vector<double> profile;
        std::vector<double> new_weights;
    };
    Scratch scratch_;
    std::vector<double> cur_cut_weights_;
    bool cut_weights_valid_ = false;

    friend ProposalRecord detail_make_proposal(ChainState&, const CutLaw&, double, Rng&);
    friend ProposalRecord propose(ChainState&, const CutLaw&, double, Rng&);
    friend ProposalRecord mh_step(ChainState&, const CutLaw&, double, Rng&, bool);
};

// Draws a cut m ~ law and a fresh suffix from the proposal model; fills a
// record with the proposed sequence and acceptance probability but does not
// change the state.
ProposalRecord propose(ChainState& state, const CutLaw& law, double alpha, Rng& rng);

// Full-recompute acceptance probability for a (current, proposed) pair that
// agrees before position m. Used by tests and the exact-kernel oracle; the
// sampler computes the same quantity from its caches.
double acceptance_probability(const TokenModel& base, const TokenModel& proposal,
                              const CutLaw& law, double alpha,
                              std::span<const TokenId> current,
                              std::span<const TokenId> proposed, std::size_t m);

// One MH transition: propose, accept with probability A, refresh caches on
// acceptance. keep_proposed controls whether the record retains the proposed
// token sequence.
ProposalRecord mh_step(ChainState& state, const CutLaw& law, double alpha, Rng& rng,
                       bool keep_proposed = false);

struct StagewiseOptions {
    bool record_trace = true;
    bool keep_proposed_sequences = false;
};

struct StagewiseResult {
    Sequence sequence;
    std::vector<ProposalRecord> trace;
    std::size_t accepted_steps = 0;
    std::size_t total_steps = 0;

    double acceptance_rate() const {
        return total_steps == 0 ? 1.0 : static_cast<double>(accepted_steps) / total_steps;
    }
};

// Stagewise MH targeting the power distribution: K stages, each extending
// the state to depth min(k*B, T) with proposal draws and then running n_mcmc
// transitions of the cut-based kernel.
StagewiseResult run_stagewise(const TokenModel& base, const TokenModel& proposal,
                              const CutLaw& law, const StageConfig& config, Rng& rng,
                              const StagewiseOptions& options = {});

}  // namespace pslab
