#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <shared_mutex>
#include <string>

#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

struct RemoteModelConfig {
    std::string endpoint;  // e.g. http://127.0.0.1:8080; the
                           // PSLAB_LOGPROB_ENDPOINT env var overrides it
    std::string model_id = "default";
    int timeout_ms = 5000;          // per request
    int max_retries = 3;            // retries after the first attempt
    std::size_t cache_capacity = 1 << 20;  // prefixes
    std::size_t vocab_size = 0;     // 0 = infer from the first full response
    std::string bearer_token;       // optional Authorization header
    std::string log_path;           // optional JSON Lines request log
    std::uint64_t jitter_seed = 0;  // deterministic backoff jitter
    int backoff_base_ms = 50;

    void validate() const;
};

// TokenModel backed by a next-token logprob service speaking
//   POST /v1/logprobs {"model": id, "prefix": [ids]}
//   -> {"logprobs": [lp or null, ...]}                       (full vector)
//   -> {"topk": [[id, lp], ...], "tail_logmass": lp or null} (truncated)
// null encodes a zero-probability token. Responses are validated
// (exponentiated mass sums to 1 within 1e-6) and cached per prefix; repeated
// queries never touch the network. In top-k mode the tail mass is spread
// uniformly over unlisted tokens and the model flags itself approximate, so
// MH acceptance computation refuses it.
class RemoteTokenModel final : public TokenModel {
  public:
    explicit RemoteTokenModel(RemoteModelConfig config);
    ~RemoteTokenModel() override;

    std::size_t vocab_size() const override;
    void next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const override;
    bool exact_logprobs() const override { return !approximate_.load(); }

    std::size_t network_requests() const { return network_requests_.load(); }
    std::size_t cache_hits() const { return cache_hits_.load(); }

  private:
    std::vector<double> fetch(std::span<const TokenId> prefix) const;
    std::vector<double> parse_response(const std::string& body) const;

    RemoteModelConfig config_;
    std::string resolved_endpoint_;

    mutable std::shared_mutex cache_mutex_;
    mutable std::map<Sequence, std::vector<double>> cache_;

    // in-flight request deduplication
    mutable std::mutex inflight_mutex_;
    mutable std::condition_variable inflight_cv_;
    mutable std::set<Sequence> inflight_;

    mutable std::mutex network_mutex_;
    mutable std::mutex log_mutex_;

    mutable std::atomic<std::size_t> network_requests_{0};
    mutable std::atomic<std::size_t> cache_hits_{0};
    mutable std::atomic<bool> approximate_{false};
    mutable std::atomic<std::size_t> vocab_{0};
};

}  // namespace pslab
