#include "pslab/remote_model.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "pslab/errors.hpp"
#include "pslab/rng.hpp"

namespace pslab {

void RemoteModelConfig::validate() const {
    if (timeout_ms <= 0) throw input_error("remote timeout must be > 0");
    if (max_retries < 0) throw input_error("remote max_retries must be >= 0");
}

RemoteTokenModel::RemoteTokenModel(RemoteModelConfig config) : config_(std::move(config)) {
    config_.validate();
    resolved_endpoint_ = config_.endpoint;
    if (const char* env = std::getenv("PSLAB_LOGPROB_ENDPOINT"); env != nullptr && *env != '\0')
        resolved_endpoint_ = env;
    if (resolved_endpoint_.empty()) throw input_error("remote model needs an endpoint");
    vocab_.store(config_.vocab_size);
}

RemoteTokenModel::~RemoteTokenModel() = default;

std::size_t RemoteTokenModel::vocab_size() const {
    std::size_t v = vocab_.load();
    if (v != 0) return v;
    // Infer from a direct empty-prefix fetch, which also warms the cache.
    const Sequence empty;
    std::vector<double> probs = fetch(empty);
    {
        std::unique_lock lock(cache_mutex_);
        cache_.emplace(empty, std::move(probs));
    }
    v = vocab_.load();
    if (v == 0) throw protocol_error("could not infer vocab size from the service");
    return v;
}

std::vector<double> RemoteTokenModel::parse_response(const std::string& body) const {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        throw protocol_error(std::string("malformed logprob response: ") + e.what());
    }
    auto lp_to_prob = [](const nlohmann::json& v) {
        if (v.is_null()) return 0.0;
        return std::exp(v.get<double>());
    };

    std::vector<double> probs;
    if (doc.contains("logprobs")) {
        const auto& arr = doc.at("logprobs");
        if (!arr.is_array() || arr.empty())
            throw protocol_error("logprobs payload must be a non-empty array");
        probs.reserve(arr.size());
        double sum = 0.0;
        for (const auto& v : arr) {
            probs.push_back(lp_to_prob(v));
            sum += probs.back();
        }
        if (std::abs(sum - 1.0) > 1e-6)
            throw protocol_error("full logprob vector sums to " + std::to_string(sum));
        std::size_t expect = vocab_.load();
        if (expect == 0)
            vocab_.store(probs.size());
        else if (probs.size() != expect)
            throw protocol_error("response vocab size changed between requests");
        return probs;
    }

    if (doc.contains("topk")) {
        const std::size_t v = vocab_.load();
        if (v == 0)
            throw capability_error(
                "top-k responses need an explicit vocab_size in the remote config");
        probs.assign(v, 0.0);
        double listed = 0.0;
        std::size_t listed_count = 0;
        for (const auto& pair : doc.at("topk")) {
            const auto id = pair.at(0).get<std::size_t>();
            if (id >= v) throw protocol_error("top-k entry outside the vocabulary");
            probs[id] = lp_to_prob(pair.at(1));
            listed += probs[id];
            ++listed_count;
        }
        const double tail =
            doc.contains("tail_logmass") ? lp_to_prob(doc.at("tail_logmass")) : 0.0;
        if (std::abs(listed + tail - 1.0) > 1e-6)
            throw protocol_error("top-k mass plus tail sums to " + std::to_string(listed + tail));
        const std::size_t unlisted = v - listed_count;
        if (tail > 0.0) {
            if (unlisted == 0) throw protocol_error("positive tail mass with no unlisted tokens");
            for (std::size_t i = 0; i < v; ++i) {
                if (probs[i] == 0.0) probs[i] = tail / static_cast<double>(unlisted);
            }
        }
        approximate_.store(true);  // entropies are now lower-bound estimates
        return probs;
    }

    throw protocol_error("logprob response carries neither 'logprobs' nor 'topk'");
}

std::vector<double> RemoteTokenModel::fetch(std::span<const TokenId> prefix) const {
    nlohmann::json request = {{"model", config_.model_id},
                              {"prefix", Sequence(prefix.begin(), prefix.end())}};
    const std::string body = request.dump();

    Rng jitter(Rng::mix64(config_.jitter_seed ^ sequence_hash(prefix)));
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            const double scale = 0.5 + 0.5 * jitter.next_double();
            const auto delay = static_cast<int>(
                config_.backoff_base_ms * std::pow(2.0, attempt - 1) * scale);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        httplib::Result res;
        {
            std::lock_guard lock(network_mutex_);
            httplib::Client client(resolved_endpoint_);
            client.set_connection_timeout(config_.timeout_ms / 1000,
                                          (config_.timeout_ms % 1000) * 1000);
            client.set_read_timeout(config_.timeout_ms / 1000,
                                    (config_.timeout_ms % 1000) * 1000);
            if (!config_.bearer_token.empty())
                client.set_bearer_token_auth(config_.bearer_token);
            res = client.Post("/v1/logprobs", body, "application/json");
            network_requests_.fetch_add(1);
        }
        if (!config_.log_path.empty()) {
            std::lock_guard lock(log_mutex_);
            std::ofstream log(config_.log_path, std::ios::app);
            log << nlohmann::json{{"request", body},
                                  {"status", res ? res->status : -1},
                                  {"attempt", attempt}}
                       .dump()
                << "\n";
        }
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;  // transport-level failure: retry
        }
        if (res->status == 200) return parse_response(res->body);
        if (res->status == 413 || res->status == 422)
            throw capability_error("service rejected the prefix: " + res->body);
        if (res->status >= 400 && res->status < 500)
            throw protocol_error("service returned " + std::to_string(res->status) + ": " +
                                 res->body);
        last_error = "HTTP " + std::to_string(res->status);
    }
    throw transport_error("logprob service unreachable after " +
                          std::to_string(config_.max_retries + 1) + " attempts: " + last_error);
}

void RemoteTokenModel::next_dist_into(std::span<const TokenId> prefix,
                                      std::span<double> out) const {
    Sequence key(prefix.begin(), prefix.end());
    {
        std::shared_lock lock(cache_mutex_);
        auto it = cache_.find(key);
        if (it != cache_.end()) {
            cache_hits_.fetch_add(1, std::memory_order_relaxed);
            std::copy(it->second.begin(), it->second.end(), out.begin());
            return;
        }
    }
    // One worker fetches a given prefix; the rest wait for its result.
    {
        std::unique_lock lock(inflight_mutex_);
        while (inflight_.contains(key)) inflight_cv_.wait(lock);
        {
            std::shared_lock cache_lock(cache_mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                cache_hits_.fetch_add(1, std::memory_order_relaxed);
                std::copy(it->second.begin(), it->second.end(), out.begin());
                return;
            }
        }
        inflight_.insert(key);
    }

    std::vector<double> probs;
    try {
        probs = fetch(prefix);
    } catch (...) {
        std::lock_guard lock(inflight_mutex_);
        inflight_.erase(key);
        inflight_cv_.notify_all();
        throw;
    }

    {
        std::unique_lock lock(cache_mutex_);
        if (cache_.size() >= config_.cache_capacity) cache_.clear();
        cache_.emplace(key, probs);
    }
    {
        std::lock_guard lock(inflight_mutex_);
        inflight_.erase(key);
        inflight_cv_.notify_all();
    }
    if (out.size() != probs.size())
        throw protocol_error("response size does not match the expected vocab");
    std::copy(probs.begin(), probs.end(), out.begin());
}

}  // namespace pslab
