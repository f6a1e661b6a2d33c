#include "pslab/logprob_server.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

#include "httplib.h"
#include "json.hpp"
#include "pslab/errors.hpp"
#include "pslab/types.hpp"

namespace pslab {

struct LogprobServer::Impl {
    httplib::Server server;
    const TokenModel* model = nullptr;
    Options options;
};

namespace {

nlohmann::json lp_or_null(double p) {
    if (p > 0.0) return std::log(p);
    return nullptr;
}

}  // namespace

LogprobServer::LogprobServer(const TokenModel& model, Options options)
    : impl_(std::make_unique<Impl>()) {
    impl_->model = &model;
    impl_->options = std::move(options);

    impl_->server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(R"({"status":"ok"})", "application/json");
    });

    impl_->server.Post("/v1/logprobs", [this](const httplib::Request& req,
                                              httplib::Response& res) {
        requests_.fetch_add(1);
        const auto& opts = impl_->options;
        if (!opts.bearer_token.empty() &&
            req.get_header_value("Authorization") != "Bearer " + opts.bearer_token) {
            res.status = 401;
            res.set_content(R"({"error":"unauthorized"})", "application/json");
            return;
        }
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(req.body);
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":"malformed request body"})", "application/json");
            return;
        }
        if (!doc.contains("prefix") || !doc.at("prefix").is_array()) {
            res.status = 400;
            res.set_content(R"({"error":"missing prefix"})", "application/json");
            return;
        }
        Sequence prefix;
        try {
            prefix = doc.at("prefix").get<Sequence>();
        } catch (const nlohmann::json::exception&) {
            res.status = 400;
            res.set_content(R"({"error":"prefix must hold token ids"})", "application/json");
            return;
        }
        if (prefix.size() > opts.max_prefix_len) {
            res.status = 413;
            res.set_content(R"({"error":"prefix too long"})", "application/json");
            return;
        }

        std::vector<double> probs(impl_->model->vocab_size());
        try {
            impl_->model->next_dist_into(prefix, probs);
        } catch (const std::exception& e) {
            res.status = 422;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
            return;
        }

        nlohmann::json out;
        if (opts.topk == 0) {
            nlohmann::json lps = nlohmann::json::array();
            for (double p : probs) lps.push_back(lp_or_null(p));
            out = {{"logprobs", std::move(lps)}};
        } else {
            std::vector<std::size_t> order(probs.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            const std::size_t k = std::min(opts.topk, probs.size());
            std::partial_sort(order.begin(), order.begin() + k, order.end(),
                              [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
            nlohmann::json pairs = nlohmann::json::array();
            double listed = 0.0;
            for (std::size_t i = 0; i < k; ++i) {
                pairs.push_back({order[i], lp_or_null(probs[order[i]])});
                listed += probs[order[i]];
            }
            out = {{"topk", std::move(pairs)}, {"tail_logmass", lp_or_null(1.0 - listed)}};
        }
        res.set_content(out.dump(), "application/json");
    });

    if (impl_->options.port != 0) {
        if (!impl_->server.bind_to_port("127.0.0.1", impl_->options.port))
            throw transport_error("cannot bind the logprob server to the requested port");
        port_ = impl_->options.port;
    } else {
        port_ = impl_->server.bind_to_any_port("127.0.0.1");
        if (port_ <= 0) throw transport_error("cannot bind the logprob server");
    }
    thread_ = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

LogprobServer::~LogprobServer() {
    impl_->server.stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace pslab
