#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "pslab/token_model.hpp"

namespace pslab {

// Loopback logprob service wrapping a local TokenModel; the test fixture for
// the remote client and a handy stand-in for a real inference server.
class LogprobServer {
  public:
    struct Options {
        std::size_t topk = 0;          // 0 = serve full vectors
        std::string model_id = "local";
        std::size_t max_prefix_len = 1 << 16;
        std::string bearer_token;      // require this token when non-empty
        int port = 0;                  // 0 = pick a free port
    };

    explicit LogprobServer(const TokenModel& model) : LogprobServer(model, Options()) {}
    LogprobServer(const TokenModel& model, Options options);
    ~LogprobServer();

    LogprobServer(const LogprobServer&) = delete;
    LogprobServer& operator=(const LogprobServer&) = delete;

    int port() const { return port_; }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
    std::size_t request_count() const { return requests_.load(); }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    std::thread thread_;
    std::atomic<std::size_t> requests_{0};
    int port_ = 0;
};

}  // namespace pslab
