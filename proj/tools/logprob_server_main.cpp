// Serves a local tabular model over the /v1/logprobs protocol, so remote-mode
// configs can be exercised without a real inference backend.

#include <csignal>
#include <iostream>

#include "CLI11.hpp"
#include "pslab/errors.hpp"
#include "pslab/logprob_server.hpp"
#include "pslab/tabular_model.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }
}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"loopback next-token logprob server"};
    std::string model_path;
    int port = 8977;
    std::size_t topk = 0;
    std::string token;
    app.add_option("--model", model_path, "tabular model JSON")->required();
    app.add_option("--port", port, "listen port (default 8977)");
    app.add_option("--topk", topk, "serve only the k most likely tokens (0 = full vectors)");
    app.add_option("--bearer-token", token, "require this bearer token");
    CLI11_PARSE(app, argc, argv);

    try {
        pslab::TabularModel model = pslab::TabularModel::load_file(model_path);
        pslab::LogprobServer::Options options;
        options.port = port;
        options.topk = topk;
        options.bearer_token = token;
        options.max_prefix_len = model.max_depth();
        pslab::LogprobServer server(model, options);
        std::cout << "serving " << model_path << " at " << server.endpoint()
                  << " (vocab " << model.vocab_size() << ", depth " << model.max_depth() << ")\n";
        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        while (g_stop == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    } catch (const pslab::input_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
