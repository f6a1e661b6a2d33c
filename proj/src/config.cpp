#include "pslab/config.hpp"

#include <fstream>
#include <sstream>

#include "pslab/errors.hpp"

namespace pslab {

SamplerKind sampler_kind_from_string(const std::string& name) {
    if (name == "standard") return SamplerKind::kStandard;
    if (name == "low-temperature") return SamplerKind::kLowTemperature;
    if (name == "entropy-cut-mh") return SamplerKind::kEntropyCutMh;
    if (name == "uniform-cut-mh") return SamplerKind::kUniformCutMh;
    if (name == "smc") return SamplerKind::kSmc;
    if (name == "tmc") return SamplerKind::kTmc;
    throw input_error("unknown sampler: " + name);
}

std::string to_string(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::kStandard: return "standard";
        case SamplerKind::kLowTemperature: return "low-temperature";
        case SamplerKind::kEntropyCutMh: return "entropy-cut-mh";
        case SamplerKind::kUniformCutMh: return "uniform-cut-mh";
        case SamplerKind::kSmc: return "smc";
        case SamplerKind::kTmc: return "tmc";
    }
    return "?";
}

bool sampler_targets_power(SamplerKind kind) { return kind != SamplerKind::kStandard; }

bool sampler_is_mh(SamplerKind kind) {
    return kind == SamplerKind::kEntropyCutMh || kind == SamplerKind::kUniformCutMh;
}

namespace {

using nlohmann::json;

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw input_error("config section " + path + " must be an object");
    for (const auto& item : obj.items()) {
        bool ok = false;
        for (const char* key : allowed) ok = ok || item.key() == key;
        if (!ok) throw input_error("unknown config key: " + path + item.key());
    }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw input_error("config key " + std::string(key) + " has the wrong type: " + e.what());
    }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw input_error(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(doc, "", {"schema_version", "seed", "out_dir", "repetitions", "model", "prompt",
                         "sampler", "samplers", "power", "cut", "stage", "smc", "tmc", "oracle",
                         "theory", "proxy", "sweep", "correctness"});

    ExperimentConfig cfg;
    cfg.snapshot = text;
    cfg.schema_version = get_or<int>(doc, "schema_version", -1);
    if (cfg.schema_version != 1)
        throw input_error("config must declare schema_version 1");
    cfg.seed = get_or<std::uint64_t>(doc, "seed", 0);
    cfg.out_dir = get_or<std::string>(doc, "out_dir", "runs");
    cfg.repetitions = get_or<std::size_t>(doc, "repetitions", 1);
    cfg.prompt = get_or<Sequence>(doc, "prompt", {});

    if (!doc.contains("model")) throw input_error("config needs a model section");
    const json& model = doc.at("model");
    check_keys(model, "model.", {"source", "path", "tree", "remote"});
    const auto source = get_or<std::string>(model, "source", "");
    if (source == "tabular") {
        cfg.source = ModelSource::kTabular;
        cfg.model_path = get_or<std::string>(model, "path", "");
        if (cfg.model_path.empty()) throw input_error("tabular model needs model.path");
    } else if (source == "tree") {
        cfg.source = ModelSource::kTree;
        if (!model.contains("tree")) throw input_error("tree model needs model.tree");
        const json& tree = model.at("tree");
        check_keys(tree, "model.tree.",
                   {"depth", "branch_depths", "branching", "eta", "labeling"});
        cfg.tree.depth = get_or<std::size_t>(tree, "depth", 0);
        cfg.tree.branch_depths = get_or<std::vector<std::size_t>>(tree, "branch_depths", {});
        cfg.tree.branching = get_or<std::vector<std::size_t>>(tree, "branching", {});
        cfg.tree.eta = get_or<double>(tree, "eta", 0.0);
        cfg.tree.labeling =
            tree_labeling_from_string(get_or<std::string>(tree, "labeling", "compact"));
    } else if (source == "remote") {
        cfg.source = ModelSource::kRemote;
        if (!model.contains("remote")) throw input_error("remote model needs model.remote");
        const json& remote = model.at("remote");
        check_keys(remote, "model.remote.",
                   {"endpoint", "model_id", "timeout_ms", "max_retries", "cache_capacity",
                    "vocab_size", "bearer_token", "log_path", "jitter_seed"});
        cfg.remote.endpoint = get_or<std::string>(remote, "endpoint", "");
        cfg.remote.model_id = get_or<std::string>(remote, "model_id", "default");
        cfg.remote.timeout_ms = get_or<int>(remote, "timeout_ms", 5000);
        cfg.remote.max_retries = get_or<int>(remote, "max_retries", 3);
        cfg.remote.cache_capacity = get_or<std::size_t>(remote, "cache_capacity", 1 << 20);
        cfg.remote.vocab_size = get_or<std::size_t>(remote, "vocab_size", 0);
        cfg.remote.bearer_token = get_or<std::string>(remote, "bearer_token", "");
        cfg.remote.log_path = get_or<std::string>(remote, "log_path", "");
        cfg.remote.jitter_seed = get_or<std::uint64_t>(remote, "jitter_seed", 0);
    } else {
        throw input_error("model.source must be tabular, tree or remote");
    }

    if (doc.contains("sampler")) {
        cfg.samplers.push_back(sampler_kind_from_string(doc.at("sampler").get<std::string>()));
    }
    if (doc.contains("samplers")) {
        for (const auto& name : doc.at("samplers"))
            cfg.samplers.push_back(sampler_kind_from_string(name.get<std::string>()));
    }

    if (doc.contains("power")) {
        check_keys(doc.at("power"), "power.", {"alpha"});
        cfg.alpha = get_or<double>(doc.at("power"), "alpha", 4.0);
    }
    if (doc.contains("cut")) {
        check_keys(doc.at("cut"), "cut.", {"beta", "epsilon_floor"});
        cfg.cut.beta = get_or<double>(doc.at("cut"), "beta", 4.0);
        cfg.cut.epsilon = get_or<double>(doc.at("cut"), "epsilon_floor", 0.0);
        cfg.cut.validate();
    }
    if (doc.contains("stage")) {
        check_keys(doc.at("stage"), "stage.", {"depth", "block", "n_mcmc"});
        cfg.stage_depth = get_or<std::size_t>(doc.at("stage"), "depth", 0);
        cfg.stage_block = get_or<std::size_t>(doc.at("stage"), "block", 0);
        cfg.n_mcmc = get_or<std::size_t>(doc.at("stage"), "n_mcmc", 10);
    }
    if (doc.contains("smc")) {
        check_keys(doc.at("smc"), "smc.", {"particles", "ess_threshold"});
        cfg.smc.particles = get_or<std::size_t>(doc.at("smc"), "particles", 64);
        cfg.smc.ess_threshold = get_or<double>(doc.at("smc"), "ess_threshold", 0.5);
        cfg.smc.validate();
    }
    if (doc.contains("tmc")) {
        check_keys(doc.at("tmc"), "tmc.", {"block", "candidates", "rollouts", "selection"});
        cfg.tmc.block = get_or<std::size_t>(doc.at("tmc"), "block", 192);
        cfg.tmc.candidates = get_or<std::size_t>(doc.at("tmc"), "candidates", 8);
        cfg.tmc.rollouts = get_or<std::size_t>(doc.at("tmc"), "rollouts", 8);
        cfg.tmc.selection =
            tmc_selection_from_string(get_or<std::string>(doc.at("tmc"), "selection", "softmax"));
        cfg.tmc.validate();
    }
    if (doc.contains("oracle")) {
        check_keys(doc.at("oracle"), "oracle.",
                   {"enabled", "sequence_budget", "kernel_budget", "step_budget"});
        cfg.oracle.enabled = get_or<bool>(doc.at("oracle"), "enabled", false);
        cfg.oracle.sequence_budget =
            get_or<std::size_t>(doc.at("oracle"), "sequence_budget", 10'000'000);
        cfg.oracle.kernel_budget = get_or<std::size_t>(doc.at("oracle"), "kernel_budget", 4096);
        cfg.oracle.step_budget = get_or<std::size_t>(doc.at("oracle"), "step_budget", 1'000'000);
    }
    if (doc.contains("theory")) {
        check_keys(doc.at("theory"), "theory.", {"epsilons"});
        cfg.theory.epsilons = get_or<std::vector<double>>(doc.at("theory"), "epsilons",
                                                          {0.25, 0.1, 0.05});
    }
    if (doc.contains("proxy")) {
        check_keys(doc.at("proxy"), "proxy.", {"cut_count", "resamples", "trials"});
        cfg.proxy.cut_count = get_or<std::size_t>(doc.at("proxy"), "cut_count", 2);
        cfg.proxy.resamples = get_or<std::size_t>(doc.at("proxy"), "resamples", 16);
        cfg.proxy.trials = get_or<std::size_t>(doc.at("proxy"), "trials", 1);
    }
    if (doc.contains("sweep")) {
        check_keys(doc.at("sweep"), "sweep.", {"parameter", "values"});
        SweepOptions sweep;
        sweep.parameter = get_or<std::string>(doc.at("sweep"), "parameter", "");
        sweep.values = get_or<std::vector<double>>(doc.at("sweep"), "values", {});
        cfg.sweep = std::move(sweep);
    }
    if (doc.contains("correctness")) {
        check_keys(doc.at("correctness"), "correctness.", {"answer_tokens", "k"});
        CorrectnessOptions correctness;
        correctness.answer_tokens =
            get_or<std::vector<TokenId>>(doc.at("correctness"), "answer_tokens", {});
        correctness.ks = get_or<std::vector<std::size_t>>(doc.at("correctness"), "k", {1});
        cfg.correctness = std::move(correctness);
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw input_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return from_json_text(buffer.str());
}

void ExperimentConfig::validate() const {
    if (repetitions == 0) throw input_error("repetitions must be >= 1");
    if (source == ModelSource::kTree) tree.validate();
    if (source == ModelSource::kRemote) {
        remote.validate();
        if (remote.endpoint.empty() && std::getenv("PSLAB_LOGPROB_ENDPOINT") == nullptr)
            throw input_error("remote model needs an endpoint");
    }
    // alpha = 1 is the degenerate identity target, allowed so sweeps can
    // include it; anything below 1 would anti-sharpen.
    for (SamplerKind kind : samplers) {
        if (sampler_targets_power(kind) && kind != SamplerKind::kLowTemperature &&
            !(alpha >= 1.0))
            throw input_error("power samplers need alpha >= 1");
        if (kind == SamplerKind::kLowTemperature && !(alpha > 0.0))
            throw input_error("low-temperature sampling needs alpha > 0");
    }
    if (sweep.has_value()) {
        const auto& s = *sweep;
        if (s.parameter != "alpha" && s.parameter != "beta" && s.parameter != "n_mcmc" &&
            s.parameter != "particles")
            throw input_error("sweep.parameter must be alpha, beta, n_mcmc or particles");
        if (s.values.empty()) throw input_error("sweep.values must be non-empty");
    }
    if (correctness.has_value() && correctness->answer_tokens.empty())
        throw input_error("correctness.answer_tokens must be non-empty when given");
}

}  // namespace pslab
