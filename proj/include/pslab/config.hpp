#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pslab/cut_laws.hpp"
#include "pslab/reasoning_tree.hpp"
#include "pslab/remote_model.hpp"
#include "pslab/smc.hpp"
#include "pslab/tmc.hpp"
#include "pslab/types.hpp"

namespace pslab {

enum class ModelSource { kTabular, kTree, kRemote };

enum class SamplerKind {
    kStandard,
    kLowTemperature,
    kEntropyCutMh,
    kUniformCutMh,
    kSmc,
    kTmc,
};

SamplerKind sampler_kind_from_string(const std::string& name);
std::string to_string(SamplerKind kind);
bool sampler_targets_power(SamplerKind kind);  // everything except standard/low-temperature? see impl
bool sampler_is_mh(SamplerKind kind);

struct OracleOptions {
    bool enabled = false;
    std::size_t sequence_budget = 10'000'000;
    std::size_t kernel_budget = 4096;
    std::size_t step_budget = 1'000'000;
};

struct TheoryOptions {
    std::vector<double> epsilons = {0.25, 0.1, 0.05};
};

struct ProxyOptions {
    std::size_t cut_count = 2;
    std::size_t resamples = 16;
    std::size_t trials = 1;
};

struct SweepOptions {
    std::string parameter;  // alpha | beta | n_mcmc | particles
    std::vector<double> values;
};

struct CorrectnessOptions {
    std::vector<TokenId> answer_tokens;
    std::vector<std::size_t> ks = {1};
};

// One experiment: model, sampler selection, hyperparameters, outputs. Loaded
// from a strict schema-versioned JSON file; unknown keys are errors.
struct ExperimentConfig {
    int schema_version = 1;
    std::uint64_t seed = 0;
    std::string out_dir = "runs";
    std::size_t repetitions = 1;

    ModelSource source = ModelSource::kTabular;
    std::string model_path;                  // tabular
    SymmetricTreeSpec tree;                  // tree
    RemoteModelConfig remote;                // remote
    Sequence prompt;

    std::vector<SamplerKind> samplers;       // >= 1 for sample, >= 2 for compare

    double alpha = 4.0;
    EntropyCutParams cut;                    // beta = 4.0, epsilon_floor = 0.0
    std::size_t stage_depth = 0;             // 0 = derive from the model
    std::size_t stage_block = 0;             // 0 = max(1, depth/16)
    std::size_t n_mcmc = 10;

    SmcOptions smc;
    TmcParams tmc;
    OracleOptions oracle;
    TheoryOptions theory;
    ProxyOptions proxy;
    std::optional<SweepOptions> sweep;
    std::optional<CorrectnessOptions> correctness;

    std::string snapshot;  // the exact input file bytes

    static ExperimentConfig load_file(const std::string& path);
    static ExperimentConfig from_json_text(const std::string& text);

    // Structural validation shared by every command (per-command requirements
    // are checked by the command entry points).
    void validate() const;
};

}  // namespace pslab
