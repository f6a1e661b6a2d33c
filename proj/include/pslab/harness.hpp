#pragma once

#include <memory>
#include <string>

#include "json.hpp"
#include "pslab/config.hpp"
#include "pslab/exact_dist.hpp"
#include "pslab/reasoning_tree.hpp"
#include "pslab/tabular_model.hpp"

namespace pslab {

// Keeps a built tree and its TokenModel view alive together.
class ReasoningTreeHolder {
  public:
    explicit ReasoningTreeHolder(ReasoningTree tree)
        : tree_(std::move(tree)), model_(tree_.model()) {}
    const ReasoningTree& tree() const { return tree_; }
    const TreeModel& model() const { return model_; }

  private:
    ReasoningTree tree_;
    TreeModel model_;
};

struct CommandResult {
    std::string run_dir;     // <out_dir>/<run-id>
    nlohmann::json report;   // contents of report.json
};

// Artifact layout, shared by every command:
//   <run_dir>/config.snapshot   exact input config bytes
//   <run_dir>/sequences.jsonl   one record per chain
//   <run_dir>/trace.jsonl       one record per MH step (MH samplers)
//   <run_dir>/metrics.csv       long-format metric rows
//   <run_dir>/report.json       summary (incl. wall-clock timing, which is
//                               the only non-reproducible field)
// sequences/trace/metrics are byte-identical across reruns with the same
// (config, seed), regardless of the worker count.

CommandResult cmd_sample(const ExperimentConfig& config, std::size_t workers = 1);
CommandResult cmd_compare(const ExperimentConfig& config, std::size_t workers = 1);
CommandResult cmd_theory_check(const ExperimentConfig& config);
CommandResult cmd_proxy_experiment(const ExperimentConfig& config, std::size_t workers = 1);
CommandResult cmd_sweep(const ExperimentConfig& config, std::size_t workers = 1);

// Owns whichever model the config names plus the sampling views over it.
struct ModelBundle {
    std::unique_ptr<TabularModel> tabular;
    std::unique_ptr<ReasoningTreeHolder> tree_holder;
    std::unique_ptr<RemoteTokenModel> remote;
    std::unique_ptr<TokenModel> prompt_wrapper;

    const TokenModel* base = nullptr;
    bool enumerable = false;     // local model: oracle enumeration possible
    std::size_t model_depth = 0; // native depth for local models

    // proposal = low-temperature(base, alpha), materialized or cached
    std::unique_ptr<TokenModel> proposal_inner;
    std::unique_ptr<TokenModel> proposal_store;
    const TokenModel* proposal = nullptr;
};

ModelBundle build_models(const ExperimentConfig& config, double alpha);

// stage depth actually used for a config (config override or model depth)
std::size_t resolve_depth(const ExperimentConfig& config, const ModelBundle& bundle);

}  // namespace pslab
