#include "pslab/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include "pslab/errors.hpp"
#include "pslab/exact_kernel.hpp"
#include "pslab/metrics.hpp"
#include "pslab/mh_sampler.hpp"
#include "pslab/model_ops.hpp"

namespace pslab {

namespace {

using nlohmann::json;

constexpr std::uint64_t kTreeStreamTag = 0x7472656500000001ULL;

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

std::uint64_t fnv64(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

std::string run_id(const ExperimentConfig& cfg, const std::string& command) {
    const std::uint64_t h =
        Rng::mix64(fnv64(cfg.snapshot) ^ Rng::mix64(cfg.seed ^ fnv64(command)));
    char buf[32];
    std::snprintf(buf, sizeof(buf), "run-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Shortest round-trip decimal form, identical on every rerun.
std::string fmt(double v) { return json(v).dump(); }

void parallel_chains(std::size_t count, std::size_t workers,
                     const std::function<void(std::size_t)>& fn) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace

ModelBundle build_models(const ExperimentConfig& config, double alpha) {
    ModelBundle bundle;
    switch (config.source) {
        case ModelSource::kTabular: {
            bundle.tabular = std::make_unique<TabularModel>(
                TabularModel::load_file(config.model_path));
            bundle.base = bundle.tabular.get();
            bundle.model_depth = bundle.tabular->max_depth();
            break;
        }
        case ModelSource::kTree: {
            Rng tree_rng = Rng::substream(config.seed, kTreeStreamTag);
            bundle.tree_holder = std::make_unique<ReasoningTreeHolder>(
                ReasoningTree::build_symmetric(config.tree, tree_rng));
            bundle.base = &bundle.tree_holder->model();
            bundle.model_depth = bundle.tree_holder->tree().depth();
            break;
        }
        case ModelSource::kRemote: {
            bundle.remote = std::make_unique<RemoteTokenModel>(config.remote);
            bundle.base = bundle.remote.get();
            bundle.model_depth = 0;
            break;
        }
    }
    bundle.enumerable = config.source != ModelSource::kRemote;

    if (!config.prompt.empty()) {
        if (config.source != ModelSource::kRemote) {
            if (config.prompt.size() > bundle.model_depth)
                throw input_error("prompt is longer than the model depth");
            bundle.model_depth -= config.prompt.size();
        }
        bundle.prompt_wrapper = std::make_unique<PromptedModel>(*bundle.base, config.prompt);
        bundle.base = bundle.prompt_wrapper.get();
    }

    const std::size_t depth =
        config.stage_depth > 0 ? config.stage_depth : bundle.model_depth;
    if (alpha == 1.0) {
        bundle.proposal = bundle.base;
    } else {
        bundle.proposal_inner = std::make_unique<LowTemperatureModel>(*bundle.base, alpha);
        if (config.source == ModelSource::kRemote) {
            bundle.proposal_store = std::make_unique<CachedModel>(*bundle.proposal_inner,
                                                                  config.remote.cache_capacity);
        } else {
            try {
                bundle.proposal_store = std::make_unique<TabularModel>(
                    materialize_tabular(*bundle.proposal_inner, depth));
            } catch (const budget_error&) {
                bundle.proposal_store = std::make_unique<CachedModel>(*bundle.proposal_inner);
            }
        }
        bundle.proposal = bundle.proposal_store.get();
    }
    return bundle;
}

std::size_t resolve_depth(const ExperimentConfig& config, const ModelBundle& bundle) {
    if (config.stage_depth > 0) {
        if (bundle.enumerable && config.stage_depth > bundle.model_depth)
            throw input_error("stage.depth exceeds what the model supports");
        return config.stage_depth;
    }
    if (!bundle.enumerable)
        throw input_error("remote models need an explicit stage.depth");
    return bundle.model_depth;
}

namespace {

struct ChainOutcome {
    Sequence sequence;
    double logp_base = 0.0;
    double confidence = 0.0;
    double accept_rate = -1.0;  // < 0 when not an MH sampler
    std::vector<ProposalRecord> trace;
};

std::size_t resolve_block(const ExperimentConfig& config, std::size_t depth) {
    if (config.stage_block > 0) return config.stage_block;
    return std::max<std::size_t>(1, depth / 16);
}

ChainOutcome run_chain(SamplerKind kind, const ExperimentConfig& config,
                       const ModelBundle& bundle, std::size_t depth, Rng rng,
                       bool record_trace) {
    ChainOutcome out;
    switch (kind) {
        case SamplerKind::kStandard:
            out.sequence = sample_autoregressive(*bundle.base, depth, rng);
            break;
        case SamplerKind::kLowTemperature:
            out.sequence = sample_autoregressive(*bundle.proposal, depth, rng);
            break;
        case SamplerKind::kEntropyCutMh:
        case SamplerKind::kUniformCutMh: {
            StageConfig stage;
            stage.depth = depth;
            stage.block = resolve_block(config, depth);
            stage.n_mcmc = config.n_mcmc;
            stage.alpha = config.alpha;
            StagewiseOptions options;
            options.record_trace = record_trace;
            StagewiseResult result;
            if (kind == SamplerKind::kEntropyCutMh) {
                EntropyCutLaw law(config.cut);
                result = run_stagewise(*bundle.base, *bundle.proposal, law, stage, rng, options);
            } else {
                UniformCutLaw law;
                result = run_stagewise(*bundle.base, *bundle.proposal, law, stage, rng, options);
            }
            out.sequence = std::move(result.sequence);
            out.trace = std::move(result.trace);
            out.accept_rate = result.acceptance_rate();
            break;
        }
        case SamplerKind::kSmc:
            out.sequence =
                smc_sample(*bundle.base, *bundle.proposal, config.alpha, depth, config.smc, rng);
            break;
        case SamplerKind::kTmc:
            out.sequence =
                tmc_sample(*bundle.base, *bundle.proposal, config.alpha, depth, config.tmc, rng);
            break;
    }
    out.logp_base = seq_logprob(*bundle.base, out.sequence);
    out.confidence = avg_confidence(*bundle.base, out.sequence);
    return out;
}

struct MetricRows {
    std::string csv = "sampler,chain,metric,value\n";
    void add(const std::string& sampler, const std::string& chain, const std::string& metric,
             double value) {
        csv += sampler + "," + chain + "," + metric + "," + fmt(value) + "\n";
    }
};

json sequence_record(const std::string& sampler, std::size_t chain, const ChainOutcome& out) {
    return json{{"sampler", sampler},
                {"chain", chain},
                {"tokens", out.sequence},
                {"logp_base", out.logp_base},
                {"avg_confidence", out.confidence}};
}

json trace_record(const std::string& sampler, std::size_t chain, const ProposalRecord& rec) {
    char hash_hex[17];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(rec.seq_hash));
    return json{{"sampler", sampler}, {"chain", chain},
                {"stage", rec.stage},  {"step", rec.step},
                {"m", rec.cut},        {"A", rec.accept_prob},
                {"accepted", rec.accepted},
                {"logp_base_old", rec.logp_base_old},
                {"logp_base_new", rec.logp_base_new},
                {"seq_hash", std::string(hash_hex)}};
}

std::string ensure_run_dir(const ExperimentConfig& config, const std::string& command) {
    const std::string dir = config.out_dir + "/" + run_id(config, command);
    std::filesystem::create_directories(dir);
    std::ofstream snap(dir + "/config.snapshot", std::ios::binary);
    snap << config.snapshot;
    return dir;
}

void write_file(const std::string& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw input_error("cannot write " + path);
    out << contents;
}

struct SamplerSummary {
    std::string name;
    double mean_logp = 0.0;
    double mean_conf = 0.0;
    double mean_accept = -1.0;
    double tv_to_oracle = -1.0;
    std::size_t correct = 0;
};

// Shared engine behind cmd_sample and cmd_compare.
CommandResult run_samplers(const ExperimentConfig& config, std::size_t workers,
                           const std::string& command) {
    Stopwatch watch;
    ModelBundle bundle = build_models(config, config.alpha);
    const std::size_t depth = resolve_depth(config, bundle);
    const std::size_t reps = config.repetitions;

    std::optional<ExactDistribution> oracle;
    if (config.oracle.enabled && bundle.enumerable) {
        oracle = enumerate_power_distribution(*bundle.base, depth, config.alpha,
                                              config.oracle.sequence_budget);
    }

    std::string sequences_out;
    std::string trace_out;
    MetricRows metrics;
    json sampler_reports = json::array();
    bool any_approximate = false;

    for (std::size_t s = 0; s < config.samplers.size(); ++s) {
        const SamplerKind kind = config.samplers[s];
        const std::string name = to_string(kind);
        std::vector<ChainOutcome> outcomes(reps);
        parallel_chains(reps, workers, [&](std::size_t i) {
            Rng rng = Rng::substream(config.seed, s * reps + i);
            outcomes[i] = run_chain(kind, config, bundle, depth, rng, true);
        });

        SamplerSummary summary;
        summary.name = name;
        std::vector<Sequence> sequences(reps);
        double accept_sum = 0.0;
        for (std::size_t i = 0; i < reps; ++i) {
            const ChainOutcome& out = outcomes[i];
            sequences[i] = out.sequence;
            summary.mean_logp += out.logp_base;
            summary.mean_conf += out.confidence;
            if (out.accept_rate >= 0.0) accept_sum += out.accept_rate;
            sequences_out += sequence_record(name, i, out).dump() + "\n";
            for (const auto& rec : out.trace)
                trace_out += trace_record(name, i, rec).dump() + "\n";
            if (command == "sample") {
                metrics.add(name, std::to_string(i), "logp_base", out.logp_base);
                metrics.add(name, std::to_string(i), "avg_confidence", out.confidence);
                if (out.accept_rate >= 0.0)
                    metrics.add(name, std::to_string(i), "accept_rate", out.accept_rate);
            }
        }
        summary.mean_logp /= static_cast<double>(reps);
        summary.mean_conf /= static_cast<double>(reps);
        metrics.add(name, "all", "mean_logp_base", summary.mean_logp);
        metrics.add(name, "all", "mean_avg_confidence", summary.mean_conf);
        if (sampler_is_mh(kind)) {
            summary.mean_accept = accept_sum / static_cast<double>(reps);
            metrics.add(name, "all", "mean_accept_rate", summary.mean_accept);
        }
        if (oracle.has_value()) {
            summary.tv_to_oracle = tv_to_empirical(*oracle, sequences);
            metrics.add(name, "all", "tv_to_oracle", summary.tv_to_oracle);
        }

        json extra = json::object();
        if (config.correctness.has_value()) {
            const auto& want = config.correctness->answer_tokens;
            for (const auto& seq : sequences) {
                if (std::find(want.begin(), want.end(), seq.back()) != want.end())
                    ++summary.correct;
            }
            metrics.add(name, "all", "correct_count", static_cast<double>(summary.correct));
            for (std::size_t k : config.correctness->ks) {
                if (k < 1 || k > reps) continue;
                const double p = pass_at_k(reps, summary.correct, k);
                metrics.add(name, "all", "pass@" + std::to_string(k), p);
                extra["pass@" + std::to_string(k)] = p;
            }
        }

        any_approximate = any_approximate || !bundle.base->exact_logprobs();
        json report = {{"sampler", name},
                       {"mean_logp_base", summary.mean_logp},
                       {"mean_avg_confidence", summary.mean_conf}};
        if (sampler_is_mh(kind)) report["mean_accept_rate"] = summary.mean_accept;
        if (oracle.has_value()) report["tv_to_oracle"] = summary.tv_to_oracle;
        if (!extra.empty()) report["correctness"] = extra;
        sampler_reports.push_back(std::move(report));
    }

    const std::string dir = ensure_run_dir(config, command);
    write_file(dir + "/sequences.jsonl", sequences_out);
    write_file(dir + "/trace.jsonl", trace_out);
    write_file(dir + "/metrics.csv", metrics.csv);

    json report = {{"command", command},
                   {"run_id", std::filesystem::path(dir).filename().string()},
                   {"seed", config.seed},
                   {"generator", Rng::kName},
                   {"alpha", config.alpha},
                   {"depth", depth},
                   {"repetitions", reps},
                   {"samplers", sampler_reports},
                   {"approximate_model", any_approximate},
                   {"oracle_enabled", oracle.has_value()},
                   {"timing_seconds", watch.seconds()}};
    write_file(dir + "/report.json", report.dump(2) + "\n");
    return CommandResult{dir, std::move(report)};
}

}  // namespace

CommandResult cmd_sample(const ExperimentConfig& config, std::size_t workers) {
    if (config.samplers.size() != 1)
        throw input_error("sample needs exactly one sampler (use compare for several)");
    return run_samplers(config, workers, "sample");
}

CommandResult cmd_compare(const ExperimentConfig& config, std::size_t workers) {
    if (config.samplers.size() < 2)
        throw input_error("compare needs at least two samplers");
    return run_samplers(config, workers, "compare");
}

CommandResult cmd_theory_check(const ExperimentConfig& config) {
    Stopwatch watch;
    if (config.source != ModelSource::kTree)
        throw input_error("theory-check needs a tree model");
    ModelBundle bundle = build_models(config, config.alpha);
    const ReasoningTree& tree = bundle.tree_holder->tree();
    const TokenModel& model = bundle.tree_holder->model();
    const std::size_t k = tree.semantic_depth();
    const std::size_t t_depth = tree.depth();
    const std::size_t b1 = tree.spec().branch_depths.front();

    // The proposal is the tree's own conditionals: on a symmetric tree this
    // realizes Condition-2 slack exactly 0 at eta = 0, and we report the
    // realized value otherwise.
    const TokenModel& proposal = model;

    EntropyCutLaw entropy_law(config.cut);
    UniformCutLaw uniform_law;
    const ExactKernel kernel_ec = exact_mh_kernel(model, proposal, entropy_law, config.alpha,
                                                  t_depth, config.oracle.kernel_budget);
    const ExactKernel kernel_unif = exact_mh_kernel(model, proposal, uniform_law, config.alpha,
                                                    t_depth, config.oracle.kernel_budget);

    const double m1 = m1_constant(tree, proposal, config.alpha);
    const auto subset = first_branch_set(tree, kernel_ec, config.alpha);
    const double phi_ec = conductance(kernel_ec, subset);
    const double phi_unif = conductance(kernel_unif, subset);
    std::size_t skipped = 0;
    const double margin = minorization_margin(kernel_ec, k, m1, &skipped);

    MetricRows metrics;
    json per_eps = json::array();
    json tv_curves = json::object();
    bool all_passed = true;
    for (double eps : config.theory.epsilons) {
        const MixingResult ec = mixing_time(kernel_ec, eps, config.oracle.step_budget);
        const MixingResult unif = mixing_time(kernel_unif, eps, config.oracle.step_budget);
        if (tv_curves.empty()) {
            tv_curves["entropy_cut"] = ec.tv_curve;
            tv_curves["uniform"] = unif.tv_curve;
        }
        json row = {{"epsilon", eps},
                    {"tau_entropy_cut", ec.steps},
                    {"tau_entropy_cut_converged", ec.converged},
                    {"tau_uniform", unif.steps},
                    {"tau_uniform_converged", unif.converged}};
        const double upper = m1 * static_cast<double>(k) * std::log(1.0 / eps);
        row["upper_bound_entropy_cut"] = upper;
        row["upper_bound_with_slack"] = 2.0 * upper;
        bool pass_upper = ec.converged && static_cast<double>(ec.steps) <=
                                              std::ceil(std::max(1.0, 2.0 * upper));
        bool pass_lower = true;
        if (eps < 0.5) {
            const double c_eps = mixing_lower_bound_constant(eps);
            const double lower = c_eps * static_cast<double>(t_depth) / static_cast<double>(b1);
            row["c_epsilon"] = c_eps;
            row["lower_bound_uniform"] = lower;
            pass_lower = !unif.converged ||
                         static_cast<double>(unif.steps) >= std::floor(lower);
        }
        double ratio = 0.0;
        if (ec.converged && ec.steps > 0)
            ratio = static_cast<double>(unif.steps) / static_cast<double>(ec.steps);
        row["tau_ratio"] = ratio;
        row["pass_upper"] = pass_upper;
        row["pass_lower"] = pass_lower;
        all_passed = all_passed && pass_upper && pass_lower;
        per_eps.push_back(row);

        const std::string eps_str = fmt(eps);
        metrics.add("entropy-cut", "all", "tau(" + eps_str + ")",
                    static_cast<double>(ec.steps));
        metrics.add("uniform", "all", "tau(" + eps_str + ")",
                    static_cast<double>(unif.steps));
    }

    const bool uninformative = 2 * b1 > t_depth;
    metrics.add("entropy-cut", "all", "conductance_first_branch", phi_ec);
    metrics.add("uniform", "all", "conductance_first_branch", phi_unif);
    metrics.add("entropy-cut", "all", "m1", m1);
    metrics.add("entropy-cut", "all", "minorization_margin", margin);

    json report = {
        {"command", "theory-check"},
        {"seed", config.seed},
        {"generator", Rng::kName},
        {"tree",
         {{"depth", t_depth},
          {"branch_depths", tree.spec().branch_depths},
          {"branching", tree.spec().branching},
          {"eta", tree.spec().eta},
          {"semantic_depth", k},
          {"leaves", tree.leaf_count()},
          {"realized_leaf_slack", tree.build_info().realized_leaf_slack},
          {"realized_proposal_slack", proposal_slack(tree, proposal)}}},
        {"alpha", config.alpha},
        {"beta", config.cut.beta},
        {"stationarity_gap_entropy_cut", kernel_ec.stationarity_gap()},
        {"stationarity_gap_uniform", kernel_unif.stationarity_gap()},
        {"detailed_balance_gap_entropy_cut", kernel_ec.detailed_balance_gap()},
        {"detailed_balance_gap_uniform", kernel_unif.detailed_balance_gap()},
        {"m1", m1},
        {"m1_eta_bound", std::exp(2.0 * tree.build_info().realized_leaf_slack)},
        {"minorization_margin", margin},
        {"minorization_skipped_targets", skipped},
        {"conductance",
         {{"set_size", subset.size()},
          {"entropy_cut", phi_ec},
          {"uniform", phi_unif},
          {"uniform_bound_paper", static_cast<double>(b1) / static_cast<double>(t_depth)},
          {"uniform_bound_cut_set",
           static_cast<double>(b1 + 1) / static_cast<double>(t_depth + 1)},
          {"entropy_cut_bound", 1.0 / (2.0 * static_cast<double>(k))}}},
        {"mixing", per_eps},
        {"worst_start_tv_curve", tv_curves},
        {"all_passed", all_passed},
        {"timing_seconds", watch.seconds()}};
    if (uninformative)
        report["note"] = "bounds uninformative: first branch beyond T/2, no separation expected";

    const std::string dir = ensure_run_dir(config, "theory-check");
    write_file(dir + "/metrics.csv", metrics.csv);
    write_file(dir + "/report.json", report.dump(2) + "\n");
    return CommandResult{dir, std::move(report)};
}

CommandResult cmd_proxy_experiment(const ExperimentConfig& config, std::size_t workers) {
    Stopwatch watch;
    ModelBundle bundle = build_models(config, config.alpha);
    const std::size_t depth = resolve_depth(config, bundle);
    const std::size_t trials = config.proxy.trials;

    std::vector<DecileReport> reports(trials);
    parallel_chains(trials, workers, [&](std::size_t t) {
        Rng rng = Rng::substream(config.seed, t);
        reports[t] = decile_resample_experiment(*bundle.base, depth, config.proxy.cut_count,
                                                config.proxy.resamples, rng);
    });

    MetricRows metrics;
    json trials_json = json::array();
    std::size_t dominated = 0, degenerate = 0;
    double top_edit = 0, top_distinct = 0, bottom_edit = 0, bottom_distinct = 0;
    for (std::size_t t = 0; t < trials; ++t) {
        const DecileReport& r = reports[t];
        if (r.verdict == "top_dominates") ++dominated;
        if (r.verdict == "degenerate") ++degenerate;
        top_edit += r.top.mean_edit;
        top_distinct += r.top.mean_distinct;
        bottom_edit += r.bottom.mean_edit;
        bottom_distinct += r.bottom.mean_distinct;
        trials_json.push_back({{"trial", t},
                               {"verdict", r.verdict},
                               {"top_positions", r.top.positions},
                               {"bottom_positions", r.bottom.positions},
                               {"top_edit", r.top.mean_edit},
                               {"top_distinct", r.top.mean_distinct},
                               {"bottom_edit", r.bottom.mean_edit},
                               {"bottom_distinct", r.bottom.mean_distinct}});
    }
    const auto denom = static_cast<double>(trials);
    const double dominance = static_cast<double>(dominated) / denom;
    std::string verdict = "not_separated";
    if (degenerate == trials)
        verdict = "degenerate";
    else if (dominance >= 0.95)
        verdict = "top_dominates";

    metrics.add("proxy", "all", "dominance_fraction", dominance);
    metrics.add("proxy", "all", "mean_top_edit", top_edit / denom);
    metrics.add("proxy", "all", "mean_bottom_edit", bottom_edit / denom);
    metrics.add("proxy", "all", "mean_top_distinct", top_distinct / denom);
    metrics.add("proxy", "all", "mean_bottom_distinct", bottom_distinct / denom);

    const bool approximate = !bundle.base->exact_logprobs();
    json report = {{"command", "proxy-experiment"},
                   {"seed", config.seed},
                   {"generator", Rng::kName},
                   {"trials", trials},
                   {"cut_count", config.proxy.cut_count},
                   {"resamples", config.proxy.resamples},
                   {"dominance_fraction", dominance},
                   {"verdict", verdict},
                   {"approximate", approximate},
                   {"mean_top_edit", top_edit / denom},
                   {"mean_bottom_edit", bottom_edit / denom},
                   {"mean_top_distinct", top_distinct / denom},
                   {"mean_bottom_distinct", bottom_distinct / denom},
                   {"trial_details", trials_json},
                   {"timing_seconds", watch.seconds()}};

    const std::string dir = ensure_run_dir(config, "proxy-experiment");
    write_file(dir + "/metrics.csv", metrics.csv);
    write_file(dir + "/report.json", report.dump(2) + "\n");
    return CommandResult{dir, std::move(report)};
}

CommandResult cmd_sweep(const ExperimentConfig& config, std::size_t workers) {
    Stopwatch watch;
    if (!config.sweep.has_value()) throw input_error("sweep needs a sweep section");
    if (config.samplers.empty()) throw input_error("sweep needs at least one sampler");
    const SweepOptions& sweep = *config.sweep;

    std::string csv = "parameter,value,sampler,metric,metric_value\n";
    json grid_json = json::array();

    for (std::size_t g = 0; g < sweep.values.size(); ++g) {
        const double value = sweep.values[g];
        ExperimentConfig point = config;
        if (sweep.parameter == "alpha") {
            point.alpha = value;
        } else if (sweep.parameter == "beta") {
            point.cut.beta = value;
        } else if (sweep.parameter == "n_mcmc") {
            point.n_mcmc = static_cast<std::size_t>(value);
        } else {
            point.smc.particles = static_cast<std::size_t>(value);
        }
        ModelBundle bundle = build_models(point, point.alpha);
        const std::size_t depth = resolve_depth(point, bundle);
        std::optional<ExactDistribution> oracle;
        if (point.oracle.enabled && bundle.enumerable) {
            oracle = enumerate_power_distribution(*bundle.base, depth, point.alpha,
                                                  point.oracle.sequence_budget);
        }

        for (std::size_t s = 0; s < point.samplers.size(); ++s) {
            const SamplerKind kind = point.samplers[s];
            const std::string name = to_string(kind);
            const std::size_t reps = point.repetitions;
            std::vector<ChainOutcome> outcomes(reps);
            parallel_chains(reps, workers, [&](std::size_t i) {
                Rng rng = Rng::substream(point.seed,
                                         (g * point.samplers.size() + s) * reps + i);
                outcomes[i] = run_chain(kind, point, bundle, depth, rng, false);
            });

            double mean_logp = 0.0, mean_conf = 0.0, mean_accept = 0.0;
            std::size_t mh_chains = 0;
            std::vector<Sequence> sequences(reps);
            for (std::size_t i = 0; i < reps; ++i) {
                sequences[i] = outcomes[i].sequence;
                mean_logp += outcomes[i].logp_base;
                mean_conf += outcomes[i].confidence;
                if (outcomes[i].accept_rate >= 0.0) {
                    mean_accept += outcomes[i].accept_rate;
                    ++mh_chains;
                }
            }
            mean_logp /= static_cast<double>(reps);
            mean_conf /= static_cast<double>(reps);

            auto emit = [&](const std::string& metric, double v) {
                csv += sweep.parameter + "," + fmt(value) + "," + name + "," + metric + "," +
                       fmt(v) + "\n";
            };
            emit("mean_logp_base", mean_logp);
            emit("mean_avg_confidence", mean_conf);
            if (mh_chains > 0) emit("mean_accept_rate", mean_accept / mh_chains);
            json point_json = {{"parameter", sweep.parameter},
                               {"value", value},
                               {"sampler", name},
                               {"mean_logp_base", mean_logp}};
            if (oracle.has_value()) {
                const double tv = tv_to_empirical(*oracle, sequences);
                emit("tv_to_oracle", tv);
                point_json["tv_to_oracle"] = tv;
            }
            grid_json.push_back(std::move(point_json));
        }
    }

    json report = {{"command", "sweep"},
                   {"seed", config.seed},
                   {"generator", Rng::kName},
                   {"parameter", sweep.parameter},
                   {"values", sweep.values},
                   {"grid", grid_json},
                   {"timing_seconds", watch.seconds()}};
    const std::string dir = ensure_run_dir(config, "sweep");
    write_file(dir + "/metrics.csv", csv);
    write_file(dir + "/report.json", report.dump(2) + "\n");
    return CommandResult{dir, std::move(report)};
}

}  // namespace pslab
