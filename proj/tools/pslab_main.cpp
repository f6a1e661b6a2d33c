// pslab: experiment runner for power-distribution samplers on token models.
//
// Subcommands:
//   sample            run one sampler for N independent chains
//   compare           run several samplers on the same model, summary CSV
//   theory-check      exact mixing times / conductance / minorization on a tree
//   proxy-experiment  entropy-jump resampling sensitivity probe
//   sweep             grid over alpha | beta | n_mcmc | particles
//   oracle            direct exact computations (enumeration, TV, pass@k, ...)
//
// Global flags: --config FILE, --seed N, --out DIR, --workers N, --budget N.
// Exit codes: 0 ok, 2 config/input error, 3 budget refusal, 4 backend error.

#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pslab/config.hpp"
#include "pslab/errors.hpp"
#include "pslab/exact_dist.hpp"
#include "pslab/exact_kernel.hpp"
#include "pslab/harness.hpp"
#include "pslab/metrics.hpp"
#include "pslab/model_ops.hpp"

namespace {

using namespace pslab;

struct GlobalFlags {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t workers = 1;
    std::size_t budget = 0;
};

ExperimentConfig load_config(const GlobalFlags& flags) {
    if (flags.config_path.empty()) throw input_error("--config is required");
    ExperimentConfig cfg = ExperimentConfig::load_file(flags.config_path);
    if (flags.seed_set) cfg.seed = flags.seed;
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.budget != 0) {
        cfg.oracle.sequence_budget = flags.budget;
        cfg.oracle.kernel_budget = flags.budget;
    }
    return cfg;
}

void print_run(const CommandResult& result) {
    std::cout << "artifacts: " << result.run_dir << "\n";
    if (result.report.contains("samplers")) {
        for (const auto& s : result.report.at("samplers")) {
            std::cout << "  " << s.at("sampler").get<std::string>()
                      << "  mean_logp=" << s.at("mean_logp_base").dump();
            if (s.contains("tv_to_oracle"))
                std::cout << "  tv_to_oracle=" << s.at("tv_to_oracle").dump();
            if (s.contains("mean_accept_rate"))
                std::cout << "  accept=" << s.at("mean_accept_rate").dump();
            std::cout << "\n";
        }
    }
}

void print_theory(const CommandResult& result) {
    std::cout << "artifacts: " << result.run_dir << "\n";
    const auto& r = result.report;
    std::cout << "  M1=" << r.at("m1").dump()
              << "  minorization_margin=" << r.at("minorization_margin").dump() << "\n";
    std::cout << "  conductance: entropy-cut=" << r.at("conductance").at("entropy_cut").dump()
              << " uniform=" << r.at("conductance").at("uniform").dump() << "\n";
    for (const auto& row : r.at("mixing")) {
        std::cout << "  eps=" << row.at("epsilon").dump()
                  << "  tau_ec=" << row.at("tau_entropy_cut").dump()
                  << "  tau_unif=" << row.at("tau_uniform").dump()
                  << "  ratio=" << row.at("tau_ratio").dump()
                  << (row.at("pass_upper").get<bool>() && row.at("pass_lower").get<bool>()
                          ? "  [pass]"
                          : "  [FAIL]")
                  << "\n";
    }
    if (r.contains("note")) std::cout << "  note: " << r.at("note").get<std::string>() << "\n";
}

int run_cli(int argc, char** argv) {
    CLI::App app{"power-distribution sampling laboratory"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand
    GlobalFlags flags;
    app.add_option("--config", flags.config_path, "experiment config (JSON)");
    app.add_option("--out", flags.out_dir, "output directory override");
    auto* seed_opt = app.add_option("--seed", flags.seed, "seed override");
    app.add_option("--workers", flags.workers, "worker threads for chains");
    app.add_option("--budget", flags.budget, "oracle budget override");

    auto* sample = app.add_subcommand("sample", "run one sampler");
    auto* compare = app.add_subcommand("compare", "run several samplers");
    auto* theory = app.add_subcommand("theory-check", "exact mixing-theory checks on a tree");
    auto* proxy = app.add_subcommand("proxy-experiment", "entropy-jump sensitivity probe");
    auto* sweep = app.add_subcommand("sweep", "hyperparameter grid");

    auto* oracle = app.add_subcommand("oracle", "direct oracle queries");
    oracle->require_subcommand(1);

    struct OracleArgs {
        std::string model_path;
        std::string out_path;
        std::string a_path, b_path;
        double alpha = 2.0;
        double eps = 0.1;
        std::size_t depth = 0;
        std::size_t vocab = 3;
        std::uint64_t seed = 1;
        std::size_t n = 0, c = 0, k = 0;
        std::size_t budget = kDefaultSequenceBudget;
    } oargs;

    std::string out_model_path;
    auto* power = oracle->add_subcommand("power", "enumerate the power distribution");
    power->add_option("--model", oargs.model_path, "tabular model JSON")->required();
    power->add_option("--alpha", oargs.alpha, "sharpening power");
    power->add_option("--depth", oargs.depth, "sequence depth T")->required();
    power->add_option("--out", oargs.out_path, "output JSON path");
    power->add_option("--out-model", out_model_path,
                      "also export the distribution as a tabular model");
    power->add_option("--enum-budget", oargs.budget, "sequence budget");

    auto* lowtemp = oracle->add_subcommand("lowtemp", "enumerate the low-temperature chain");
    lowtemp->add_option("--model", oargs.model_path)->required();
    lowtemp->add_option("--alpha", oargs.alpha);
    lowtemp->add_option("--depth", oargs.depth)->required();
    lowtemp->add_option("--out", oargs.out_path);
    lowtemp->add_option("--out-model", out_model_path);
    lowtemp->add_option("--enum-budget", oargs.budget);

    auto* tv = oracle->add_subcommand("tv", "TV distance between two enumerated tables");
    tv->add_option("--a", oargs.a_path)->required();
    tv->add_option("--b", oargs.b_path)->required();

    auto* prop = oracle->add_subcommand("prop-a1", "two-token separation construction");
    prop->add_option("--alpha", oargs.alpha);
    prop->add_option("--eps", oargs.eps);
    prop->add_option("--out", oargs.out_path, "write the constructed model here");

    auto* passk = oracle->add_subcommand("pass-at-k", "unbiased pass@k estimate");
    passk->add_option("--n", oargs.n)->required();
    passk->add_option("--c", oargs.c)->required();
    passk->add_option("--k", oargs.k)->required();

    auto* make_tab = oracle->add_subcommand("make-tabular", "random fully-supported table");
    make_tab->add_option("--vocab", oargs.vocab);
    make_tab->add_option("--depth", oargs.depth)->required();
    make_tab->add_option("--model-seed", oargs.seed);
    make_tab->add_option("--out", oargs.out_path)->required();

    auto* export_tree = oracle->add_subcommand("export-tree",
                                               "tree from --config as a tabular model JSON");
    export_tree->add_option("--out", oargs.out_path)->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // usage errors count as config errors
    }
    flags.seed_set = seed_opt->count() > 0;

    auto dist_to_json = [](const ExactDistribution& dist) {
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t i = 0; i < dist.size(); ++i) {
            rows.push_back({{"tokens", dist.support[i]},
                            {"prob", dist.prob[i]},
                            {"base_logp", dist.base_logp[i]}});
        }
        return nlohmann::json{{"alpha", dist.alpha},
                              {"depth", dist.depth},
                              {"vocab_size", dist.vocab},
                              {"log_z", dist.log_z},
                              {"rows", std::move(rows)}};
    };
    auto emit = [&](const nlohmann::json& doc) {
        if (!oargs.out_path.empty()) {
            std::ofstream out(oargs.out_path);
            out << doc.dump(2) << "\n";
            std::cout << "wrote " << oargs.out_path << "\n";
        } else {
            std::cout << doc.dump(2) << "\n";
        }
    };

    if (sample->parsed()) return print_run(cmd_sample(load_config(flags), flags.workers)), 0;
    if (compare->parsed()) return print_run(cmd_compare(load_config(flags), flags.workers)), 0;
    if (theory->parsed()) return print_theory(cmd_theory_check(load_config(flags))), 0;
    if (proxy->parsed()) {
        const CommandResult result = cmd_proxy_experiment(load_config(flags), flags.workers);
        std::cout << "artifacts: " << result.run_dir << "\n"
                  << "  verdict: " << result.report.at("verdict").get<std::string>()
                  << "  dominance=" << result.report.at("dominance_fraction").dump() << "\n";
        return 0;
    }
    if (sweep->parsed()) {
        const CommandResult result = cmd_sweep(load_config(flags), flags.workers);
        std::cout << "artifacts: " << result.run_dir << "\n";
        return 0;
    }

    if (power->parsed() || lowtemp->parsed()) {
        TabularModel model = TabularModel::load_file(oargs.model_path);
        const ExactDistribution dist =
            power->parsed()
                ? enumerate_power_distribution(model, oargs.depth, oargs.alpha, oargs.budget)
                : exact_low_temperature_distribution(model, oargs.depth, oargs.alpha,
                                                     oargs.budget);
        if (!out_model_path.empty()) {
            to_tabular_model(dist).save_file(out_model_path);
            std::cout << "wrote " << out_model_path << "\n";
        }
        emit(dist_to_json(dist));
        return 0;
    }
    if (tv->parsed()) {
        auto load_dist = [](const std::string& path) {
            std::ifstream in(path);
            if (!in) throw input_error("cannot open " + path);
            nlohmann::json doc = nlohmann::json::parse(in);
            ExactDistribution dist;
            dist.alpha = doc.at("alpha").get<double>();
            dist.depth = doc.at("depth").get<std::size_t>();
            dist.log_z = doc.at("log_z").get<double>();
            for (const auto& row : doc.at("rows")) {
                dist.support.push_back(row.at("tokens").get<Sequence>());
                dist.prob.push_back(row.at("prob").get<double>());
                dist.base_logp.push_back(row.at("base_logp").get<double>());
            }
            return dist;
        };
        const double d = tv_distance(load_dist(oargs.a_path), load_dist(oargs.b_path));
        std::cout << nlohmann::json{{"tv", d}}.dump() << "\n";
        return 0;
    }
    if (prop->parsed()) {
        const PropA1Construction c = prop_a1_construct(oargs.alpha, oargs.eps);
        if (!oargs.out_path.empty()) c.model.save_file(oargs.out_path);
        std::cout << nlohmann::json{{"R", c.r},
                                    {"N", c.n},
                                    {"power_first_a", c.power_first_a},
                                    {"lowtemp_first_a", c.lowtemp_first_a},
                                    {"tv_guarantee", c.tv_guarantee}}
                         .dump(2)
                  << "\n";
        return 0;
    }
    if (passk->parsed()) {
        std::cout << nlohmann::json{{"pass_at_k", pass_at_k(oargs.n, oargs.c, oargs.k)}}.dump()
                  << "\n";
        return 0;
    }
    if (make_tab->parsed()) {
        random_tabular_model(oargs.vocab, oargs.depth, oargs.seed).save_file(oargs.out_path);
        std::cout << "wrote " << oargs.out_path << "\n";
        return 0;
    }
    if (export_tree->parsed()) {
        ExperimentConfig cfg = load_config(flags);
        if (cfg.source != ModelSource::kTree)
            throw input_error("export-tree needs a config with model.source = tree");
        ModelBundle bundle = build_models(cfg, 1.0);
        materialize_tabular(bundle.tree_holder->model(), bundle.tree_holder->tree().depth())
            .save_file(oargs.out_path);
        std::cout << "wrote " << oargs.out_path << "\n";
        return 0;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const budget_error& e) {
        std::cerr << "budget refusal: " << e.what() << "\n";
        return 3;
    } catch (const transport_error& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 4;
    } catch (const protocol_error& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 4;
    } catch (const capability_error& e) {
        std::cerr << "backend error: " << e.what() << "\n";
        return 4;
    } catch (const input_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
