#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "pslab/config.hpp"
#include "pslab/errors.hpp"
#include "pslab/harness.hpp"
#include "pslab/logprob_server.hpp"

using namespace pslab;
using namespace pslab::testing;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string scratch_dir() {
    static int counter = 0;
    const auto dir =
        fs::temp_directory_path() / ("pslab_test_" + std::to_string(::getpid())) /
        std::to_string(counter++);
    fs::create_directories(dir);
    return dir.string();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

json tree_config(const std::string& out_dir) {
    return json{{"schema_version", 1},
                {"seed", 12},
                {"out_dir", out_dir},
                {"repetitions", 40},
                {"model",
                 {{"source", "tree"},
                  {"tree",
                   {{"depth", 8},
                    {"branch_depths", {2, 5}},
                    {"branching", {2, 2}},
                    {"eta", 0.0}}}}},
                {"sampler", "entropy-cut-mh"},
                {"power", {{"alpha", 4.0}}},
                {"cut", {{"beta", 4.0}, {"epsilon_floor", 0.0}}},
                {"stage", {{"depth", 8}, {"block", 8}, {"n_mcmc", 5}}},
                {"oracle", {{"enabled", true}}}};
}

ExperimentConfig parse(const json& doc) {
    return ExperimentConfig::from_json_text(doc.dump(2));
}

}  // namespace

TEST_CASE("unknown config keys are errors, not warnings") {
    json doc = tree_config(scratch_dir());
    doc["n_mcmcc"] = 10;  // typo
    CHECK_THROWS_AS(parse(doc), input_error);

    json nested = tree_config(scratch_dir());
    nested["stage"]["n_mcmcc"] = 10;
    CHECK_THROWS_AS(parse(nested), input_error);
}

TEST_CASE("config validation catches structural mistakes") {
    json doc = tree_config(scratch_dir());
    doc.erase("model");
    CHECK_THROWS_AS(parse(doc), input_error);

    doc = tree_config(scratch_dir());
    doc["model"]["source"] = "magic";
    CHECK_THROWS_AS(parse(doc), input_error);

    doc = tree_config(scratch_dir());
    doc["sampler"] = "gibbs";
    CHECK_THROWS_AS(parse(doc), input_error);

    doc = tree_config(scratch_dir());
    doc["power"]["alpha"] = 0.5;
    CHECK_THROWS_AS(parse(doc), input_error);

    doc = tree_config(scratch_dir());
    doc.erase("schema_version");
    CHECK_THROWS_AS(parse(doc), input_error);

    doc = tree_config(scratch_dir());
    doc["model"]["path"] = "/nonexistent/model.json";
    doc["model"]["source"] = "tabular";
    CHECK_THROWS_AS(cmd_sample(parse(doc)), input_error);
}

TEST_CASE("cmd_sample writes the full artifact set") {
    const std::string out = scratch_dir();
    const ExperimentConfig config = parse(tree_config(out));
    const CommandResult result = cmd_sample(config);

    CHECK(fs::exists(result.run_dir + "/config.snapshot"));
    CHECK(fs::exists(result.run_dir + "/sequences.jsonl"));
    CHECK(fs::exists(result.run_dir + "/trace.jsonl"));
    CHECK(fs::exists(result.run_dir + "/metrics.csv"));
    CHECK(fs::exists(result.run_dir + "/report.json"));

    CHECK(read_file(result.run_dir + "/config.snapshot") == config.snapshot);

    std::istringstream lines(read_file(result.run_dir + "/sequences.jsonl"));
    std::string line;
    std::size_t rows = 0;
    while (std::getline(lines, line)) {
        const json rec = json::parse(line);
        CHECK(rec.at("tokens").size() == 9);
        ++rows;
    }
    CHECK(rows == 40);
    CHECK(result.report.at("generator") == "splitmix64");
    CHECK(result.report.at("samplers").at(0).contains("tv_to_oracle"));
}

TEST_CASE("reruns are byte-identical regardless of worker count") {
    json doc = tree_config(scratch_dir());
    const ExperimentConfig config = parse(doc);
    const CommandResult first = cmd_sample(config, 1);
    const std::string sequences = read_file(first.run_dir + "/sequences.jsonl");
    const std::string trace = read_file(first.run_dir + "/trace.jsonl");
    const std::string metrics = read_file(first.run_dir + "/metrics.csv");

    const CommandResult again = cmd_sample(config, 3);
    CHECK(read_file(again.run_dir + "/sequences.jsonl") == sequences);
    CHECK(read_file(again.run_dir + "/trace.jsonl") == trace);
    CHECK(read_file(again.run_dir + "/metrics.csv") == metrics);

    // out_dir does not influence the chain streams
    json moved = tree_config(scratch_dir());
    const CommandResult elsewhere = cmd_sample(parse(moved), 2);
    CHECK(read_file(elsewhere.run_dir + "/sequences.jsonl") == sequences);
}

TEST_CASE("compare needs at least two samplers and reports per-sampler rows") {
    json doc = tree_config(scratch_dir());
    CHECK_THROWS_AS(cmd_compare(parse(doc)), input_error);

    doc.erase("sampler");
    doc["samplers"] = {"entropy-cut-mh", "uniform-cut-mh", "smc"};
    doc["smc"] = {{"particles", 16}, {"ess_threshold", 0.5}};
    const CommandResult result = cmd_compare(parse(doc));
    REQUIRE(result.report.at("samplers").size() == 3);
    for (const auto& row : result.report.at("samplers"))
        CHECK(row.at("tv_to_oracle").get<double>() <= 1.0);
    const std::string metrics = read_file(result.run_dir + "/metrics.csv");
    CHECK(metrics.find("entropy-cut-mh,all,tv_to_oracle") != std::string::npos);
    CHECK(metrics.find("smc,all,mean_logp_base") != std::string::npos);
}

TEST_CASE("theory-check passes on the uniform tree and writes a report") {
    json doc = tree_config(scratch_dir());
    doc.erase("sampler");
    doc["theory"] = {{"epsilons", {0.25, 0.1}}};
    const CommandResult result = cmd_theory_check(parse(doc));
    CHECK(result.report.at("all_passed").get<bool>());
    CHECK(result.report.at("m1").get<double>() == doctest::Approx(1.0));
    CHECK(result.report.at("minorization_margin").get<double>() >= 1.0 - 1e-9);
    CHECK(result.report.at("tree").at("realized_proposal_slack").get<double>() ==
          doctest::Approx(0.0));
    const json mixing = result.report.at("mixing");
    REQUIRE(mixing.size() == 2);
    for (const auto& row : mixing) {
        CHECK(row.at("tau_entropy_cut").get<std::size_t>() <=
              row.at("tau_uniform").get<std::size_t>());
    }
    CHECK(fs::exists(result.run_dir + "/report.json"));
}

TEST_CASE("theory-check flags uninformative geometries") {
    json doc = tree_config(scratch_dir());
    doc.erase("sampler");
    doc["model"]["tree"] = {{"depth", 8},
                            {"branch_depths", {8}},
                            {"branching", {2}},
                            {"eta", 0.0}};
    const CommandResult result = cmd_theory_check(parse(doc));
    CHECK(result.report.contains("note"));
}

TEST_CASE("theory-check refuses non-tree models") {
    json doc = tree_config(scratch_dir());
    doc["model"] = {{"source", "tabular"}, {"path", "whatever.json"}};
    CHECK_THROWS_AS(cmd_theory_check(parse(doc)), input_error);
}

TEST_CASE("proxy experiment dominates on an answer-labeled tree") {
    json doc = tree_config(scratch_dir());
    doc.erase("sampler");
    doc["model"]["tree"] = {{"depth", 40},
                            {"branch_depths", {20, 28}},
                            {"branching", {4, 4}},
                            {"eta", 0.0},
                            {"labeling", "answer"}};
    doc["stage"] = {{"depth", 40}, {"block", 40}, {"n_mcmc", 0}};
    doc["proxy"] = {{"cut_count", 2}, {"resamples", 16}, {"trials", 20}};
    const CommandResult result = cmd_proxy_experiment(parse(doc), 2);
    CHECK(result.report.at("verdict") == "top_dominates");
    CHECK(result.report.at("dominance_fraction").get<double>() == 1.0);
    CHECK(result.report.at("mean_top_edit").get<double>() >
          result.report.at("mean_bottom_edit").get<double>());
}

TEST_CASE("proxy experiment on a deterministic-ish model is degenerate") {
    // single-leaf tree: one branch of width 2 collapsed by eta = 0 still has
    // two leaves, so use a chain-heavy tabular file instead
    const std::string out = scratch_dir();
    const std::string model_path = out + "/det.json";
    deterministic_model(2, 12).save_file(model_path);
    json doc = tree_config(out);
    doc.erase("sampler");
    doc["model"] = {{"source", "tabular"}, {"path", model_path}};
    doc["stage"] = {{"depth", 12}, {"block", 12}, {"n_mcmc", 0}};
    doc["proxy"] = {{"cut_count", 1}, {"resamples", 8}, {"trials", 3}};
    const CommandResult result = cmd_proxy_experiment(parse(doc));
    CHECK(result.report.at("verdict") == "degenerate");
}

TEST_CASE("sweep emits one row per grid point and matches equivalences") {
    const std::string out = scratch_dir();
    json doc = tree_config(out);
    doc["repetitions"] = 60;
    doc["sweep"] = {{"parameter", "beta"}, {"values", {0.0, 4.0}}};
    const CommandResult result = cmd_sweep(parse(doc));
    const std::string csv = read_file(result.run_dir + "/metrics.csv");
    CHECK(csv.find("beta,0.0,entropy-cut-mh,tv_to_oracle") != std::string::npos);
    CHECK(csv.find("beta,4.0,entropy-cut-mh,tv_to_oracle") != std::string::npos);

    // beta = 0 grid point equals a uniform-cut run with the same streams
    json unif = tree_config(out);
    unif["repetitions"] = 60;
    unif["sampler"] = "uniform-cut-mh";
    const CommandResult uniform_run = cmd_sample(parse(unif));
    const double tv_sweep_beta0 =
        result.report.at("grid").at(0).at("tv_to_oracle").get<double>();
    const double tv_uniform =
        uniform_run.report.at("samplers").at(0).at("tv_to_oracle").get<double>();
    CHECK(tv_sweep_beta0 == tv_uniform);
}

TEST_CASE("alpha sweep targets the matching power distribution") {
    json doc = tree_config(scratch_dir());
    doc["repetitions"] = 300;
    doc["stage"]["n_mcmc"] = 12;
    doc["sweep"] = {{"parameter", "alpha"}, {"values", {1.0, 4.0}}};
    const CommandResult result = cmd_sweep(parse(doc), 2);
    for (const auto& row : result.report.at("grid")) {
        // eta = 0 tree: the target is uniform over leaves for every alpha,
        // so both rows should be close to their oracle
        CHECK(row.at("tv_to_oracle").get<double>() <= 0.15);
    }
}

TEST_CASE("compare shows low-temperature sampling missing the power target") {
    const std::string out = scratch_dir();
    const std::string model_path = out + "/prop_a1.json";
    prop_a1_construct(2.0, 0.1).model.save_file(model_path);

    // Uniform cuts recover the target here; entropy cuts would not, since on
    // this instance the big entropy jump sits at the non-decision position.
    json doc = {{"schema_version", 1},
                {"seed", 5},
                {"out_dir", out},
                {"repetitions", 2000},
                {"model", {{"source", "tabular"}, {"path", model_path}}},
                {"samplers", {"low-temperature", "uniform-cut-mh"}},
                {"power", {{"alpha", 2.0}}},
                {"stage", {{"depth", 1}, {"block", 2}, {"n_mcmc", 200}}},
                {"oracle", {{"enabled", true}}}};
    const CommandResult result = cmd_compare(parse(doc));
    const auto& rows = result.report.at("samplers");
    REQUIRE(rows.size() == 2);
    const double tv_lowtemp = rows.at(0).at("tv_to_oracle").get<double>();
    const double tv_mh = rows.at(1).at("tv_to_oracle").get<double>();
    CHECK(tv_lowtemp >= 0.9);
    CHECK(tv_mh < 0.2);
}

TEST_CASE("compare separates the cut laws on the deep tree at a tight budget") {
    // eta > 0 keeps the proposal away from the sharpened target, so the
    // chains actually have to mix within the step budget
    json doc = tree_config(scratch_dir());
    doc["model"]["tree"] = {{"depth", 64},
                            {"branch_depths", {2, 32, 48}},
                            {"branching", {2, 2, 2}},
                            {"eta", 0.4}};
    doc["stage"] = {{"depth", 64}, {"block", 64}, {"n_mcmc", 6}};
    doc["repetitions"] = 3000;
    doc.erase("sampler");
    doc["samplers"] = {"entropy-cut-mh", "uniform-cut-mh"};
    const CommandResult result = cmd_compare(parse(doc), 2);
    const double tv_ec = result.report.at("samplers").at(0).at("tv_to_oracle").get<double>();
    const double tv_unif = result.report.at("samplers").at(1).at("tv_to_oracle").get<double>();
    CHECK(tv_ec < tv_unif);
}

TEST_CASE("more MH steps never hurt, within statistical error") {
    const std::string out = scratch_dir();
    const std::string model_path = out + "/model.json";
    random_tabular_model(3, 4, 20260808).save_file(model_path);
    json doc = {{"schema_version", 1},
                {"seed", 8},
                {"out_dir", out},
                {"repetitions", 3000},
                {"model", {{"source", "tabular"}, {"path", model_path}}},
                {"sampler", "entropy-cut-mh"},
                {"power", {{"alpha", 2.0}}},
                {"stage", {{"depth", 4}, {"block", 4}, {"n_mcmc", 10}}},
                {"oracle", {{"enabled", true}}},
                {"sweep", {{"parameter", "n_mcmc"}, {"values", {0, 10, 200}}}}};
    const CommandResult result = cmd_sweep(parse(doc));
    const auto& grid = result.report.at("grid");
    REQUIRE(grid.size() == 3);
    const double tv0 = grid.at(0).at("tv_to_oracle").get<double>();
    const double tv10 = grid.at(1).at("tv_to_oracle").get<double>();
    const double tv200 = grid.at(2).at("tv_to_oracle").get<double>();
    CHECK(tv10 <= tv0 + 0.02);
    CHECK(tv200 <= tv10 + 0.02);
    CHECK(tv200 < tv0);  // the proposal alone misses the power target
}

TEST_CASE("the reported TV equals an independent recomputation from the artifacts") {
    const std::string out = scratch_dir();
    const std::string model_path = out + "/model.json";
    random_tabular_model(3, 4, 20260808).save_file(model_path);
    json doc = {{"schema_version", 1},
                {"seed", 21},
                {"out_dir", out},
                {"repetitions", 500},
                {"model", {{"source", "tabular"}, {"path", model_path}}},
                {"sampler", "entropy-cut-mh"},
                {"power", {{"alpha", 2.0}}},
                {"stage", {{"depth", 4}, {"block", 4}, {"n_mcmc", 30}}},
                {"oracle", {{"enabled", true}}}};
    const CommandResult result = cmd_sample(parse(doc));
    const double reported =
        result.report.at("samplers").at(0).at("tv_to_oracle").get<double>();

    const TabularModel model = TabularModel::load_file(model_path);
    const ExactDistribution target = enumerate_power_distribution(model, 4, 2.0);
    std::vector<Sequence> sequences;
    std::istringstream lines(read_file(result.run_dir + "/sequences.jsonl"));
    std::string line;
    while (std::getline(lines, line))
        sequences.push_back(json::parse(line).at("tokens").get<Sequence>());
    REQUIRE(sequences.size() == 500);
    CHECK(tv_to_empirical(target, sequences) == reported);
}

TEST_CASE("the particle-count sweep runs SMC at each grid point") {
    json doc = tree_config(scratch_dir());
    doc["repetitions"] = 200;
    doc.erase("sampler");
    doc["samplers"] = {"smc"};
    doc["smc"] = {{"particles", 8}, {"ess_threshold", 0.5}};
    doc["sweep"] = {{"parameter", "particles"}, {"values", {8, 64}}};
    const CommandResult result = cmd_sweep(parse(doc));
    const auto& grid = result.report.at("grid");
    REQUIRE(grid.size() == 2);
    for (const auto& row : grid) CHECK(row.at("tv_to_oracle").get<double>() <= 0.5);
}

TEST_CASE("pass@k metrics appear when correctness labels are configured") {
    json doc = tree_config(scratch_dir());
    doc["model"]["tree"]["labeling"] = "answer";
    doc["repetitions"] = 16;
    doc["correctness"] = {{"answer_tokens", {0, 1}}, {"k", {1, 4}}};
    const CommandResult result = cmd_sample(parse(doc));
    const auto& row = result.report.at("samplers").at(0);
    REQUIRE(row.contains("correctness"));
    CHECK(row.at("correctness").contains("pass@1"));
    CHECK(row.at("correctness").contains("pass@4"));
    const double p1 = row.at("correctness").at("pass@1").get<double>();
    const double p4 = row.at("correctness").at("pass@4").get<double>();
    CHECK(p1 <= p4);
}

TEST_CASE("remote config round-trips through the harness") {
    const TabularModel model = random_tabular_model(3, 4, 20260808);
    LogprobServer server(model);
    json doc = tree_config(scratch_dir());
    doc["repetitions"] = 30;
    doc["model"] = {{"source", "remote"},
                    {"remote",
                     {{"endpoint", server.endpoint()},
                      {"timeout_ms", 2000},
                      {"max_retries", 1},
                      {"cache_capacity", 4096}}}};
    doc["stage"] = {{"depth", 4}, {"block", 8}, {"n_mcmc", 10}};
    doc["power"] = {{"alpha", 2.0}};
    doc["oracle"] = {{"enabled", false}};
    const CommandResult result = cmd_sample(parse(doc));
    CHECK(result.report.at("samplers").at(0).contains("mean_logp_base"));
    CHECK_FALSE(result.report.at("approximate_model").get<bool>());
}

#ifdef PSLAB_CLI_PATH
TEST_CASE("CLI end-to-end: run, rerun, exit codes") {
    const std::string out = scratch_dir();
    const std::string config_path = out + "/config.json";
    {
        std::ofstream f(config_path);
        json doc = tree_config(out);
        doc["repetitions"] = 10;
        f << doc.dump(2);
    }
    const std::string cli = PSLAB_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("sample --config " + config_path) == 0);
    CHECK(run("sample --config " + config_path + " --workers 3") == 0);
    CHECK(run("theory-check --config " + config_path) == 0);
    CHECK(run("sample --config /nonexistent.json") == 2);
    CHECK(run("sample --config " + config_path + " --budget 2") == 3);
    CHECK(run("oracle pass-at-k --n 5 --c 1 --k 2") == 0);

    // the tree from the config exports as a loadable tabular model
    CHECK(run("oracle export-tree --config " + config_path + " --out " + out + "/tree.json") ==
          0);
    const TabularModel exported = TabularModel::load_file(out + "/tree.json");
    CHECK(enumerate_power_distribution(exported, 8, 1.0).size() == 4);

    // bad subcommand / flag
    CHECK(run("frobnicate") != 0);
}

TEST_CASE("CLI artifacts are byte-identical across reruns and workers") {
    const std::string out = scratch_dir();
    const std::string config_path = out + "/config.json";
    {
        std::ofstream f(config_path);
        json doc = tree_config(out);
        doc["repetitions"] = 12;
        f << doc.dump(2);
    }
    const std::string cli = PSLAB_CLI_PATH;
    auto run = [&](const std::string& args) {
        const std::string cmd = cli + " " + args + " >/dev/null 2>&1";
        return WEXITSTATUS(std::system(cmd.c_str()));
    };
    REQUIRE(run("sample --config " + config_path + " --workers 1") == 0);
    // artifacts land in a run-id dir derived from (config bytes, seed)
    std::string run_dir;
    for (const auto& entry : fs::directory_iterator(out)) {
        if (entry.is_directory()) run_dir = entry.path().string();
    }
    REQUIRE(!run_dir.empty());
    const std::string sequences = read_file(run_dir + "/sequences.jsonl");
    const std::string trace = read_file(run_dir + "/trace.jsonl");
    REQUIRE(run("sample --config " + config_path + " --workers 4") == 0);
    CHECK(read_file(run_dir + "/sequences.jsonl") == sequences);
    CHECK(read_file(run_dir + "/trace.jsonl") == trace);
}
#endif
