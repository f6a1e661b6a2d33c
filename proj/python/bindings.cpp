// Python bindings over the core sampling operations: local models, the
// stagewise MH samplers, baselines, and the exact oracles. Remote-backed
// models stay on the C++/CLI side.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pslab/cut_laws.hpp"
#include "pslab/errors.hpp"
#include "pslab/exact_dist.hpp"
#include "pslab/exact_kernel.hpp"
#include "pslab/metrics.hpp"
#include "pslab/mh_sampler.hpp"
#include "pslab/model_ops.hpp"
#include "pslab/reasoning_tree.hpp"
#include "pslab/smc.hpp"
#include "pslab/tabular_model.hpp"
#include "pslab/tmc.hpp"

namespace py = pybind11;
using namespace pslab;

namespace {

EntropyCutParams cut_params(double beta, double epsilon) {
    EntropyCutParams params;
    params.beta = beta;
    params.epsilon = epsilon;
    params.validate();
    return params;
}

std::unique_ptr<CutLaw> make_law(const std::string& name, double beta, double epsilon) {
    if (name == "uniform") return std::make_unique<UniformCutLaw>();
    if (name == "entropy-cut") return std::make_unique<EntropyCutLaw>(cut_params(beta, epsilon));
    throw input_error("unknown cut law: " + name);
}

py::dict record_to_dict(const ProposalRecord& rec) {
    py::dict d;
    d["stage"] = rec.stage;
    d["step"] = rec.step;
    d["m"] = rec.cut;
    d["A"] = rec.accept_prob;
    d["accepted"] = rec.accepted;
    d["logp_base_old"] = rec.logp_base_old;
    d["logp_base_new"] = rec.logp_base_new;
    return d;
}

}  // namespace

PYBIND11_MODULE(pslab, m) {
    m.doc() = "sampling laboratory for power distributions over token models";

    py::register_exception<input_error>(m, "InputError", PyExc_ValueError);
    py::register_exception<budget_error>(m, "BudgetError", PyExc_RuntimeError);
    py::register_exception<degeneracy_error>(m, "DegeneracyError", PyExc_RuntimeError);

    py::class_<TokenModel>(m, "TokenModel")
        .def_property_readonly("vocab_size", &TokenModel::vocab_size)
        .def(
            "next_dist",
            [](const TokenModel& model, const Sequence& prefix) {
                return model.next_dist(prefix).probs;
            },
            py::arg("prefix"));

    py::class_<TabularModel, TokenModel>(m, "TabularModel")
        .def_property_readonly("max_depth", &TabularModel::max_depth)
        .def_static("load", &TabularModel::load_file, py::arg("path"))
        .def("save", &TabularModel::save_file, py::arg("path"))
        .def_static("random", &random_tabular_model, py::arg("vocab"), py::arg("depth"),
                    py::arg("seed"));

    py::class_<LowTemperatureModel, TokenModel>(m, "LowTemperatureModel");
    m.def(
        "low_temperature_model",
        [](const TokenModel& base, double alpha) {
            return std::make_unique<LowTemperatureModel>(base, alpha);
        },
        py::arg("base"), py::arg("alpha"), py::keep_alive<0, 1>());

    py::class_<TreeModel, TokenModel>(m, "TreeModel");

    py::class_<ReasoningTree>(m, "ReasoningTree")
        .def_property_readonly("depth", &ReasoningTree::depth)
        .def_property_readonly("leaf_count", &ReasoningTree::leaf_count)
        .def_property_readonly("semantic_depth", &ReasoningTree::semantic_depth)
        .def_property_readonly("vocab_size", &ReasoningTree::vocab_size)
        .def("leaf_sequence", &ReasoningTree::leaf_sequence, py::arg("leaf"))
        .def("leaf_mass", &ReasoningTree::leaf_mass, py::arg("leaf"))
        .def(
            "classify_positions",
            [](const ReasoningTree& tree, const Sequence& path) {
                std::vector<std::string> kinds;
                for (PositionKind kind : tree.classify_positions(path))
                    kinds.push_back(kind == PositionKind::kBranch ? "branch" : "chain");
                return kinds;
            },
            py::arg("path"))
        .def("path_to_sequence", &ReasoningTree::path_to_sequence, py::arg("index"))
        .def(
            "sequence_to_path",
            [](const ReasoningTree& tree, const Sequence& path) {
                return tree.sequence_to_path(path);
            },
            py::arg("path"))
        .def("model", &ReasoningTree::model)
        .def_property_readonly("realized_leaf_slack", [](const ReasoningTree& tree) {
            return tree.build_info().realized_leaf_slack;
        });

    m.def(
        "build_symmetric_tree",
        [](std::size_t depth, std::vector<std::size_t> branch_depths,
           std::vector<std::size_t> branching, double eta, const std::string& labeling,
           std::uint64_t seed) {
            SymmetricTreeSpec spec;
            spec.depth = depth;
            spec.branch_depths = std::move(branch_depths);
            spec.branching = std::move(branching);
            spec.eta = eta;
            spec.labeling = tree_labeling_from_string(labeling);
            Rng rng(seed);
            return ReasoningTree::build_symmetric(spec, rng);
        },
        py::arg("depth"), py::arg("branch_depths"), py::arg("branching"), py::arg("eta") = 0.0,
        py::arg("labeling") = "compact", py::arg("seed") = 0);

    m.def(
        "seq_logprob",
        [](const TokenModel& model, const Sequence& seq) { return seq_logprob(model, seq); },
        py::arg("model"), py::arg("seq"));
    m.def(
        "entropy_profile",
        [](const TokenModel& model, const Sequence& seq) { return entropy_profile(model, seq); },
        py::arg("model"), py::arg("seq"));
    m.def(
        "entropy_jumps",
        [](const std::vector<double>& profile) { return entropy_jumps(profile); },
        py::arg("profile"));
    m.def(
        "avg_confidence",
        [](const TokenModel& model, const Sequence& seq) { return avg_confidence(model, seq); },
        py::arg("model"), py::arg("seq"));
    m.def(
        "sample_autoregressive",
        [](const TokenModel& model, std::size_t depth, std::uint64_t seed) {
            Rng rng(seed);
            return sample_autoregressive(model, depth, rng);
        },
        py::arg("model"), py::arg("depth"), py::arg("seed"));

    m.def("uniform_cut_weights", &uniform_cut_weights, py::arg("positions"));
    m.def(
        "entropy_cut_weights",
        [](const TokenModel& model, const Sequence& seq, double beta, double epsilon) {
            return entropy_cut_weights(model, seq, cut_params(beta, epsilon));
        },
        py::arg("model"), py::arg("seq"), py::arg("beta") = 4.0, py::arg("epsilon") = 0.0);

    m.def(
        "run_stagewise",
        [](const TokenModel& base, const TokenModel& proposal, const std::string& law,
           double alpha, std::size_t depth, std::size_t block, std::size_t n_mcmc, double beta,
           double epsilon, std::uint64_t seed, bool record_trace) {
            StageConfig config;
            config.depth = depth;
            config.block = block == 0 ? std::max<std::size_t>(1, depth / 16) : block;
            config.n_mcmc = n_mcmc;
            config.alpha = alpha;
            StagewiseOptions options;
            options.record_trace = record_trace;
            Rng rng(seed);
            const auto cut_law = make_law(law, beta, epsilon);
            const StagewiseResult result =
                run_stagewise(base, proposal, *cut_law, config, rng, options);
            py::dict out;
            out["sequence"] = result.sequence;
            out["acceptance_rate"] = result.acceptance_rate();
            py::list trace;
            for (const auto& rec : result.trace) trace.append(record_to_dict(rec));
            out["trace"] = trace;
            return out;
        },
        py::arg("base"), py::arg("proposal"), py::arg("law") = "entropy-cut",
        py::arg("alpha") = 4.0, py::arg("depth") = 0, py::arg("block") = 0,
        py::arg("n_mcmc") = 10, py::arg("beta") = 4.0, py::arg("epsilon") = 0.0,
        py::arg("seed") = 0, py::arg("record_trace") = false);

    m.def(
        "smc_sample",
        [](const TokenModel& base, const TokenModel& proposal, double alpha, std::size_t depth,
           std::size_t particles, double ess_threshold, std::uint64_t seed) {
            SmcOptions options;
            options.particles = particles;
            options.ess_threshold = ess_threshold;
            Rng rng(seed);
            return smc_sample(base, proposal, alpha, depth, options, rng);
        },
        py::arg("base"), py::arg("proposal"), py::arg("alpha"), py::arg("depth"),
        py::arg("particles") = 64, py::arg("ess_threshold") = 0.5, py::arg("seed") = 0);

    m.def(
        "tmc_sample",
        [](const TokenModel& base, double alpha, std::size_t depth, std::size_t block,
           std::size_t candidates, std::size_t rollouts, const std::string& selection,
           std::uint64_t seed) {
            TmcParams params;
            params.block = block;
            params.candidates = candidates;
            params.rollouts = rollouts;
            params.selection = tmc_selection_from_string(selection);
            Rng rng(seed);
            return tmc_sample(base, alpha, depth, params, rng);
        },
        py::arg("base"), py::arg("alpha"), py::arg("depth"), py::arg("block") = 192,
        py::arg("candidates") = 8, py::arg("rollouts") = 8, py::arg("selection") = "softmax",
        py::arg("seed") = 0);

    m.def(
        "effective_sample_size",
        [](const std::vector<double>& lw) { return effective_sample_size(lw); },
        py::arg("log_weights"));
    m.def(
        "resample_systematic",
        [](const std::vector<double>& lw, std::uint64_t seed) {
            Rng rng(seed);
            return resample_systematic(lw, rng);
        },
        py::arg("log_weights"), py::arg("seed"));

    py::class_<ExactDistribution>(m, "ExactDistribution")
        .def_readonly("support", &ExactDistribution::support)
        .def_readonly("probs", &ExactDistribution::prob)
        .def_readonly("base_logps", &ExactDistribution::base_logp)
        .def_readonly("log_z", &ExactDistribution::log_z)
        .def("__len__", &ExactDistribution::size);

    m.def("enumerate_power_distribution", &enumerate_power_distribution, py::arg("model"),
          py::arg("depth"), py::arg("alpha"), py::arg("budget") = kDefaultSequenceBudget);
    m.def("exact_low_temperature_distribution", &exact_low_temperature_distribution,
          py::arg("model"), py::arg("depth"), py::arg("alpha"),
          py::arg("budget") = kDefaultSequenceBudget);
    m.def("tv_distance", &tv_distance, py::arg("a"), py::arg("b"));
    m.def("tv_to_empirical", &tv_to_empirical, py::arg("exact"), py::arg("samples"));
    m.def(
        "prop_a1_construct",
        [](double alpha, double eps) {
            PropA1Construction c = prop_a1_construct(alpha, eps);
            py::dict out;
            out["R"] = c.r;
            out["N"] = c.n;
            out["power_first_a"] = c.power_first_a;
            out["lowtemp_first_a"] = c.lowtemp_first_a;
            out["tv_guarantee"] = c.tv_guarantee;
            out["model"] = py::cast(std::move(c.model));
            return out;
        },
        py::arg("alpha"), py::arg("eps"));

    py::class_<ExactKernel>(m, "ExactKernel")
        .def_readonly("states", &ExactKernel::states)
        .def_readonly("target", &ExactKernel::target)
        .def("at", &ExactKernel::at, py::arg("i"), py::arg("j"))
        .def("stationarity_gap", &ExactKernel::stationarity_gap)
        .def("detailed_balance_gap", &ExactKernel::detailed_balance_gap)
        .def("__len__", &ExactKernel::size);

    m.def(
        "exact_mh_kernel",
        [](const TokenModel& base, const TokenModel& proposal, const std::string& law,
           double alpha, std::size_t depth, double beta, double epsilon, std::size_t budget) {
            const auto cut_law = make_law(law, beta, epsilon);
            return exact_mh_kernel(base, proposal, *cut_law, alpha, depth, budget);
        },
        py::arg("base"), py::arg("proposal"), py::arg("law"), py::arg("alpha"), py::arg("depth"),
        py::arg("beta") = 4.0, py::arg("epsilon") = 0.0,
        py::arg("budget") = kDefaultKernelBudget);

    m.def(
        "mixing_time",
        [](const ExactKernel& kernel, double eps, std::size_t budget) {
            const MixingResult result = mixing_time(kernel, eps, budget);
            return py::make_tuple(result.converged, result.steps);
        },
        py::arg("kernel"), py::arg("eps"), py::arg("budget") = kDefaultStepBudget);
    m.def(
        "conductance",
        [](const ExactKernel& kernel, const std::vector<std::size_t>& subset) {
            return conductance(kernel, subset);
        },
        py::arg("kernel"), py::arg("subset"));
    m.def(
        "minorization_margin",
        [](const ExactKernel& kernel, std::size_t k, double m1) {
            return minorization_margin(kernel, k, m1);
        },
        py::arg("kernel"), py::arg("k"), py::arg("m1"));
    m.def("m1_constant", &m1_constant, py::arg("tree"), py::arg("proposal"), py::arg("alpha"));
    m.def("first_branch_set", &first_branch_set, py::arg("tree"), py::arg("kernel"),
          py::arg("alpha"));
    m.def("mixing_lower_bound_constant", &mixing_lower_bound_constant, py::arg("eps"));

    m.def("pass_at_k", &pass_at_k, py::arg("n"), py::arg("c"), py::arg("k"));
    m.def(
        "levenshtein",
        [](const Sequence& a, const Sequence& b) { return levenshtein(a, b); },
        py::arg("a"), py::arg("b"));
    m.def("normalized_edit_distance", &normalized_edit_distance, py::arg("suffixes"));
    m.def(
        "distinct_answer_fraction",
        [](const Sequence& answers) { return distinct_answer_fraction(answers); },
        py::arg("answers"));
    m.def(
        "decile_resample_experiment",
        [](const TokenModel& model, std::size_t depth, std::size_t cut_count,
           std::size_t resamples, std::uint64_t seed) {
            Rng rng(seed);
            const DecileReport rep =
                decile_resample_experiment(model, depth, cut_count, resamples, rng);
            py::dict out;
            out["verdict"] = rep.verdict;
            out["top_positions"] = rep.top.positions;
            out["bottom_positions"] = rep.bottom.positions;
            out["top_edit"] = rep.top.mean_edit;
            out["bottom_edit"] = rep.bottom.mean_edit;
            out["top_distinct"] = rep.top.mean_distinct;
            out["bottom_distinct"] = rep.bottom.mean_distinct;
            return out;
        },
        py::arg("model"), py::arg("depth"), py::arg("cut_count"), py::arg("resamples"),
        py::arg("seed"));

    m.def(
        "materialize_tabular",
        [](const TokenModel& model, std::size_t depth) {
            return materialize_tabular(model, depth);
        },
        py::arg("model"), py::arg("depth"));
}
