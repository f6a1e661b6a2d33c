#include "pslab/tabular_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "pslab/errors.hpp"

namespace pslab {

TabularModel::TabularModel(std::size_t vocab, std::size_t max_depth)
    : vocab_(vocab), max_depth_(max_depth) {
    if (vocab_ == 0) throw input_error("tabular model needs vocab_size >= 1");
    nodes_.push_back(Node{{}, std::vector<std::int32_t>(vocab_, -1)});
}

std::int32_t TabularModel::walk(std::span<const TokenId> prefix) const {
    std::int32_t node = 0;
    for (TokenId tok : prefix) {
        if (tok >= vocab_) throw input_error("token id out of range: " + std::to_string(tok));
        node = nodes_[static_cast<std::size_t>(node)].child[tok];
        if (node < 0) return -1;
    }
    return node;
}

std::int32_t TabularModel::walk_or_create(std::span<const TokenId> prefix) {
    std::int32_t node = 0;
    for (TokenId tok : prefix) {
        if (tok >= vocab_) throw input_error("token id out of range: " + std::to_string(tok));
        std::int32_t next = nodes_[static_cast<std::size_t>(node)].child[tok];
        if (next < 0) {
            next = static_cast<std::int32_t>(nodes_.size());
            nodes_[static_cast<std::size_t>(node)].child[tok] = next;
            nodes_.push_back(Node{{}, std::vector<std::int32_t>(vocab_, -1)});
        }
        node = next;
    }
    return node;
}

void TabularModel::next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const {
    if (prefix.size() > max_depth_)
        throw input_error("prefix longer than the model depth");
    std::int32_t node = 0;
    for (TokenId tok : prefix) {
        if (tok >= vocab_) throw input_error("token id out of range: " + std::to_string(tok));
        const auto& cur = nodes_[static_cast<std::size_t>(node)];
        if (cur.probs.empty())
            throw input_error("tabular model has no row for a supported prefix of " +
                              sequence_to_string(prefix));
        if (cur.probs[tok] <= 0.0) {
            // Zero-probability transition: everything below is off-support,
            // extended uniformly so such states can still be scored.
            std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
            return;
        }
        node = cur.child[tok];
        if (node < 0)
            throw input_error("tabular model has no row for prefix " +
                              sequence_to_string(prefix));
    }
    const auto& row = nodes_[static_cast<std::size_t>(node)].probs;
    if (row.empty())
        throw input_error("tabular model has no row for prefix " + sequence_to_string(prefix));
    std::copy(row.begin(), row.end(), out.begin());
}

void TabularModel::set_row(std::span<const TokenId> prefix, std::span<const double> probs) {
    if (prefix.size() > max_depth_) throw input_error("row prefix longer than the model depth");
    if (probs.size() != vocab_) throw input_error("row size does not match vocab_size");
    double sum = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0)) throw input_error("row has a negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw input_error("row probabilities sum to " + std::to_string(sum));
    const std::int32_t node = walk_or_create(prefix);
    auto& stored = nodes_[static_cast<std::size_t>(node)].probs;
    stored.assign(probs.begin(), probs.end());
    if (std::abs(sum - 1.0) > 1e-12) {
        for (double& p : stored) p /= sum;
    }
}

bool TabularModel::has_row(std::span<const TokenId> prefix) const {
    const std::int32_t node = walk(prefix);
    return node >= 0 && !nodes_[static_cast<std::size_t>(node)].probs.empty();
}

void TabularModel::collect_rows(std::int32_t node, Sequence& prefix, nlohmann::json& rows) const {
    const auto& n = nodes_[static_cast<std::size_t>(node)];
    if (!n.probs.empty()) {
        rows.push_back({{"prefix", prefix}, {"probs", n.probs}});
    }
    for (TokenId tok = 0; tok < vocab_; ++tok) {
        if (n.child[tok] < 0) continue;
        prefix.push_back(tok);
        collect_rows(n.child[tok], prefix, rows);
        prefix.pop_back();
    }
}

nlohmann::json TabularModel::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    Sequence prefix;
    collect_rows(0, prefix, rows);
    return {{"vocab_size", vocab_}, {"max_depth", max_depth_}, {"rows", std::move(rows)}};
}

TabularModel TabularModel::from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("vocab_size") || !doc.contains("max_depth") ||
        !doc.contains("rows"))
        throw input_error("tabular model document needs vocab_size, max_depth and rows");
    TabularModel model(doc.at("vocab_size").get<std::size_t>(),
                       doc.at("max_depth").get<std::size_t>());
    for (const auto& row : doc.at("rows")) {
        const auto prefix = row.at("prefix").get<Sequence>();
        const auto probs = row.at("probs").get<std::vector<double>>();
        model.set_row(prefix, probs);
    }
    return model;
}

TabularModel TabularModel::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw input_error("cannot open model file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw input_error("malformed model file " + path + ": " + e.what());
    }
    return from_json(doc);
}

void TabularModel::save_file(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw input_error("cannot write model file: " + path);
    out << to_json().dump(2) << "\n";
}

TabularModel random_tabular_model(std::size_t vocab, std::size_t max_depth, std::uint64_t seed) {
    TabularModel model(vocab, max_depth);
    Rng rng(seed);
    std::vector<double> row(vocab);
    Sequence prefix;
    // depth-first over all prefixes; every row fully supported
    auto fill = [&](auto&& self, std::size_t depth) -> void {
        double sum = 0.0;
        for (double& p : row) {
            // -log(U) is Exponential(1); normalizing gives Dirichlet(1)
            p = -std::log(1.0 - rng.next_double());
            sum += p;
        }
        for (double& p : row) p /= sum;
        model.set_row(prefix, row);
        if (depth == max_depth) return;
        for (TokenId tok = 0; tok < vocab; ++tok) {
            prefix.push_back(tok);
            self(self, depth + 1);
            prefix.pop_back();
        }
    };
    fill(fill, 0);
    return model;
}

TabularModel materialize_tabular(const TokenModel& model, std::size_t max_depth,
                                 std::size_t row_budget) {
    TabularModel table(model.vocab_size(), max_depth);
    Sequence prefix;
    std::size_t rows = 0;
    auto fill = [&](auto&& self, std::size_t depth) -> void {
        if (++rows > row_budget)
            throw budget_error("materialization exceeds the row budget of " +
                               std::to_string(row_budget));
        std::vector<double> row(model.vocab_size());
        model.next_dist_into(prefix, row);
        table.set_row(prefix, row);
        if (depth == max_depth) return;
        for (TokenId tok = 0; tok < table.vocab_size(); ++tok) {
            if (row[tok] <= 0.0) continue;
            prefix.push_back(tok);
            self(self, depth + 1);
            prefix.pop_back();
        }
    };
    fill(fill, 0);
    return table;
}

}  // namespace pslab
