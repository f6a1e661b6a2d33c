#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

// Explicit per-prefix probability table, stored as a trie over prefixes.
// Rows are required for every prefix reachable with positive probability up
// to max_depth. Prefixes behind a zero-probability transition need no rows:
// queries there return a uniform row, so states outside the support can
// still be scored (their sequence probability is zero either way).
class TabularModel final : public TokenModel {
  public:
    TabularModel(std::size_t vocab, std::size_t max_depth);

    std::size_t vocab_size() const override { return vocab_; }
    std::size_t max_depth() const { return max_depth_; }

    void next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const override;

    // Installs (or overwrites) the row for one prefix. probs has vocab_size
    // entries, nonnegative; sums within 1e-9 of 1 (renormalized when the
    // error exceeds 1e-12, rejected beyond 1e-9).
    void set_row(std::span<const TokenId> prefix, std::span<const double> probs);

    bool has_row(std::span<const TokenId> prefix) const;
    std::size_t row_count() const { return nodes_.size(); }

    // JSON document: {"vocab_size": V, "max_depth": T, "rows":
    //   [{"prefix": [ids], "probs": [floats]}, ...]}
    nlohmann::json to_json() const;
    static TabularModel from_json(const nlohmann::json& doc);
    static TabularModel load_file(const std::string& path);
    void save_file(const std::string& path) const;

  private:
    struct Node {
        std::vector<double> probs;         // empty until set_row
        std::vector<std::int32_t> child;   // -1 where absent
    };

    std::int32_t walk(std::span<const TokenId> prefix) const;  // -1 when missing
    std::int32_t walk_or_create(std::span<const TokenId> prefix);
    void collect_rows(std::int32_t node, Sequence& prefix, nlohmann::json& rows) const;

    std::size_t vocab_;
    std::size_t max_depth_;
    std::vector<Node> nodes_;  // nodes_[0] is the root (empty prefix)
};

// Random fully-supported table: each row is an independent Dirichlet(1)
// draw (normalized exponentials), deterministic in the seed.
TabularModel random_tabular_model(std::size_t vocab, std::size_t max_depth, std::uint64_t seed);

// Snapshot any model's supported prefixes up to depth into an explicit table.
// row_budget caps the number of rows; throws budget_error beyond it.
TabularModel materialize_tabular(const TokenModel& model, std::size_t max_depth,
                                 std::size_t row_budget = 1 << 22);

}  // namespace pslab
