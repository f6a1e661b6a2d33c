#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pslab/rng.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

// How tree nodes are token-labeled.
//  kCompact:     child j of a branch node gets token j; chain nodes token 0.
//  kAnswerFinal: like kCompact, except the final position (when it is a
//                chain position) carries the leaf's index, so the last token
//                announces which leaf the path ended at. This gives synthetic
//                traces a parseable "final answer".
enum class TreeLabeling { kCompact, kAnswerFinal };

TreeLabeling tree_labeling_from_string(const std::string& name);
std::string to_string(TreeLabeling labeling);

enum class PositionKind { kChain, kBranch };

// Branch choices (r_1..r_k), 1-based, identifying one leaf of a symmetric tree.
using PathIndex = std::vector<std::size_t>;

struct SymmetricTreeSpec {
    std::size_t depth = 0;                   // T: paths are x_{0:T}, depth+1 tokens
    std::vector<std::size_t> branch_depths;  // b_1 < ... < b_k, each in [1, T]
    std::vector<std::size_t> branching;      // d_1..d_k, each >= 2
    double eta = 0.0;                        // symmetry slack (>= 0)
    TreeLabeling labeling = TreeLabeling::kCompact;

    void validate() const;
    std::size_t semantic_depth() const { return branch_depths.size(); }  // k
    std::size_t leaf_count() const;
};

struct TreeBuildInfo {
    double nominal_eta = 0.0;
    // max |log(leaf_count * mass(leaf))| after renormalization; realized
    // Condition-1 slack of the base leaf masses (<= 2 * nominal).
    double realized_leaf_slack = 0.0;
};

class TreeModel;

// Rooted token-labeled tree whose root-to-leaf paths carry all probability
// mass. Immutable after construction; cheap to copy (shared data).
class ReasoningTree {
  public:
    // Leaf masses are exp(u)/Z with u ~ Uniform[-eta, eta] per leaf
    // (eta = 0 makes them exactly uniform).
    static ReasoningTree build_symmetric(const SymmetricTreeSpec& spec, Rng& rng);

    std::size_t depth() const;       // T
    std::size_t vocab_size() const;
    std::size_t leaf_count() const;
    std::size_t semantic_depth() const;  // k
    const SymmetricTreeSpec& spec() const;
    const TreeBuildInfo& build_info() const;

    // Leaves in lexicographic token order.
    Sequence leaf_sequence(std::size_t leaf) const;
    double leaf_mass(std::size_t leaf) const;

    // Position t is a branch iff the prefix x_{0:t-1} has >= 2 children.
    // Throws input_error when path is not a root-to-leaf path of this tree.
    std::vector<PositionKind> classify_positions(std::span<const TokenId> path) const;

    // Bijection between branch-choice vectors and leaf sequences.
    Sequence path_to_sequence(const PathIndex& index) const;
    PathIndex sequence_to_path(std::span<const TokenId> path) const;

    // TokenModel view: conditionals are subtree-mass ratios; every token not
    // labeling a child of the current prefix has probability zero.
    TreeModel model() const;

    struct Data;

  private:
    explicit ReasoningTree(std::shared_ptr<const Data> data) : data_(std::move(data)) {}
    std::shared_ptr<const Data> data_;
    friend class TreeModel;
};

class TreeModel final : public TokenModel {
  public:
    std::size_t vocab_size() const override;
    void next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const override;

  private:
    explicit TreeModel(std::shared_ptr<const ReasoningTree::Data> data) : data_(std::move(data)) {}
    std::shared_ptr<const ReasoningTree::Data> data_;
    friend class ReasoningTree;
};

// Realized Condition-2 slack: max over paths and positions t of
// log( U(x_{>t} | x_{0:t}) / q(x_{>t} | x_{0:t}) ), where U is uniform over
// leaves. Reported rather than assumed.
double proposal_slack(const ReasoningTree& tree, const TokenModel& proposal);

}  // namespace pslab
