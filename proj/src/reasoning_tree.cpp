#include "pslab/reasoning_tree.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/errors.hpp"
#include "pslab/model_ops.hpp"

namespace pslab {

TreeLabeling tree_labeling_from_string(const std::string& name) {
    if (name == "compact") return TreeLabeling::kCompact;
    if (name == "answer") return TreeLabeling::kAnswerFinal;
    throw input_error("unknown tree labeling: " + name);
}

std::string to_string(TreeLabeling labeling) {
    return labeling == TreeLabeling::kCompact ? "compact" : "answer";
}

void SymmetricTreeSpec::validate() const {
    if (branch_depths.empty()) throw input_error("tree spec needs at least one branch depth");
    if (branch_depths.size() != branching.size())
        throw input_error("branch_depths and branching must have equal length");
    std::size_t prev = 0;
    for (std::size_t b : branch_depths) {
        if (b < 1 || b > depth)
            throw input_error("branch depth " + std::to_string(b) + " outside [1, T]");
        if (b <= prev && prev != 0)
            throw input_error("branch depths must be strictly increasing");
        prev = b;
    }
    for (std::size_t d : branching) {
        if (d < 2) throw input_error("branching factors must be >= 2");
    }
    if (!(eta >= 0.0)) throw input_error("eta must be >= 0");
    if (leaf_count() > (std::size_t{1} << 31)) throw input_error("tree spec has too many leaves");
}

std::size_t SymmetricTreeSpec::leaf_count() const {
    std::size_t count = 1;
    for (std::size_t d : branching) count *= d;
    return count;
}

struct ReasoningTree::Data {
    struct Node {
        TokenId label = 0;  // unused for the root
        double mass = 0.0;
        std::size_t leaves_below = 0;
        std::vector<std::int32_t> children;
    };

    SymmetricTreeSpec spec;
    TreeBuildInfo info;
    std::size_t vocab = 1;
    std::vector<Node> nodes;              // nodes[0] = root
    std::vector<std::int32_t> leaf_node;  // lexicographic order
    std::vector<double> leaf_mass;

    std::int32_t child_with_label(std::int32_t node, TokenId label) const {
        for (std::int32_t c : nodes[static_cast<std::size_t>(node)].children) {
            if (nodes[static_cast<std::size_t>(c)].label == label) return c;
        }
        return -1;
    }
};

ReasoningTree ReasoningTree::build_symmetric(const SymmetricTreeSpec& spec, Rng& rng) {
    spec.validate();
    auto data = std::make_shared<Data>();
    data->spec = spec;

    const std::size_t leaf_count = spec.leaf_count();
    std::size_t max_branching = 1;
    for (std::size_t d : spec.branching) max_branching = std::max(max_branching, d);
    const bool answer_at_final =
        spec.labeling == TreeLabeling::kAnswerFinal &&
        (spec.branch_depths.empty() || spec.branch_depths.back() != spec.depth);
    data->vocab = answer_at_final ? std::max(max_branching, leaf_count) : max_branching;

    // Positions 0..T; position t is branch j when t == b_j.
    std::vector<std::size_t> branch_at(spec.depth + 1, 0);  // 0 = chain, else d_j
    for (std::size_t j = 0; j < spec.branch_depths.size(); ++j)
        branch_at[spec.branch_depths[j]] = spec.branching[j];

    data->nodes.push_back({});
    auto grow = [&](auto&& self, std::int32_t node, std::size_t position) -> void {
        if (position > spec.depth) {
            data->leaf_node.push_back(node);
            return;
        }
        const std::size_t fanout = branch_at[position] == 0 ? 1 : branch_at[position];
        for (std::size_t c = 0; c < fanout; ++c) {
            TokenId label = static_cast<TokenId>(c);
            if (answer_at_final && position == spec.depth)
                label = static_cast<TokenId>(data->leaf_node.size());
            const auto id = static_cast<std::int32_t>(data->nodes.size());
            data->nodes.push_back({label, 0.0, 0, {}});
            data->nodes[static_cast<std::size_t>(node)].children.push_back(id);
            self(self, id, position + 1);
        }
    };
    grow(grow, 0, 0);

    // Leaf masses: log-uniform perturbations of the uniform law, renormalized.
    data->leaf_mass.assign(leaf_count, 1.0 / static_cast<double>(leaf_count));
    if (spec.eta > 0.0) {
        double total = 0.0;
        for (double& w : data->leaf_mass) {
            w = std::exp((2.0 * rng.next_double() - 1.0) * spec.eta);
            total += w;
        }
        for (double& w : data->leaf_mass) w /= total;
    }
    double slack = 0.0;
    for (double w : data->leaf_mass)
        slack = std::max(slack, std::abs(std::log(w * static_cast<double>(leaf_count))));
    data->info = TreeBuildInfo{spec.eta, slack};

    // Node masses and leaf counts, bottom-up. Nodes were created parent
    // before child, so a reverse sweep sees children first.
    for (std::size_t i = 0; i < leaf_count; ++i) {
        auto& leaf = data->nodes[static_cast<std::size_t>(data->leaf_node[i])];
        leaf.mass = data->leaf_mass[i];
        leaf.leaves_below = 1;
    }
    for (std::size_t i = data->nodes.size(); i-- > 0;) {
        auto& node = data->nodes[i];
        if (node.children.empty()) continue;
        node.mass = 0.0;
        node.leaves_below = 0;
        for (std::int32_t c : node.children) {
            node.mass += data->nodes[static_cast<std::size_t>(c)].mass;
            node.leaves_below += data->nodes[static_cast<std::size_t>(c)].leaves_below;
        }
    }
    return ReasoningTree(std::move(data));
}

std::size_t ReasoningTree::depth() const { return data_->spec.depth; }
std::size_t ReasoningTree::vocab_size() const { return data_->vocab; }
std::size_t ReasoningTree::leaf_count() const { return data_->leaf_node.size(); }
std::size_t ReasoningTree::semantic_depth() const { return data_->spec.semantic_depth(); }
const SymmetricTreeSpec& ReasoningTree::spec() const { return data_->spec; }
const TreeBuildInfo& ReasoningTree::build_info() const { return data_->info; }

Sequence ReasoningTree::leaf_sequence(std::size_t leaf) const {
    if (leaf >= leaf_count()) throw input_error("leaf index out of range");
    // Walk down from the root, descending into the child whose subtree
    // contains the requested leaf ordinal.
    Sequence seq(depth() + 1);
    std::int32_t cur = 0;
    std::size_t ordinal = leaf;
    for (std::size_t t = 0; t <= depth(); ++t) {
        std::int32_t next = -1;
        for (std::int32_t c : data_->nodes[static_cast<std::size_t>(cur)].children) {
            const auto& child = data_->nodes[static_cast<std::size_t>(c)];
            if (ordinal < child.leaves_below) {
                seq[t] = child.label;
                next = c;
                break;
            }
            ordinal -= child.leaves_below;
        }
        if (next < 0) throw input_error("corrupt tree: leaf ordinal walk failed");
        cur = next;
    }
    return seq;
}

double ReasoningTree::leaf_mass(std::size_t leaf) const {
    if (leaf >= leaf_count()) throw input_error("leaf index out of range");
    return data_->leaf_mass[leaf];
}

std::vector<PositionKind> ReasoningTree::classify_positions(std::span<const TokenId> path) const {
    if (path.size() != depth() + 1)
        throw input_error("path length does not match the tree depth");
    std::vector<PositionKind> kinds(path.size());
    std::int32_t node = 0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        const auto& n = data_->nodes[static_cast<std::size_t>(node)];
        kinds[t] = n.children.size() >= 2 ? PositionKind::kBranch : PositionKind::kChain;
        node = data_->child_with_label(node, path[t]);
        if (node < 0)
            throw input_error("path is not a root-to-leaf path of this tree");
    }
    return kinds;
}

Sequence ReasoningTree::path_to_sequence(const PathIndex& index) const {
    const auto& spec = data_->spec;
    if (index.size() != spec.semantic_depth())
        throw input_error("path index length does not match the semantic depth");
    for (std::size_t j = 0; j < index.size(); ++j) {
        if (index[j] < 1 || index[j] > spec.branching[j])
            throw input_error("branch choice out of range at position " + std::to_string(j));
    }
    Sequence seq(depth() + 1);
    std::int32_t node = 0;
    std::size_t j = 0;
    for (std::size_t t = 0; t <= depth(); ++t) {
        const auto& n = data_->nodes[static_cast<std::size_t>(node)];
        std::size_t pick = 0;
        if (n.children.size() >= 2) pick = index[j++] - 1;
        node = n.children[pick];
        seq[t] = data_->nodes[static_cast<std::size_t>(node)].label;
    }
    return seq;
}

PathIndex ReasoningTree::sequence_to_path(std::span<const TokenId> path) const {
    if (path.size() != depth() + 1)
        throw input_error("path length does not match the tree depth");
    PathIndex index;
    std::int32_t node = 0;
    for (std::size_t t = 0; t < path.size(); ++t) {
        const auto& n = data_->nodes[static_cast<std::size_t>(node)];
        std::int32_t next = -1;
        for (std::size_t c = 0; c < n.children.size(); ++c) {
            if (data_->nodes[static_cast<std::size_t>(n.children[c])].label == path[t]) {
                next = n.children[c];
                if (n.children.size() >= 2) index.push_back(c + 1);
                break;
            }
        }
        if (next < 0) throw input_error("path is not a root-to-leaf path of this tree");
        node = next;
    }
    return index;
}

TreeModel ReasoningTree::model() const { return TreeModel(data_); }

std::size_t TreeModel::vocab_size() const { return data_->vocab; }

void TreeModel::next_dist_into(std::span<const TokenId> prefix, std::span<double> out) const {
    if (prefix.size() > data_->spec.depth)
        throw input_error("prefix longer than the tree depth");
    std::int32_t node = 0;
    for (TokenId tok : prefix) {
        node = data_->child_with_label(node, tok);
        if (node < 0) {
            // Off-tree prefixes carry zero sequence probability; extend the
            // model uniformly there so broader proposals can still be scored.
            std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
            return;
        }
    }
    std::fill(out.begin(), out.end(), 0.0);
    const auto& n = data_->nodes[static_cast<std::size_t>(node)];
    for (std::int32_t c : n.children) {
        const auto& child = data_->nodes[static_cast<std::size_t>(c)];
        out[child.label] = child.mass / n.mass;
    }
}

double proposal_slack(const ReasoningTree& tree, const TokenModel& proposal) {
    const std::size_t depth = tree.depth();
    double worst = 0.0;
    std::vector<double> dist(proposal.vocab_size());
    for (std::size_t leaf = 0; leaf < tree.leaf_count(); ++leaf) {
        const Sequence seq = tree.leaf_sequence(leaf);
        // per-position proposal logprobs
        std::vector<double> lp(depth + 1);
        for (std::size_t t = 0; t <= depth; ++t) {
            proposal.next_dist_into(std::span<const TokenId>(seq).first(t), dist);
            lp[t] = log_or_neg_inf(dist[seq[t]]);
        }
        // leaves under each prefix, walked down the tree
        std::vector<double> suffix_lp(depth + 2, 0.0);
        for (std::size_t t = depth + 1; t-- > 0;) suffix_lp[t] = suffix_lp[t + 1] + lp[t];
        const auto kinds = tree.classify_positions(seq);
        double log_u = 0.0;  // log U(x_{>t} | x_{0:t}) accumulated from the back
        for (std::size_t t = depth; t-- > 0;) {
            // moving the boundary to t adds position t+1's branching choice
            if (kinds[t + 1] == PositionKind::kBranch) {
                const std::size_t j =
                    static_cast<std::size_t>(std::find(tree.spec().branch_depths.begin(),
                                                       tree.spec().branch_depths.end(), t + 1) -
                                             tree.spec().branch_depths.begin());
                log_u -= std::log(static_cast<double>(tree.spec().branching[j]));
            }
            worst = std::max(worst, log_u - suffix_lp[t + 1]);
        }
    }
    return worst;
}

}  // namespace pslab
