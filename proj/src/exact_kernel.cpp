#include "pslab/exact_kernel.hpp"

#include <algorithm>
#include <cmath>

#include "pslab/errors.hpp"
#include "pslab/model_ops.hpp"

namespace pslab {

double ExactKernel::stationarity_gap() const {
    const std::size_t n = size();
    double worst = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        double flow = 0.0;
        for (std::size_t i = 0; i < n; ++i) flow += target[i] * at(i, j);
        worst = std::max(worst, std::abs(flow - target[j]));
    }
    return worst;
}

double ExactKernel::detailed_balance_gap() const {
    const std::size_t n = size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            worst = std::max(worst, std::abs(target[i] * at(i, j) - target[j] * at(j, i)));
        }
    }
    return worst;
}

double ExactKernel::max_row_sum_error() const {
    const std::size_t n = size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) sum += at(i, j);
        worst = std::max(worst, std::abs(sum - 1.0));
    }
    return worst;
}

namespace {

// Acceptance probability from suffix log-sums, with the same degenerate-case
// rules as the sampler.
double accept_from_logs(double alpha, double base_new, double base_old, double prop_old,
                        double prop_new, double lam_new, double lam_cur) {
    if (base_new == kNegInf && base_old > kNegInf) return 0.0;
    if (base_old == kNegInf && base_new > kNegInf) return 1.0;
    double log_a = (base_new == kNegInf) ? 0.0 : alpha * (base_new - base_old);
    if (prop_old == kNegInf) return 1.0;
    if (lam_new <= 0.0) return 0.0;
    log_a += prop_old - prop_new;
    log_a += std::log(lam_new) - std::log(lam_cur);
    const double a = std::min(1.0, std::exp(log_a));
    return a >= 0.0 ? a : 0.0;
}

}  // namespace

ExactKernel exact_mh_kernel(const TokenModel& base, const TokenModel& proposal,
                            const CutLaw& law, double alpha, std::size_t depth,
                            std::size_t state_budget) {
    const ExactDistribution target = enumerate_power_distribution(base, depth, alpha, state_budget);
    const std::size_t n = target.size();
    const std::size_t len = depth + 1;
    const std::size_t vocab = base.vocab_size();

    // Per-state position arrays: base/proposal suffix log-sums, entropy
    // profile, cut weights.
    std::vector<std::vector<double>> base_sfx(n), prop_sfx(n), weights(n);
    {
        std::vector<double> dist(vocab);
        std::vector<double> base_lp(len), prop_lp(len), profile(len);
        for (std::size_t i = 0; i < n; ++i) {
            const Sequence& seq = target.support[i];
            for (std::size_t t = 0; t < len; ++t) {
                const std::span<const TokenId> prefix(seq.data(), t);
                base.next_dist_into(prefix, dist);
                base_lp[t] = log_or_neg_inf(dist[seq[t]]);
                profile[t] = entropy_of(dist);
                proposal.next_dist_into(prefix, dist);
                prop_lp[t] = log_or_neg_inf(dist[seq[t]]);
            }
            base_sfx[i].assign(len + 1, 0.0);
            prop_sfx[i].assign(len + 1, 0.0);
            for (std::size_t t = len; t-- > 0;) {
                base_sfx[i][t] = base_sfx[i][t + 1] + base_lp[t];
                prop_sfx[i][t] = prop_sfx[i][t + 1] + prop_lp[t];
            }
            weights[i] = law.weights_from_profile(profile);
        }
    }

    ExactKernel kernel;
    kernel.states = target.support;
    kernel.target = target.prob;
    kernel.matrix.assign(n * n, 0.0);

    for (std::size_t i = 0; i < n; ++i) {
        double off_diagonal = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            const Sequence& x = kernel.states[i];
            const Sequence& y = kernel.states[j];
            std::size_t lcp = 0;
            while (lcp < len && x[lcp] == y[lcp]) ++lcp;
            double p = 0.0;
            for (std::size_t m = 0; m <= lcp; ++m) {
                const double lam_i = weights[i][m];
                if (lam_i <= 0.0) continue;
                const double q = std::exp(prop_sfx[j][m]);  // 0 when unreachable
                if (q <= 0.0) continue;
                const double a =
                    accept_from_logs(alpha, base_sfx[j][m], base_sfx[i][m], prop_sfx[i][m],
                                     prop_sfx[j][m], weights[j][m], lam_i);
                p += lam_i * q * a;
            }
            kernel.matrix[i * n + j] = p;
            off_diagonal += p;
        }
        kernel.matrix[i * n + i] = std::max(0.0, 1.0 - off_diagonal);
    }
    return kernel;
}

namespace {

double worst_start_tv(const ExactKernel& kernel, const std::vector<double>& matrix) {
    const std::size_t n = kernel.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            acc += std::abs(matrix[i * n + j] - kernel.target[j]);
        worst = std::max(worst, 0.5 * acc);
    }
    return worst;
}

std::vector<double> mat_mul(const std::vector<double>& a, const std::vector<double>& b,
                            std::size_t n) {
    std::vector<double> out(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const double aik = a[i * n + k];
            if (aik == 0.0) continue;
            const double* brow = &b[k * n];
            double* orow = &out[i * n];
            for (std::size_t j = 0; j < n; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

}  // namespace

MixingResult mixing_time(const ExactKernel& kernel, double eps, std::size_t step_budget) {
    if (!(eps > 0.0 && eps < 1.0)) throw input_error("mixing tolerance must lie in (0, 1)");
    if (step_budget == 0) throw input_error("step budget must be >= 1");
    if (kernel.stationarity_gap() > 1e-9)
        throw input_error("kernel is not stationary for its target distribution");

    const std::size_t n = kernel.size();
    MixingResult result;

    // Diagnostic worst-start TV curve over the first few steps.
    if (n <= 512) {
        std::vector<double> m = kernel.matrix;
        const std::size_t cap = std::min<std::size_t>(step_budget, 128);
        for (std::size_t s = 1; s <= cap; ++s) {
            result.tv_curve.push_back(worst_start_tv(kernel, m));
            if (result.tv_curve.back() <= eps / 16.0) break;  // long past converged
            if (s < cap) m = mat_mul(m, kernel.matrix, n);
        }
    }

    // n = 0 check: P^0 = I.
    {
        double worst = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j)
                acc += std::abs((i == j ? 1.0 : 0.0) - kernel.target[j]);
            worst = std::max(worst, 0.5 * acc);
        }
        if (worst <= eps) {
            result.converged = true;
            result.steps = 0;
            return result;
        }
    }

    // Exponential phase: square until TV(P^(2^k)) <= eps or the budget caps.
    std::vector<std::vector<double>> powers;  // powers[k] = P^(2^k)
    powers.push_back(kernel.matrix);
    std::size_t k = 0;
    while (worst_start_tv(kernel, powers[k]) > eps) {
        const std::size_t reached = std::size_t{1} << k;
        if (reached >= step_budget) {
            result.converged = false;
            result.steps = step_budget;
            return result;
        }
        powers.push_back(mat_mul(powers[k], powers[k], n));
        ++k;
    }
    if (k == 0) {
        result.converged = true;
        result.steps = 1;
        return result;
    }

    // Monotone search: grow the largest exponent whose TV still exceeds eps.
    std::vector<double> m = powers[k - 1];  // TV > eps here
    std::size_t steps = std::size_t{1} << (k - 1);
    for (std::size_t j = k - 1; j-- > 0;) {
        std::vector<double> cand = mat_mul(m, powers[j], n);
        if (worst_start_tv(kernel, cand) > eps) {
            m = std::move(cand);
            steps += std::size_t{1} << j;
        }
    }
    result.converged = true;
    result.steps = steps + 1;
    if (result.steps > step_budget) {
        result.converged = false;
        result.steps = step_budget;
    }
    return result;
}

double conductance(const ExactKernel& kernel, std::span<const std::size_t> subset) {
    const std::size_t n = kernel.size();
    std::vector<bool> in_set(n, false);
    double mass = 0.0;
    for (std::size_t idx : subset) {
        if (idx >= n) throw input_error("subset index out of range");
        if (in_set[idx]) throw input_error("subset contains a duplicate index");
        in_set[idx] = true;
        mass += kernel.target[idx];
    }
    if (!(mass > 0.0)) throw input_error("conductance needs a subset with positive mass");
    if (mass > 0.5 + 1e-12)
        throw input_error("conductance needs target mass at most 1/2");
    double flow = 0.0;
    for (std::size_t i : subset) {
        double escape = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (!in_set[j]) escape += kernel.at(i, j);
        }
        flow += kernel.target[i] * escape;
    }
    return flow / mass;
}

double minorization_margin(const ExactKernel& kernel, std::size_t k_branches, double m1,
                           std::size_t* skipped) {
    if (k_branches == 0 || !(m1 > 0.0))
        throw input_error("minorization check needs k >= 1 and M1 > 0");
    const std::size_t n = kernel.size();
    const double rho = 1.0 / (m1 * static_cast<double>(k_branches));
    double margin = std::numeric_limits<double>::infinity();
    std::size_t skip_count = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const double bound = rho * kernel.target[j];
        if (!(bound > 0.0)) {
            ++skip_count;
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            margin = std::min(margin, kernel.at(i, j) / bound);
        }
    }
    if (skipped != nullptr) *skipped = skip_count;
    if (margin == std::numeric_limits<double>::infinity())
        throw input_error("every target entry is zero; nothing to certify");
    return margin;
}

double m1_constant(const ReasoningTree& tree, const TokenModel& proposal, double alpha) {
    const std::size_t b1 = tree.spec().branch_depths.front();
    const std::size_t depth = tree.depth();
    const std::size_t leaves = tree.leaf_count();

    // Power-target masses over leaves.
    std::vector<double> scaled(leaves);
    for (std::size_t i = 0; i < leaves; ++i) scaled[i] = alpha * std::log(tree.leaf_mass(i));
    const double log_z = log_sum_exp(scaled);

    std::vector<double> dist(proposal.vocab_size());
    double worst = 0.0;
    for (std::size_t i = 0; i < leaves; ++i) {
        const Sequence seq = tree.leaf_sequence(i);
        double q = 0.0;
        for (std::size_t t = b1; t <= depth; ++t) {
            proposal.next_dist_into(std::span<const TokenId>(seq).first(t), dist);
            q += log_or_neg_inf(dist[seq[t]]);
        }
        if (q == kNegInf)
            throw input_error("proposal assigns zero mass to a supported leaf suffix");
        const double ratio = std::exp(scaled[i] - log_z - q);
        worst = std::max(worst, ratio);
    }
    return worst;
}

std::vector<std::size_t> first_branch_set(const ReasoningTree& tree, const ExactKernel& kernel,
                                          double alpha) {
    const std::size_t leaves = tree.leaf_count();
    const std::size_t d1 = tree.spec().branching.front();
    const std::size_t chunk = leaves / d1;

    std::vector<double> scaled(leaves);
    for (std::size_t i = 0; i < leaves; ++i) scaled[i] = alpha * std::log(tree.leaf_mass(i));
    const double log_z = log_sum_exp(scaled);

    // Leaves are lexicographic, so the first-branch children own contiguous
    // ordinal ranges.
    std::size_t best_child = 0;
    double best_mass = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < d1; ++c) {
        double mass = 0.0;
        for (std::size_t i = c * chunk; i < (c + 1) * chunk; ++i)
            mass += std::exp(scaled[i] - log_z);
        if (mass < best_mass) {
            best_mass = mass;
            best_child = c;
        }
    }

    std::vector<std::size_t> subset;
    subset.reserve(chunk);
    for (std::size_t i = best_child * chunk; i < (best_child + 1) * chunk; ++i) {
        const Sequence seq = tree.leaf_sequence(i);
        const auto it = std::lower_bound(
            kernel.states.begin(), kernel.states.end(), seq, [](const Sequence& a, const Sequence& b) {
                return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
            });
        if (it == kernel.states.end() || *it != seq)
            throw input_error("kernel states do not cover the tree leaves");
        subset.push_back(static_cast<std::size_t>(it - kernel.states.begin()));
    }
    return subset;
}

double mixing_lower_bound_constant(double eps) {
    if (!(eps > 0.0 && eps < 0.5))
        throw input_error("the lower-bound constant needs eps in (0, 1/2)");
    return 0.25 * std::log(1.0 / (eps + 0.5));
}

}  // namespace pslab
