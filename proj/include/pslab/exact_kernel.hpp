#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pslab/cut_laws.hpp"
#include "pslab/exact_dist.hpp"
#include "pslab/reasoning_tree.hpp"
#include "pslab/token_model.hpp"
#include "pslab/types.hpp"

namespace pslab {

inline constexpr std::size_t kDefaultKernelBudget = 4096;
inline constexpr std::size_t kDefaultStepBudget = 1'000'000;

// Dense one-step MH transition matrix over the support of the target power
// distribution, with the rejection mass absorbed on the diagonal.
struct ExactKernel {
    std::vector<Sequence> states;  // lexicographic support order
    std::vector<double> target;    // Pi over states
    std::vector<double> matrix;    // row-major, states.size()^2

    std::size_t size() const { return states.size(); }
    double at(std::size_t i, std::size_t j) const { return matrix[i * size() + j]; }

    double stationarity_gap() const;      // max_j |(Pi P)_j - Pi_j|
    double detailed_balance_gap() const;  // max_{i,j} |Pi_i P_ij - Pi_j P_ji|
    double max_row_sum_error() const;
};

// Assembles P(x,y) = sum_m lambda(m;x) Q_m(x,y) A_m(x,y) for y != x over all
// complete sequences with positive target mass. Throws budget_error when the
// support exceeds state_budget.
ExactKernel exact_mh_kernel(const TokenModel& base, const TokenModel& proposal,
                            const CutLaw& law, double alpha, std::size_t depth,
                            std::size_t state_budget = kDefaultKernelBudget);

struct MixingResult {
    bool converged = false;
    std::size_t steps = 0;          // tau(eps) when converged
    std::vector<double> tv_curve;   // worst-start TV at n = 1, 2, ... (diagnostic)
};

// Smallest n with max_x TV(P^n(x,.), Pi) <= eps, by repeated squaring and a
// monotone search. Validates stationarity first. When the step budget is
// exhausted, returns converged = false with steps = budget.
MixingResult mixing_time(const ExactKernel& kernel, double eps,
                         std::size_t step_budget = kDefaultStepBudget);

// (1 / Pi(A)) sum_{x in A} Pi(x) P(x, A^c). Requires 0 < Pi(A) <= 1/2.
double conductance(const ExactKernel& kernel, std::span<const std::size_t> subset);

// min over pairs of P(x,y) / ((1/(m1*k)) Pi(y)); >= 1 certifies the
// minorization P(x,.) >= (1/(m1 k)) Pi. Zero-mass targets are skipped and
// counted in skipped when provided.
double minorization_margin(const ExactKernel& kernel, std::size_t k_branches, double m1,
                           std::size_t* skipped = nullptr);

// Proposal-imbalance constant: max over leaves of
// Pi_T(leaf) / q(suffix from the first branch | common prefix).
double m1_constant(const ReasoningTree& tree, const TokenModel& proposal, double alpha);

// Kernel-state indices of the leaves sharing the smallest-mass first-branch
// child: the canonical low-conductance candidate set.
std::vector<std::size_t> first_branch_set(const ReasoningTree& tree, const ExactKernel& kernel,
                                          double alpha);

// Proof-level constant c_eps = (1/4) log(1/(eps + 1/2)) for eps in (0, 1/2).
double mixing_lower_bound_constant(double eps);

}  // namespace pslab
