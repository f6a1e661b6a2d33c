#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pslab {

// Tokens are opaque ids in [0, vocab_size).
using TokenId = std::uint32_t;

// A sequence x_{0:l} of l+1 tokens. Position t holds x_t.
using Sequence = std::vector<TokenId>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// log with a -inf sentinel for zero probabilities.
inline double log_or_neg_inf(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

double log_sum_exp(std::span<const double> xs);

// x^e for e >= 0 with the 0^0 := 1 convention. Small integer exponents
// avoid std::pow in hot loops.
double pow_nonneg(double x, double e);

std::uint64_t sequence_hash(std::span<const TokenId> seq);
std::string sequence_hash_hex(std::span<const TokenId> seq);

std::string sequence_to_string(std::span<const TokenId> seq);

}  // namespace pslab
