#include "pslab/types.hpp"

#include <algorithm>
#include <cstdio>

namespace pslab {

double log_sum_exp(std::span<const double> xs) {
    double hi = kNegInf;
    for (double x : xs) hi = std::max(hi, x);
    if (hi == kNegInf) return kNegInf;
    double acc = 0.0;
    for (double x : xs) acc += std::exp(x - hi);
    return hi + std::log(acc);
}

double pow_nonneg(double x, double e) {
    if (e == 0.0) return 1.0;  // includes 0^0 := 1
    if (x == 0.0) return 0.0;
    double ip;
    if (std::modf(e, &ip) == 0.0 && e > 0.0 && e <= 32.0) {
        double acc = 1.0;
        double base = x;
        auto n = static_cast<unsigned>(e);
        while (n != 0) {
            if (n & 1u) acc *= base;
            base *= base;
            n >>= 1;
        }
        return acc;
    }
    return std::pow(x, e);
}

std::uint64_t sequence_hash(std::span<const TokenId> seq) {
    // FNV-1a over the token ids, byte by byte.
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (TokenId tok : seq) {
        for (int shift = 0; shift < 32; shift += 8) {
            h ^= (tok >> shift) & 0xFFu;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

std::string sequence_hash_hex(std::span<const TokenId> seq) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(sequence_hash(seq)));
    return std::string(buf);
}

std::string sequence_to_string(std::span<const TokenId> seq) {
    std::string out = "[";
    for (std::size_t i = 0; i < seq.size(); ++i) {
        if (i != 0) out += ",";
        out += std::to_string(seq[i]);
    }
    out += "]";
    return out;
}

}  // namespace pslab
