#include "pslab/rng.hpp"

#include "pslab/errors.hpp"

namespace pslab {

std::size_t Rng::categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw input_error("categorical draw from all-zero weights");
    const double u = next_double() * total;
    double acc = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (weights[i] <= 0.0) continue;
        acc += weights[i];
        last_positive = i;
        if (u < acc) return i;
    }
    // u landed in the rounding gap at the top of the cumulative sum.
    return last_positive;
}

}  // namespace pslab
