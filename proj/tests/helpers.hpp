#pragma once

#include <vector>

#include "pslab/tabular_model.hpp"
#include "pslab/types.hpp"

namespace pslab::testing {

// all rows uniform over the vocabulary
inline TabularModel uniform_model(std::size_t vocab, std::size_t depth) {
    TabularModel model(vocab, depth);
    std::vector<double> row(vocab, 1.0 / static_cast<double>(vocab));
    Sequence prefix;
    auto fill = [&](auto&& self, std::size_t d) -> void {
        model.set_row(prefix, row);
        if (d == depth) return;
        for (TokenId tok = 0; tok < vocab; ++tok) {
            prefix.push_back(tok);
            self(self, d + 1);
            prefix.pop_back();
        }
    };
    fill(fill, 0);
    return model;
}

// every position deterministically emits token 0
inline TabularModel deterministic_model(std::size_t vocab, std::size_t depth) {
    TabularModel model(vocab, depth);
    std::vector<double> row(vocab, 0.0);
    row[0] = 1.0;
    Sequence prefix;
    for (std::size_t d = 0; d <= depth; ++d) {
        model.set_row(prefix, row);
        prefix.push_back(0);
    }
    return model;
}

// three-position toy with entropy profile (0, ln 2, 0)
inline TabularModel spike_model() {
    TabularModel model(2, 2);
    model.set_row(Sequence{}, std::vector<double>{1.0, 0.0});
    model.set_row(Sequence{0}, std::vector<double>{0.5, 0.5});
    model.set_row(Sequence{0, 0}, std::vector<double>{1.0, 0.0});
    model.set_row(Sequence{0, 1}, std::vector<double>{1.0, 0.0});
    return model;
}

}  // namespace pslab::testing
