#include "pslab/exact_dist.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pslab/errors.hpp"
#include "pslab/token_model.hpp"

namespace pslab {

std::size_t ExactDistribution::find(std::span<const TokenId> seq) const {
    const auto it = std::lower_bound(
        support.begin(), support.end(), seq, [](const Sequence& a, std::span<const TokenId> b) {
            return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
        });
    if (it == support.end() || it->size() != seq.size() ||
        !std::equal(it->begin(), it->end(), seq.begin()))
        return npos;
    return static_cast<std::size_t>(it - support.begin());
}

ExactDistribution enumerate_power_distribution(const TokenModel& model, std::size_t depth,
                                               double alpha, std::size_t budget) {
    if (!(alpha > 0.0)) throw input_error("power exponent must be > 0");
    ExactDistribution dist;
    dist.alpha = alpha;
    dist.depth = depth;
    dist.vocab = model.vocab_size();

    const std::size_t vocab = model.vocab_size();
    Sequence prefix;
    std::vector<std::vector<double>> row_stack(depth + 1, std::vector<double>(vocab));
    double logp = 0.0;

    // Depth-first over positive-probability paths, emitting sequences in
    // lexicographic order.
    auto walk = [&](auto&& self, std::size_t t) -> void {
        auto& row = row_stack[t];
        model.next_dist_into(prefix, row);
        for (TokenId tok = 0; tok < vocab; ++tok) {
            if (row[tok] <= 0.0) continue;
            const double lp = std::log(row[tok]);
            prefix.push_back(tok);
            logp += lp;
            if (t == depth) {
                if (dist.support.size() >= budget)
                    throw budget_error("enumeration support exceeds the budget of " +
                                       std::to_string(budget) + " sequences");
                dist.support.push_back(prefix);
                dist.base_logp.push_back(logp);
            } else {
                self(self, t + 1);
            }
            logp -= lp;
            prefix.pop_back();
        }
    };
    walk(walk, 0);

    if (dist.support.empty()) throw input_error("model assigns zero mass everywhere");

    std::vector<double> scaled(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i) scaled[i] = alpha * dist.base_logp[i];
    dist.log_z = log_sum_exp(scaled);
    dist.prob.resize(dist.size());
    for (std::size_t i = 0; i < dist.size(); ++i)
        dist.prob[i] = std::exp(scaled[i] - dist.log_z);
    return dist;
}

ExactDistribution exact_low_temperature_distribution(const TokenModel& model, std::size_t depth,
                                                     double alpha, std::size_t budget) {
    LowTemperatureModel sharpened(model, alpha);
    ExactDistribution dist = enumerate_power_distribution(sharpened, depth, 1.0, budget);
    dist.alpha = alpha;  // base_logp entries are under the sharpened chain
    return dist;
}

double tv_distance(const ExactDistribution& d1, const ExactDistribution& d2) {
    double total = 0.0;
    std::size_t i = 0, j = 0;
    auto less = [](const Sequence& a, const Sequence& b) {
        return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
    };
    while (i < d1.size() || j < d2.size()) {
        if (j >= d2.size() || (i < d1.size() && less(d1.support[i], d2.support[j]))) {
            total += d1.prob[i];
            ++i;
        } else if (i >= d1.size() || less(d2.support[j], d1.support[i])) {
            total += d2.prob[j];
            ++j;
        } else {
            total += std::abs(d1.prob[i] - d2.prob[j]);
            ++i;
            ++j;
        }
    }
    return 0.5 * total;
}

double tv_to_empirical(const ExactDistribution& exact, const std::vector<Sequence>& samples) {
    if (samples.empty()) throw input_error("empirical TV needs at least one sample");
    std::vector<std::size_t> counts(exact.size(), 0);
    std::size_t off_support = 0;
    for (const auto& seq : samples) {
        const std::size_t idx = exact.find(seq);
        if (idx == ExactDistribution::npos)
            ++off_support;
        else
            ++counts[idx];
    }
    const double n = static_cast<double>(samples.size());
    double total = static_cast<double>(off_support) / n;
    for (std::size_t i = 0; i < exact.size(); ++i)
        total += std::abs(static_cast<double>(counts[i]) / n - exact.prob[i]);
    return 0.5 * total;
}

TabularModel to_tabular_model(const ExactDistribution& dist) {
    if (dist.vocab == 0) throw input_error("distribution does not record its vocabulary");
    if (dist.support.empty()) throw input_error("cannot export an empty distribution");

    // Subtree masses over the prefix trie of the support.
    std::map<Sequence, double> mass;
    for (std::size_t i = 0; i < dist.size(); ++i) {
        Sequence prefix;
        prefix.reserve(dist.support[i].size());
        mass[prefix] += dist.prob[i];
        for (TokenId tok : dist.support[i]) {
            prefix.push_back(tok);
            mass[prefix] += dist.prob[i];
        }
    }

    TabularModel model(dist.vocab, dist.depth);
    std::vector<double> row(dist.vocab);
    for (const auto& [prefix, m] : mass) {
        if (prefix.size() > dist.depth || m <= 0.0) continue;
        std::fill(row.begin(), row.end(), 0.0);
        double total = 0.0;
        Sequence child = prefix;
        child.push_back(0);
        for (TokenId tok = 0; tok < dist.vocab; ++tok) {
            child.back() = tok;
            const auto it = mass.find(child);
            if (it == mass.end()) continue;
            row[tok] = it->second / m;
            total += row[tok];
        }
        if (total <= 0.0) continue;
        for (double& p : row) p /= total;
        model.set_row(prefix, row);
    }
    return model;
}

PropA1Construction prop_a1_construct(double alpha, double eps) {
    if (!(alpha > 1.0)) throw input_error("the construction needs alpha > 1");
    if (!(eps > 0.0 && eps < 1.0)) throw input_error("eps must lie in (0, 1)");
    const double delta = eps / 2.0;

    std::uint64_t r = 1;
    while (1.0 / (1.0 + std::pow(static_cast<double>(r), alpha)) > delta) {
        if (++r > 100'000'000ULL) throw input_error("eps too small: first-token ratio R diverges");
    }

    const double r_pow = std::pow(static_cast<double>(r), alpha);
    auto n_ok = [&](std::uint64_t n) {
        return r_pow / std::pow(static_cast<double>(n), alpha - 1.0) <= delta;
    };
    auto n_est = static_cast<std::uint64_t>(
        std::ceil(std::pow(r_pow / delta, 1.0 / (alpha - 1.0))));
    std::uint64_t n = std::max<std::uint64_t>(1, n_est);
    while (!n_ok(n)) ++n;
    while (n > 1 && n_ok(n - 1)) --n;
    if (n > 4'000'000ULL)
        throw budget_error("construction needs " + std::to_string(n) +
                           " completion tokens; beyond the tabular-model budget");

    // vocab: first tokens a=0, b=1; second tokens: star=0, completions 1..N
    const std::size_t vocab = static_cast<std::size_t>(n) + 1;
    TabularModel model(vocab, 1);
    std::vector<double> row(vocab, 0.0);
    const double rd = static_cast<double>(r);
    row[0] = 1.0 / (1.0 + rd);
    row[1] = rd / (1.0 + rd);
    model.set_row(Sequence{}, row);

    std::fill(row.begin(), row.end(), 0.0);
    row[0] = 1.0;
    model.set_row(Sequence{0}, row);

    std::fill(row.begin(), row.end(), 0.0);
    for (std::size_t i = 1; i < vocab; ++i) row[i] = 1.0 / static_cast<double>(n);
    model.set_row(Sequence{1}, row);

    PropA1Construction out{std::move(model), r, n, 0.0, 0.0, 1.0 - eps};
    out.power_first_a =
        1.0 / (1.0 + r_pow / std::pow(static_cast<double>(n), alpha - 1.0));
    out.lowtemp_first_a = 1.0 / (1.0 + r_pow);
    return out;
}

}  // namespace pslab
