#include "pslab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pslab/errors.hpp"
#include "pslab/model_ops.hpp"

namespace pslab {

namespace {

// C(n, k) exactly; callers guarantee it fits (n <= 62).
std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;
    }
    return static_cast<std::uint64_t>(result);
}

double log_binomial(double n, double k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
    if (c > n) throw input_error("pass@k needs c <= n");
    if (k < 1 || k > n) throw input_error("pass@k needs 1 <= k <= n");
    if (c == 0) return 0.0;
    if (n - c < k) return 1.0;  // every k-subset hits a correct attempt
    if (n <= 62) {
        const double miss = static_cast<double>(binomial_u64(n - c, k));
        const double total = static_cast<double>(binomial_u64(n, k));
        return 1.0 - miss / total;
    }
    const double log_miss = log_binomial(static_cast<double>(n - c), static_cast<double>(k)) -
                            log_binomial(static_cast<double>(n), static_cast<double>(k));
    return 1.0 - std::exp(log_miss);
}

std::size_t levenshtein(std::span<const TokenId> a, std::span<const TokenId> b) {
    const std::size_t rows = a.size();
    const std::size_t cols = b.size();
    if (rows == 0) return cols;
    if (cols == 0) return rows;
    std::vector<std::size_t> prev(cols + 1), cur(cols + 1);
    std::iota(prev.begin(), prev.end(), std::size_t{0});
    for (std::size_t i = 1; i <= rows; ++i) {
        cur[0] = i;
        for (std::size_t j = 1; j <= cols; ++j) {
            const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        prev.swap(cur);
    }
    return prev[cols];
}

double normalized_edit_distance(const std::vector<Sequence>& suffixes) {
    if (suffixes.size() < 2)
        throw input_error("normalized edit distance needs at least two suffixes");
    double mean_len = 0.0;
    for (const auto& s : suffixes) mean_len += static_cast<double>(s.size());
    mean_len /= static_cast<double>(suffixes.size());
    if (mean_len == 0.0) return 0.0;  // every suffix empty

    double total = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < suffixes.size(); ++i) {
        for (std::size_t j = i + 1; j < suffixes.size(); ++j) {
            total += static_cast<double>(levenshtein(suffixes[i], suffixes[j]));
            ++pairs;
        }
    }
    return total / static_cast<double>(pairs) / mean_len;
}

double distinct_answer_fraction(std::span<const TokenId> answers) {
    if (answers.empty()) throw input_error("distinct fraction needs at least one answer");
    std::set<TokenId> unique(answers.begin(), answers.end());
    return static_cast<double>(unique.size()) / static_cast<double>(answers.size());
}

DecileReport decile_resample_experiment(const TokenModel& model, std::size_t depth,
                                        std::size_t cut_count, std::size_t resamples, Rng& rng) {
    if (resamples < 2) throw input_error("the experiment needs at least two resamples");
    if (cut_count < 1) throw input_error("the experiment needs at least one cut per group");
    const std::size_t positions = depth + 1;
    const std::size_t decile = (positions + 9) / 10;
    if (positions < 10 || cut_count > decile)
        throw input_error("sequence too short to form decile groups of the requested size");

    DecileReport report;
    report.completion = sample_autoregressive(model, depth, rng);
    const auto profile = entropy_profile(model, report.completion);
    const auto jumps = entropy_jumps(profile);

    // Positions ranked by jump size, ties broken toward earlier positions.
    std::vector<std::size_t> order(positions);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return jumps[a] > jumps[b]; });

    report.top.positions.assign(order.begin(), order.begin() + cut_count);
    for (std::size_t i = 0; i < cut_count; ++i)
        report.bottom.positions.push_back(order[positions - 1 - i]);

    auto run_group = [&](DecileGroup& group) {
        for (std::size_t m : group.positions) {
            std::vector<Sequence> suffixes(resamples);
            Sequence answers(resamples);
            Sequence draw(report.completion.begin(), report.completion.end());
            std::vector<double> dist(model.vocab_size());
            for (std::size_t r = 0; r < resamples; ++r) {
                draw.assign(report.completion.begin(), report.completion.end());
                for (std::size_t t = m; t <= depth; ++t) {
                    model.next_dist_into(std::span<const TokenId>(draw.data(), t), dist);
                    draw[t] = static_cast<TokenId>(rng.categorical(dist));
                }
                suffixes[r].assign(draw.begin() + m, draw.end());
                answers[r] = draw[depth];
            }
            group.edit_distance.push_back(normalized_edit_distance(suffixes));
            group.distinct_fraction.push_back(distinct_answer_fraction(answers));
        }
        group.mean_edit =
            std::accumulate(group.edit_distance.begin(), group.edit_distance.end(), 0.0) /
            static_cast<double>(group.edit_distance.size());
        group.mean_distinct =
            std::accumulate(group.distinct_fraction.begin(), group.distinct_fraction.end(), 0.0) /
            static_cast<double>(group.distinct_fraction.size());
    };
    run_group(report.top);
    run_group(report.bottom);

    // queried after the runs: a remote model learns its top-k-ness lazily
    report.approximate_model = !model.exact_logprobs();

    const bool nothing_varies = report.top.mean_edit == 0.0 && report.bottom.mean_edit == 0.0 &&
                                report.top.mean_distinct == report.bottom.mean_distinct;
    if (nothing_varies) {
        report.verdict = "degenerate";
    } else if (report.top.mean_edit > report.bottom.mean_edit &&
               report.top.mean_distinct > report.bottom.mean_distinct) {
        report.verdict = "top_dominates";
    } else {
        report.verdict = "not_separated";
    }
    return report;
}

}  // namespace pslab
