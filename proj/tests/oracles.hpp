#pragma once

// Independent reference computations used to check the metric module. They are
// deliberately naive: quadratic window matching instead of hash maps, and
// exhaustive subsequence search instead of dynamic programming.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace oracle {

using Seq = std::vector<std::string>;

inline Seq window(const Seq& s, std::size_t start, std::size_t n) {
    return Seq(s.begin() + static_cast<std::ptrdiff_t>(start), s.begin() + static_cast<std::ptrdiff_t>(start + n));
}

inline std::size_t occurrences(const Seq& s, const Seq& gram) {
    std::size_t count = 0;
    for (std::size_t i = 0; i + gram.size() <= s.size(); ++i)
        if (window(s, i, gram.size()) == gram) ++count;
    return count;
}

/// Clipped matches of order n: each distinct candidate n-gram, seen for the first
/// time at position i, contributes min(count in candidate, count in reference).
inline std::size_t clipped_matches(const Seq& cand, const Seq& ref, std::size_t n) {
    std::size_t total = 0;
    for (std::size_t i = 0; i + n <= cand.size(); ++i) {
        const Seq gram = window(cand, i, n);
        bool seen_before = false;
        for (std::size_t j = 0; j < i && !seen_before; ++j) seen_before = window(cand, j, n) == gram;
        if (seen_before) continue;
        total += std::min(occurrences(cand, gram), occurrences(ref, gram));
    }
    return total;
}

/// Sentence BLEU with uniform weights over orders 1..min(N, |cand|).
inline double bleu(const Seq& cand, const Seq& ref, std::size_t max_order = 4, double epsilon = 1e-9) {
    if (cand.empty() || ref.empty()) return 0.0;
    const std::size_t order = std::min(max_order, cand.size());
    double log_mean = 0.0;
    for (std::size_t n = 1; n <= order; ++n) {
        const double p = double(clipped_matches(cand, ref, n)) / double(cand.size() - n + 1);
        log_mean += std::log(p > 0 ? p : epsilon) / double(order);
    }
    const double c = double(cand.size()), r = double(ref.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return bp * std::exp(log_mean);
}

inline bool is_subsequence(const Seq& needle, const Seq& hay) {
    std::size_t j = 0;
    for (std::size_t i = 0; i < hay.size() && j < needle.size(); ++i)
        if (hay[i] == needle[j]) ++j;
    return j == needle.size();
}

/// Longest common subsequence by trying every subsequence of `a` (|a| <= 20).
inline std::size_t lcs_exhaustive(const Seq& a, const Seq& b) {
    std::size_t best = 0;
    const std::uint32_t masks = 1u << a.size();
    for (std::uint32_t mask = 0; mask < masks; ++mask) {
        const auto bits = static_cast<std::size_t>(__builtin_popcount(mask));
        if (bits <= best) continue;
        Seq sub;
        for (std::size_t i = 0; i < a.size(); ++i)
            if (mask & (1u << i)) sub.push_back(a[i]);
        if (is_subsequence(sub, b)) best = bits;
    }
    return best;
}

inline double rouge_l(const Seq& cand, const Seq& ref, double beta = 1.0) {
    if (cand.empty() || ref.empty()) return 0.0;
    const double lcs = double(lcs_exhaustive(cand, ref));
    if (lcs == 0) return 0.0;
    const double p = lcs / double(cand.size()), r = lcs / double(ref.size());
    const double b2 = beta * beta;
    return (1 + b2) * p * r / (p + b2 * r);
}

}  // namespace oracle
