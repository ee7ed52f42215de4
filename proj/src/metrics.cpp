#include "medsum/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "medsum/errors.hpp"

namespace medsum {

namespace {

constexpr std::string_view kEdgePunctuation = ".,;:!?()\"'[]";

bool is_edge_punct(char c) { return kEdgePunctuation.find(c) != std::string_view::npos; }

void push_word(std::string_view word, TokenSequence& out) {
    std::size_t b = 0, e = word.size();
    while (b < e && is_edge_punct(word[b])) ++b;
    while (e > b && is_edge_punct(word[e - 1])) --e;
    for (std::size_t i = 0; i < b; ++i) out.emplace_back(1, word[i]);
    if (e > b) {
        std::string core(word.substr(b, e - b));
        for (char& c : core) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        out.push_back(std::move(core));
    }
    for (std::size_t i = std::max(b, e); i < word.size(); ++i) out.emplace_back(1, word[i]);
}

}  // namespace

TokenSequence tokenize(std::string_view text) {
    TokenSequence out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) push_word(text.substr(start, i - start), out);
    }
    return out;
}

bool is_punctuation_token(std::string_view token) {
    return !token.empty() && std::all_of(token.begin(), token.end(), is_edge_punct);
}

NgramCounts ngram_counts(std::span<const std::string> seq, std::size_t n) {
    if (n == 0) throw ValidationError("n-gram order must be >= 1");
    NgramCounts counts;
    if (seq.size() < n) return counts;
    for (std::size_t i = 0; i + n <= seq.size(); ++i)
        ++counts[Ngram(seq.begin() + static_cast<std::ptrdiff_t>(i),
                       seq.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return counts;
}

BleuParams BleuParams::uniform(std::size_t max_order, double epsilon) {
    BleuParams p;
    p.max_order = max_order;
    p.weights.assign(max_order, max_order == 0 ? 0.0 : 1.0 / static_cast<double>(max_order));
    p.epsilon = epsilon;
    p.validate();
    return p;
}

void BleuParams::validate() const {
    if (max_order == 0) throw ValidationError("BLEU max_order must be >= 1");
    if (weights.size() != max_order) throw ValidationError("BLEU weights must have max_order entries");
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ValidationError("BLEU weights must be non-negative");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("BLEU weights must sum to 1");
    if (!(epsilon > 0.0)) throw ValidationError("BLEU epsilon must be positive");
}

BleuBreakdown bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                   const BleuParams& params) {
    params.validate();
    BleuBreakdown out;
    out.candidate_len = candidate.size();
    out.reference_len = reference.size();
    if (candidate.empty() || reference.empty()) {
        out.degenerate = true;
        return out;
    }

    out.effective_order = std::min(params.max_order, candidate.size());
    double weight_total = 0.0;
    for (std::size_t n = 0; n < out.effective_order; ++n) weight_total += params.weights[n];

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= out.effective_order; ++n) {
        NgramCounts cand = ngram_counts(candidate, n);
        NgramCounts ref = ngram_counts(reference, n);
        std::size_t matched = 0;
        for (const auto& [gram, count] : cand) {
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min(count, it->second);
        }
        const double total = static_cast<double>(candidate.size() - n + 1);
        const double p = static_cast<double>(matched) / total;
        out.precisions.push_back(p);
        const double w = weight_total > 0.0 ? params.weights[n - 1] / weight_total : 0.0;
        log_sum += w * std::log(p > 0.0 ? p : params.epsilon);
    }

    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    out.brevity_penalty = c > r ? 1.0 : std::exp(1.0 - r / c);
    out.score = out.brevity_penalty * std::exp(log_sum);
    return out;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
    if (a.size() < b.size()) std::swap(a, b);
    // Single-row DP over the shorter sequence.
    std::vector<std::size_t> row(b.size() + 1, 0);
    for (const auto& x : a) {
        std::size_t diag = 0;
        for (std::size_t j = 1; j <= b.size(); ++j) {
            std::size_t up = row[j];
            row[j] = (x == b[j - 1]) ? diag + 1 : std::max(row[j], row[j - 1]);
            diag = up;
        }
    }
    return row[b.size()];
}

RougeLBreakdown rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference,
                        double beta) {
    if (!(beta > 0.0)) throw ValidationError("ROUGE-L beta must be positive");
    RougeLBreakdown out;
    out.beta = beta;
    if (candidate.empty() || reference.empty()) return out;
    out.lcs_len = lcs_length(candidate, reference);
    if (out.lcs_len == 0) return out;
    const double lcs = static_cast<double>(out.lcs_len);
    out.precision = lcs / static_cast<double>(candidate.size());
    out.recall = lcs / static_cast<double>(reference.size());
    const double b2 = beta * beta;
    out.score = (1.0 + b2) * out.precision * out.recall / (out.precision + b2 * out.recall);
    return out;
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw ValidationError("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                              std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

BertScoreBreakdown bert_score_vectors(std::span<const EmbeddingVector> candidate,
                                      std::span<const EmbeddingVector> reference) {
    BertScoreBreakdown out;
    if (candidate.empty() || reference.empty()) return out;

    std::vector<double> best_for_ref(reference.size(), -std::numeric_limits<double>::infinity());
    double precision_sum = 0.0;
    for (const auto& x : candidate) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < reference.size(); ++j) {
            const double sim = cosine(x, reference[j]);
            best = std::max(best, sim);
            best_for_ref[j] = std::max(best_for_ref[j], sim);
        }
        precision_sum += best;
    }
    out.precision = precision_sum / static_cast<double>(candidate.size());
    out.recall = std::accumulate(best_for_ref.begin(), best_for_ref.end(), 0.0) /
                 static_cast<double>(reference.size());
    const double denom = out.precision + out.recall;
    out.f1 = denom == 0.0 ? 0.0 : 2.0 * out.precision * out.recall / denom;
    return out;
}

BertScoreBreakdown bert_score(std::span<const std::string> candidate,
                              std::span<const std::string> reference,
                              const EmbeddingProvider& provider) {
    if (candidate.empty() || reference.empty()) return {};
    auto cv = provider.embed_tokens(candidate);
    auto rv = provider.embed_tokens(reference);
    return bert_score_vectors(cv, rv);
}

EmbeddingVector mean_vector(std::span<const EmbeddingVector> vectors, std::size_t dim) {
    EmbeddingVector mean(dim, 0.0);
    if (vectors.empty()) return mean;
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ValidationError("mean_vector: dimension mismatch");
        for (std::size_t i = 0; i < dim; ++i) mean[i] += v[i];
    }
    for (double& x : mean) x /= static_cast<double>(vectors.size());
    return mean;
}

EmbeddingVector sentence_embedding(std::string_view text, const EmbeddingProvider& provider) {
    TokenSequence tokens = tokenize(text);
    if (tokens.empty()) return EmbeddingVector(provider.dim(), 0.0);
    auto vectors = provider.embed_tokens(tokens);
    return mean_vector(vectors, vectors.front().size());
}

MetricReport score_pair(std::string_view candidate, std::string_view reference,
                        const EmbeddingProvider& provider, const ScoringParams& params) {
    const TokenSequence cand = tokenize(candidate);
    const TokenSequence ref = tokenize(reference);

    MetricReport report;
    report.bleu = bleu(cand, ref, params.bleu);
    report.rouge_l = rouge_l(cand, ref, params.rouge_beta);
    if (cand.empty() || ref.empty()) return report;

    // Token vectors are fetched once and reused for both semantic metrics.
    const auto cand_vecs = provider.embed_tokens(cand);
    const auto ref_vecs = provider.embed_tokens(ref);
    report.bert = bert_score_vectors(cand_vecs, ref_vecs);
    const std::size_t dim = cand_vecs.front().size();
    report.spacy_sim = cosine(mean_vector(cand_vecs, dim), mean_vector(ref_vecs, dim));
    return report;
}

}  // namespace medsum
