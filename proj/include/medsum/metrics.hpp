#pragma once

// The four summary-evaluation metrics: BLEU, ROUGE-L, BERTScore and
// sentence-embedding cosine similarity, with the shared tokenizer and LCS kernel.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "medsum/embeddings.hpp"

namespace medsum {

/// Normalized tokens: lowercased, edge punctuation split off. Never holds an empty token.
using TokenSequence = std::vector<std::string>;
using Ngram = std::vector<std::string>;
using NgramCounts = std::map<Ngram, std::size_t>;

/// Lowercases ASCII, splits on whitespace and peels each of . , ; : ! ? ( ) " ' [ ]
/// off both ends of a word into its own token. Inner punctuation ("x-ray") stays.
TokenSequence tokenize(std::string_view text);

bool is_punctuation_token(std::string_view token);

/// Every contiguous n-token window with its multiplicity. Requires n >= 1.
NgramCounts ngram_counts(std::span<const std::string> seq, std::size_t n);

struct BleuParams {
    std::size_t max_order = 4;
    std::vector<double> weights{0.25, 0.25, 0.25, 0.25};
    double epsilon = 1e-9;

    static BleuParams uniform(std::size_t max_order, double epsilon = 1e-9);
    /// Throws ValidationError unless weights are non-negative, sized max_order, summing to 1.
    void validate() const;
};

struct BleuBreakdown {
    std::vector<double> precisions;  // modified precision per order 1..effective_order, before flooring
    double brevity_penalty = 0.0;
    std::size_t candidate_len = 0;
    std::size_t reference_len = 0;
    std::size_t effective_order = 0;
    bool degenerate = false;  // empty candidate or empty reference
    double score = 0.0;
};

/// Sentence BLEU: clipped n-gram precision, geometric mean under the weights,
/// times the brevity penalty. Orders above the candidate length are dropped and
/// the remaining weights renormalized; zero precisions are floored at epsilon.
BleuBreakdown bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                   const BleuParams& params = {});

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeLBreakdown {
    std::size_t lcs_len = 0;
    double precision = 0.0;
    double recall = 0.0;
    double beta = 1.0;
    double score = 0.0;
};

/// F = (1 + b^2) P R / (P + b^2 R) with P = lcs/|candidate|, R = lcs/|reference|.
RougeLBreakdown rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference,
                        double beta = 1.0);

struct BertScoreBreakdown {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Greedy max-cosine matching of token embeddings, no idf weighting, no rescaling.
BertScoreBreakdown bert_score(std::span<const std::string> candidate,
                              std::span<const std::string> reference,
                              const EmbeddingProvider& provider);

/// Same, over precomputed token vectors.
BertScoreBreakdown bert_score_vectors(std::span<const EmbeddingVector> candidate,
                                      std::span<const EmbeddingVector> reference);

/// Mean of the token vectors of tokenize(text); zero vector when there are no tokens.
EmbeddingVector sentence_embedding(std::string_view text, const EmbeddingProvider& provider);
EmbeddingVector mean_vector(std::span<const EmbeddingVector> vectors, std::size_t dim);

/// 0 when either vector has zero norm. Throws ValidationError on dimension mismatch.
double cosine(std::span<const double> a, std::span<const double> b);

struct MetricReport {
    BleuBreakdown bleu;
    RougeLBreakdown rouge_l;
    BertScoreBreakdown bert;
    double spacy_sim = 0.0;
};

struct ScoringParams {
    BleuParams bleu;
    double rouge_beta = 1.0;
};

MetricReport score_pair(std::string_view candidate, std::string_view reference,
                        const EmbeddingProvider& provider, const ScoringParams& params = {});

}  // namespace medsum
