#pragma once

#include <map>
#include <string>
#include <vector>

#include "tsal/corpus.hpp"

namespace tsal {

// Corpus-level BLEU-4 in [0, 100]: geometric mean of clipped 1..4-gram
// precisions with an exponential brevity penalty when the hypotheses are
// shorter than the references, no smoothing, one reference per hypothesis.
// Zero if any precision is zero.
double bleu4(const std::vector<std::vector<std::string>>& hypotheses,
             const std::vector<std::vector<std::string>>& references);

// F1 over KEPT tokens (true = kept). Zero when nothing is kept on either
// side, by convention.
double deletion_f1(const std::vector<bool>& pred_mask, const std::vector<bool>& gold_mask);

// Character length of the space-joined output over that of the input.
double compression_ratio(const std::vector<std::string>& input_tokens,
                         const std::vector<std::string>& output_tokens);

// Mean squared difference for one normalized pair of duration vectors.
double duration_mse(const std::vector<double>& predicted, const std::vector<double>& ground_truth);
// Corpus variant: mean over all tokens pooled across records.
double duration_mse_corpus(const std::vector<std::vector<double>>& predicted,
                           const std::vector<std::vector<double>>& ground_truth);

// Jensen-Shannon divergence with base-2 logarithm, bounded to [0, 1].
// Inputs must be probability vectors (sum within 1e-6 of 1).
double jsd(const std::vector<double>& p, const std::vector<double>& q);

// Mean saliency/duration share per POS tag, built only from observed tags.
struct PosDistribution {
    std::map<PosTag, double> mean_share;
};

PosDistribution pos_distribution(const std::vector<std::vector<double>>& records,
                                 const std::vector<std::vector<PosTag>>& tags);

// Spearman's rank correlation (average ranks for ties) between model and
// human per-tag mean duration shares. Requires >= 3 distinct observed tags.
double spearman_pos(const std::vector<std::vector<double>>& model_records,
                    const std::vector<std::vector<double>>& human_records,
                    const std::vector<std::vector<PosTag>>& tags);

// Plain Spearman rho over two aligned value vectors.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

// Per-sentence duration shares summed over content tags (adjective, adverb,
// noun, verb) versus function tags (conjunction, pronoun, determiner, number,
// adposition, particle), averaged over the corpus and renormalized so the two
// shares sum to 1. Tokens tagged OTHER are excluded.
std::pair<double, double> content_function_split(const std::vector<std::vector<double>>& records,
                                                 const std::vector<std::vector<PosTag>>& tags);

bool is_content_tag(PosTag tag);
bool is_function_tag(PosTag tag);

}  // namespace tsal
