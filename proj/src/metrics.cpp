#include "tsal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tsal/errors.hpp"

namespace tsal {

namespace {

// n-gram counts keyed by the joined token string.
std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens, int n) {
    std::map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key;
        for (int j = 0; j < n; ++j) {
            if (j) key += '\x1f';
            key += tokens[i + j];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double bleu4(const std::vector<std::vector<std::string>>& hypotheses,
             const std::vector<std::vector<std::string>>& references) {
    if (hypotheses.empty()) throw ContractError("bleu4: empty corpus");
    if (hypotheses.size() != references.size())
        throw ContractError("bleu4: " + std::to_string(hypotheses.size()) + " hypotheses vs " +
                            std::to_string(references.size()) + " references");
    long long hyp_len = 0, ref_len = 0;
    double log_precision_sum = 0.0;
    for (int n = 1; n <= 4; ++n) {
        long long matched = 0, total = 0;
        for (std::size_t s = 0; s < hypotheses.size(); ++s) {
            auto hyp_counts = ngram_counts(hypotheses[s], n);
            auto ref_counts = ngram_counts(references[s], n);
            for (const auto& [gram, count] : hyp_counts) {
                total += count;
                auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) matched += std::min(count, it->second);
            }
        }
        if (matched == 0 || total == 0) return 0.0;
        log_precision_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        hyp_len += static_cast<long long>(hypotheses[s].size());
        ref_len += static_cast<long long>(references[s].size());
    }
    double bp = 1.0;
    if (hyp_len < ref_len && hyp_len > 0)
        bp = std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return 100.0 * bp * std::exp(log_precision_sum / 4.0);
}

double deletion_f1(const std::vector<bool>& pred_mask, const std::vector<bool>& gold_mask) {
    if (pred_mask.size() != gold_mask.size())
        throw ContractError("deletion_f1: mask length mismatch " +
                            std::to_string(pred_mask.size()) + " vs " +
                            std::to_string(gold_mask.size()));
    long long kept_pred = 0, kept_gold = 0, kept_both = 0;
    for (std::size_t i = 0; i < pred_mask.size(); ++i) {
        if (pred_mask[i]) ++kept_pred;
        if (gold_mask[i]) ++kept_gold;
        if (pred_mask[i] && gold_mask[i]) ++kept_both;
    }
    if (kept_pred == 0 || kept_gold == 0) return 0.0;
    double precision = static_cast<double>(kept_both) / static_cast<double>(kept_pred);
    double recall = static_cast<double>(kept_both) / static_cast<double>(kept_gold);
    if (precision + recall == 0.0) return 0.0;
    return 2.0 * precision * recall / (precision + recall);
}

namespace {

std::size_t joined_length(const std::vector<std::string>& tokens) {
    if (tokens.empty()) return 0;
    std::size_t n = tokens.size() - 1;  // separating spaces
    for (const auto& t : tokens) n += t.size();
    return n;
}

}  // namespace

double compression_ratio(const std::vector<std::string>& input_tokens,
                         const std::vector<std::string>& output_tokens) {
    if (input_tokens.empty()) throw ContractError("compression_ratio: empty input");
    if (output_tokens.empty()) return 0.0;
    return static_cast<double>(joined_length(output_tokens)) /
           static_cast<double>(joined_length(input_tokens));
}

double duration_mse(const std::vector<double>& predicted,
                    const std::vector<double>& ground_truth) {
    if (predicted.size() != ground_truth.size())
        throw ContractError("duration_mse: length mismatch " + std::to_string(predicted.size()) +
                            " vs " + std::to_string(ground_truth.size()));
    if (predicted.empty()) throw ContractError("duration_mse: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        double d = predicted[i] - ground_truth[i];
        acc += d * d;
    }
    return acc / static_cast<double>(predicted.size());
}

double duration_mse_corpus(const std::vector<std::vector<double>>& predicted,
                           const std::vector<std::vector<double>>& ground_truth) {
    if (predicted.size() != ground_truth.size())
        throw ContractError("duration_mse_corpus: record count mismatch");
    double acc = 0.0;
    std::size_t count = 0;
    for (std::size_t s = 0; s < predicted.size(); ++s) {
        if (predicted[s].size() != ground_truth[s].size())
            throw ContractError("duration_mse_corpus: length mismatch in record " +
                                std::to_string(s));
        for (std::size_t i = 0; i < predicted[s].size(); ++i) {
            double d = predicted[s][i] - ground_truth[s][i];
            acc += d * d;
            ++count;
        }
    }
    if (count == 0) throw ContractError("duration_mse_corpus: no tokens");
    return acc / static_cast<double>(count);
}

double jsd(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size())
        throw ContractError("jsd: length mismatch " + std::to_string(p.size()) + " vs " +
                            std::to_string(q.size()));
    auto validate = [](const std::vector<double>& v, const char* name) {
        double total = 0.0;
        for (double x : v) {
            if (x < 0.0) throw ContractError(std::string("jsd: negative entry in ") + name);
            total += x;
        }
        if (std::abs(total - 1.0) > 1e-6)
            throw ContractError(std::string("jsd: ") + name + " sums to " + std::to_string(total) +
                                ", not 1");
    };
    validate(p, "p");
    validate(q, "q");
    const double log2 = std::log(2.0);
    double kl_pm = 0.0, kl_qm = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        if (p[i] > 0.0) kl_pm += p[i] * std::log(p[i] / m) / log2;
        if (q[i] > 0.0) kl_qm += q[i] * std::log(q[i] / m) / log2;
    }
    return 0.5 * kl_pm + 0.5 * kl_qm;
}

PosDistribution pos_distribution(const std::vector<std::vector<double>>& records,
                                 const std::vector<std::vector<PosTag>>& tags) {
    if (records.size() != tags.size())
        throw ContractError("pos_distribution: record/tag count mismatch");
    std::map<PosTag, double> total;
    std::map<PosTag, long long> count;
    for (std::size_t s = 0; s < records.size(); ++s) {
        if (records[s].size() != tags[s].size())
            throw ContractError("pos_distribution: token/tag mismatch in record " +
                                std::to_string(s));
        for (std::size_t i = 0; i < records[s].size(); ++i) {
            total[tags[s][i]] += records[s][i];
            ++count[tags[s][i]];
        }
    }
    PosDistribution out;
    for (const auto& [tag, sum] : total) out.mean_share[tag] = sum / static_cast<double>(count[tag]);
    return out;
}

namespace {

// Ranks with average ranks for ties.
std::vector<double> ranks_of(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg_rank;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= static_cast<double>(a.size());
    mb /= static_cast<double>(b.size());
    double num = 0.0, da = 0.0, db = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        num += (a[i] - ma) * (b[i] - mb);
        da += (a[i] - ma) * (a[i] - ma);
        db += (b[i] - mb) * (b[i] - mb);
    }
    if (da == 0.0 || db == 0.0)
        throw InsufficientDataError("spearman: constant ranking has no correlation");
    return num / std::sqrt(da * db);
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ContractError("spearman_rho: length mismatch");
    if (a.size() < 3) throw InsufficientDataError("spearman_rho: need at least 3 observations");
    return pearson(ranks_of(a), ranks_of(b));
}

double spearman_pos(const std::vector<std::vector<double>>& model_records,
                    const std::vector<std::vector<double>>& human_records,
                    const std::vector<std::vector<PosTag>>& tags) {
    PosDistribution model = pos_distribution(model_records, tags);
    PosDistribution human = pos_distribution(human_records, tags);
    std::vector<double> model_shares, human_shares;
    for (const auto& [tag, share] : model.mean_share) {
        model_shares.push_back(share);
        auto it = human.mean_share.find(tag);
        human_shares.push_back(it == human.mean_share.end() ? 0.0 : it->second);
    }
    if (model_shares.size() < 3)
        throw InsufficientDataError("spearman_pos: fewer than 3 distinct tags observed");
    return pearson(ranks_of(model_shares), ranks_of(human_shares));
}

bool is_content_tag(PosTag tag) {
    return tag == PosTag::Adj || tag == PosTag::Adv || tag == PosTag::Noun || tag == PosTag::Verb;
}

bool is_function_tag(PosTag tag) {
    return tag == PosTag::Conj || tag == PosTag::Pron || tag == PosTag::Det ||
           tag == PosTag::Num || tag == PosTag::Adp || tag == PosTag::Part;
}

std::pair<double, double> content_function_split(const std::vector<std::vector<double>>& records,
                                                 const std::vector<std::vector<PosTag>>& tags) {
    if (records.size() != tags.size())
        throw ContractError("content_function_split: record/tag count mismatch");
    double content_mean = 0.0, function_mean = 0.0;
    std::size_t sentences = 0;
    for (std::size_t s = 0; s < records.size(); ++s) {
        if (records[s].size() != tags[s].size())
            throw ContractError("content_function_split: token/tag mismatch in record " +
                                std::to_string(s));
        double content = 0.0, function = 0.0;
        bool any = false;
        for (std::size_t i = 0; i < records[s].size(); ++i) {
            if (is_content_tag(tags[s][i])) {
                content += records[s][i];
                any = true;
            } else if (is_function_tag(tags[s][i])) {
                function += records[s][i];
                any = true;
            }
        }
        if (!any) continue;
        content_mean += content;
        function_mean += function;
        ++sentences;
    }
    if (sentences == 0)
        throw InsufficientDataError("content_function_split: no classifiable tokens");
    content_mean /= static_cast<double>(sentences);
    function_mean /= static_cast<double>(sentences);
    double total = content_mean + function_mean;
    if (total <= 0.0)
        throw InsufficientDataError("content_function_split: no duration mass on classified tokens");
    return {content_mean / total, function_mean / total};
}

}  // namespace tsal
