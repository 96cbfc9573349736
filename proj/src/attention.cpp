#include "tsal/attention.hpp"

#include "tsal/layers.hpp"

namespace tsal {

namespace {

void check_states(const Tensor& states, const char* op) {
    if (states.shape().size() != 2 || states.shape()[0] < 1)
        throw ContractError(std::string(op) + ": encoder states must be a nonempty [n, d] tensor");
}

void check_u(const Tensor& u, const Tensor& states, const char* op) {
    if (u.shape().size() != 1 || u.shape()[0] != states.shape()[0])
        throw ContractError(std::string(op) + ": saliency length " +
                            (u.shape().empty() ? std::string("?") : std::to_string(u.shape()[0])) +
                            " != encoder positions " + std::to_string(states.shape()[0]));
}

}  // namespace

Tensor score_general(const Tensor& h, const Tensor& states, const Tensor& w_a) {
    check_states(states, "score_general");
    // h^T W_a s_j for all j at once: S (W_a^T h)
    Tensor projected = matmul(transpose(w_a), h);  // [enc_hidden]
    return matmul(states, projected);              // [n]
}

Tensor score_paragen(const Tensor& h, const Tensor& states, const Tensor& w_a, const Tensor& u) {
    check_u(u, states, "score_paragen");
    return mul(u, score_general(h, states, w_a));
}

Tensor score_additive(const Tensor& h, const Tensor& states, const Tensor& w_a,
                      const Tensor& v_a) {
    check_states(states, "score_additive");
    const int n = states.shape()[0];
    std::vector<Tensor> joined(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) joined[j] = concat({h, select_row(states, j)}, 0);
    Tensor activated = tanh(matmul(stack_rows(joined), transpose(w_a)));  // [n, v_dim]
    return matmul(activated, v_a);
}

Tensor score_textcomp(const Tensor& h, const Tensor& states, const Tensor& w_a, const Tensor& v_a,
                      const Tensor& u) {
    check_u(u, states, "score_textcomp");
    return mul(u, score_additive(h, states, w_a, v_a));
}

AttentionRow attend(const Tensor& scores, const Tensor& states) {
    check_states(states, "attend");
    if (scores.shape().size() != 1 || scores.shape()[0] != states.shape()[0])
        throw ContractError("attend: got " + std::to_string(scores.size()) + " scores for " +
                            std::to_string(states.shape()[0]) + " encoder positions");
    AttentionRow row;
    row.raw_scores = scores.values();
    row.weights = softmax(scores, 0);
    row.context = matmul(row.weights, states);
    return row;
}

const char* ablation_mode_name(AblationMode mode) {
    switch (mode) {
        case AblationMode::Full: return "full";
        case AblationMode::NoFixation: return "no-fixation";
        case AblationMode::RandomInit: return "random-init";
        case AblationMode::Frozen: return "frozen";
        case AblationMode::WeightSwap: return "weight-swap";
    }
    return "?";
}

AblationMode parse_ablation_mode(const std::string& name) {
    if (name == "full") return AblationMode::Full;
    if (name == "no-fixation") return AblationMode::NoFixation;
    if (name == "random-init") return AblationMode::RandomInit;
    if (name == "frozen") return AblationMode::Frozen;
    if (name == "weight-swap") return AblationMode::WeightSwap;
    throw ConfigError("unknown ablation mode '" + name + "'");
}

SaliencySource::SaliencySource(AblationMode mode, const Checkpoint* tsm_checkpoint,
                               std::uint64_t seed)
    : mode_(mode) {
    if (mode_ == AblationMode::NoFixation) return;
    if (tsm_checkpoint == nullptr)
        throw ConfigError(std::string("ablation mode ") + ablation_mode_name(mode_) +
                          " requires a TSM checkpoint");
    tsm_ = std::make_unique<TsmModel>(TsmModel::from_checkpoint(*tsm_checkpoint));
    if (mode_ == AblationMode::RandomInit) tsm_->reinitialize(seed);
}

bool SaliencySource::tsm_trains() const {
    return mode_ == AblationMode::Full || mode_ == AblationMode::RandomInit ||
           mode_ == AblationMode::WeightSwap;
}

TsmModel& SaliencySource::tsm() {
    if (!tsm_) throw ContractError("SaliencySource: no TSM in no-fixation mode");
    return *tsm_;
}

const TsmModel& SaliencySource::tsm() const {
    if (!tsm_) throw ContractError("SaliencySource: no TSM in no-fixation mode");
    return *tsm_;
}

std::optional<Tensor> SaliencySource::saliency(const std::vector<std::string>& sentence,
                                               bool train, std::uint64_t dropout_seed) {
    if (mode_ == AblationMode::NoFixation) return std::nullopt;
    Tensor u = tsm_->forward_u(sentence, train, dropout_seed);
    if (mode_ == AblationMode::Frozen) return u.detach();
    return u;
}

std::optional<SaliencyDistribution> make_u(AblationMode mode, const Checkpoint* tsm_checkpoint,
                                           const std::vector<std::string>& sentence,
                                           std::uint64_t seed) {
    SaliencySource source(mode, tsm_checkpoint, seed);
    auto u = source.saliency(sentence, false, 0);
    if (!u) return std::nullopt;
    SaliencyDistribution out;
    out.tokens = sentence;
    out.u = u->values();
    return out;
}

}  // namespace tsal
