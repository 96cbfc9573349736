#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsal/attention.hpp"
#include "tsal/corpus.hpp"
#include "tsal/trace.hpp"

namespace tsal {

struct SentcompConfig {
    int embed_dim = 300;
    int hidden_size = 1024;  // tests use 64
    static constexpr int layers = 3;
    double dropout_p = 0.1;
    double learning_rate = 1e-4;
    double threshold = 0.5;
    int epochs = 10;
    std::string ablation = "full";

    void validate() const;
    ConfigMap to_config() const;
    static SentcompConfig from_config(const ConfigMap& config);
};

// Deletion-based sentence compressor: three stacked BiLSTM layers with
// dropout after each, per-position self-attention through the
// saliency-modulated additive score, and a two-layer classification head on
// concat(h_i, context_i) producing per-token keep probabilities.
class SentcompModel {
  public:
    SentcompModel(SentcompConfig config, Vocabulary vocab, EmbeddingTable embeddings,
                  std::uint64_t seed);

    struct Forward {
        Tensor keep_logits;               // [n]
        std::vector<double> keep_probs;   // sigmoid of the logits
        AttentionTrace trace;             // n x n self-attention matrix
    };
    Forward compress_forward(const std::vector<std::string>& tokens,
                             const std::optional<Tensor>& u, bool train,
                             std::uint64_t dropout_seed);

    // Mean binary cross-entropy of the keep mask, computed from logits.
    Tensor example_loss(const DeletionExample& example, const std::optional<Tensor>& u, bool train,
                        std::uint64_t dropout_seed);

    double token_accuracy(const std::vector<DeletionExample>& corpus, SaliencySource& saliency);

    struct Compression {
        std::vector<bool> keep_mask;
        std::vector<std::string> tokens;
        bool empty_output = false;
    };
    // keep iff probability >= threshold; empty output is permitted and
    // flagged.
    Compression compress(const std::vector<std::string>& tokens, const std::optional<Tensor>& u,
                         double threshold = 0.5);

    ParamSet& params() { return params_; }
    AdamState& optimizer() { return optimizer_; }
    SentcompConfig& config() { return config_; }
    const SentcompConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    Provenance& provenance() { return provenance_; }

    Checkpoint to_checkpoint() const;
    static SentcompModel from_checkpoint(const Checkpoint& checkpoint);

  private:
    SentcompConfig config_;
    Vocabulary vocab_;
    EmbeddingTable embeddings_;
    ParamSet params_;
    AdamState optimizer_;
    Provenance provenance_;
};

// Joint training over per-token binary cross-entropy, with mode-dependent
// TSM adaptation and per-epoch probe saliency snapshots, mirroring
// train_paragen.
JointTrainResult train_sentcomp(SentcompModel& model, const std::vector<DeletionExample>& corpus,
                                SaliencySource& saliency, std::uint64_t seed,
                                const std::vector<std::string>& probe);

}  // namespace tsal
