#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tsal/checkpoint.hpp"
#include "tsal/corpus.hpp"
#include "tsal/embeddings.hpp"
#include "tsal/layers.hpp"

namespace tsal {

struct TsmConfig {
    int embed_dim = 300;
    int hidden_size = 128;
    int transformer_layers = 4;
    int attention_heads = 4;
    int feedforward_dim = 512;
    double dropout_p = 0.5;
    int pretrain_epochs = 4;
    int finetune_epochs = 10;
    double learning_rate = 1e-5;
    int batch_size = 100;

    void validate() const;
    ConfigMap to_config() const;
    static TsmConfig from_config(const ConfigMap& config);
};

// Per-token saliency weights: entries in (0,1) summing to 1.
struct SaliencyDistribution {
    std::vector<std::string> tokens;
    std::vector<double> u;
};

struct TrainStats {
    std::vector<double> epoch_losses;  // mean training loss per epoch
};

// Text saliency model: embeddings -> dropout -> single BiLSTM (directions
// concatenated, projected to hidden_size) -> dropout -> transformer encoder
// stack without positional encodings -> per-token linear -> sigmoid ->
// normalization over the sentence.
class TsmModel {
  public:
    TsmModel(TsmConfig config, Vocabulary vocab, EmbeddingTable embeddings, std::uint64_t seed);

    // Saliency over the sentence as a graph tensor [n]; gradients reach the
    // model parameters. Normalization is structural: the output is a valid
    // distribution for any parameter values.
    Tensor forward_u(const std::vector<std::string>& sentence, bool train,
                     std::uint64_t dropout_seed);

    // Eval-mode forward returning plain values.
    SaliencyDistribution predict(const std::vector<std::string>& sentence);

    // Mean squared error against a normalized gaze record.
    static Tensor loss(const Tensor& u, const GazeRecord& target);

    // Stage one: train on simulator output; stage tag becomes "pretrained".
    TrainStats pretrain(const std::vector<GazeSample>& corpus, std::uint64_t seed);
    // Stage two: continue on human data; requires stage pretrained or
    // random-init; stage tag becomes "finetuned".
    TrainStats finetune(const std::vector<GazeSample>& corpus, std::uint64_t seed);

    // Fresh random parameters (the random-init ablation); embeddings keep
    // their loaded values.
    void reinitialize(std::uint64_t seed);

    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }
    AdamState& optimizer() { return optimizer_; }
    // Mutable so callers can adjust epoch counts / learning rate between
    // stages; structural fields must not change after construction.
    TsmConfig& config() { return config_; }
    const TsmConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    Provenance& provenance() { return provenance_; }
    const Provenance& provenance() const { return provenance_; }

    Checkpoint to_checkpoint() const;
    static TsmModel from_checkpoint(const Checkpoint& checkpoint);

  private:
    TrainStats train_epochs(const std::vector<GazeSample>& corpus, int epochs,
                            std::uint64_t seed, const char* phase);

    TsmConfig config_;
    Vocabulary vocab_;
    EmbeddingTable embeddings_;
    ParamSet params_;
    AdamState optimizer_;
    Provenance provenance_;
};

}  // namespace tsal
