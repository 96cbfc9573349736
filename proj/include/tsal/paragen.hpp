#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tsal/attention.hpp"
#include "tsal/corpus.hpp"
#include "tsal/trace.hpp"

namespace tsal {

struct ParagenConfig {
    int embed_dim = 300;
    int hidden_size = 1024;  // tests use 64
    double dropout_p = 0.2;
    double learning_rate = 1e-4;
    int max_decode_len = 30;
    bool teacher_forcing = true;
    int epochs = 10;
    std::string ablation = "full";

    void validate() const;
    ConfigMap to_config() const;
    static ParagenConfig from_config(const ConfigMap& config);
};

// Sequence-to-sequence paraphrase generator: unidirectional GRU encoder and a
// GRU decoder whose attention uses the saliency-modulated multiplicative
// score. The decoder consumes concat(embedded previous token, context) and
// starts from the encoder's final hidden state.
class ParagenModel {
  public:
    ParagenModel(ParagenConfig config, Vocabulary vocab, EmbeddingTable embeddings,
                 std::uint64_t seed);

    struct Encoded {
        Tensor states;        // [n, hidden]
        Tensor final_hidden;  // [hidden]
    };
    Encoded encode_source(const std::vector<std::string>& x, bool train,
                          std::uint64_t dropout_seed);

    struct DecodeStep {
        Tensor logits;  // [V]
        Tensor hidden;
        AttentionRow attention;
    };
    DecodeStep decode_step(int prev_token_id, const Tensor& prev_hidden, const Tensor& states,
                           const std::optional<Tensor>& u, bool train, std::uint64_t dropout_seed);

    // Mean per-step cross-entropy of teacher-forced decoding of y (plus EOS)
    // given x.
    Tensor pair_loss(const SentencePair& pair, const std::optional<Tensor>& u, bool train,
                     std::uint64_t dropout_seed);

    // Fraction of teacher-forced steps whose argmax equals the gold token.
    double token_accuracy(const std::vector<SentencePair>& corpus, SaliencySource& saliency);

    struct Generation {
        std::vector<std::string> tokens;
        AttentionTrace trace;
    };
    // beam_width = 1 is greedy argmax decoding until EOS or max_decode_len;
    // wider beams keep the highest running log-probability.
    Generation generate(const std::vector<std::string>& x, const std::optional<Tensor>& u,
                        int beam_width = 1);

    ParamSet& params() { return params_; }
    AdamState& optimizer() { return optimizer_; }
    ParagenConfig& config() { return config_; }
    const ParagenConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    Provenance& provenance() { return provenance_; }

    Checkpoint to_checkpoint() const;
    static ParagenModel from_checkpoint(const Checkpoint& checkpoint);

  private:
    ParagenConfig config_;
    Vocabulary vocab_;
    EmbeddingTable embeddings_;
    ParamSet params_;
    AdamState optimizer_;
    Provenance provenance_;
};

struct JointTrainResult {
    std::vector<double> epoch_losses;
    AttentionTrace trace;                      // probe saliency snapshots
    std::optional<Checkpoint> tsm_checkpoint;  // absent in no-fixation mode
};

// Joint training: teacher-forced cross-entropy over the task parameters and,
// in modes where the TSM adapts, the TSM parameters through the implicit loss
// on u. One ADAM step per pair. The probe sentence's saliency is snapshotted
// after every epoch.
JointTrainResult train_paragen(ParagenModel& model, const std::vector<SentencePair>& corpus,
                               SaliencySource& saliency, std::uint64_t seed,
                               const std::vector<std::string>& probe);

}  // namespace tsal
