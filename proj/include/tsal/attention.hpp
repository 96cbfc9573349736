#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tsal/tsm.hpp"

namespace tsal {

// Learnable attention parameters. W_a is [dec_hidden, enc_hidden] for the
// multiplicative variant and [v_dim, dec_hidden + enc_hidden] for the
// additive variant, which also uses v_a of length v_dim.
struct AttentionParams {
    Tensor w_a;
    std::optional<Tensor> v_a;
};

// One decoder step's attention: softmax weights over encoder positions, the
// context vector, and the raw (pre-softmax, post-saliency) scores.
struct AttentionRow {
    Tensor weights;  // [n], graph tensor
    Tensor context;  // [enc_hidden]
    std::vector<double> raw_scores;
};

// Multiplicative scores: score_j = h^T W_a s_j over the encoder states S
// [n, enc_hidden].
Tensor score_general(const Tensor& h, const Tensor& states, const Tensor& w_a);

// Saliency-modulated multiplicative scores: score_j = u_j * (h^T W_a s_j).
Tensor score_paragen(const Tensor& h, const Tensor& states, const Tensor& w_a, const Tensor& u);

// Additive (concat) scores without saliency: score_j = v_a^T tanh(W_a [h; s_j]).
Tensor score_additive(const Tensor& h, const Tensor& states, const Tensor& w_a, const Tensor& v_a);

// Saliency-modulated additive scores: score_j = u_j * v_a^T tanh(W_a [h; s_j]).
Tensor score_textcomp(const Tensor& h, const Tensor& states, const Tensor& w_a, const Tensor& v_a,
                      const Tensor& u);

// softmax over positions plus the weighted context sum.
AttentionRow attend(const Tensor& scores, const Tensor& states);

// --- ablation dispatch ---------------------------------------------------------

enum class AblationMode { Full, NoFixation, RandomInit, Frozen, WeightSwap };

const char* ablation_mode_name(AblationMode mode);
AblationMode parse_ablation_mode(const std::string& name);

// Saliency supplier for joint training, dispatching on the ablation mode:
//   full        gradients flow into the owned TSM
//   no-fixation no TSM at all; score functions fall back to plain Luong
//   random-init TSM architecture from the checkpoint, parameters re-seeded,
//               gradients flow
//   frozen      TSM evaluated but detached; joint training never touches it
//   weight-swap mechanically as full, with the other task's checkpoint
class SaliencySource {
  public:
    // Checkpoint required for every mode except no-fixation.
    SaliencySource(AblationMode mode, const Checkpoint* tsm_checkpoint, std::uint64_t seed);

    // Saliency for the sentence, or nullopt in no-fixation mode. The tensor
    // stays connected to the TSM graph except in frozen mode.
    std::optional<Tensor> saliency(const std::vector<std::string>& sentence, bool train,
                                   std::uint64_t dropout_seed);

    AblationMode mode() const { return mode_; }
    bool has_tsm() const { return tsm_ != nullptr; }
    // Whether joint training should register the TSM parameters with the
    // optimizer.
    bool tsm_trains() const;
    TsmModel& tsm();
    const TsmModel& tsm() const;

  private:
    AblationMode mode_;
    std::unique_ptr<TsmModel> tsm_;
};

// Spec-level dispatcher: evaluates the mode's saliency distribution for one
// sentence, or absent in no-fixation mode.
std::optional<SaliencyDistribution> make_u(AblationMode mode, const Checkpoint* tsm_checkpoint,
                                           const std::vector<std::string>& sentence,
                                           std::uint64_t seed);

}  // namespace tsal
