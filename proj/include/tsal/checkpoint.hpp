#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tsal/config.hpp"
#include "tsal/optim.hpp"
#include "tsal/tensor.hpp"

namespace tsal {

// Training history carried with a checkpoint.
struct Provenance {
    std::string stage;     // random-init | pretrained | finetuned | joint
    std::string task;      // empty | paragen | sentcomp
    std::string ablation;  // empty or an ablation mode name
    int epochs = 0;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::vector<double> per_epoch_losses;
    // Saliency snapshots of a probe sentence recorded once per joint-training
    // epoch; feeds the map emitters.
    std::vector<std::string> probe_tokens;
    std::vector<std::vector<double>> probe_saliency;
};

// Named parameter collection + optimizer state + provenance, persisted as a
// container file: an 8-byte magic, a JSON manifest, then raw little-endian
// 64-bit float blobs. Tensor bytes round-trip exactly.
struct Checkpoint {
    int format_version = 1;
    std::map<std::string, Tensor> tensors;
    AdamState optimizer;
    std::vector<std::string> vocab_tokens;
    ConfigMap config;
    Provenance provenance;

    void save(const std::string& path) const;
    static Checkpoint load(const std::string& path);

    // Exact equality of the named tensor contents.
    static bool same_tensors(const Checkpoint& a, const Checkpoint& b);
};

}  // namespace tsal
