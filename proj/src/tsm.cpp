#include "tsal/tsm.hpp"

#include <cmath>

namespace tsal {

void TsmConfig::validate() const {
    if (embed_dim <= 0 || hidden_size <= 0 || transformer_layers <= 0 || attention_heads <= 0 ||
        feedforward_dim <= 0 || batch_size <= 0)
        throw ConfigError("tsm: all sizes must be positive");
    if (hidden_size % attention_heads != 0)
        throw ConfigError("tsm: hidden_size " + std::to_string(hidden_size) +
                          " not divisible by attention_heads " + std::to_string(attention_heads));
    if (dropout_p < 0.0 || dropout_p >= 1.0) throw ConfigError("tsm: dropout_p must be in [0,1)");
    if (pretrain_epochs < 0 || finetune_epochs < 0)
        throw ConfigError("tsm: epoch counts must be nonnegative");
    if (learning_rate <= 0.0) throw ConfigError("tsm: learning_rate must be positive");
}

ConfigMap TsmConfig::to_config() const {
    ConfigMap c;
    c["tsm.embed_dim"] = std::to_string(embed_dim);
    c["tsm.hidden_size"] = std::to_string(hidden_size);
    c["tsm.transformer_layers"] = std::to_string(transformer_layers);
    c["tsm.attention_heads"] = std::to_string(attention_heads);
    c["tsm.feedforward_dim"] = std::to_string(feedforward_dim);
    c["tsm.dropout_p"] = config_format_double(dropout_p);
    c["tsm.pretrain_epochs"] = std::to_string(pretrain_epochs);
    c["tsm.finetune_epochs"] = std::to_string(finetune_epochs);
    c["tsm.learning_rate"] = config_format_double(learning_rate);
    c["tsm.batch_size"] = std::to_string(batch_size);
    return c;
}

TsmConfig TsmConfig::from_config(const ConfigMap& config) {
    TsmConfig c;
    c.embed_dim = config_get_int(config, "tsm.embed_dim", c.embed_dim);
    c.hidden_size = config_get_int(config, "tsm.hidden_size", c.hidden_size);
    c.transformer_layers = config_get_int(config, "tsm.transformer_layers", c.transformer_layers);
    c.attention_heads = config_get_int(config, "tsm.attention_heads", c.attention_heads);
    c.feedforward_dim = config_get_int(config, "tsm.feedforward_dim", c.feedforward_dim);
    c.dropout_p = config_get_double(config, "tsm.dropout_p", c.dropout_p);
    c.pretrain_epochs = config_get_int(config, "tsm.pretrain_epochs", c.pretrain_epochs);
    c.finetune_epochs = config_get_int(config, "tsm.finetune_epochs", c.finetune_epochs);
    c.learning_rate = config_get_double(config, "tsm.learning_rate", c.learning_rate);
    c.batch_size = config_get_int(config, "tsm.batch_size", c.batch_size);
    c.validate();
    return c;
}

namespace {

void add_tsm_params(ParamSet& params, const TsmConfig& config, Rng& rng) {
    add_bilstm(params, "bilstm", config.embed_dim, config.hidden_size, rng);
    add_linear(params, "proj", 2 * config.hidden_size, config.hidden_size, rng);
    for (int layer = 0; layer < config.transformer_layers; ++layer)
        add_encoder_layer(params, "enc" + std::to_string(layer), config.hidden_size,
                          config.attention_heads, config.feedforward_dim, rng);
    add_linear(params, "head", config.hidden_size, 1, rng);
}

}  // namespace

TsmModel::TsmModel(TsmConfig config, Vocabulary vocab, EmbeddingTable embeddings,
                   std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), embeddings_(std::move(embeddings)) {
    config_.validate();
    if (embeddings_.dimension != config_.embed_dim)
        throw ConfigError("tsm: embedding dimension " + std::to_string(embeddings_.dimension) +
                          " != configured embed_dim " + std::to_string(config_.embed_dim));
    if (embeddings_.matrix.shape()[0] != vocab_.size())
        throw ConfigError("tsm: embedding rows != vocabulary size");
    Rng rng(seed);
    add_tsm_params(params_, config_, rng);
    if (embeddings_.trainable) params_.add("embeddings", embeddings_.matrix);
    provenance_.stage = "random-init";
    provenance_.seed = seed;
    provenance_.config_hash = config_hash(config_.to_config());
}

void TsmModel::reinitialize(std::uint64_t seed) {
    ParamSet fresh;
    Rng rng(seed);
    add_tsm_params(fresh, config_, rng);
    if (embeddings_.trainable) fresh.add("embeddings", embeddings_.matrix);
    params_ = std::move(fresh);
    optimizer_ = AdamState{};
    provenance_ = Provenance{};
    provenance_.stage = "random-init";
    provenance_.seed = seed;
    provenance_.config_hash = config_hash(config_.to_config());
}

Tensor TsmModel::forward_u(const std::vector<std::string>& sentence, bool train,
                           std::uint64_t dropout_seed) {
    if (sentence.empty()) throw ContractError("tsm_forward: empty sentence");
    Rng seeds(dropout_seed);
    std::vector<int> ids = vocab_.encode(sentence);
    Tensor x = embeddings_.lookup(ids);
    x = dropout(x, config_.dropout_p, train, seeds.next_u64());
    x = bilstm(params_, "bilstm", x, config_.hidden_size);
    x = apply_linear(params_, "proj", x);
    x = dropout(x, config_.dropout_p, train, seeds.next_u64());
    for (int layer = 0; layer < config_.transformer_layers; ++layer)
        x = encoder_layer(params_, "enc" + std::to_string(layer), x, config_.attention_heads);
    Tensor scores = apply_linear(params_, "head", x);  // [n, 1]
    Tensor s = sigmoid(reshape(scores, {static_cast<int>(sentence.size())}));
    return div(s, sum(s));
}

SaliencyDistribution TsmModel::predict(const std::vector<std::string>& sentence) {
    Tensor u = forward_u(sentence, false, 0);
    SaliencyDistribution out;
    out.tokens = sentence;
    out.u = u.values();
    return out;
}

Tensor TsmModel::loss(const Tensor& u, const GazeRecord& target) {
    if (static_cast<std::size_t>(u.shape()[0]) != target.durations.size())
        throw ContractError("tsm_loss: prediction length " + std::to_string(u.shape()[0]) +
                            " != target length " + std::to_string(target.durations.size()));
    if (!target.normalized) throw ContractError("tsm_loss: target record is not normalized");
    return mse_loss(u, Tensor::from({static_cast<int>(target.durations.size())},
                                    target.durations));
}

TrainStats TsmModel::train_epochs(const std::vector<GazeSample>& corpus, int epochs,
                                  std::uint64_t seed, const char* phase) {
    if (corpus.empty()) throw ContractError(std::string(phase) + ": empty corpus");
    for (const auto& sample : corpus) {
        if (sample.tokens.empty()) throw ContractError(std::string(phase) + ": empty sentence");
        if (sample.tokens.size() != sample.record.durations.size())
            throw ContractError(std::string(phase) + ": token/duration length mismatch");
    }
    TrainStats stats;
    Rng rng(seed);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    const std::size_t batch_size = static_cast<std::size_t>(config_.batch_size);
    for (int epoch = 1; epoch <= epochs; ++epoch) {
        Rng epoch_rng = rng.split(static_cast<std::uint64_t>(epoch));
        epoch_rng.shuffle(order);
        double loss_sum = 0.0;
        int batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size, ++batch_index) {
            std::size_t end = std::min(order.size(), start + batch_size);
            Tensor total;
            for (std::size_t k = start; k < end; ++k) {
                const GazeSample& sample = corpus[order[k]];
                Tensor u = forward_u(sample.tokens, true,
                                     epoch_rng.split(order[k]).next_u64());
                Tensor sample_loss = loss(u, sample.record);
                loss_sum += sample_loss.item();
                total = total.defined() ? add(total, sample_loss) : sample_loss;
            }
            total = scale(total, 1.0 / static_cast<double>(end - start));
            if (!std::isfinite(total.item()))
                throw NumericError(std::string(phase) + ": non-finite loss at epoch " +
                                   std::to_string(epoch) + " batch " +
                                   std::to_string(batch_index));
            params_.zero_grad();
            backward(total);
            adam_step(params_, optimizer_, config_.learning_rate);
        }
        stats.epoch_losses.push_back(loss_sum / static_cast<double>(corpus.size()));
    }
    return stats;
}

TrainStats TsmModel::pretrain(const std::vector<GazeSample>& corpus, std::uint64_t seed) {
    TrainStats stats = train_epochs(corpus, config_.pretrain_epochs, seed, "pretrain");
    provenance_.stage = "pretrained";
    provenance_.epochs += config_.pretrain_epochs;
    provenance_.seed = seed;
    provenance_.per_epoch_losses.insert(provenance_.per_epoch_losses.end(),
                                        stats.epoch_losses.begin(), stats.epoch_losses.end());
    return stats;
}

TrainStats TsmModel::finetune(const std::vector<GazeSample>& corpus, std::uint64_t seed) {
    if (provenance_.stage != "pretrained" && provenance_.stage != "random-init")
        throw ContractError("finetune: checkpoint stage must be pretrained or random-init, got " +
                            provenance_.stage);
    TrainStats stats = train_epochs(corpus, config_.finetune_epochs, seed, "finetune");
    provenance_.stage = "finetuned";
    provenance_.epochs += config_.finetune_epochs;
    provenance_.seed = seed;
    provenance_.per_epoch_losses.insert(provenance_.per_epoch_losses.end(),
                                        stats.epoch_losses.begin(), stats.epoch_losses.end());
    return stats;
}

Checkpoint TsmModel::to_checkpoint() const {
    Checkpoint ckpt;
    for (const auto& [name, tensor] : params_) ckpt.tensors.emplace(name, tensor.detach());
    if (!embeddings_.trainable)
        ckpt.tensors.emplace("embeddings", embeddings_.matrix.detach());
    ckpt.optimizer = optimizer_;
    ckpt.vocab_tokens = vocab_.tokens();
    ckpt.config = config_.to_config();
    ckpt.config["tsm.embeddings_trainable"] = embeddings_.trainable ? "true" : "false";
    ckpt.provenance = provenance_;
    return ckpt;
}

TsmModel TsmModel::from_checkpoint(const Checkpoint& checkpoint) {
    TsmConfig config = TsmConfig::from_config(checkpoint.config);
    Vocabulary vocab = Vocabulary::from_tokens(checkpoint.vocab_tokens);
    auto it = checkpoint.tensors.find("embeddings");
    if (it == checkpoint.tensors.end()) throw FormatError("checkpoint: missing embeddings tensor");
    EmbeddingTable embeddings;
    embeddings.dimension = config.embed_dim;
    embeddings.trainable =
        config_get_bool(checkpoint.config, "tsm.embeddings_trainable", false);
    embeddings.matrix = Tensor::from(it->second.shape(), it->second.values(),
                                     embeddings.trainable);
    TsmModel model(config, std::move(vocab), std::move(embeddings), checkpoint.provenance.seed);
    for (auto& [name, tensor] : model.params_) {
        auto found = checkpoint.tensors.find(name);
        if (found == checkpoint.tensors.end())
            throw FormatError("checkpoint: missing tensor " + name);
        if (found->second.shape() != tensor.shape())
            throw FormatError("checkpoint: shape mismatch for " + name);
        tensor.mutable_values() = found->second.values();
    }
    model.optimizer_ = checkpoint.optimizer;
    model.provenance_ = checkpoint.provenance;
    return model;
}

}  // namespace tsal
