#include "tsal/paragen.hpp"

#include <algorithm>
#include <cmath>

#include "tsal/layers.hpp"

namespace tsal {

void ParagenConfig::validate() const {
    if (embed_dim <= 0 || hidden_size <= 0) throw ConfigError("paragen: sizes must be positive");
    if (dropout_p < 0.0 || dropout_p >= 1.0)
        throw ConfigError("paragen: dropout_p must be in [0,1)");
    if (learning_rate <= 0.0) throw ConfigError("paragen: learning_rate must be positive");
    if (max_decode_len < 1) throw ConfigError("paragen: max_decode_len must be >= 1");
    if (epochs < 0) throw ConfigError("paragen: epochs must be nonnegative");
    parse_ablation_mode(ablation);
}

ConfigMap ParagenConfig::to_config() const {
    ConfigMap c;
    c["paragen.embed_dim"] = std::to_string(embed_dim);
    c["paragen.hidden_size"] = std::to_string(hidden_size);
    c["paragen.dropout_p"] = config_format_double(dropout_p);
    c["paragen.learning_rate"] = config_format_double(learning_rate);
    c["paragen.max_decode_len"] = std::to_string(max_decode_len);
    c["paragen.teacher_forcing"] = teacher_forcing ? "true" : "false";
    c["paragen.epochs"] = std::to_string(epochs);
    c["paragen.ablation"] = ablation;
    return c;
}

ParagenConfig ParagenConfig::from_config(const ConfigMap& config) {
    ParagenConfig c;
    c.embed_dim = config_get_int(config, "paragen.embed_dim", c.embed_dim);
    c.hidden_size = config_get_int(config, "paragen.hidden_size", c.hidden_size);
    c.dropout_p = config_get_double(config, "paragen.dropout_p", c.dropout_p);
    c.learning_rate = config_get_double(config, "paragen.learning_rate", c.learning_rate);
    c.max_decode_len = config_get_int(config, "paragen.max_decode_len", c.max_decode_len);
    c.teacher_forcing = config_get_bool(config, "paragen.teacher_forcing", c.teacher_forcing);
    c.epochs = config_get_int(config, "paragen.epochs", c.epochs);
    c.ablation = config_get(config, "paragen.ablation", c.ablation);
    c.validate();
    return c;
}

ParagenModel::ParagenModel(ParagenConfig config, Vocabulary vocab, EmbeddingTable embeddings,
                           std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), embeddings_(std::move(embeddings)) {
    config_.validate();
    if (embeddings_.dimension != config_.embed_dim)
        throw ConfigError("paragen: embedding dimension mismatch");
    if (embeddings_.matrix.shape()[0] != vocab_.size())
        throw ConfigError("paragen: embedding rows != vocabulary size");
    Rng rng(seed);
    const int h = config_.hidden_size;
    add_gru(params_, "encoder", config_.embed_dim, h, rng);
    add_gru(params_, "decoder", config_.embed_dim + h, h, rng);
    params_.add("attention.w_a", xavier_uniform(h, h, rng));
    add_linear(params_, "output", h, vocab_.size(), rng);
    if (embeddings_.trainable) params_.add("embeddings", embeddings_.matrix);
    provenance_.stage = "random-init";
    provenance_.task = "paragen";
    provenance_.seed = seed;
    provenance_.config_hash = config_hash(config_.to_config());
}

ParagenModel::Encoded ParagenModel::encode_source(const std::vector<std::string>& x, bool train,
                                                  std::uint64_t dropout_seed) {
    if (x.empty()) throw ContractError("encode_source: empty input");
    Tensor embedded = embeddings_.lookup(vocab_.encode(x));
    embedded = dropout(embedded, config_.dropout_p, train, dropout_seed);
    auto [states, final_hidden] = gru_sequence(params_, "encoder", embedded, config_.hidden_size);
    return {states, final_hidden};
}

ParagenModel::DecodeStep ParagenModel::decode_step(int prev_token_id, const Tensor& prev_hidden,
                                                   const Tensor& states,
                                                   const std::optional<Tensor>& u, bool train,
                                                   std::uint64_t dropout_seed) {
    Tensor scores = u ? score_paragen(prev_hidden, states, params_.at("attention.w_a"), *u)
                      : score_general(prev_hidden, states, params_.at("attention.w_a"));
    AttentionRow row = attend(scores, states);
    Tensor prev_embed = reshape(embeddings_.lookup({prev_token_id}), {config_.embed_dim});
    prev_embed = dropout(prev_embed, config_.dropout_p, train, dropout_seed);
    Tensor gru_input = concat({prev_embed, row.context}, 0);
    Tensor hidden = gru_step(params_, "decoder", gru_input, prev_hidden);
    Tensor logits = apply_linear(params_, "output", hidden);
    return {logits, hidden, row};
}

Tensor ParagenModel::pair_loss(const SentencePair& pair, const std::optional<Tensor>& u,
                               bool train, std::uint64_t dropout_seed) {
    if (pair.source.empty() || pair.target.empty())
        throw ContractError("pair_loss: empty sentence pair");
    Rng seeds(dropout_seed);
    Encoded encoded = encode_source(pair.source, train, seeds.next_u64());
    std::vector<int> gold = vocab_.encode(pair.target);
    gold.push_back(Vocabulary::kEos);
    Tensor hidden = encoded.final_hidden;
    std::vector<Tensor> logit_rows;
    logit_rows.reserve(gold.size());
    int prev = Vocabulary::kBos;
    for (std::size_t t = 0; t < gold.size(); ++t) {
        DecodeStep step = decode_step(prev, hidden, encoded.states, u, train, seeds.next_u64());
        logit_rows.push_back(step.logits);
        hidden = step.hidden;
        if (config_.teacher_forcing) {
            prev = gold[t];
        } else {
            const auto& row = step.logits.values();
            prev = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
        }
    }
    return cross_entropy_loss(stack_rows(logit_rows), gold);
}

double ParagenModel::token_accuracy(const std::vector<SentencePair>& corpus,
                                    SaliencySource& saliency) {
    long long correct = 0, total = 0;
    for (const auto& pair : corpus) {
        Encoded encoded = encode_source(pair.source, false, 0);
        std::optional<Tensor> u = saliency.saliency(pair.source, false, 0);
        std::vector<int> gold = vocab_.encode(pair.target);
        gold.push_back(Vocabulary::kEos);
        Tensor hidden = encoded.final_hidden;
        int prev = Vocabulary::kBos;
        for (std::size_t t = 0; t < gold.size(); ++t) {
            DecodeStep step = decode_step(prev, hidden, encoded.states, u, false, 0);
            const auto& row = step.logits.values();
            int predicted = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
            if (predicted == gold[t]) ++correct;
            ++total;
            hidden = step.hidden;
            prev = gold[t];
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

ParagenModel::Generation ParagenModel::generate(const std::vector<std::string>& x,
                                                const std::optional<Tensor>& u, int beam_width) {
    if (beam_width < 1) throw ContractError("generate: beam_width must be >= 1");
    Encoded encoded = encode_source(x, false, 0);

    struct Candidate {
        std::vector<int> tokens;
        std::vector<std::vector<double>> attention;
        double log_prob = 0.0;
        Tensor hidden;
        bool done = false;
    };
    std::vector<Candidate> beam{{{}, {}, 0.0, encoded.final_hidden, false}};
    std::vector<Candidate> finished;
    for (int step_index = 0; step_index < config_.max_decode_len; ++step_index) {
        std::vector<Candidate> expanded;
        for (const Candidate& candidate : beam) {
            int prev = candidate.tokens.empty() ? Vocabulary::kBos : candidate.tokens.back();
            DecodeStep step = decode_step(prev, candidate.hidden, encoded.states, u, false, 0);
            Tensor log_probs = softmax(step.logits, 0);
            const auto& probs = log_probs.values();
            // top beam_width continuations
            std::vector<int> order(probs.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            std::partial_sort(order.begin(), order.begin() + std::min<std::size_t>(beam_width, order.size()),
                              order.end(), [&probs](int a, int b) { return probs[a] > probs[b]; });
            for (int k = 0; k < beam_width && k < static_cast<int>(order.size()); ++k) {
                Candidate next = candidate;
                int token = order[static_cast<std::size_t>(k)];
                next.log_prob += std::log(std::max(probs[static_cast<std::size_t>(token)], 1e-300));
                next.hidden = step.hidden;
                if (token == Vocabulary::kEos) {
                    next.done = true;
                } else {
                    next.tokens.push_back(token);
                    next.attention.push_back(step.attention.weights.values());
                }
                expanded.push_back(std::move(next));
            }
        }
        std::stable_sort(expanded.begin(), expanded.end(),
                         [](const Candidate& a, const Candidate& b) { return a.log_prob > b.log_prob; });
        beam.clear();
        for (Candidate& candidate : expanded) {
            if (candidate.done)
                finished.push_back(std::move(candidate));
            else if (static_cast<int>(beam.size()) < beam_width)
                beam.push_back(std::move(candidate));
        }
        if (beam.empty() || static_cast<int>(finished.size()) >= beam_width) break;
    }

    bool truncated = finished.empty();
    Candidate best;
    if (!finished.empty()) {
        best = *std::max_element(finished.begin(), finished.end(),
                                 [](const Candidate& a, const Candidate& b) {
                                     return a.log_prob < b.log_prob;
                                 });
    } else {
        best = *std::max_element(beam.begin(), beam.end(),
                                 [](const Candidate& a, const Candidate& b) {
                                     return a.log_prob < b.log_prob;
                                 });
    }

    Generation out;
    out.tokens = vocab_.decode(best.tokens);
    out.trace.probe_tokens = x;
    out.trace.attention = std::move(best.attention);
    out.trace.output_tokens = out.tokens;
    out.trace.truncated = truncated;
    return out;
}

Checkpoint ParagenModel::to_checkpoint() const {
    Checkpoint ckpt;
    for (const auto& [name, tensor] : params_) ckpt.tensors.emplace(name, tensor.detach());
    if (!embeddings_.trainable) ckpt.tensors.emplace("embeddings", embeddings_.matrix.detach());
    ckpt.optimizer = optimizer_;
    ckpt.vocab_tokens = vocab_.tokens();
    ckpt.config = config_.to_config();
    ckpt.config["paragen.embeddings_trainable"] = embeddings_.trainable ? "true" : "false";
    ckpt.provenance = provenance_;
    return ckpt;
}

ParagenModel ParagenModel::from_checkpoint(const Checkpoint& checkpoint) {
    ParagenConfig config = ParagenConfig::from_config(checkpoint.config);
    Vocabulary vocab = Vocabulary::from_tokens(checkpoint.vocab_tokens);
    auto it = checkpoint.tensors.find("embeddings");
    if (it == checkpoint.tensors.end()) throw FormatError("checkpoint: missing embeddings tensor");
    EmbeddingTable embeddings;
    embeddings.dimension = config.embed_dim;
    embeddings.trainable =
        config_get_bool(checkpoint.config, "paragen.embeddings_trainable", false);
    embeddings.matrix =
        Tensor::from(it->second.shape(), it->second.values(), embeddings.trainable);
    ParagenModel model(config, std::move(vocab), std::move(embeddings),
                       checkpoint.provenance.seed);
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

JointTrainResult train_paragen(ParagenModel& model, const std::vector<SentencePair>& corpus,
                               SaliencySource& saliency, std::uint64_t seed,
                               const std::vector<std::string>& probe) {
    if (corpus.empty()) throw ContractError("train_paragen: empty corpus");
    const std::vector<std::string>& probe_tokens = probe.empty() ? corpus[0].source : probe;

    JointTrainResult result;
    result.trace.probe_tokens = probe_tokens;
    AdamState tsm_optimizer;  // joint stage starts fresh for the TSM side

    Rng rng(seed);
    std::vector<std::size_t> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 1; epoch <= model.config().epochs; ++epoch) {
        Rng epoch_rng = rng.split(static_cast<std::uint64_t>(epoch));
        epoch_rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const SentencePair& pair = corpus[order[k]];
            Rng pair_rng = epoch_rng.split(order[k]);
            std::optional<Tensor> u = saliency.saliency(pair.source, true, pair_rng.next_u64());
            Tensor loss = model.pair_loss(pair, u, true, pair_rng.next_u64());
            double value = loss.item();
            if (!std::isfinite(value))
                throw NumericError("train_paragen: non-finite loss at epoch " +
                                   std::to_string(epoch) + " pair " + std::to_string(k));
            loss_sum += value;
            model.params().zero_grad();
            if (saliency.tsm_trains()) saliency.tsm().params().zero_grad();
            backward(loss);
            adam_step(model.params(), model.optimizer(), model.config().learning_rate);
            if (saliency.tsm_trains())
                adam_step(saliency.tsm().params(), tsm_optimizer, model.config().learning_rate);
        }
        result.epoch_losses.push_back(loss_sum / static_cast<double>(corpus.size()));
        if (saliency.has_tsm())
            result.trace.saliency_per_epoch.push_back(saliency.tsm().predict(probe_tokens).u);
    }

    model.provenance().stage = "joint";
    model.provenance().ablation = ablation_mode_name(saliency.mode());
    model.provenance().epochs += model.config().epochs;
    model.provenance().per_epoch_losses = result.epoch_losses;
    model.provenance().probe_tokens = probe_tokens;
    model.provenance().probe_saliency = result.trace.saliency_per_epoch;

    if (saliency.has_tsm()) {
        Checkpoint tsm_ckpt = saliency.tsm().to_checkpoint();
        if (saliency.tsm_trains()) {
            tsm_ckpt.provenance.stage = "joint";
            tsm_ckpt.provenance.task = "paragen";
            tsm_ckpt.provenance.ablation = ablation_mode_name(saliency.mode());
        }
        result.tsm_checkpoint = std::move(tsm_ckpt);
    }
    return result;
}

}  // namespace tsal
