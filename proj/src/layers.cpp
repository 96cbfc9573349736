#include "tsal/layers.hpp"

#include <cmath>

namespace tsal {

void add_linear(ParamSet& params, const std::string& prefix, int in, int out, Rng& rng) {
    params.add(prefix + ".w", xavier_uniform(in, out, rng));
    params.add(prefix + ".b", Tensor::zeros({out}));
}

Tensor apply_linear(const ParamSet& params, const std::string& prefix, const Tensor& x) {
    return linear(x, params.at(prefix + ".w"), params.at(prefix + ".b"));
}

Tensor select_row(const Tensor& x, int i) {
    if (x.shape().size() != 2) throw DimensionError("select_row: expected rank-2 input");
    return reshape(embedding_lookup(x, {i}), {x.shape()[1]});
}

// --- LSTM ---------------------------------------------------------------------

void add_lstm(ParamSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng) {
    for (const char* gate : {"i", "f", "g", "o"}) {
        params.add(prefix + "." + gate + ".wx", xavier_uniform(input_dim, hidden, rng));
        params.add(prefix + "." + gate + ".wh", xavier_uniform(hidden, hidden, rng));
        params.add(prefix + "." + gate + ".b", Tensor::zeros({hidden}));
    }
}

LstmState lstm_zero_state(int hidden) {
    return {Tensor::zeros({hidden}), Tensor::zeros({hidden})};
}

namespace {

Tensor gate_preact(const ParamSet& params, const std::string& name, const Tensor& x,
                   const Tensor& h) {
    Tensor from_x = linear(x, params.at(name + ".wx"), params.at(name + ".b"));
    return add(from_x, matmul(h, params.at(name + ".wh")));
}

}  // namespace

LstmState lstm_step(const ParamSet& params, const std::string& prefix, const Tensor& x,
                    const LstmState& state) {
    Tensor i = sigmoid(gate_preact(params, prefix + ".i", x, state.h));
    Tensor f = sigmoid(gate_preact(params, prefix + ".f", x, state.h));
    Tensor g = tanh(gate_preact(params, prefix + ".g", x, state.h));
    Tensor o = sigmoid(gate_preact(params, prefix + ".o", x, state.h));
    Tensor c = add(mul(f, state.c), mul(i, g));
    Tensor h = mul(o, tanh(c));
    return {h, c};
}

void add_gru(ParamSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng) {
    for (const char* gate : {"z", "r", "n"}) {
        params.add(prefix + "." + gate + ".wx", xavier_uniform(input_dim, hidden, rng));
        params.add(prefix + "." + gate + ".wh", xavier_uniform(hidden, hidden, rng));
        params.add(prefix + "." + gate + ".b", Tensor::zeros({hidden}));
    }
}

Tensor gru_zero_state(int hidden) { return Tensor::zeros({hidden}); }

Tensor gru_step(const ParamSet& params, const std::string& prefix, const Tensor& x,
                const Tensor& hidden) {
    Tensor z = sigmoid(gate_preact(params, prefix + ".z", x, hidden));
    Tensor r = sigmoid(gate_preact(params, prefix + ".r", x, hidden));
    Tensor gated = mul(r, hidden);
    Tensor from_x = linear(x, params.at(prefix + ".n.wx"), params.at(prefix + ".n.b"));
    Tensor candidate = tanh(add(from_x, matmul(gated, params.at(prefix + ".n.wh"))));
    Tensor keep = sub(Tensor::full(hidden.shape(), 1.0), z);
    return add(mul(keep, candidate), mul(z, hidden));
}

void add_bilstm(ParamSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng) {
    add_lstm(params, prefix + ".fwd", input_dim, hidden, rng);
    add_lstm(params, prefix + ".bwd", input_dim, hidden, rng);
}

Tensor bilstm(const ParamSet& params, const std::string& prefix, const Tensor& inputs,
              int hidden) {
    const int n = inputs.shape()[0];
    std::vector<Tensor> forward_h(n), backward_h(n);
    LstmState state = lstm_zero_state(hidden);
    for (int i = 0; i < n; ++i) {
        state = lstm_step(params, prefix + ".fwd", select_row(inputs, i), state);
        forward_h[i] = state.h;
    }
    state = lstm_zero_state(hidden);
    for (int i = n - 1; i >= 0; --i) {
        state = lstm_step(params, prefix + ".bwd", select_row(inputs, i), state);
        backward_h[i] = state.h;
    }
    std::vector<Tensor> rows(n);
    for (int i = 0; i < n; ++i) rows[i] = concat({forward_h[i], backward_h[i]}, 0);
    return stack_rows(rows);
}

std::pair<Tensor, Tensor> gru_sequence(const ParamSet& params, const std::string& prefix,
                                       const Tensor& inputs, int hidden) {
    const int n = inputs.shape()[0];
    Tensor state = gru_zero_state(hidden);
    std::vector<Tensor> outputs(n);
    for (int i = 0; i < n; ++i) {
        state = gru_step(params, prefix, select_row(inputs, i), state);
        outputs[i] = state;
    }
    return {stack_rows(outputs), state};
}

// --- transformer encoder ----------------------------------------------------------

void add_encoder_layer(ParamSet& params, const std::string& prefix, int hidden, int heads,
                       int feedforward_dim, Rng& rng) {
    if (hidden % heads != 0)
        throw ConfigError("encoder layer: hidden size " + std::to_string(hidden) +
                          " not divisible by " + std::to_string(heads) + " heads");
    for (const char* name : {"wq", "wv", "wo"})
        add_linear(params, prefix + "." + name, hidden, hidden, rng);
    // no key bias: a constant added to every key shifts each score row
    // uniformly, which the row softmax cancels
    params.add(prefix + ".wk.w", xavier_uniform(hidden, hidden, rng));
    add_linear(params, prefix + ".ff1", hidden, feedforward_dim, rng);
    add_linear(params, prefix + ".ff2", feedforward_dim, hidden, rng);
    for (const char* name : {"ln1", "ln2"}) {
        params.add(prefix + "." + name + ".g", Tensor::full({hidden}, 1.0));
        params.add(prefix + "." + name + ".b", Tensor::zeros({hidden}));
    }
}

Tensor multi_head_self_attention(const ParamSet& params, const std::string& prefix,
                                 const Tensor& x, int heads) {
    const int hidden = x.shape()[1];
    const int head_dim = hidden / heads;
    Tensor q = apply_linear(params, prefix + ".wq", x);
    Tensor k = matmul(x, params.at(prefix + ".wk.w"));
    Tensor v = apply_linear(params, prefix + ".wv", x);
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(heads));
    for (int head = 0; head < heads; ++head) {
        Tensor qh = slice_cols(q, head * head_dim, head_dim);
        Tensor kh = slice_cols(k, head * head_dim, head_dim);
        Tensor vh = slice_cols(v, head * head_dim, head_dim);
        Tensor scores = scale(matmul(qh, transpose(kh)), 1.0 / std::sqrt(head_dim));
        Tensor weights = softmax(scores, 1);
        head_outputs.push_back(matmul(weights, vh));
    }
    return apply_linear(params, prefix + ".wo", concat(head_outputs, 1));
}

Tensor encoder_layer(const ParamSet& params, const std::string& prefix, const Tensor& x,
                     int heads) {
    Tensor attended = multi_head_self_attention(params, prefix, x, heads);
    Tensor normed = layer_norm(add(x, attended), params.at(prefix + ".ln1.g"),
                               params.at(prefix + ".ln1.b"));
    Tensor ff = apply_linear(params, prefix + ".ff2",
                             tanh(apply_linear(params, prefix + ".ff1", normed)));
    return layer_norm(add(normed, ff), params.at(prefix + ".ln2.g"),
                      params.at(prefix + ".ln2.b"));
}

}  // namespace tsal
