#pragma once

#include <string>
#include <vector>

#include "tsal/optim.hpp"
#include "tsal/tensor.hpp"

namespace tsal {

// Parameter-set helpers for the recurrent and transformer building blocks.
// All weights are Xavier-uniform, biases zero, layer-norm gains one.

void add_linear(ParamSet& params, const std::string& prefix, int in, int out, Rng& rng);
Tensor apply_linear(const ParamSet& params, const std::string& prefix, const Tensor& x);

// Row i of a rank-2 tensor as a rank-1 tensor, differentiable into x.
Tensor select_row(const Tensor& x, int i);

// --- recurrent cells ----------------------------------------------------------

// Gate parameters named <prefix>.{i,f,g,o}.{wx,wh,b}.
void add_lstm(ParamSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng);

struct LstmState {
    Tensor h;
    Tensor c;
};

LstmState lstm_zero_state(int hidden);
LstmState lstm_step(const ParamSet& params, const std::string& prefix, const Tensor& x,
                    const LstmState& state);

// Gate parameters named <prefix>.{z,r,n}.{wx,wh,b}.
void add_gru(ParamSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng);

Tensor gru_zero_state(int hidden);
Tensor gru_step(const ParamSet& params, const std::string& prefix, const Tensor& x,
                const Tensor& hidden);

// Forward and backward LSTM passes over the rows of inputs [n, d]; returns
// per-token concatenated states [n, 2*hidden].
Tensor bilstm(const ParamSet& params, const std::string& prefix, const Tensor& inputs, int hidden);
void add_bilstm(ParamSet& params, const std::string& prefix, int input_dim, int hidden, Rng& rng);

// Unidirectional GRU over rows of inputs [n, d]; returns all step outputs
// [n, hidden] and the final hidden state.
std::pair<Tensor, Tensor> gru_sequence(const ParamSet& params, const std::string& prefix,
                                       const Tensor& inputs, int hidden);

// --- transformer encoder -----------------------------------------------------

// Multi-head self-attention + feed-forward, each with residual connection and
// layer norm. Parameters named <prefix>.{wq,wk,wv,wo,ff1,ff2,ln1,ln2}.*.
void add_encoder_layer(ParamSet& params, const std::string& prefix, int hidden, int heads,
                       int feedforward_dim, Rng& rng);
Tensor encoder_layer(const ParamSet& params, const std::string& prefix, const Tensor& x,
                     int heads);

// Scaled dot-product multi-head self-attention over x [n, hidden].
Tensor multi_head_self_attention(const ParamSet& params, const std::string& prefix,
                                 const Tensor& x, int heads);

}  // namespace tsal
