#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "tsal/errors.hpp"

namespace tsal {

class Tensor;

namespace detail {

// One node of the recorded computation. Forward evaluation builds a DAG of
// these; backward() walks it in reverse topological order. Nodes own their
// inputs through shared handles, so a graph lives exactly as long as some
// tensor still references it.
struct TensorNode {
    std::vector<int> shape;
    std::vector<double> values;
    std::vector<double> grad;  // sized lazily by backward()
    bool requires_grad = false;
    std::string op;  // empty for leaves
    std::vector<std::shared_ptr<TensorNode>> parents;
    std::function<void(TensorNode&)> backprop;

    std::size_t size() const { return values.size(); }
};

}  // namespace detail

// Shaped array of 64-bit reals with an optional gradient slot. Value-semantic
// handle to a shared node; copying a Tensor aliases the same storage.
class Tensor {
  public:
    Tensor() = default;

    static Tensor zeros(std::vector<int> shape, bool requires_grad = false);
    static Tensor full(std::vector<int> shape, double value, bool requires_grad = false);
    static Tensor from(std::vector<int> shape, std::vector<double> values,
                       bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    const std::vector<int>& shape() const { return node_->shape; }
    const std::vector<double>& values() const { return node_->values; }
    std::vector<double>& mutable_values() { return node_->values; }
    std::size_t size() const { return node_->values.size(); }
    bool is_scalar() const { return node_->values.size() == 1 && node_->shape.empty(); }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool flag) { node_->requires_grad = flag; }

    // Gradient accumulated by the most recent backward() pass. Empty until
    // the tensor participates in one.
    const std::vector<double>& grad() const { return node_->grad; }
    void zero_grad() { node_->grad.assign(node_->values.size(), 0.0); }

    double item() const;

    // Copy of the values with no graph attached.
    Tensor detach() const;

    // Rows/cols for rank-2 tensors, length for rank-1.
    int rows() const;
    int cols() const;
    double operator()(int i) const { return node_->values.at(static_cast<std::size_t>(i)); }
    double operator()(int i, int j) const;

    std::shared_ptr<detail::TensorNode> node() const { return node_; }

    static std::size_t shape_count(const std::vector<int>& shape);
    static std::string shape_str(const std::vector<int>& shape);

  private:
    explicit Tensor(std::shared_ptr<detail::TensorNode> node) : node_(std::move(node)) {}
    friend Tensor make_op(std::string op, std::vector<int> shape, std::vector<double> values,
                          std::vector<Tensor> parents,
                          std::function<void(detail::TensorNode&)> backprop);

    std::shared_ptr<detail::TensorNode> node_;
};

// --- primitive operations ---------------------------------------------------
// Each builds one node and records how to push gradients to its inputs.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
// Elementwise quotient; `b` may also be a scalar shared across `a`.
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);

// Rank-2 x rank-2, rank-2 x rank-1, rank-1 x rank-2 and rank-1 dot products.
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& x);

Tensor concat(const std::vector<Tensor>& xs, int axis);
Tensor slice_cols(const Tensor& x, int start, int len);
Tensor reshape(const Tensor& x, std::vector<int> shape);
// Stack rank-1 tensors of equal length into a rank-2 tensor.
Tensor stack_rows(const std::vector<Tensor>& rows);

Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
// Softmax along `axis`: 0 for rank-1 input, rows (axis=1) or columns (axis=0)
// for rank-2 input.
Tensor softmax(const Tensor& x, int axis = -1);

// Inverted dropout: identity when train is false, otherwise zeroes entries
// with probability p and scales survivors by 1/(1-p). The mask is a pure
// function of `seed`, so replaying a graph with the same seed is bit-identical.
Tensor dropout(const Tensor& x, double p, bool train, std::uint64_t seed);

// Row gather from a [V, d] table. Differentiable into the table.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

// x*W + b with the bias broadcast across rows. x may be rank-1 or rank-2.
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

// Per-row normalization to zero mean / unit variance followed by a learned
// elementwise affine map.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps = 1e-5);

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

Tensor mse_loss(const Tensor& pred, const Tensor& target);
// Mean over rows of -log softmax(logits)[target]. Logits rank-1 (one row) or
// rank-2 with one integer target per row.
Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& targets);
// Mean binary cross-entropy computed from logits (numerically stable form).
Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& targets);

// --- dynamic dispatch --------------------------------------------------------

enum class OpKind {
    Matmul,
    Add,
    Sub,
    ElementwiseMul,
    Div,
    Scale,
    Transpose,
    Concat,
    SliceCols,
    Reshape,
    StackRows,
    Sigmoid,
    Tanh,
    Softmax,
    Dropout,
    EmbeddingLookup,
    Linear,
    LayerNorm,
    Sum,
    Mean,
    MseLoss,
    CrossEntropyLoss,
    BceWithLogits,
};

struct OpAttrs {
    int axis = -1;
    int start = 0;
    int len = 0;
    double p = 0.0;
    double c = 1.0;
    bool train = false;
    std::uint64_t seed = 0;
    std::vector<int> shape;
    std::vector<int> indices;        // embedding ids / class targets
    std::vector<double> soft_targets;  // bce targets
};

const char* op_kind_name(OpKind kind);
Tensor apply(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs = {});

// --- reverse pass ------------------------------------------------------------

// Seeds d(loss)/d(loss)=1 and pushes gradients to every requires_grad tensor
// reachable from `loss`. Gradients from multiple uses of the same tensor
// accumulate additively. Throws ContractError if `loss` is not scalar.
void backward(const Tensor& loss);

}  // namespace tsal
