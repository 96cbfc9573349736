#include "tsal/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "tsal/rng.hpp"

namespace tsal {

using detail::TensorNode;

std::size_t Tensor::shape_count(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw DimensionError("negative dimension in shape " + shape_str(shape));
        n *= static_cast<std::size_t>(d);
    }
    return n;
}

std::string Tensor::shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << ',';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor make_op(std::string op, std::vector<int> shape, std::vector<double> values,
               std::vector<Tensor> parents, std::function<void(TensorNode&)> backprop) {
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->op = std::move(op);
    for (const Tensor& p : parents) {
        node->parents.push_back(p.node());
        if (p.requires_grad()) node->requires_grad = true;
    }
    if (node->requires_grad) node->backprop = std::move(backprop);
    return Tensor(std::move(node));
}

namespace {

// Gradient buffer of a parent, allocated on first touch.
std::vector<double>& grad_of(const std::shared_ptr<TensorNode>& n) {
    if (n->grad.size() != n->values.size()) n->grad.assign(n->values.size(), 0.0);
    return n->grad;
}

bool wants_grad(const std::shared_ptr<TensorNode>& n) { return n->requires_grad; }

void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape())
        throw DimensionError(std::string(op) + ": shape mismatch " +
                             Tensor::shape_str(a.shape()) + " vs " +
                             Tensor::shape_str(b.shape()));
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    std::size_t n = shape_count(shape);
    Tensor t = from(std::move(shape), std::vector<double>(n, 0.0));
    t.set_requires_grad(requires_grad);
    return t;
}

Tensor Tensor::full(std::vector<int> shape, double value, bool requires_grad) {
    std::size_t n = shape_count(shape);
    Tensor t = from(std::move(shape), std::vector<double>(n, value));
    t.set_requires_grad(requires_grad);
    return t;
}

Tensor Tensor::from(std::vector<int> shape, std::vector<double> values, bool requires_grad) {
    if (shape_count(shape) != values.size())
        throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                             std::to_string(values.size()) + " values");
    auto node = std::make_shared<TensorNode>();
    node->shape = std::move(shape);
    node->values = std::move(values);
    node->requires_grad = requires_grad;
    return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from({}, {value}, requires_grad);
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() on non-scalar tensor " + shape_str(shape()));
    return node_->values[0];
}

Tensor Tensor::detach() const {
    return from(node_->shape, node_->values, false);
}

int Tensor::rows() const {
    if (shape().size() == 2) return shape()[0];
    if (shape().size() == 1) return shape()[0];
    throw DimensionError("rows() on tensor of shape " + shape_str(shape()));
}

int Tensor::cols() const {
    if (shape().size() != 2) throw DimensionError("cols() on tensor of shape " + shape_str(shape()));
    return shape()[1];
}

double Tensor::operator()(int i, int j) const {
    if (shape().size() != 2) throw DimensionError("2-index access on " + shape_str(shape()));
    return node_->values.at(static_cast<std::size_t>(i) * shape()[1] + j);
}

// --- elementwise -------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    check_same_shape("add", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
    return make_op("add", a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
        for (int k = 0; k < 2; ++k) {
            auto& p = n.parents[k];
            if (!wants_grad(p)) continue;
            auto& g = grad_of(p);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    check_same_shape("sub", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] - b.values()[i];
    return make_op("sub", a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
        if (wants_grad(n.parents[0])) {
            auto& g = grad_of(n.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
        }
        if (wants_grad(n.parents[1])) {
            auto& g = grad_of(n.parents[1]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= n.grad[i];
        }
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    check_same_shape("elementwise_mul", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
    return make_op("elementwise_mul", a.shape(), std::move(out), {a, b}, [](TensorNode& n) {
        const auto& av = n.parents[0]->values;
        const auto& bv = n.parents[1]->values;
        if (wants_grad(n.parents[0])) {
            auto& g = grad_of(n.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * bv[i];
        }
        if (wants_grad(n.parents[1])) {
            auto& g = grad_of(n.parents[1]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * av[i];
        }
    });
}

Tensor div(const Tensor& a, const Tensor& b) {
    const bool scalar_div = b.size() == 1;
    if (!scalar_div) check_same_shape("div", a, b);
    std::vector<double> out(a.size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = a.values()[i] / b.values()[scalar_div ? 0 : i];
    return make_op("div", a.shape(), std::move(out), {a, b}, [scalar_div](TensorNode& n) {
        const auto& av = n.parents[0]->values;
        const auto& bv = n.parents[1]->values;
        if (wants_grad(n.parents[0])) {
            auto& g = grad_of(n.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] / bv[scalar_div ? 0 : i];
        }
        if (wants_grad(n.parents[1])) {
            auto& g = grad_of(n.parents[1]);
            for (std::size_t i = 0; i < av.size(); ++i) {
                double d = bv[scalar_div ? 0 : i];
                g[scalar_div ? 0 : i] -= n.grad[i] * av[i] / (d * d);
            }
        }
    });
}

Tensor scale(const Tensor& x, double c) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x.values()[i] * c;
    return make_op("scale", x.shape(), std::move(out), {x}, [c](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * c;
    });
}

// --- linear algebra ----------------------------------------------------------

namespace {

// C[m,n] += A[m,k] * B[k,n], raw row-major buffers.
void gemm_acc(const double* a, const double* b, double* c, int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        for (int l = 0; l < k; ++l) {
            double av = a[i * k + l];
            if (av == 0.0) continue;
            const double* brow = b + l * n;
            double* crow = c + i * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,n] += A[k,m]^T * B[k,n]
void gemm_at_b(const double* a, const double* b, double* c, int k, int m, int n) {
    for (int l = 0; l < k; ++l) {
        const double* arow = a + l * m;
        const double* brow = b + l * n;
        for (int i = 0; i < m; ++i) {
            double av = arow[i];
            if (av == 0.0) continue;
            double* crow = c + i * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[m,k] += A[m,n] * B[k,n]^T
void gemm_a_bt(const double* a, const double* b, double* c, int m, int n, int k) {
    for (int i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        double* crow = c + i * k;
        for (int l = 0; l < k; ++l) {
            const double* brow = b + l * n;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[l] += acc;
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    const auto& sa = a.shape();
    const auto& sb = b.shape();
    auto bad = [&] {
        return DimensionError("matmul: shape mismatch " + Tensor::shape_str(sa) + " x " +
                              Tensor::shape_str(sb));
    };
    // Treat rank-1 operands as a row (lhs) or column (rhs) and drop the
    // dimension again on the way out.
    int m, k, n;
    std::vector<int> out_shape;
    if (sa.size() == 2 && sb.size() == 2) {
        m = sa[0]; k = sa[1]; n = sb[1];
        if (sb[0] != k) throw bad();
        out_shape = {m, n};
    } else if (sa.size() == 2 && sb.size() == 1) {
        m = sa[0]; k = sa[1]; n = 1;
        if (sb[0] != k) throw bad();
        out_shape = {m};
    } else if (sa.size() == 1 && sb.size() == 2) {
        m = 1; k = sa[0]; n = sb[1];
        if (sb[0] != k) throw bad();
        out_shape = {n};
    } else if (sa.size() == 1 && sb.size() == 1) {
        m = 1; k = sa[0]; n = 1;
        if (sb[0] != k) throw bad();
        out_shape = {};
    } else {
        throw bad();
    }

    std::vector<double> out(static_cast<std::size_t>(m) * n, 0.0);
    gemm_acc(a.values().data(), b.values().data(), out.data(), m, k, n);
    return make_op("matmul", std::move(out_shape), std::move(out), {a, b},
                   [m, k, n](TensorNode& node) {
                       const double* av = node.parents[0]->values.data();
                       const double* bv = node.parents[1]->values.data();
                       const double* go = node.grad.data();
                       if (wants_grad(node.parents[0]))
                           gemm_a_bt(go, bv, grad_of(node.parents[0]).data(), m, n, k);
                       if (wants_grad(node.parents[1]))
                           gemm_at_b(av, go, grad_of(node.parents[1]).data(), m, k, n);
                   });
}

Tensor transpose(const Tensor& x) {
    if (x.shape().size() != 2)
        throw DimensionError("transpose: expected rank-2, got " + Tensor::shape_str(x.shape()));
    int r = x.shape()[0], c = x.shape()[1];
    std::vector<double> out(x.size());
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out[static_cast<std::size_t>(j) * r + i] = x.values()[static_cast<std::size_t>(i) * c + j];
    return make_op("transpose", {c, r}, std::move(out), {x}, [r, c](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j)
                g[static_cast<std::size_t>(i) * c + j] += n.grad[static_cast<std::size_t>(j) * r + i];
    });
}

// --- shape manipulation --------------------------------------------------------

Tensor concat(const std::vector<Tensor>& xs, int axis) {
    if (xs.empty()) throw ContractError("concat: no inputs");
    const std::size_t rank = xs[0].shape().size();
    for (const auto& x : xs)
        if (x.shape().size() != rank)
            throw DimensionError("concat: mixed ranks");
    if (rank == 1 && axis == 0) {
        int total = 0;
        std::vector<double> out;
        for (const auto& x : xs) {
            total += x.shape()[0];
            out.insert(out.end(), x.values().begin(), x.values().end());
        }
        return make_op("concat", {total}, std::move(out), xs, [](TensorNode& n) {
            std::size_t off = 0;
            for (auto& p : n.parents) {
                std::size_t len = p->values.size();
                if (wants_grad(p)) {
                    auto& g = grad_of(p);
                    for (std::size_t i = 0; i < len; ++i) g[i] += n.grad[off + i];
                }
                off += len;
            }
        });
    }
    if (rank == 2 && axis == 0) {
        int cols = xs[0].shape()[1], rows = 0;
        std::vector<double> out;
        for (const auto& x : xs) {
            if (x.shape()[1] != cols) throw DimensionError("concat axis 0: column mismatch");
            rows += x.shape()[0];
            out.insert(out.end(), x.values().begin(), x.values().end());
        }
        return make_op("concat", {rows, cols}, std::move(out), xs, [](TensorNode& n) {
            std::size_t off = 0;
            for (auto& p : n.parents) {
                std::size_t len = p->values.size();
                if (wants_grad(p)) {
                    auto& g = grad_of(p);
                    for (std::size_t i = 0; i < len; ++i) g[i] += n.grad[off + i];
                }
                off += len;
            }
        });
    }
    if (rank == 2 && axis == 1) {
        int rows = xs[0].shape()[0], cols = 0;
        std::vector<int> widths;
        for (const auto& x : xs) {
            if (x.shape()[0] != rows) throw DimensionError("concat axis 1: row mismatch");
            widths.push_back(x.shape()[1]);
            cols += x.shape()[1];
        }
        std::vector<double> out(static_cast<std::size_t>(rows) * cols);
        int coff = 0;
        for (std::size_t t = 0; t < xs.size(); ++t) {
            int w = widths[t];
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < w; ++j)
                    out[static_cast<std::size_t>(i) * cols + coff + j] =
                        xs[t].values()[static_cast<std::size_t>(i) * w + j];
            coff += w;
        }
        return make_op("concat", {rows, cols}, std::move(out), xs,
                       [rows, cols, widths](TensorNode& n) {
                           int coff = 0;
                           for (std::size_t t = 0; t < n.parents.size(); ++t) {
                               int w = widths[t];
                               if (wants_grad(n.parents[t])) {
                                   auto& g = grad_of(n.parents[t]);
                                   for (int i = 0; i < rows; ++i)
                                       for (int j = 0; j < w; ++j)
                                           g[static_cast<std::size_t>(i) * w + j] +=
                                               n.grad[static_cast<std::size_t>(i) * cols + coff + j];
                               }
                               coff += w;
                           }
                       });
    }
    throw DimensionError("concat: unsupported rank/axis");
}

Tensor slice_cols(const Tensor& x, int start, int len) {
    if (x.shape().size() != 2)
        throw DimensionError("slice_cols: expected rank-2, got " + Tensor::shape_str(x.shape()));
    int rows = x.shape()[0], cols = x.shape()[1];
    if (start < 0 || len <= 0 || start + len > cols)
        throw BoundsError("slice_cols: window [" + std::to_string(start) + "," +
                          std::to_string(start + len) + ") out of " + std::to_string(cols));
    std::vector<double> out(static_cast<std::size_t>(rows) * len);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < len; ++j)
            out[static_cast<std::size_t>(i) * len + j] =
                x.values()[static_cast<std::size_t>(i) * cols + start + j];
    return make_op("slice_cols", {rows, len}, std::move(out), {x},
                   [rows, cols, start, len](TensorNode& n) {
                       if (!wants_grad(n.parents[0])) return;
                       auto& g = grad_of(n.parents[0]);
                       for (int i = 0; i < rows; ++i)
                           for (int j = 0; j < len; ++j)
                               g[static_cast<std::size_t>(i) * cols + start + j] +=
                                   n.grad[static_cast<std::size_t>(i) * len + j];
                   });
}

Tensor reshape(const Tensor& x, std::vector<int> shape) {
    if (Tensor::shape_count(shape) != x.size())
        throw DimensionError("reshape: " + Tensor::shape_str(x.shape()) + " to " +
                             Tensor::shape_str(shape) + " changes element count");
    return make_op("reshape", std::move(shape), x.values(), {x}, [](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i];
    });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
    if (rows.empty()) throw ContractError("stack_rows: no inputs");
    int d = rows[0].shape().size() == 1 ? rows[0].shape()[0] : -1;
    if (d < 0) throw DimensionError("stack_rows: inputs must be rank-1");
    std::vector<double> out;
    out.reserve(rows.size() * d);
    for (const auto& r : rows) {
        if (r.shape().size() != 1 || r.shape()[0] != d)
            throw DimensionError("stack_rows: inconsistent row lengths");
        out.insert(out.end(), r.values().begin(), r.values().end());
    }
    return make_op("stack_rows", {static_cast<int>(rows.size()), d}, std::move(out), rows,
                   [d](TensorNode& n) {
                       for (std::size_t i = 0; i < n.parents.size(); ++i) {
                           if (!wants_grad(n.parents[i])) continue;
                           auto& g = grad_of(n.parents[i]);
                           for (int j = 0; j < d; ++j) g[j] += n.grad[i * d + j];
                       }
                   });
}

// --- nonlinearities ------------------------------------------------------------

Tensor sigmoid(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        double v = x.values()[i];
        out[i] = v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
    }
    return make_op("sigmoid", x.shape(), std::move(out), {x}, [](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double y = n.values[i];
            g[i] += n.grad[i] * y * (1.0 - y);
        }
    });
}

Tensor tanh(const Tensor& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.values()[i]);
    return make_op("tanh", x.shape(), std::move(out), {x}, [](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) {
            double y = n.values[i];
            g[i] += n.grad[i] * (1.0 - y * y);
        }
    });
}

namespace {

void softmax_row(const double* x, double* y, int n) {
    double m = x[0];
    for (int i = 1; i < n; ++i) m = std::max(m, x[i]);
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
        y[i] = std::exp(x[i] - m);
        s += y[i];
    }
    for (int i = 0; i < n; ++i) y[i] /= s;
}

}  // namespace

Tensor softmax(const Tensor& x, int axis) {
    const auto& sh = x.shape();
    if (sh.size() == 1 || sh.empty()) {
        int n = sh.empty() ? 1 : sh[0];
        if (n == 0) throw DomainError("softmax: empty axis");
        std::vector<double> out(x.size());
        softmax_row(x.values().data(), out.data(), n);
        return make_op("softmax", sh, std::move(out), {x}, [n](TensorNode& node) {
            if (!wants_grad(node.parents[0])) return;
            auto& g = grad_of(node.parents[0]);
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += node.grad[i] * node.values[i];
            for (int i = 0; i < n; ++i) g[i] += node.values[i] * (node.grad[i] - dot);
        });
    }
    if (sh.size() == 2) {
        int rows = sh[0], cols = sh[1];
        if (axis != 1 && axis != -1)
            throw DomainError("softmax: rank-2 input supports row softmax only");
        if (cols == 0 || rows == 0) throw DomainError("softmax: empty axis");
        std::vector<double> out(x.size());
        for (int i = 0; i < rows; ++i)
            softmax_row(x.values().data() + static_cast<std::size_t>(i) * cols,
                        out.data() + static_cast<std::size_t>(i) * cols, cols);
        return make_op("softmax", sh, std::move(out), {x}, [rows, cols](TensorNode& node) {
            if (!wants_grad(node.parents[0])) return;
            auto& g = grad_of(node.parents[0]);
            for (int i = 0; i < rows; ++i) {
                const double* y = node.values.data() + static_cast<std::size_t>(i) * cols;
                const double* dy = node.grad.data() + static_cast<std::size_t>(i) * cols;
                double dot = 0.0;
                for (int j = 0; j < cols; ++j) dot += dy[j] * y[j];
                double* gi = g.data() + static_cast<std::size_t>(i) * cols;
                for (int j = 0; j < cols; ++j) gi[j] += y[j] * (dy[j] - dot);
            }
        });
    }
    throw DimensionError("softmax: unsupported rank " + Tensor::shape_str(sh));
}

Tensor dropout(const Tensor& x, double p, bool train, std::uint64_t seed) {
    if (p < 0.0 || p >= 1.0) throw DomainError("dropout: p must be in [0,1)");
    if (!train || p == 0.0) return x;
    Rng rng(seed);
    auto mask = std::make_shared<std::vector<double>>(x.size());
    const double keep_scale = 1.0 / (1.0 - p);
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        (*mask)[i] = rng.uniform() >= p ? keep_scale : 0.0;
        out[i] = x.values()[i] * (*mask)[i];
    }
    return make_op("dropout", x.shape(), std::move(out), {x}, [mask](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[i] * (*mask)[i];
    });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
    if (table.shape().size() != 2)
        throw DimensionError("embedding_lookup: table must be rank-2");
    int v = table.shape()[0], d = table.shape()[1];
    for (int id : ids)
        if (id < 0 || id >= v)
            throw BoundsError("embedding_lookup: index " + std::to_string(id) +
                              " out of vocabulary of size " + std::to_string(v));
    std::vector<double> out(ids.size() * static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < ids.size(); ++i)
        std::copy_n(table.values().data() + static_cast<std::size_t>(ids[i]) * d, d,
                    out.data() + i * d);
    auto ids_copy = ids;
    return make_op("embedding_lookup", {static_cast<int>(ids.size()), d}, std::move(out), {table},
                   [ids_copy, d](TensorNode& n) {
                       if (!wants_grad(n.parents[0])) return;
                       auto& g = grad_of(n.parents[0]);
                       for (std::size_t i = 0; i < ids_copy.size(); ++i)
                           for (int j = 0; j < d; ++j)
                               g[static_cast<std::size_t>(ids_copy[i]) * d + j] += n.grad[i * d + j];
                   });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    if (weight.shape().size() != 2 || bias.shape().size() != 1)
        throw DimensionError("linear: weight must be rank-2 and bias rank-1");
    int d = weight.shape()[0], h = weight.shape()[1];
    if (bias.shape()[0] != h)
        throw DimensionError("linear: bias length " + std::to_string(bias.shape()[0]) +
                             " != output width " + std::to_string(h));
    bool vec = x.shape().size() == 1;
    int n = vec ? 1 : x.shape()[0];
    if ((vec ? x.shape()[0] : x.shape()[1]) != d)
        throw DimensionError("linear: input " + Tensor::shape_str(x.shape()) +
                             " incompatible with weight " + Tensor::shape_str(weight.shape()));
    std::vector<double> out(static_cast<std::size_t>(n) * h);
    for (int i = 0; i < n; ++i) std::copy_n(bias.values().data(), h, out.data() + static_cast<std::size_t>(i) * h);
    gemm_acc(x.values().data(), weight.values().data(), out.data(), n, d, h);
    std::vector<int> out_shape = vec ? std::vector<int>{h} : std::vector<int>{n, h};
    return make_op("linear", std::move(out_shape), std::move(out), {x, weight, bias},
                   [n, d, h](TensorNode& node) {
                       const double* xv = node.parents[0]->values.data();
                       const double* wv = node.parents[1]->values.data();
                       const double* go = node.grad.data();
                       if (wants_grad(node.parents[0]))
                           gemm_a_bt(go, wv, grad_of(node.parents[0]).data(), n, h, d);
                       if (wants_grad(node.parents[1]))
                           gemm_at_b(xv, go, grad_of(node.parents[1]).data(), n, d, h);
                       if (wants_grad(node.parents[2])) {
                           auto& gb = grad_of(node.parents[2]);
                           for (int i = 0; i < n; ++i)
                               for (int j = 0; j < h; ++j) gb[j] += go[static_cast<std::size_t>(i) * h + j];
                       }
                   });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
    bool vec = x.shape().size() == 1;
    if (!vec && x.shape().size() != 2)
        throw DimensionError("layer_norm: expected rank-1 or rank-2 input");
    int n = vec ? 1 : x.shape()[0];
    int h = vec ? x.shape()[0] : x.shape()[1];
    if (gain.shape() != std::vector<int>{h} || bias.shape() != std::vector<int>{h})
        throw DimensionError("layer_norm: gain/bias must have length " + std::to_string(h));
    std::vector<double> out(x.size());
    auto xhat = std::make_shared<std::vector<double>>(x.size());
    auto inv_std = std::make_shared<std::vector<double>>(n);
    for (int i = 0; i < n; ++i) {
        const double* row = x.values().data() + static_cast<std::size_t>(i) * h;
        double mu = 0.0;
        for (int j = 0; j < h; ++j) mu += row[j];
        mu /= h;
        double var = 0.0;
        for (int j = 0; j < h; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= h;
        double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[i] = is;
        for (int j = 0; j < h; ++j) {
            double xh = (row[j] - mu) * is;
            (*xhat)[static_cast<std::size_t>(i) * h + j] = xh;
            out[static_cast<std::size_t>(i) * h + j] = gain.values()[j] * xh + bias.values()[j];
        }
    }
    return make_op("layer_norm", x.shape(), std::move(out), {x, gain, bias},
                   [n, h, xhat, inv_std](TensorNode& node) {
                       const auto& gamma = node.parents[1]->values;
                       for (int i = 0; i < n; ++i) {
                           const double* dy = node.grad.data() + static_cast<std::size_t>(i) * h;
                           const double* xh = xhat->data() + static_cast<std::size_t>(i) * h;
                           if (wants_grad(node.parents[0])) {
                               // dx = (1/std) * (dxh - mean(dxh) - xh * mean(dxh*xh))
                               double m1 = 0.0, m2 = 0.0;
                               for (int j = 0; j < h; ++j) {
                                   double dxh = dy[j] * gamma[j];
                                   m1 += dxh;
                                   m2 += dxh * xh[j];
                               }
                               m1 /= h;
                               m2 /= h;
                               auto& gx = grad_of(node.parents[0]);
                               for (int j = 0; j < h; ++j) {
                                   double dxh = dy[j] * gamma[j];
                                   gx[static_cast<std::size_t>(i) * h + j] +=
                                       (*inv_std)[i] * (dxh - m1 - xh[j] * m2);
                               }
                           }
                           if (wants_grad(node.parents[1])) {
                               auto& gg = grad_of(node.parents[1]);
                               for (int j = 0; j < h; ++j) gg[j] += dy[j] * xh[j];
                           }
                           if (wants_grad(node.parents[2])) {
                               auto& gb = grad_of(node.parents[2]);
                               for (int j = 0; j < h; ++j) gb[j] += dy[j];
                           }
                       }
                   });
}

// --- reductions and losses -----------------------------------------------------

Tensor sum(const Tensor& x) {
    double s = 0.0;
    for (double v : x.values()) s += v;
    return make_op("sum", {}, {s}, {x}, [](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0];
    });
}

Tensor mean(const Tensor& x) {
    if (x.size() == 0) throw DomainError("mean: empty tensor");
    double s = 0.0;
    for (double v : x.values()) s += v;
    double inv = 1.0 / static_cast<double>(x.size());
    return make_op("mean", {}, {s * inv}, {x}, [inv](TensorNode& n) {
        if (!wants_grad(n.parents[0])) return;
        auto& g = grad_of(n.parents[0]);
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += n.grad[0] * inv;
    });
}

Tensor mse_loss(const Tensor& pred, const Tensor& target) {
    check_same_shape("mse_loss", pred, target);
    if (pred.size() == 0) throw DomainError("mse_loss: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        double d = pred.values()[i] - target.values()[i];
        acc += d * d;
    }
    double inv = 1.0 / static_cast<double>(pred.size());
    return make_op("mse_loss", {}, {acc * inv}, {pred, target}, [inv](TensorNode& n) {
        const auto& pv = n.parents[0]->values;
        const auto& tv = n.parents[1]->values;
        double g0 = n.grad[0];
        if (wants_grad(n.parents[0])) {
            auto& g = grad_of(n.parents[0]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += g0 * 2.0 * (pv[i] - tv[i]) * inv;
        }
        if (wants_grad(n.parents[1])) {
            auto& g = grad_of(n.parents[1]);
            for (std::size_t i = 0; i < g.size(); ++i) g[i] -= g0 * 2.0 * (pv[i] - tv[i]) * inv;
        }
    });
}

Tensor cross_entropy_loss(const Tensor& logits, const std::vector<int>& targets) {
    bool vec = logits.shape().size() == 1;
    int n = vec ? 1 : logits.shape()[0];
    int v = vec ? logits.shape()[0] : logits.shape()[1];
    if (v == 0) throw DomainError("cross_entropy_loss: empty class axis");
    if (static_cast<int>(targets.size()) != n)
        throw ContractError("cross_entropy_loss: " + std::to_string(targets.size()) +
                            " targets for " + std::to_string(n) + " rows");
    for (int t : targets)
        if (t < 0 || t >= v)
            throw BoundsError("cross_entropy_loss: target " + std::to_string(t) +
                              " out of range " + std::to_string(v));
    auto probs = std::make_shared<std::vector<double>>(logits.size());
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        const double* row = logits.values().data() + static_cast<std::size_t>(i) * v;
        double* prow = probs->data() + static_cast<std::size_t>(i) * v;
        double m = row[0];
        for (int j = 1; j < v; ++j) m = std::max(m, row[j]);
        double s = 0.0;
        for (int j = 0; j < v; ++j) s += std::exp(row[j] - m);
        double lse = m + std::log(s);
        loss += lse - row[targets[i]];
        for (int j = 0; j < v; ++j) prow[j] = std::exp(row[j] - lse);
    }
    double inv = 1.0 / n;
    auto targets_copy = targets;
    return make_op("cross_entropy_loss", {}, {loss * inv}, {logits},
                   [probs, targets_copy, n, v, inv](TensorNode& node) {
                       if (!wants_grad(node.parents[0])) return;
                       auto& g = grad_of(node.parents[0]);
                       double g0 = node.grad[0];
                       for (int i = 0; i < n; ++i)
                           for (int j = 0; j < v; ++j) {
                               double p = (*probs)[static_cast<std::size_t>(i) * v + j];
                               double ind = j == targets_copy[i] ? 1.0 : 0.0;
                               g[static_cast<std::size_t>(i) * v + j] += g0 * (p - ind) * inv;
                           }
                   });
}

Tensor bce_with_logits(const Tensor& logits, const std::vector<double>& targets) {
    if (logits.size() != targets.size())
        throw ContractError("bce_with_logits: " + std::to_string(targets.size()) +
                            " targets for " + std::to_string(logits.size()) + " logits");
    if (logits.size() == 0) throw DomainError("bce_with_logits: empty input");
    double loss = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double z = logits.values()[i];
        // max(z,0) - z*y + log(1 + exp(-|z|))
        loss += std::max(z, 0.0) - z * targets[i] + std::log1p(std::exp(-std::abs(z)));
    }
    double inv = 1.0 / static_cast<double>(logits.size());
    auto targets_copy = targets;
    return make_op("bce_with_logits", {}, {loss * inv}, {logits},
                   [targets_copy, inv](TensorNode& node) {
                       if (!wants_grad(node.parents[0])) return;
                       auto& g = grad_of(node.parents[0]);
                       const auto& zv = node.parents[0]->values;
                       double g0 = node.grad[0];
                       for (std::size_t i = 0; i < g.size(); ++i) {
                           double z = zv[i];
                           double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z))
                                             : std::exp(z) / (1.0 + std::exp(z));
                           g[i] += g0 * (s - targets_copy[i]) * inv;
                       }
                   });
}

// --- dispatch --------------------------------------------------------------------

const char* op_kind_name(OpKind kind) {
    switch (kind) {
        case OpKind::Matmul: return "matmul";
        case OpKind::Add: return "add";
        case OpKind::Sub: return "sub";
        case OpKind::ElementwiseMul: return "elementwise_mul";
        case OpKind::Div: return "div";
        case OpKind::Scale: return "scale";
        case OpKind::Transpose: return "transpose";
        case OpKind::Concat: return "concat";
        case OpKind::SliceCols: return "slice_cols";
        case OpKind::Reshape: return "reshape";
        case OpKind::StackRows: return "stack_rows";
        case OpKind::Sigmoid: return "sigmoid";
        case OpKind::Tanh: return "tanh";
        case OpKind::Softmax: return "softmax";
        case OpKind::Dropout: return "dropout";
        case OpKind::EmbeddingLookup: return "embedding_lookup";
        case OpKind::Linear: return "linear";
        case OpKind::LayerNorm: return "layer_norm";
        case OpKind::Sum: return "sum";
        case OpKind::Mean: return "mean";
        case OpKind::MseLoss: return "mse_loss";
        case OpKind::CrossEntropyLoss: return "cross_entropy_loss";
        case OpKind::BceWithLogits: return "bce_with_logits";
    }
    return "?";
}

namespace {

void need_inputs(OpKind kind, const std::vector<Tensor>& inputs, std::size_t n) {
    if (inputs.size() != n)
        throw ContractError(std::string(op_kind_name(kind)) + ": expected " + std::to_string(n) +
                            " inputs, got " + std::to_string(inputs.size()));
}

}  // namespace

Tensor apply(OpKind kind, const std::vector<Tensor>& inputs, const OpAttrs& attrs) {
    switch (kind) {
        case OpKind::Matmul: need_inputs(kind, inputs, 2); return matmul(inputs[0], inputs[1]);
        case OpKind::Add: need_inputs(kind, inputs, 2); return add(inputs[0], inputs[1]);
        case OpKind::Sub: need_inputs(kind, inputs, 2); return sub(inputs[0], inputs[1]);
        case OpKind::ElementwiseMul: need_inputs(kind, inputs, 2); return mul(inputs[0], inputs[1]);
        case OpKind::Div: need_inputs(kind, inputs, 2); return div(inputs[0], inputs[1]);
        case OpKind::Scale: need_inputs(kind, inputs, 1); return scale(inputs[0], attrs.c);
        case OpKind::Transpose: need_inputs(kind, inputs, 1); return transpose(inputs[0]);
        case OpKind::Concat: return concat(inputs, attrs.axis < 0 ? 0 : attrs.axis);
        case OpKind::SliceCols:
            need_inputs(kind, inputs, 1);
            return slice_cols(inputs[0], attrs.start, attrs.len);
        case OpKind::Reshape: need_inputs(kind, inputs, 1); return reshape(inputs[0], attrs.shape);
        case OpKind::StackRows: return stack_rows(inputs);
        case OpKind::Sigmoid: need_inputs(kind, inputs, 1); return sigmoid(inputs[0]);
        case OpKind::Tanh: need_inputs(kind, inputs, 1); return tanh(inputs[0]);
        case OpKind::Softmax: need_inputs(kind, inputs, 1); return softmax(inputs[0], attrs.axis);
        case OpKind::Dropout:
            need_inputs(kind, inputs, 1);
            return dropout(inputs[0], attrs.p, attrs.train, attrs.seed);
        case OpKind::EmbeddingLookup:
            need_inputs(kind, inputs, 1);
            return embedding_lookup(inputs[0], attrs.indices);
        case OpKind::Linear:
            need_inputs(kind, inputs, 3);
            return linear(inputs[0], inputs[1], inputs[2]);
        case OpKind::LayerNorm:
            need_inputs(kind, inputs, 3);
            return layer_norm(inputs[0], inputs[1], inputs[2]);
        case OpKind::Sum: need_inputs(kind, inputs, 1); return sum(inputs[0]);
        case OpKind::Mean: need_inputs(kind, inputs, 1); return mean(inputs[0]);
        case OpKind::MseLoss: need_inputs(kind, inputs, 2); return mse_loss(inputs[0], inputs[1]);
        case OpKind::CrossEntropyLoss:
            need_inputs(kind, inputs, 1);
            return cross_entropy_loss(inputs[0], attrs.indices);
        case OpKind::BceWithLogits:
            need_inputs(kind, inputs, 1);
            return bce_with_logits(inputs[0], attrs.soft_targets);
    }
    throw ContractError("apply: unknown op kind");
}

// --- backward ---------------------------------------------------------------------

void backward(const Tensor& loss) {
    if (!loss.defined() || loss.size() != 1)
        throw ContractError("backward: loss must be a scalar tensor");
    // Post-order DFS gives children after all of their parents, so the
    // reversed order visits every node before the nodes it feeds.
    std::vector<TensorNode*> order;
    std::unordered_set<TensorNode*> seen;
    std::vector<std::pair<TensorNode*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (!node->requires_grad) {  // gradient cannot flow further
            stack.pop_back();
            continue;
        }
        if (next < node->parents.size()) {
            TensorNode* parent = node->parents[next++].get();
            if (parent->requires_grad && seen.insert(parent).second)
                stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    for (TensorNode* n : order) n->grad.assign(n->values.size(), 0.0);
    loss.node()->grad.assign(1, 1.0);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        TensorNode* n = *it;
        if (n->backprop) n->backprop(*n);
    }
}

}  // namespace tsal
