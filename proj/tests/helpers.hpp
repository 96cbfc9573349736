#pragma once

// Shared fixtures for the test binaries: randomized inputs for the
// finite-difference sweep over every differentiable primitive, and the toy
// corpora used by the overfit tests.

#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tsal/optim.hpp"
#include "tsal/rng.hpp"
#include "tsal/tensor.hpp"

namespace tsal_test {

inline tsal::Tensor random_tensor(std::vector<int> shape, tsal::Rng& rng, double lo = -1.0,
                                  double hi = 1.0) {
    std::vector<double> v(tsal::Tensor::shape_count(shape));
    for (double& x : v) x = rng.uniform(lo, hi);
    return tsal::Tensor::from(std::move(shape), std::move(v));
}

struct PrimitiveCheck {
    std::string name;
    // Builds a scalar function of one tensor argument plus a fresh random
    // point for it. Other operands are baked in as constants.
    std::function<std::pair<std::function<tsal::Tensor(const tsal::Tensor&)>, tsal::Tensor>(
        tsal::Rng&)>
        make;
};

// One scalar-valued check per differentiable primitive, each probing the
// op through one of its inputs. relu points are kept away from the kink and
// div denominators away from zero.
inline std::vector<PrimitiveCheck> primitive_checks() {
    using tsal::Tensor;
    namespace t = tsal;
    std::vector<PrimitiveCheck> checks;
    auto sum_of = [](t::Tensor x) { return x; };
    (void)sum_of;

    checks.push_back({"add", [](t::Rng& rng) {
                          Tensor b = random_tensor({3, 4}, rng);
                          auto f = [b](const Tensor& x) { return t::sum(t::add(x, b)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3, 4}, rng));
                      }});
    checks.push_back({"sub", [](t::Rng& rng) {
                          Tensor b = random_tensor({3, 4}, rng);
                          auto f = [b](const Tensor& x) { return t::mean(t::sub(b, x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3, 4}, rng));
                      }});
    checks.push_back({"elementwise_mul", [](t::Rng& rng) {
                          Tensor b = random_tensor({5}, rng);
                          auto f = [b](const Tensor& x) { return t::sum(t::mul(x, b)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({5}, rng));
                      }});
    checks.push_back({"div", [](t::Rng& rng) {
                          Tensor a = random_tensor({4}, rng);
                          auto f = [a](const Tensor& x) { return t::sum(t::div(a, x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4}, rng, 0.5, 1.5));
                      }});
    checks.push_back({"div_scalar_denominator", [](t::Rng& rng) {
                          Tensor a = random_tensor({4}, rng);
                          auto f = [a](const Tensor& x) { return t::sum(t::div(a, x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({1}, rng, 0.5, 1.5));
                      }});
    checks.push_back({"scale", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) { return t::sum(t::scale(x, -2.5)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({2, 3}, rng));
                      }});
    checks.push_back({"matmul_lhs", [](t::Rng& rng) {
                          Tensor b = random_tensor({4, 2}, rng);
                          auto f = [b](const Tensor& x) { return t::sum(t::matmul(x, b)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3, 4}, rng));
                      }});
    checks.push_back({"matmul_rhs", [](t::Rng& rng) {
                          Tensor a = random_tensor({3, 4}, rng);
                          auto f = [a](const Tensor& x) { return t::mean(t::matmul(a, x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4, 2}, rng));
                      }});
    checks.push_back({"matmul_vec", [](t::Rng& rng) {
                          Tensor a = random_tensor({3, 4}, rng);
                          auto f = [a](const Tensor& x) { return t::sum(t::matmul(a, x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4}, rng));
                      }});
    checks.push_back({"transpose", [](t::Rng& rng) {
                          Tensor b = random_tensor({2, 3}, rng);
                          auto f = [b](const Tensor& x) {
                              return t::sum(t::mul(t::transpose(x), b));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3, 2}, rng));
                      }});
    checks.push_back({"concat", [](t::Rng& rng) {
                          Tensor b = random_tensor({3}, rng);
                          auto f = [b](const Tensor& x) {
                              Tensor c = t::concat({x, b, x}, 0);
                              return t::sum(t::mul(c, c));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3}, rng));
                      }});
    checks.push_back({"slice_cols", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) {
                              return t::sum(t::slice_cols(x, 1, 2));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3, 4}, rng));
                      }});
    checks.push_back({"reshape", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) {
                              Tensor r = t::reshape(x, {6});
                              return t::sum(t::mul(r, r));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({2, 3}, rng));
                      }});
    checks.push_back({"stack_rows", [](t::Rng& rng) {
                          Tensor b = random_tensor({4}, rng);
                          auto f = [b](const Tensor& x) {
                              Tensor s = t::stack_rows({x, b});
                              return t::sum(t::mul(s, s));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4}, rng));
                      }});
    checks.push_back({"sigmoid", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) { return t::sum(t::sigmoid(x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({6}, rng, -3.0, 3.0));
                      }});
    checks.push_back({"tanh", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) { return t::sum(t::tanh(x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({6}, rng, -3.0, 3.0));
                      }});
    checks.push_back({"softmax_vec", [](t::Rng& rng) {
                          Tensor w = random_tensor({5}, rng);
                          auto f = [w](const Tensor& x) {
                              return t::sum(t::mul(t::softmax(x, 0), w));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({5}, rng, -2.0, 2.0));
                      }});
    checks.push_back({"softmax_rows", [](t::Rng& rng) {
                          Tensor w = random_tensor({3, 4}, rng);
                          auto f = [w](const Tensor& x) {
                              return t::sum(t::mul(t::softmax(x, 1), w));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3, 4}, rng, -2.0, 2.0));
                      }});
    checks.push_back({"dropout", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) {
                              return t::sum(t::dropout(x, 0.4, true, 1234));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({12}, rng));
                      }});
    checks.push_back({"embedding_lookup", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) {
                              return t::sum(t::embedding_lookup(x, {0, 2, 2}));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4, 3}, rng));
                      }});
    checks.push_back({"linear_x", [](t::Rng& rng) {
                          Tensor w = random_tensor({4, 3}, rng);
                          Tensor b = random_tensor({3}, rng);
                          auto f = [w, b](const Tensor& x) { return t::sum(t::linear(x, w, b)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({2, 4}, rng));
                      }});
    checks.push_back({"linear_w", [](t::Rng& rng) {
                          Tensor x = random_tensor({2, 4}, rng);
                          Tensor b = random_tensor({3}, rng);
                          auto f = [x, b](const Tensor& w) { return t::sum(t::linear(x, w, b)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4, 3}, rng));
                      }});
    checks.push_back({"linear_b", [](t::Rng& rng) {
                          Tensor x = random_tensor({2, 4}, rng);
                          Tensor w = random_tensor({4, 3}, rng);
                          auto f = [x, w](const Tensor& b) { return t::sum(t::linear(x, w, b)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3}, rng));
                      }});
    checks.push_back({"layer_norm_x", [](t::Rng& rng) {
                          Tensor g = random_tensor({4}, rng, 0.5, 1.5);
                          Tensor b = random_tensor({4}, rng);
                          auto f = [g, b](const Tensor& x) {
                              Tensor y = t::layer_norm(x, g, b);
                              return t::sum(t::mul(y, y));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({3, 4}, rng));
                      }});
    checks.push_back({"layer_norm_gain", [](t::Rng& rng) {
                          Tensor x = random_tensor({3, 4}, rng);
                          Tensor b = random_tensor({4}, rng);
                          auto f = [x, b](const Tensor& g) {
                              return t::sum(t::layer_norm(x, g, b));
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4}, rng, 0.5, 1.5));
                      }});
    checks.push_back({"sum", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) { return t::sum(t::mul(x, x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({7}, rng));
                      }});
    checks.push_back({"mean", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) { return t::mean(t::mul(x, x)); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({7}, rng));
                      }});
    checks.push_back({"mse_loss", [](t::Rng& rng) {
                          Tensor target = random_tensor({5}, rng);
                          auto f = [target](const Tensor& x) { return t::mse_loss(x, target); };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({5}, rng));
                      }});
    checks.push_back({"cross_entropy_loss", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) {
                              return t::cross_entropy_loss(x, {2, 0});
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({2, 4}, rng, -2.0, 2.0));
                      }});
    checks.push_back({"bce_with_logits", [](t::Rng& rng) {
                          auto f = [](const Tensor& x) {
                              return t::bce_with_logits(x, {1.0, 0.0, 1.0, 1.0});
                          };
                          return std::make_pair(std::function<Tensor(const Tensor&)>(f),
                                                random_tensor({4}, rng, -2.0, 2.0));
                      }});
    return checks;
}

// Worst finite-difference error over `rounds` random points of every
// primitive. Returns (worst error, offending primitive name).
inline std::pair<double, std::string> worst_primitive_error(int rounds, std::uint64_t seed) {
    tsal::Rng rng(seed);
    double worst = 0.0;
    std::string which;
    for (const auto& check : primitive_checks()) {
        for (int round = 0; round < rounds; ++round) {
            auto [f, point] = check.make(rng);
            double err = tsal::grad_check(f, point, 1e-5);
            if (err > worst) {
                worst = err;
                which = check.name;
            }
        }
    }
    return {worst, which};
}

}  // namespace tsal_test
