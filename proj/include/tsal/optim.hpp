#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tsal/rng.hpp"
#include "tsal/tensor.hpp"

namespace tsal {

// Named collection of trainable leaf tensors. Ordered by name so that
// iteration, serialization and optimizer updates are deterministic.
class ParamSet {
  public:
    Tensor& add(const std::string& name, Tensor t) {
        t.set_requires_grad(true);
        auto [it, inserted] = items_.emplace(name, std::move(t));
        if (!inserted) throw ContractError("ParamSet: duplicate parameter " + name);
        return it->second;
    }

    Tensor& at(const std::string& name) {
        auto it = items_.find(name);
        if (it == items_.end()) throw ContractError("ParamSet: unknown parameter " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = items_.find(name);
        if (it == items_.end()) throw ContractError("ParamSet: unknown parameter " + name);
        return it->second;
    }
    bool contains(const std::string& name) const { return items_.count(name) != 0; }

    auto begin() { return items_.begin(); }
    auto end() { return items_.end(); }
    auto begin() const { return items_.begin(); }
    auto end() const { return items_.end(); }
    std::size_t size() const { return items_.size(); }

    void zero_grad() {
        for (auto& [name, t] : items_) t.zero_grad();
    }

    // Deep copy; the clone shares no storage with the original.
    ParamSet clone() const {
        ParamSet out;
        for (const auto& [name, t] : items_) {
            Tensor c = Tensor::from(t.shape(), t.values());
            out.add(name, std::move(c));
        }
        return out;
    }

    std::size_t total_elements() const {
        std::size_t n = 0;
        for (const auto& [name, t] : items_) n += t.size();
        return n;
    }

  private:
    std::map<std::string, Tensor> items_;
};

// Uniform in +/- sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(int fan_in, int fan_out, Rng& rng);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Bias-corrected ADAM state for one parameter collection. Moment buffers are
// keyed by parameter name and created on first update.
struct AdamState {
    std::int64_t step_count = 0;
    std::map<std::string, std::vector<double>> first_moment;
    std::map<std::string, std::vector<double>> second_moment;
    AdamConfig config;
};

// One standard ADAM update for every parameter in `params`, reading the
// gradients accumulated on the tensors. Throws NumericError on a non-finite
// gradient, naming the parameter.
void adam_step(ParamSet& params, AdamState& state, double learning_rate);

// Kernel form used by adam_step: updates values in place given raw gradients.
void adam_update(const std::string& name, std::vector<double>& values,
                 const std::vector<double>& grads, std::vector<double>& m, std::vector<double>& v,
                 std::int64_t step_count, double learning_rate, const AdamConfig& config);

// --- finite-difference checking ----------------------------------------------

// Max over coordinates of |analytic - central| / max(1e-12, |analytic| + |central|)
// for a scalar-valued function of one tensor input.
double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double eps);

// Same check over every coordinate of every parameter in `params`. The
// function must rebuild its graph from the current parameter values on each
// call (parameters are perturbed in place between evaluations). With
// fourth_order set, uses the five-point central stencil, whose O(h^4)
// truncation lets deep compositions run at a step size large enough to stay
// clear of 64-bit round-off on their smallest gradient coordinates.
double grad_check_params(const std::function<Tensor()>& f, ParamSet& params, double eps,
                         bool fourth_order = false);

}  // namespace tsal
