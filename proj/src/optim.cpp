#include "tsal/optim.hpp"

#include <cmath>

namespace tsal {

Tensor xavier_uniform(int fan_in, int fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<double> values(static_cast<std::size_t>(fan_in) * fan_out);
    for (double& v : values) v = rng.uniform(-bound, bound);
    return Tensor::from({fan_in, fan_out}, std::move(values));
}

void adam_update(const std::string& name, std::vector<double>& values,
                 const std::vector<double>& grads, std::vector<double>& m, std::vector<double>& v,
                 std::int64_t step_count, double learning_rate, const AdamConfig& config) {
    if (grads.size() != values.size())
        throw ContractError("adam_update: gradient size mismatch for " + name);
    if (m.size() != values.size()) m.assign(values.size(), 0.0);
    if (v.size() != values.size()) v.assign(values.size(), 0.0);
    const double b1 = config.beta1, b2 = config.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_count));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < values.size(); ++i) {
        double g = grads[i];
        if (!std::isfinite(g))
            throw NumericError("adam_update: non-finite gradient in parameter " + name);
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        double mhat = m[i] / bc1;
        double vhat = v[i] / bc2;
        values[i] -= learning_rate * mhat / (std::sqrt(vhat) + config.epsilon);
    }
}

void adam_step(ParamSet& params, AdamState& state, double learning_rate) {
    ++state.step_count;
    std::vector<double> zero;
    for (auto& [name, t] : params) {
        const std::vector<double>* g = &t.grad();
        if (g->size() != t.size()) {  // parameter did not participate in the pass
            zero.assign(t.size(), 0.0);
            g = &zero;
        }
        adam_update(name, t.mutable_values(), *g, state.first_moment[name],
                    state.second_moment[name], state.step_count, learning_rate, state.config);
    }
}

namespace {

double relative_error(double analytic, double numeric) {
    double denom = std::max(1e-12, std::abs(analytic) + std::abs(numeric));
    return std::abs(analytic - numeric) / denom;
}

}  // namespace

double grad_check(const std::function<Tensor(const Tensor&)>& f, const Tensor& point, double eps) {
    if (eps <= 0.0) throw DomainError("grad_check: eps must be positive");
    Tensor x = Tensor::from(point.shape(), point.values(), true);
    Tensor out = f(x);
    if (out.size() != 1) throw ContractError("grad_check: function must return a scalar");
    backward(out);
    std::vector<double> analytic = x.grad();
    if (analytic.size() != x.size())
        analytic.assign(x.size(), 0.0);  // x unused by f

    double worst = 0.0;
    Tensor probe = Tensor::from(point.shape(), point.values(), false);
    for (std::size_t i = 0; i < probe.size(); ++i) {
        double orig = probe.values()[i];
        probe.mutable_values()[i] = orig + eps;
        double fp = f(probe).item();
        probe.mutable_values()[i] = orig - eps;
        double fm = f(probe).item();
        probe.mutable_values()[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("grad_check: non-finite function evaluation");
        double numeric = (fp - fm) / (2.0 * eps);
        worst = std::max(worst, relative_error(analytic[i], numeric));
    }
    return worst;
}

double grad_check_params(const std::function<Tensor()>& f, ParamSet& params, double eps,
                         bool fourth_order) {
    if (eps <= 0.0) throw DomainError("grad_check: eps must be positive");
    Tensor out = f();
    if (out.size() != 1) throw ContractError("grad_check: function must return a scalar");
    params.zero_grad();
    backward(out);
    std::map<std::string, std::vector<double>> analytic;
    for (auto& [name, t] : params)
        analytic[name] = t.grad().size() == t.size() ? t.grad() : std::vector<double>(t.size(), 0.0);

    double worst = 0.0;
    for (auto& [name, t] : params) {
        for (std::size_t i = 0; i < t.size(); ++i) {
            double orig = t.values()[i];
            auto eval_at = [&](double x) {
                t.mutable_values()[i] = x;
                double v = f().item();
                if (!std::isfinite(v))
                    throw NumericError("grad_check: non-finite function evaluation at " + name);
                return v;
            };
            double numeric;
            if (fourth_order) {
                double fp2 = eval_at(orig + 2.0 * eps), fp1 = eval_at(orig + eps);
                double fm1 = eval_at(orig - eps), fm2 = eval_at(orig - 2.0 * eps);
                numeric = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * eps);
            } else {
                double fp = eval_at(orig + eps);
                double fm = eval_at(orig - eps);
                numeric = (fp - fm) / (2.0 * eps);
            }
            t.mutable_values()[i] = orig;
            worst = std::max(worst, relative_error(analytic[name][i], numeric));
        }
    }
    return worst;
}

}  // namespace tsal
