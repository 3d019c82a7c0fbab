#pragma once

#include "smt/param_store.hpp"
#include "smt/tape.hpp"
#include "smt/tensor.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace smt::testing {

inline Tensor2 random_tensor(int r, int c, std::mt19937_64& rng, double stddev = 1.0) {
    Tensor2 t(r, c);
    std::normal_distribution<double> d(0.0, stddev);
    for (auto& v : t.data) v = d(rng);
    return t;
}

inline double max_abs_diff(const Tensor2& a, const Tensor2& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

/// Central-finite-difference check of d loss / d param against the analytic
/// gradient. `loss` rebuilds the graph from the (possibly perturbed) store
/// and returns the scalar loss value. Returns the worst relative error over
/// all entries of the parameter (absolute error where the scale is tiny).
inline double finite_difference_error(ParamStore& store, const std::string& name,
                                      const std::function<double()>& loss_value,
                                      const std::function<Tensor2()>& analytic_grad,
                                      double h = 1e-5) {
    const Tensor2 grad = analytic_grad();
    double worst = 0.0;
    Tensor2& value = store.mutable_value(name);
    for (size_t i = 0; i < value.size(); ++i) {
        const double orig = value.data[i];
        value.data[i] = orig + h;
        const double up = loss_value();
        value.data[i] = orig - h;
        const double down = loss_value();
        value.data[i] = orig;
        const double numeric = (up - down) / (2.0 * h);
        const double denom = std::max({std::abs(numeric), std::abs(grad.data[i]), 1e-4});
        worst = std::max(worst, std::abs(numeric - grad.data[i]) / denom);
    }
    return worst;
}

} // namespace smt::testing
