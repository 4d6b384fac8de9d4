#include "srcl/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srcl {

Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                              double h) {
    if (!(h > 0.0)) throw std::invalid_argument("finite_difference_grad requires h > 0");
    Tensor grad = Tensor::zeros(x.shape);
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float orig = probe.data[i];
        const float plus = static_cast<float>(static_cast<double>(orig) + h);
        const float minus = static_cast<float>(static_cast<double>(orig) - h);
        probe.data[i] = plus;
        const double f_plus = f(probe);
        probe.data[i] = minus;
        const double f_minus = f(probe);
        probe.data[i] = orig;
        const double step = static_cast<double>(plus) - static_cast<double>(minus);
        grad.data[i] = static_cast<float>((f_plus - f_minus) / step);
    }
    return grad;
}

double relative_error(const Tensor& analytic, const Tensor& numeric) {
    require_same_shape(analytic, numeric, "relative_error");
    double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic.data[i];
        const double n = numeric.data[i];
        diff += (a - n) * (a - n);
        norm_a += a * a;
        norm_n += n * n;
    }
    const double denom = std::max(1e-8, std::sqrt(norm_a) + std::sqrt(norm_n));
    return std::sqrt(diff) / denom;
}

void GradCheckReport::record(const std::string& name, double err) {
    per_parameter.emplace_back(name, err);
    max_relative_error = std::max(max_relative_error, err);
}

} // namespace srcl
