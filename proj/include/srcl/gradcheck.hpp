#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "srcl/tensor.hpp"

namespace srcl {

/// Central-difference gradient of a scalar-valued function, one element at a
/// time, evaluated in 64-bit. The divisor uses the actually representable
/// perturbed values rather than 2h, so float32 quantization of x +- h does
/// not bias the estimate.
Tensor finite_difference_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                              double h);

struct GradCheckReport {
    double max_relative_error = 0.0;
    // (parameter name, relative error), one entry per checked tensor.
    std::vector<std::pair<std::string, double>> per_parameter;

    void record(const std::string& name, double err);
};

/// Relative error |analytic - numeric| / max(1e-8, |analytic| + |numeric|),
/// with |.| the Euclidean norm over the tensor.
double relative_error(const Tensor& analytic, const Tensor& numeric);

} // namespace srcl
