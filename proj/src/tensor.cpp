#include "srcl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <sstream>

namespace srcl {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<float> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (shape_product(shape) != data.size()) {
        throw ShapeError("tensor data length " + std::to_string(data.size()) +
                         " does not match shape " + shape_to_string(shape));
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<float>(n, 0.0f));
}

Tensor Tensor::full(std::vector<std::size_t> shape, float value) {
    std::size_t n = shape_product(shape);
    return Tensor(std::move(shape), std::vector<float>(n, value));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<float> values) {
    return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::dim(std::size_t i) const {
    if (i >= shape.size()) {
        throw ShapeError("dimension index " + std::to_string(i) + " out of range for shape " +
                         shape_to_string(shape));
    }
    return shape[i];
}

std::string Tensor::shape_str() const { return shape_to_string(shape); }

bool Tensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& context) {
    if (!a.same_shape(b)) {
        throw ShapeError(context + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2) {
        throw ShapeError("matmul requires rank-2 tensors, got " + a.shape_str() + " and " +
                         b.shape_str());
    }
    if (a.cols() != b.rows()) {
        throw ShapeError("matmul inner dimension mismatch: " + a.shape_str() + " x " +
                         b.shape_str());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = Tensor::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += static_cast<double>(a.data[i * k + p]) * static_cast<double>(b.data[p * n + j]);
            }
            out.data[i * n + j] = static_cast<float>(acc);
        }
    }
    return out;
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose requires rank-2 tensor, got " + a.shape_str());
    Tensor out = Tensor::zeros({a.cols(), a.rows()});
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

double row_norm(const Tensor& a, std::size_t row) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        double v = a.at(row, j);
        acc += v * v;
    }
    return std::sqrt(acc);
}

Tensor l2_normalize_rows(const Tensor& a, double zero_eps) {
    if (a.rank() != 2) {
        throw ShapeError("l2_normalize_rows requires rank-2 tensor, got " + a.shape_str());
    }
    Tensor out = a;
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double norm = row_norm(a, i);
        if (norm < zero_eps) continue; // degenerate row kept as-is
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out.at(i, j) = static_cast<float>(a.at(i, j) / norm);
        }
    }
    return out;
}

Tensor softmax_rows(const Tensor& a) {
    if (a.rank() != 2) {
        throw ShapeError("softmax_rows requires rank-2 tensor, got " + a.shape_str());
    }
    Tensor out = Tensor::zeros(a.shape);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < a.cols(); ++j) mx = std::max(mx, static_cast<double>(a.at(i, j)));
        double denom = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) denom += std::exp(static_cast<double>(a.at(i, j)) - mx);
        for (std::size_t j = 0; j < a.cols(); ++j) {
            out.at(i, j) = static_cast<float>(std::exp(static_cast<double>(a.at(i, j)) - mx) / denom);
        }
    }
    return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Tensor scale(const Tensor& a, double factor) {
    Tensor out = a;
    for (float& v : out.data) v = static_cast<float>(v * factor);
    return out;
}

void add_in_place(Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add_in_place");
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
}

void axpy_in_place(Tensor& a, double factor, const Tensor& b) {
    require_same_shape(a, b, "axpy_in_place");
    for (std::size_t i = 0; i < a.size(); ++i) {
        a.data[i] = static_cast<float>(a.data[i] + factor * b.data[i]);
    }
}

double sum(const Tensor& a) {
    double acc = 0.0;
    for (float v : a.data) acc += v;
    return acc;
}

double squared_norm(const Tensor& a) {
    double acc = 0.0;
    for (float v : a.data) acc += static_cast<double>(v) * v;
    return acc;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double mx = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        mx = std::max(mx, std::abs(static_cast<double>(a.data[i]) - b.data[i]));
    }
    return mx;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.data.data(), b.data.data(), a.size() * sizeof(float)) == 0;
}

} // namespace srcl
