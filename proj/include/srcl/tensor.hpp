#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "srcl/core.hpp"

namespace srcl {

/// Dense row-major tensor of 32-bit floats. The universal value carrier for
/// images, activation maps, embeddings, predictions, and parameters.
/// Reductions accumulate in 64-bit.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;

    Tensor() = default;
    Tensor(std::vector<std::size_t> shape_, std::vector<float> data_);

    static Tensor zeros(std::vector<std::size_t> shape);
    static Tensor full(std::vector<std::size_t> shape, float value);
    /// 2-D convenience: rows x cols from a flat row-major list.
    static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<float> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const;

    // 2-D accessors. Caller guarantees rank()==2.
    float& at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    float at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    std::size_t rows() const { return shape.at(0); }
    std::size_t cols() const { return shape.at(1); }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;

    bool all_finite() const;
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

/// Throws ShapeError naming both shapes when they differ.
void require_same_shape(const Tensor& a, const Tensor& b, const std::string& context);

/// Standard matrix product of [m x k] by [k x n].
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor transpose(const Tensor& a);

/// Each row divided by its Euclidean norm. Rows with norm below `zero_eps`
/// are returned unchanged.
Tensor l2_normalize_rows(const Tensor& a, double zero_eps = 1e-12);

/// Row-wise softmax with max-subtraction.
Tensor softmax_rows(const Tensor& a);

// Elementwise arithmetic. Shapes must match.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
void add_in_place(Tensor& a, const Tensor& b);
void axpy_in_place(Tensor& a, double factor, const Tensor& b); // a += factor * b

double sum(const Tensor& a);
double squared_norm(const Tensor& a);
double max_abs_diff(const Tensor& a, const Tensor& b);
double row_norm(const Tensor& a, std::size_t row);

bool bit_equal(const Tensor& a, const Tensor& b);

} // namespace srcl
