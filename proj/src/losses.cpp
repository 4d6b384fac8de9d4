#include "srcl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "srcl/core.hpp"

namespace srcl {

namespace {

// Internal double-precision buffers keep the loss arithmetic in 64-bit from
// the float32 inputs through to the result.
using DMatrix = std::vector<double>;

DMatrix gram_d(const Tensor& a) {
    const std::size_t n = a.rows(), d = a.cols();
    DMatrix g(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < d; ++k) {
                acc += static_cast<double>(a.at(i, k)) * a.at(j, k);
            }
            g[i * n + j] = acc;
        }
    }
    return g;
}

std::vector<double> row_norms_d(const DMatrix& g, std::size_t n) {
    std::vector<double> norms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += g[i * n + j] * g[i * n + j];
        norms[i] = std::sqrt(acc);
    }
    return norms;
}

DMatrix normalize_rows_d(const DMatrix& g, const std::vector<double>& norms, std::size_t n) {
    DMatrix r = g;
    for (std::size_t i = 0; i < n; ++i) {
        if (norms[i] < 1e-12) continue;
        for (std::size_t j = 0; j < n; ++j) r[i * n + j] /= norms[i];
    }
    return r;
}

} // namespace

Tensor gram_matrix(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("gram_matrix requires rank-2 input, got " + a.shape_str());
    const std::size_t n = a.rows();
    DMatrix g = gram_d(a);
    Tensor out = Tensor::zeros({n, n});
    for (std::size_t i = 0; i < n * n; ++i) out.data[i] = static_cast<float>(g[i]);
    return out;
}

RelationMatrix relation_matrix(const Tensor& gram) {
    if (gram.rank() != 2 || gram.rows() != gram.cols()) {
        throw ShapeError("relation_matrix requires a square matrix, got " + gram.shape_str());
    }
    return RelationMatrix{l2_normalize_rows(gram)};
}

LossBundle src_loss(const Tensor& student_activation, const Tensor& teacher_activation) {
    if (student_activation.rank() != 2 || teacher_activation.rank() != 2) {
        throw ShapeError("src_loss requires rank-2 activations");
    }
    require_same_shape(student_activation, teacher_activation, "src_loss");
    const std::size_t n = student_activation.rows();
    const std::size_t d = student_activation.cols();
    if (n == 0) throw ShapeError("src_loss requires at least one sample");

    const DMatrix gs = gram_d(student_activation);
    const DMatrix gt = gram_d(teacher_activation);
    const std::vector<double> ns = row_norms_d(gs, n);
    const std::vector<double> nt = row_norms_d(gt, n);
    const DMatrix rs = normalize_rows_d(gs, ns, n);
    const DMatrix rt = normalize_rows_d(gt, nt, n);

    double value = 0.0;
    for (std::size_t i = 0; i < n * n; ++i) {
        const double diff = rs[i] - rt[i];
        value += diff * diff;
    }
    value /= static_cast<double>(n);

    // d value / d R_student, then back through the row normalization and the
    // Gram product. The teacher is a constant.
    DMatrix d_r(n * n, 0.0);
    for (std::size_t i = 0; i < n * n; ++i) {
        d_r[i] = 2.0 * (rs[i] - rt[i]) / static_cast<double>(n);
    }

    DMatrix d_g(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (ns[i] < 1e-12) {
            for (std::size_t j = 0; j < n; ++j) d_g[i * n + j] = d_r[i * n + j];
            continue;
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += d_r[i * n + j] * rs[i * n + j];
        for (std::size_t j = 0; j < n; ++j) {
            d_g[i * n + j] = (d_r[i * n + j] - dot * rs[i * n + j]) / ns[i];
        }
    }

    // dA = (dG + dG^T) A
    Tensor grad = Tensor::zeros(student_activation.shape);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < d; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                acc += (d_g[i * n + j] + d_g[j * n + i]) * student_activation.at(j, k);
            }
            grad.at(i, k) = static_cast<float>(acc);
        }
    }
    return LossBundle{value, std::move(grad)};
}

LossBundle src_loss(const RelationPair& pair) {
    return src_loss(pair.student_activation, pair.teacher_activation);
}

LossBundle supcon_loss(const ContrastiveBatch& batch) {
    const Tensor& z = batch.embeddings;
    if (z.rank() != 2) throw ShapeError("supcon_loss requires rank-2 embeddings");
    const std::size_t rows = z.rows();
    const std::size_t d = z.cols();
    if (rows < 2 || rows % 2 != 0) {
        throw ShapeError("supcon_loss requires an even number (>= 2) of embedding rows, got " +
                         std::to_string(rows));
    }
    if (batch.labels.size() != rows / 2) {
        throw ShapeError("supcon_loss expects one label per original image: " +
                         std::to_string(batch.labels.size()) + " labels for " +
                         std::to_string(rows) + " views");
    }
    if (!(batch.tau > 0.0)) throw ConfigError("supcon_loss requires tau > 0");
    for (std::size_t i = 0; i < rows; ++i) {
        const double norm = row_norm(z, i);
        if (std::abs(norm - 1.0) > kUnitRowTolerance) {
            throw ContractError("supcon_loss embedding row " + std::to_string(i) +
                                " has norm " + std::to_string(norm) + ", expected 1");
        }
    }

    const double tau = batch.tau;
    const DMatrix sim = gram_d(z); // pairwise dot products

    // Row-wise softmax over A(i) = everything but i, with max subtraction.
    DMatrix softmax(rows * rows, 0.0);
    std::vector<double> lse(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < rows; ++j) {
            if (j != i) mx = std::max(mx, sim[i * rows + j] / tau);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < rows; ++j) {
            if (j == i) continue;
            denom += std::exp(sim[i * rows + j] / tau - mx);
        }
        lse[i] = mx + std::log(denom);
        for (std::size_t j = 0; j < rows; ++j) {
            if (j == i) continue;
            softmax[i * rows + j] = std::exp(sim[i * rows + j] / tau - lse[i]);
        }
    }

    const auto label_of_view = [&](std::size_t view) { return batch.labels[view / 2]; };
    const auto in_positive_set = [&](std::size_t anchor, std::size_t other) {
        if (other == anchor) return false;
        if ((anchor ^ 1) == other) return true; // augmentation partner
        const int label = label_of_view(anchor);
        return label != kUnlabeled && label_of_view(other) == label;
    };

    const double anchor_weight = 1.0 / static_cast<double>(rows);
    double value = 0.0;
    DMatrix coeff(rows * rows, 0.0); // d loss_i / d sim(i, j), before 1/tau
    for (std::size_t i = 0; i < rows; ++i) {
        std::size_t positives = 0;
        double log_term = 0.0;
        for (std::size_t j = 0; j < rows; ++j) {
            if (!in_positive_set(i, j)) continue;
            ++positives;
            log_term += sim[i * rows + j] / tau - lse[i];
        }
        value += -(log_term / static_cast<double>(positives));
        for (std::size_t j = 0; j < rows; ++j) {
            if (j == i) continue;
            const double pos = in_positive_set(i, j)
                                   ? 1.0 / static_cast<double>(positives)
                                   : 0.0;
            coeff[i * rows + j] = softmax[i * rows + j] - pos;
        }
    }
    value *= anchor_weight;

    // dZ = (w / tau) * (C + C^T) Z
    Tensor grad = Tensor::zeros(z.shape);
    const double factor = anchor_weight / tau;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < d; ++k) {
            double acc = 0.0;
            for (std::size_t j = 0; j < rows; ++j) {
                acc += (coeff[r * rows + j] + coeff[j * rows + r]) * z.at(j, k);
            }
            grad.at(r, k) = static_cast<float>(factor * acc);
        }
    }
    return LossBundle{value, std::move(grad)};
}

namespace {

void validate_onehot(const Tensor& targets) {
    for (std::size_t r = 0; r < targets.rows(); ++r) {
        std::size_t ones = 0;
        for (std::size_t c = 0; c < targets.cols(); ++c) {
            const float v = targets.at(r, c);
            if (v == 1.0f) {
                ++ones;
            } else if (v != 0.0f) {
                throw ContractError("target row " + std::to_string(r) + " is not one-hot");
            }
        }
        if (ones != 1) throw ContractError("target row " + std::to_string(r) + " is not one-hot");
    }
}

} // namespace

LossBundle mse_supervised_loss(const Tensor& probabilities, const Tensor& onehot_targets) {
    if (probabilities.rank() != 2) throw ShapeError("mse_supervised_loss requires rank-2 inputs");
    require_same_shape(probabilities, onehot_targets, "mse_supervised_loss");
    validate_onehot(onehot_targets);
    const std::size_t rows = probabilities.rows();
    if (rows == 0) throw ShapeError("mse_supervised_loss requires at least one row");

    double value = 0.0;
    Tensor grad = Tensor::zeros(probabilities.shape);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double diff = static_cast<double>(probabilities.data[i]) - onehot_targets.data[i];
        value += diff * diff;
        grad.data[i] = static_cast<float>(2.0 * inv * diff);
    }
    return LossBundle{value * inv, std::move(grad)};
}

LossBundle cross_entropy_loss(const Tensor& probabilities, const Tensor& onehot_targets) {
    if (probabilities.rank() != 2) throw ShapeError("cross_entropy_loss requires rank-2 inputs");
    require_same_shape(probabilities, onehot_targets, "cross_entropy_loss");
    validate_onehot(onehot_targets);
    const std::size_t rows = probabilities.rows();
    if (rows == 0) throw ShapeError("cross_entropy_loss requires at least one row");

    double value = 0.0;
    Tensor grad = Tensor::zeros(probabilities.shape);
    const double inv = 1.0 / static_cast<double>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < probabilities.cols(); ++c) {
            if (onehot_targets.at(r, c) != 1.0f) continue;
            const double p = std::max(static_cast<double>(probabilities.at(r, c)), 1e-12);
            value += -std::log(p) * inv;
            grad.at(r, c) = static_cast<float>(-inv / p);
        }
    }
    return LossBundle{value, std::move(grad)};
}

} // namespace srcl
