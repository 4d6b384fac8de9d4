#pragma once

// Independent scalar-loop reference implementations used to pin expected
// values. Everything here is written directly from the loss and metric
// definitions, with plain loops over std::vector<double>, and shares no code
// with the library implementations it checks.

#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    const std::size_t m = a.size(), k = b.size(), n = b[0].size();
    Matrix out(m, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p) out[i][j] += a[i][p] * b[p][j];
    return out;
}

inline std::vector<double> softmax_row(const std::vector<double>& x) {
    double mx = x[0];
    for (double v : x) mx = std::max(mx, v);
    double denom = 0.0;
    for (double v : x) denom += std::exp(v - mx);
    std::vector<double> out;
    for (double v : x) out.push_back(std::exp(v - mx) / denom);
    return out;
}

// Direct valid-padding convolution of one image, scalar loops.
// input[c][y][x], weight[oc][c][ky][kx].
inline std::vector<Matrix> conv2d(const std::vector<Matrix>& input,
                                  const std::vector<std::vector<Matrix>>& weight,
                                  const std::vector<double>& bias, std::size_t stride) {
    const std::size_t ic = input.size(), ih = input[0].size(), iw = input[0][0].size();
    const std::size_t oc = weight.size(), k = weight[0][0].size();
    const std::size_t oh = (ih - k) / stride + 1, ow = (iw - k) / stride + 1;
    std::vector<Matrix> out(oc, Matrix(oh, std::vector<double>(ow, 0.0)));
    for (std::size_t o = 0; o < oc; ++o)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = bias[o];
                for (std::size_t c = 0; c < ic; ++c)
                    for (std::size_t ky = 0; ky < k; ++ky)
                        for (std::size_t kx = 0; kx < k; ++kx)
                            acc += input[c][y * stride + ky][x * stride + kx] * weight[o][c][ky][kx];
                out[o][y][x] = acc;
            }
    return out;
}

// Gram matrix, row-normalized relation matrix, and the relation-consistency
// loss, straight from the definitions.
inline Matrix gram(const Matrix& a) {
    const std::size_t n = a.size(), d = a[0].size();
    Matrix g(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < d; ++p) g[i][j] += a[i][p] * a[j][p];
    return g;
}

inline Matrix normalize_rows(const Matrix& g) {
    Matrix r = g;
    for (auto& row : r) {
        double norm = 0.0;
        for (double v : row) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) continue;
        for (double& v : row) v /= norm;
    }
    return r;
}

inline double src_loss(const Matrix& student, const Matrix& teacher) {
    const Matrix rs = normalize_rows(gram(student));
    const Matrix rt = normalize_rows(gram(teacher));
    double total = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i)
        for (std::size_t j = 0; j < rs.size(); ++j) {
            const double diff = rs[i][j] - rt[i][j];
            total += diff * diff;
        }
    return total / static_cast<double>(student.size());
}

// Supervised contrastive loss over 2N views, averaged over anchors.
// labels[k] applies to views 2k and 2k+1; a negative label means unlabeled.
inline double supcon_loss(const Matrix& z, const std::vector<int>& labels, double tau) {
    const std::size_t rows = z.size();
    double total = 0.0;
    for (std::size_t i = 0; i < rows; ++i) {
        double denom = 0.0;
        for (std::size_t a = 0; a < rows; ++a) {
            if (a == i) continue;
            double dot = 0.0;
            for (std::size_t p = 0; p < z[i].size(); ++p) dot += z[i][p] * z[a][p];
            denom += std::exp(dot / tau);
        }
        std::vector<std::size_t> positives;
        for (std::size_t p = 0; p < rows; ++p) {
            if (p == i) continue;
            const bool partner = (p / 2 == i / 2);
            const bool same_label =
                labels[i / 2] >= 0 && labels[p / 2] == labels[i / 2];
            if (partner || same_label) positives.push_back(p);
        }
        double anchor = 0.0;
        for (std::size_t p : positives) {
            double dot = 0.0;
            for (std::size_t q = 0; q < z[i].size(); ++q) dot += z[i][q] * z[p][q];
            anchor += std::log(std::exp(dot / tau) / denom);
        }
        total += -anchor / static_cast<double>(positives.size());
    }
    return total / static_cast<double>(rows);
}

// NT-Xent (the label-free contrastive loss), written in the per-pair style:
// l(i, j) = -log( exp(s_ij / tau) / sum_{a != i} exp(s_ia / tau) ),
// accumulated symmetrically over the N view pairs.
inline double ntxent_loss(const Matrix& z, double tau) {
    const std::size_t rows = z.size();
    const auto sim = [&](std::size_t a, std::size_t b) {
        double dot = 0.0;
        for (std::size_t p = 0; p < z[a].size(); ++p) dot += z[a][p] * z[b][p];
        return dot;
    };
    const auto pair_loss = [&](std::size_t i, std::size_t j) {
        double denom = 0.0;
        for (std::size_t a = 0; a < rows; ++a) {
            if (a != i) denom += std::exp(sim(i, a) / tau);
        }
        return -std::log(std::exp(sim(i, j) / tau) / denom);
    };
    double total = 0.0;
    for (std::size_t k = 0; k < rows / 2; ++k) {
        total += pair_loss(2 * k, 2 * k + 1) + pair_loss(2 * k + 1, 2 * k);
    }
    return total / static_cast<double>(rows);
}

inline double mse_loss(const Matrix& predictions, const Matrix& targets) {
    double total = 0.0;
    for (std::size_t i = 0; i < predictions.size(); ++i)
        for (std::size_t j = 0; j < predictions[i].size(); ++j) {
            const double diff = predictions[i][j] - targets[i][j];
            total += diff * diff;
        }
    return total / static_cast<double>(predictions.size());
}

// O(P * N) pair counting with half ties.
inline double auroc_pairs(const std::vector<double>& scores, const std::vector<bool>& positives) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!positives[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (positives[j]) continue;
            ++pairs;
            if (scores[i] > scores[j]) {
                wins += 1.0;
            } else if (scores[i] == scores[j]) {
                wins += 0.5;
            }
        }
    }
    return wins / static_cast<double>(pairs);
}

} // namespace oracle
