#pragma once

#include <vector>

#include "srcl/tensor.hpp"

namespace srcl {

/// Scalar loss value plus the gradient with respect to the documented input.
struct LossBundle {
    double value = 0.0;
    Tensor grad;
};

/// Two augmented views per original image, rows (2k, 2k+1) forming a pair.
/// `labels` is indexed by original image; kUnlabeled marks images whose
/// label the learner cannot see.
struct ContrastiveBatch {
    Tensor embeddings;        // 2N x D, unit rows
    std::vector<int> labels;  // size N
    double tau = 0.1;
};

/// Student and teacher activation maps over the same batch.
struct RelationPair {
    Tensor student_activation;  // N x D
    Tensor teacher_activation;  // N x D
};

struct RelationMatrix {
    Tensor matrix;  // N x N, unit rows (or zero rows under the degenerate rule)
};

/// G = A * A^T.
Tensor gram_matrix(const Tensor& a);

/// Row-wise L2 normalization of a Gram matrix.
RelationMatrix relation_matrix(const Tensor& gram);

/// Squared Frobenius distance between the student and teacher relation
/// matrices, scaled by 1/N. The teacher side is a constant; the gradient is
/// with respect to the student activation only.
LossBundle src_loss(const RelationPair& pair);
LossBundle src_loss(const Tensor& student_activation, const Tensor& teacher_activation);

/// Supervised contrastive loss over the 2N views, averaged over anchors.
/// Positive sets: the augmentation partner always; for labeled anchors also
/// every view of other originals sharing the label. Gradient is with respect
/// to the embeddings.
///
/// Embedding rows must be unit within kUnitRowTolerance; the gate is loose
/// enough to admit finite-difference probes of the loss.
LossBundle supcon_loss(const ContrastiveBatch& batch);

inline constexpr double kUnitRowTolerance = 1e-2;

/// Mean squared error between class probabilities and one-hot targets,
/// averaged over rows. Gradient (2/L)(Y - Yhat) w.r.t. the probabilities.
LossBundle mse_supervised_loss(const Tensor& probabilities, const Tensor& onehot_targets);

/// Negative log-likelihood of the target class, averaged over rows.
/// Gradient w.r.t. the probabilities. Selectable alternative to the MSE
/// supervision for the fully supervised baseline.
LossBundle cross_entropy_loss(const Tensor& probabilities, const Tensor& onehot_targets);

} // namespace srcl
