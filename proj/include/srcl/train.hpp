#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "srcl/data.hpp"
#include "srcl/eval.hpp"
#include "srcl/nn.hpp"
#include "srcl/teacher.hpp"

namespace srcl {

enum class SupervisedLossKind { Mse, CrossEntropy };

struct TrainConfig {
    std::size_t epochs_pre = 100;
    std::size_t epochs_down = 100;
    std::size_t warmup_epochs = 20;
    std::size_t batch_size = 20;
    double tau = 0.1;

    // Joint objective weights. finetune_src and train_supervised use an
    // implicit supervised weight of 1 and no contrastive term.
    double lambda_sup = 1.0;
    double lambda_con = 1.0;
    double lambda_src = 1.0;

    OptimizerConfig optimizer;
    double teacher_alpha = 0.99;
    EmaGranularity ema_granularity = EmaGranularity::PerEpoch;
    AugmentConfig augment;
    SupervisedLossKind supervised_loss = SupervisedLossKind::Mse;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double loss_total = 0.0;
    double loss_sup = 0.0;
    double loss_con = 0.0;
    double loss_src = 0.0;
    double val_auroc = 0.0;
    double val_accuracy = 0.0;
    double seconds = 0.0;
    bool validated = false; // not serialized
};

struct PretrainResult {
    ModelParams params;
    std::vector<EpochLog> logs;
};

struct TrainOutcome {
    ModelParams best;          // highest validation macro AUROC, earliest tie
    ModelParams final_student; // parameters after the last epoch
    std::optional<ModelParams> teacher;
    std::vector<EpochLog> logs;
    std::size_t best_epoch = 0;
};

/// Contrastive pre-training of encoder and projection head; the classifier
/// is untouched.
PretrainResult pretrain_contrastive(const Dataset& train_set, const ArchConfig& arch,
                                    const TrainConfig& config);

/// Downstream fine-tuning: supervised MSE on the labeled subset of each
/// batch, plus the relation-consistency term against a mean teacher after
/// warm-up. The student sees augmented views, the teacher clean images.
TrainOutcome finetune_src(ModelParams student, const Dataset& train_set, const Dataset& val_set,
                          const TrainConfig& config);

/// Multi-task objective: lambda_sup * MSE + lambda_con * SupCon +
/// lambda_src * SRC (post warm-up), one optimizer step per batch.
TrainOutcome train_joint(const Dataset& train_set, const Dataset& val_set, const ArchConfig& arch,
                         const TrainConfig& config);

/// Supervised baseline: the fine-tuning loop without a teacher or SRC term.
TrainOutcome train_supervised(const Dataset& train_set, const Dataset& val_set,
                              const ArchConfig& arch, const TrainConfig& config);

/// Index of the highest validation macro AUROC among validated epochs,
/// earliest on ties. Throws when no epoch was validated.
std::size_t best_epoch_index(const std::vector<EpochLog>& logs);

/// The checkpoint matching best_epoch_index. `checkpoints` is indexed by
/// epoch.
ModelParams select_best(const std::vector<EpochLog>& logs,
                        const std::vector<ModelParams>& checkpoints);

/// One JSON object per line: {epoch, loss_total, loss_sup, loss_con,
/// loss_src, val_auroc, val_accuracy, seconds}. Wall-clock seconds are
/// written as 0 unless include_timing is set, keeping reruns byte-identical.
void write_epoch_logs(const std::string& path, const std::vector<EpochLog>& logs,
                      bool include_timing);

/// Forward the whole dataset (normalized, no augmentation) and score it.
MetricsReport evaluate_model(const ModelParams& params, const Dataset& dataset,
                             const AugmentConfig& augment);

} // namespace srcl
