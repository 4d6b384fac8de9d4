#include "srcl/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "srcl/core.hpp"
#include "srcl/losses.hpp"

namespace srcl {

void TrainConfig::validate() const {
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    if (!(tau > 0.0)) throw ConfigError("tau > 0");
    if (lambda_sup < 0.0 || lambda_con < 0.0 || lambda_src < 0.0) {
        throw ConfigError("loss weights must be non-negative");
    }
    if (teacher_alpha < 0.0 || teacher_alpha > 1.0) {
        throw ConfigError("teacher_alpha must lie in [0, 1]");
    }
    augment.validate();
}

namespace {

struct RegimeSpec {
    bool use_teacher = false;
    bool validate_epochs = true;
    double lambda_sup = 1.0;
    double lambda_con = 0.0;
    double lambda_src = 0.0;
    std::size_t epochs = 0;
};

Tensor gather_rows(const Tensor& m, const std::vector<std::size_t>& rows) {
    Tensor out = Tensor::zeros({rows.size(), m.cols()});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) = m.at(rows[i], j);
    }
    return out;
}

Tensor even_rows(const Tensor& m) {
    Tensor out = Tensor::zeros({m.rows() / 2, m.cols()});
    for (std::size_t i = 0; i < out.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out.at(i, j) = m.at(2 * i, j);
    }
    return out;
}

Tensor one_hot(const std::vector<int>& labels, const std::vector<std::size_t>& rows,
               std::size_t num_classes) {
    Tensor out = Tensor::zeros({rows.size(), num_classes});
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.at(i, static_cast<std::size_t>(labels[rows[i]])) = 1.0f;
    }
    return out;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

/// The shared epoch/batch loop behind all four regimes. Stream derivations
/// are identical across regimes so the documented degeneracies hold
/// bit-for-bit: batches come from (seed, "batch", epoch) and sample k's view
/// v from (seed, "augment", epoch, batch, 2k + v).
TrainOutcome run_regime(ModelParams student, const Dataset& train_set, const Dataset* val_set,
                        const TrainConfig& config, const RegimeSpec& spec) {
    config.validate();
    if (train_set.images.empty()) throw Error("training set is empty");
    if (spec.lambda_sup > 0.0 && count_labeled(train_set) == 0) {
        throw Error("supervision impossible: the training set has no labeled images");
    }
    if (spec.validate_epochs && (val_set == nullptr || val_set->images.empty())) {
        throw Error("validation set is empty");
    }

    const std::size_t num_classes = student.arch.num_classes;
    TeacherConfig teacher_cfg{config.teacher_alpha, config.warmup_epochs,
                              config.ema_granularity};
    teacher_cfg.validate();

    OptimizerState optimizer = make_optimizer(config.optimizer, student);
    std::optional<ModelParams> teacher;
    if (spec.use_teacher) teacher = student;
    bool teacher_started = false;

    const RandomStream aug_root = RandomStream(config.seed).fork("augment");

    TrainOutcome outcome;
    double best_auroc = -1.0;

    for (std::size_t epoch = 0; epoch < spec.epochs; ++epoch) {
        const double t0 = now_seconds();
        const Gates gate = gates(epoch, teacher_cfg);
        if (spec.use_teacher && gate.apply_src && !teacher_started) {
            *teacher = student; // consistency starts from the current student
            teacher_started = true;
        }

        const std::vector<Batch> batches =
            make_batches(train_set, config.batch_size, epoch, config.seed);
        double sum_sup = 0.0, sum_con = 0.0, sum_src = 0.0;

        for (std::size_t b = 0; b < batches.size(); ++b) {
            const Batch& batch = batches[b];
            const RandomStream batch_stream = aug_root.fork(epoch).fork(b);

            std::vector<std::size_t> labeled_rows;
            for (std::size_t k = 0; k < batch.size(); ++k) {
                if (batch.labeled_mask[k]) labeled_rows.push_back(k);
            }

            NamedTensors grads = zero_grads(student);
            double batch_sup = 0.0, batch_con = 0.0, batch_src = 0.0;

            const bool contrastive = spec.lambda_con > 0.0;
            const bool supervised = spec.lambda_sup > 0.0 && !labeled_rows.empty();
            const bool src_active = spec.use_teacher && gate.apply_src && spec.lambda_src > 0.0;

            // Student forward: 2N contrastive views when the contrastive
            // term is on, otherwise one view per image. View 0 feeds the
            // classifier and the relation term either way.
            EncoderTrace enc_trace;
            Tensor activation; // rows the classifier and SRC term consume
            Tensor activation_full;
            if (contrastive) {
                const Tensor views = make_contrastive_views(batch, config.augment, batch_stream);
                activation_full = encoder_forward(student, views, &enc_trace);
                activation = even_rows(activation_full);
            } else {
                const Tensor views = augment_batch(batch, config.augment, batch_stream);
                activation_full = encoder_forward(student, views, &enc_trace);
                activation = activation_full;
            }
            Tensor d_activation_full = Tensor::zeros(activation_full.shape);

            if (contrastive) {
                ProjectionTrace proj_trace;
                const Tensor embeddings = projection_forward(student, activation_full, &proj_trace);
                const LossBundle con = supcon_loss({embeddings, batch.labels, config.tau});
                batch_con = spec.lambda_con * con.value;
                const Tensor d_act_con = projection_backward(
                    student, proj_trace, scale(con.grad, spec.lambda_con), &grads);
                add_in_place(d_activation_full, d_act_con);
            }

            Tensor d_activation = Tensor::zeros(activation.shape);
            bool have_head_grads = false;

            if (spec.lambda_sup > 0.0) {
                ClassifierTrace cls_trace;
                const Tensor probs = classifier_forward(student, activation, &cls_trace);
                Tensor d_probs = Tensor::zeros(probs.shape);
                if (supervised) {
                    const Tensor probs_labeled = gather_rows(probs, labeled_rows);
                    const Tensor targets = one_hot(batch.labels, labeled_rows, num_classes);
                    const LossBundle sup = config.supervised_loss == SupervisedLossKind::Mse
                                               ? mse_supervised_loss(probs_labeled, targets)
                                               : cross_entropy_loss(probs_labeled, targets);
                    batch_sup = spec.lambda_sup * sup.value;
                    for (std::size_t i = 0; i < labeled_rows.size(); ++i) {
                        for (std::size_t j = 0; j < num_classes; ++j) {
                            d_probs.at(labeled_rows[i], j) =
                                static_cast<float>(spec.lambda_sup * sup.grad.at(i, j));
                        }
                    }
                }
                add_in_place(d_activation, classifier_backward(student, cls_trace, d_probs, &grads));
                have_head_grads = true;
            }

            if (src_active) {
                const Tensor teacher_in = [&] {
                    Tensor clean = batch.images;
                    Tensor out = Tensor::zeros(clean.shape);
                    const std::size_t stride = clean.size() / batch.size();
                    for (std::size_t k = 0; k < batch.size(); ++k) {
                        Tensor img({clean.dim(1), clean.dim(2), clean.dim(3)},
                                   std::vector<float>(
                                       clean.data.begin() + static_cast<std::ptrdiff_t>(k * stride),
                                       clean.data.begin() +
                                           static_cast<std::ptrdiff_t>((k + 1) * stride)));
                        const Tensor norm = normalize_only(img, config.augment);
                        std::copy(norm.data.begin(), norm.data.end(),
                                  out.data.begin() + static_cast<std::ptrdiff_t>(k * stride));
                    }
                    return out;
                }();
                const Tensor teacher_act = encoder_forward(*teacher, teacher_in, nullptr);
                const LossBundle src = src_loss(activation, teacher_act);
                batch_src = spec.lambda_src * src.value;
                axpy_in_place(d_activation, spec.lambda_src, src.grad);
                have_head_grads = true;
            }

            if (have_head_grads) {
                if (contrastive) {
                    // Scatter the per-image gradient onto the view-0 rows.
                    for (std::size_t k = 0; k < batch.size(); ++k) {
                        for (std::size_t j = 0; j < activation.cols(); ++j) {
                            d_activation_full.at(2 * k, j) += d_activation.at(k, j);
                        }
                    }
                } else {
                    add_in_place(d_activation_full, d_activation);
                }
            }

            encoder_backward(student, enc_trace, d_activation_full, &grads);
            optimizer_step(student, grads, optimizer);

            if (spec.use_teacher && gate.update_teacher &&
                config.ema_granularity == EmaGranularity::PerStep) {
                *teacher = ema_update(*teacher, student, config.teacher_alpha);
            }

            sum_sup += batch_sup;
            sum_con += batch_con;
            sum_src += batch_src;
        }

        if (spec.use_teacher && gate.update_teacher &&
            config.ema_granularity == EmaGranularity::PerEpoch) {
            *teacher = ema_update(*teacher, student, config.teacher_alpha);
        }

        EpochLog log;
        log.epoch = epoch;
        const double nb = batches.empty() ? 1.0 : static_cast<double>(batches.size());
        log.loss_sup = sum_sup / nb;
        log.loss_con = sum_con / nb;
        log.loss_src = sum_src / nb;
        log.loss_total = log.loss_sup + log.loss_con + log.loss_src;

        if (spec.validate_epochs) {
            const MetricsReport report = evaluate_model(student, *val_set, config.augment);
            log.val_auroc = report.macro_auroc.value_or(0.0);
            log.val_accuracy = report.accuracy;
            log.validated = true;
            if (log.val_auroc > best_auroc) {
                best_auroc = log.val_auroc;
                outcome.best = student;
                outcome.best_epoch = epoch;
            }
        }
        log.seconds = now_seconds() - t0;
        outcome.logs.push_back(log);
    }

    outcome.final_student = student;
    if (!spec.validate_epochs || outcome.logs.empty()) {
        outcome.best = std::move(student);
        outcome.best_epoch = spec.epochs == 0 ? 0 : spec.epochs - 1;
    }
    outcome.teacher = std::move(teacher);
    return outcome;
}

} // namespace

PretrainResult pretrain_contrastive(const Dataset& train_set, const ArchConfig& arch,
                                    const TrainConfig& config) {
    RegimeSpec spec;
    spec.use_teacher = false;
    spec.validate_epochs = false;
    spec.lambda_sup = 0.0;
    spec.lambda_con = 1.0;
    spec.lambda_src = 0.0;
    spec.epochs = config.epochs_pre;
    TrainOutcome outcome =
        run_regime(init_params(arch, config.seed), train_set, nullptr, config, spec);
    return PretrainResult{std::move(outcome.final_student), std::move(outcome.logs)};
}

TrainOutcome finetune_src(ModelParams student, const Dataset& train_set, const Dataset& val_set,
                          const TrainConfig& config) {
    RegimeSpec spec;
    spec.use_teacher = true;
    spec.lambda_sup = 1.0;
    spec.lambda_con = 0.0;
    spec.lambda_src = config.lambda_src;
    spec.epochs = config.epochs_down;
    return run_regime(std::move(student), train_set, &val_set, config, spec);
}

TrainOutcome train_joint(const Dataset& train_set, const Dataset& val_set, const ArchConfig& arch,
                         const TrainConfig& config) {
    RegimeSpec spec;
    spec.use_teacher = true;
    spec.lambda_sup = config.lambda_sup;
    spec.lambda_con = config.lambda_con;
    spec.lambda_src = config.lambda_src;
    spec.epochs = config.epochs_down;
    return run_regime(init_params(arch, config.seed), train_set, &val_set, config, spec);
}

TrainOutcome train_supervised(const Dataset& train_set, const Dataset& val_set,
                              const ArchConfig& arch, const TrainConfig& config) {
    RegimeSpec spec;
    spec.use_teacher = false;
    spec.lambda_sup = 1.0;
    spec.lambda_con = 0.0;
    spec.lambda_src = 0.0;
    spec.epochs = config.epochs_down;
    return run_regime(init_params(arch, config.seed), train_set, &val_set, config, spec);
}

std::size_t best_epoch_index(const std::vector<EpochLog>& logs) {
    std::size_t best = logs.size();
    double best_auroc = -1.0;
    for (std::size_t i = 0; i < logs.size(); ++i) {
        if (!logs[i].validated) continue;
        if (logs[i].val_auroc > best_auroc) {
            best_auroc = logs[i].val_auroc;
            best = i;
        }
    }
    if (best == logs.size()) throw Error("select_best: no validated epochs");
    return best;
}

ModelParams select_best(const std::vector<EpochLog>& logs,
                        const std::vector<ModelParams>& checkpoints) {
    if (logs.size() != checkpoints.size()) {
        throw Error("select_best: " + std::to_string(logs.size()) + " logs but " +
                    std::to_string(checkpoints.size()) + " checkpoints");
    }
    return checkpoints[best_epoch_index(logs)];
}

void write_epoch_logs(const std::string& path, const std::vector<EpochLog>& logs,
                      bool include_timing) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open log file for writing: " + path);
    for (const EpochLog& log : logs) {
        nlohmann::ordered_json line;
        line["epoch"] = log.epoch;
        line["loss_total"] = log.loss_total;
        line["loss_sup"] = log.loss_sup;
        line["loss_con"] = log.loss_con;
        line["loss_src"] = log.loss_src;
        line["val_auroc"] = log.val_auroc;
        line["val_accuracy"] = log.val_accuracy;
        line["seconds"] = include_timing ? log.seconds : 0.0;
        out << line.dump() << "\n";
    }
    if (!out) throw IoError("write failed for log file: " + path);
}

MetricsReport evaluate_model(const ModelParams& params, const Dataset& dataset,
                             const AugmentConfig& augment) {
    if (dataset.images.empty()) throw Error("evaluate_model: empty dataset");
    const Tensor images = normalized_images(dataset, augment);
    const Tensor activation = encoder_forward(params, images);
    const Tensor probs = classifier_forward(params, activation);
    ScoredExamples scored{probs, dataset_labels(dataset)};
    return metrics_report(scored);
}

} // namespace srcl
