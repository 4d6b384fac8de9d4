#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "srcl/core.hpp"
#include "srcl/data.hpp"
#include "srcl/train.hpp"
#include "testutil.hpp"

using namespace srcl;

namespace {

ArchConfig small_arch(std::size_t classes) {
    ArchConfig arch;
    arch.encoder.input_size = 16;
    arch.encoder.input_channels = 3;
    arch.encoder.conv_blocks = {{6, 3, 2}, {8, 3, 2}};
    arch.projection_sizes = {12, 8};
    arch.num_classes = classes;
    return arch;
}

TrainConfig small_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.epochs_pre = 2;
    cfg.epochs_down = 3;
    cfg.warmup_epochs = 1;
    cfg.batch_size = 8;
    cfg.seed = seed;
    return cfg;
}

bool logs_match(const std::vector<EpochLog>& a, const std::vector<EpochLog>& b, double tol) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::abs(a[i].loss_total - b[i].loss_total) > tol) return false;
        if (std::abs(a[i].loss_sup - b[i].loss_sup) > tol) return false;
        if (std::abs(a[i].loss_con - b[i].loss_con) > tol) return false;
        if (std::abs(a[i].loss_src - b[i].loss_src) > tol) return false;
    }
    return true;
}

} // namespace

TEST_SUITE_BEGIN("train");

TEST_CASE("pretraining runs, changes parameters, and is deterministic") {
    const Dataset train_set = generate_synthetic(16, 2, 16, 1.0, 5);
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(3);
    cfg.epochs_pre = 1;
    cfg.batch_size = 16;

    const PretrainResult a = pretrain_contrastive(train_set, arch, cfg);
    REQUIRE(a.logs.size() == 1);
    CHECK(std::isfinite(a.logs[0].loss_con));
    CHECK(a.logs[0].loss_con >= 0.0);
    CHECK(a.logs[0].loss_sup == 0.0);
    CHECK_FALSE(bit_equal(a.params.tensors, init_params(arch, cfg.seed).tensors));

    const PretrainResult b = pretrain_contrastive(train_set, arch, cfg);
    CHECK(bit_equal(a.params.tensors, b.params.tensors));
}

TEST_CASE("pretraining one batch of identical same-label images stays finite") {
    const Dataset source = generate_synthetic(2, 2, 16, 1.0, 6);
    Dataset clones;
    clones.class_names = source.class_names;
    for (int i = 0; i < 8; ++i) {
        LabeledImage copy = source.images[0];
        copy.id = "copy" + std::to_string(i);
        clones.images.push_back(copy);
    }
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(4);
    cfg.epochs_pre = 1;
    cfg.batch_size = 8;
    const PretrainResult result = pretrain_contrastive(clones, arch, cfg);
    REQUIRE(result.logs.size() == 1);
    CHECK(std::isfinite(result.logs[0].loss_con));
    CHECK(result.logs[0].loss_con >= 0.0);
    CHECK_FALSE(bit_equal(result.params.tensors, init_params(arch, cfg.seed).tensors));
}

TEST_CASE("pretraining loss trends down over epochs") {
    const ArchConfig arch = small_arch(4);
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        const Dataset train_set = generate_synthetic(40, 4, 16, 1.0, 11 + seed);
        TrainConfig cfg = small_config(seed);
        cfg.epochs_pre = 5;
        cfg.batch_size = 10;
        const PretrainResult result = pretrain_contrastive(train_set, arch, cfg);
        REQUIRE(result.logs.size() == 5);
        CHECK(result.logs[4].loss_con <= result.logs[0].loss_con);
    }
}

TEST_CASE("warm-up beyond the horizon reduces fine-tuning to supervised training") {
    const Dataset data = generate_synthetic(32, 2, 16, 1.0, 7);
    const Splits splits = split(data, {0.75, 0.25, 0.0}, 7);
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(9);
    cfg.warmup_epochs = 100; // larger than epochs_down

    const ModelParams student = init_params(arch, cfg.seed);
    const TrainOutcome tuned = finetune_src(student, splits.train, splits.val, cfg);
    const TrainOutcome plain = train_supervised(splits.train, splits.val, arch, cfg);

    CHECK(bit_equal(tuned.final_student.tensors, plain.final_student.tensors));
    CHECK(logs_match(tuned.logs, plain.logs, 0.0));

    // The teacher was never consulted or updated.
    REQUIRE(tuned.teacher.has_value());
    CHECK(bit_equal(tuned.teacher->tensors, student.tensors));
}

TEST_CASE("full labels and a zero relation weight reproduce the supervised loss trajectory") {
    const Dataset data = generate_synthetic(32, 2, 16, 1.0, 8);
    const Splits splits = split(data, {0.75, 0.25, 0.0}, 8);
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(10);
    cfg.lambda_src = 0.0;
    cfg.warmup_epochs = 1;

    const TrainOutcome tuned =
        finetune_src(init_params(arch, cfg.seed), splits.train, splits.val, cfg);
    const TrainOutcome plain = train_supervised(splits.train, splits.val, arch, cfg);
    CHECK(logs_match(tuned.logs, plain.logs, 1e-6));
    CHECK(bit_equal(tuned.final_student.tensors, plain.final_student.tensors));
}

TEST_CASE("joint training without the contrastive term equals fine-tuning") {
    const Dataset data = generate_synthetic(32, 2, 16, 1.0, 9);
    const Splits splits = split(data, {0.75, 0.25, 0.0}, 9);
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(11);
    cfg.lambda_con = 0.0;
    cfg.lambda_sup = 1.0;
    cfg.lambda_src = 1.0;
    cfg.warmup_epochs = 1;

    const TrainOutcome joint = train_joint(splits.train, splits.val, arch, cfg);
    const TrainOutcome tuned =
        finetune_src(init_params(arch, cfg.seed), splits.train, splits.val, cfg);
    CHECK(logs_match(joint.logs, tuned.logs, 1e-6));
    CHECK(bit_equal(joint.final_student.tensors, tuned.final_student.tensors));
}

TEST_CASE("joint training with only the contrastive term follows pre-training") {
    const Dataset data = generate_synthetic(32, 2, 16, 1.0, 10);
    const Splits splits = split(data, {0.75, 0.25, 0.0}, 10);
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(12);
    cfg.lambda_sup = 0.0;
    cfg.lambda_src = 0.0;
    cfg.lambda_con = 1.0;
    cfg.epochs_pre = cfg.epochs_down;

    const TrainOutcome joint = train_joint(splits.train, splits.val, arch, cfg);
    const PretrainResult pre = pretrain_contrastive(splits.train, arch, cfg);

    const ModelParams initial = init_params(arch, cfg.seed);
    for (std::size_t t = 0; t < joint.final_student.tensors.count(); ++t) {
        const std::string& name = joint.final_student.tensors.names[t];
        if (name.starts_with("classifier")) {
            CHECK(bit_equal(joint.final_student.tensors.values[t], initial.tensors.at(name)));
        } else {
            CHECK(bit_equal(joint.final_student.tensors.values[t], pre.params.tensors.at(name)));
        }
    }
}

TEST_CASE("joint smoke test keeps every loss term finite") {
    for (std::uint64_t seed : {21ull, 22ull, 23ull}) {
        const Dataset data = generate_synthetic(24, 2, 16, 1.0, seed);
        const Splits splits = split(data, {0.7, 0.3, 0.0}, seed);
        const Dataset masked = mask_labels(splits.train, 0.5, seed);
        const ArchConfig arch = small_arch(2);
        TrainConfig cfg = small_config(seed);
        cfg.epochs_down = 5;
        cfg.warmup_epochs = 2;
        const TrainOutcome joint = train_joint(masked, splits.val, arch, cfg);
        for (const EpochLog& log : joint.logs) {
            CHECK(std::isfinite(log.loss_total));
            CHECK(std::abs(log.loss_total - (log.loss_sup + log.loss_con + log.loss_src)) < 1e-6);
        }
    }
}

TEST_CASE("supervised training overfits a linearly separable two-class set") {
    // Class 0 is bright, class 1 is dark; average intensity alone separates.
    Dataset data;
    data.class_names = {"bright", "dark"};
    RandomStream rng(30);
    for (int i = 0; i < 48; ++i) {
        const int label = i % 2;
        Tensor pixels = Tensor::zeros({3, 16, 16});
        for (float& v : pixels.data) {
            v = static_cast<float>(label == 0 ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4));
        }
        data.images.push_back({"img" + std::to_string(i), std::move(pixels), label});
    }
    const Splits splits = split(data, {0.75, 0.25, 0.0}, 30);

    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(31);
    cfg.epochs_down = 50;
    cfg.batch_size = 9;
    cfg.optimizer.learning_rate = 3e-3;
    cfg.augment.crop_min = 0.9;
    cfg.augment.brightness = 0.1;
    cfg.augment.contrast = 0.1;
    cfg.augment.saturation = 0.1;
    cfg.augment.grayscale_prob = 0.0;

    const TrainOutcome outcome = train_supervised(splits.train, splits.val, arch, cfg);
    const MetricsReport report = evaluate_model(outcome.final_student, splits.train, cfg.augment);
    CHECK(report.accuracy >= 0.95);
}

TEST_CASE("supervised training is deterministic and rejects label-free data") {
    const Dataset data = generate_synthetic(24, 2, 16, 1.0, 32);
    const Splits splits = split(data, {0.7, 0.3, 0.0}, 32);
    const ArchConfig arch = small_arch(2);
    const TrainConfig cfg = small_config(33);

    const TrainOutcome a = train_supervised(splits.train, splits.val, arch, cfg);
    const TrainOutcome b = train_supervised(splits.train, splits.val, arch, cfg);
    CHECK(bit_equal(a.final_student.tensors, b.final_student.tensors));
    CHECK(logs_match(a.logs, b.logs, 0.0));

    Dataset unlabeled = splits.train;
    for (LabeledImage& img : unlabeled.images) img.label = kUnlabeled;
    CHECK_THROWS_WITH_AS(train_supervised(unlabeled, splits.val, arch, cfg),
                         doctest::Contains("supervision impossible"), Error);
}

TEST_CASE("the teacher stays bit-frozen before warm-up") {
    const Dataset data = generate_synthetic(24, 2, 16, 1.0, 34);
    const Splits splits = split(data, {0.7, 0.3, 0.0}, 34);
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(35);
    cfg.epochs_down = 3;
    cfg.warmup_epochs = 3; // equal: gate never opens during the run

    const ModelParams student = init_params(arch, cfg.seed);
    const TrainOutcome outcome = finetune_src(student, splits.train, splits.val, cfg);
    REQUIRE(outcome.teacher.has_value());
    CHECK(bit_equal(outcome.teacher->tensors, student.tensors));
}

TEST_CASE("per-step EMA is available and changes the teacher trajectory") {
    const Dataset data = generate_synthetic(24, 2, 16, 1.0, 36);
    const Splits splits = split(data, {0.7, 0.3, 0.0}, 36);
    const ArchConfig arch = small_arch(2);
    TrainConfig cfg = small_config(37);
    cfg.epochs_down = 2;
    cfg.warmup_epochs = 0;

    const ModelParams student = init_params(arch, cfg.seed);
    const TrainOutcome per_epoch = finetune_src(student, splits.train, splits.val, cfg);
    cfg.ema_granularity = EmaGranularity::PerStep;
    const TrainOutcome per_step = finetune_src(student, splits.train, splits.val, cfg);
    const TrainOutcome per_step_again = finetune_src(student, splits.train, splits.val, cfg);

    REQUIRE(per_epoch.teacher.has_value());
    REQUIRE(per_step.teacher.has_value());
    CHECK_FALSE(bit_equal(per_epoch.teacher->tensors, per_step.teacher->tensors));
    CHECK(bit_equal(per_step.teacher->tensors, per_step_again.teacher->tensors));
}

TEST_CASE("select_best picks the highest AUROC, earliest on ties") {
    const auto log_with = [](std::size_t epoch, double auroc) {
        EpochLog log;
        log.epoch = epoch;
        log.val_auroc = auroc;
        log.validated = true;
        return log;
    };

    CHECK(best_epoch_index({log_with(0, 0.5)}) == 0);
    CHECK(best_epoch_index({log_with(0, 0.6), log_with(1, 0.9), log_with(2, 0.9)}) == 1);
    CHECK(best_epoch_index({log_with(0, 0.2), log_with(1, 0.5), log_with(2, 0.8)}) == 2);

    std::vector<EpochLog> unvalidated(2);
    CHECK_THROWS_AS(best_epoch_index(unvalidated), Error);

    std::vector<ModelParams> checkpoints(3);
    checkpoints[1].tensors.add("w", Tensor({1}, {7.0f}));
    const ModelParams best =
        select_best({log_with(0, 0.6), log_with(1, 0.9), log_with(2, 0.9)}, checkpoints);
    CHECK(best.tensors.at("w").data[0] == 7.0f);
    CHECK_THROWS_AS(select_best({log_with(0, 0.5)}, checkpoints), Error);
}

TEST_CASE("epoch logs serialize in schema order with zeroed timing") {
    namespace fs = std::filesystem;
    fs::remove_all("tmp_train_logs");
    fs::create_directories("tmp_train_logs");
    const std::string path = "tmp_train_logs/log.jsonl";

    EpochLog log;
    log.epoch = 4;
    log.loss_total = 1.5;
    log.loss_sup = 1.0;
    log.loss_con = 0.25;
    log.loss_src = 0.25;
    log.val_auroc = 0.75;
    log.val_accuracy = 0.5;
    log.seconds = 12.5;
    write_epoch_logs(path, {log}, false);

    std::ifstream in(path);
    std::string line;
    REQUIRE(std::getline(in, line));
    const auto parsed = nlohmann::json::parse(line);
    CHECK(parsed["epoch"] == 4);
    CHECK(parsed["loss_total"] == 1.5);
    CHECK(parsed["seconds"] == 0.0);
    CHECK(line.find("\"epoch\"") < line.find("\"loss_total\""));
    CHECK(line.find("\"loss_total\"") < line.find("\"seconds\""));

    write_epoch_logs(path, {log}, true);
    std::ifstream in2(path);
    REQUIRE(std::getline(in2, line));
    CHECK(nlohmann::json::parse(line)["seconds"] == 12.5);
}

TEST_SUITE_END();
