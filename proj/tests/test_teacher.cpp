#include <doctest.h>

#include <cmath>

#include "srcl/nn.hpp"
#include "srcl/random.hpp"
#include "srcl/teacher.hpp"
#include "testutil.hpp"

using namespace srcl;

namespace {

ModelParams scalar_model(float value) {
    ModelParams params;
    params.tensors.add("w", Tensor({1}, {value}));
    return params;
}

} // namespace

TEST_SUITE_BEGIN("teacher");

TEST_CASE("alpha 1 freezes the teacher, alpha 0 copies the student") {
    RandomStream rng(1);
    ModelParams teacher, student;
    teacher.tensors.add("w", testutil::random_tensor({3, 3}, rng));
    student.tensors.add("w", testutil::random_tensor({3, 3}, rng));

    CHECK(bit_equal(ema_update(teacher, student, 1.0).tensors, teacher.tensors));
    CHECK(bit_equal(ema_update(teacher, student, 0.0).tensors, student.tensors));
}

TEST_CASE("repeated updates decay geometrically") {
    ModelParams teacher = scalar_model(1.0f);
    const ModelParams student = scalar_model(0.0f);
    teacher = ema_update(teacher, student, 0.9);
    CHECK(teacher.tensors.at("w").data[0] == doctest::Approx(0.9));

    teacher = scalar_model(1.0f);
    for (int e = 1; e <= 40; ++e) {
        teacher = ema_update(teacher, student, 0.9);
        CHECK(std::abs(teacher.tensors.at("w").data[0] - std::pow(0.9, e)) < 1e-6);
    }
}

TEST_CASE("every element stays between teacher and student") {
    RandomStream rng(2);
    ModelParams teacher, student;
    teacher.tensors.add("w", testutil::random_tensor({4, 4}, rng));
    student.tensors.add("w", testutil::random_tensor({4, 4}, rng));
    const ModelParams next = ema_update(teacher, student, 0.7);
    for (std::size_t i = 0; i < 16; ++i) {
        const float lo = std::min(teacher.tensors.at("w").data[i], student.tensors.at("w").data[i]);
        const float hi = std::max(teacher.tensors.at("w").data[i], student.tensors.at("w").data[i]);
        const float v = next.tensors.at("w").data[i];
        CHECK(v >= lo - 1e-7f);
        CHECK(v <= hi + 1e-7f);
    }
}

TEST_CASE("mismatched parameter sets are rejected") {
    ModelParams teacher = scalar_model(1.0f);
    ModelParams student;
    student.tensors.add("other", Tensor({1}, {0.0f}));
    CHECK_THROWS_AS(ema_update(teacher, student, 0.5), ShapeError);

    ModelParams wrong_shape;
    wrong_shape.tensors.add("w", Tensor::zeros({2}));
    CHECK_THROWS_AS(ema_update(teacher, wrong_shape, 0.5), ShapeError);
}

TEST_CASE("gates follow the warm-up boundary inclusively") {
    TeacherConfig cfg;
    cfg.warmup_epochs = 20;

    const Gates before = gates(0, cfg);
    CHECK_FALSE(before.update_teacher);
    CHECK_FALSE(before.apply_src);

    const Gates at = gates(20, cfg);
    CHECK(at.update_teacher);
    CHECK(at.apply_src);

    const Gates later = gates(21, cfg);
    CHECK(later.update_teacher);
    CHECK(later.apply_src);
}

TEST_CASE("zero warm-up keeps the gates open from epoch zero") {
    TeacherConfig cfg;
    cfg.warmup_epochs = 0;
    for (std::size_t epoch : {0u, 1u, 5u, 100u}) {
        const Gates g = gates(epoch, cfg);
        CHECK(g.update_teacher);
        CHECK(g.apply_src);
    }
}

TEST_CASE("invalid alpha is rejected") {
    TeacherConfig cfg;
    cfg.alpha = 1.5;
    CHECK_THROWS_AS(gates(0, cfg), ConfigError);
    CHECK_THROWS_AS(ema_update(scalar_model(1), scalar_model(0), -0.1), ConfigError);
}

TEST_SUITE_END();
