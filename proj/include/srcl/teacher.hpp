#pragma once

#include <cstddef>

#include "srcl/nn.hpp"

namespace srcl {

enum class EmaGranularity { PerEpoch, PerStep };

struct TeacherConfig {
    double alpha = 0.99;            // EMA decay
    std::size_t warmup_epochs = 20; // E_warm
    EmaGranularity granularity = EmaGranularity::PerEpoch;

    void validate() const;
};

/// teacher' = alpha * teacher + (1 - alpha) * student, element-wise over all
/// named tensors.
ModelParams ema_update(const ModelParams& teacher, const ModelParams& student, double alpha);

struct Gates {
    bool update_teacher = false;
    bool apply_src = false;
};

/// Both gates open once epoch >= warmup_epochs. At the first open epoch the
/// training loop initializes the teacher as a copy of the current student.
Gates gates(std::size_t epoch, const TeacherConfig& config);

} // namespace srcl
