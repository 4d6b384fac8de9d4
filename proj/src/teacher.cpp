#include "srcl/teacher.hpp"

#include "srcl/core.hpp"

namespace srcl {

void TeacherConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("teacher alpha must lie in [0, 1]");
}

ModelParams ema_update(const ModelParams& teacher, const ModelParams& student, double alpha) {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("ema alpha must lie in [0, 1]");
    if (teacher.tensors.names != student.tensors.names) {
        throw ShapeError("ema_update: teacher and student parameter names differ");
    }
    ModelParams out = teacher;
    for (std::size_t t = 0; t < teacher.tensors.count(); ++t) {
        const Tensor& tt = teacher.tensors.values[t];
        const Tensor& st = student.tensors.values[t];
        require_same_shape(tt, st, "ema_update: " + teacher.tensors.names[t]);
        Tensor& ot = out.tensors.values[t];
        for (std::size_t i = 0; i < tt.size(); ++i) {
            ot.data[i] = static_cast<float>(alpha * static_cast<double>(tt.data[i]) +
                                            (1.0 - alpha) * static_cast<double>(st.data[i]));
        }
    }
    return out;
}

Gates gates(std::size_t epoch, const TeacherConfig& config) {
    config.validate();
    const bool open = epoch >= config.warmup_epochs;
    return Gates{open, open};
}

} // namespace srcl
