#pragma once

#include <optional>
#include <string>
#include <vector>

#include "srcl/nn.hpp"
#include "srcl/tensor.hpp"

namespace srcl {

struct ScoredExamples {
    Tensor scores;            // n x K class probabilities, rows sum to 1
    std::vector<int> labels;  // true class ids in [0, K)

    void validate() const;
};

struct MetricsReport {
    // Per-class values; nullopt where the metric is undefined on this data.
    std::vector<std::optional<double>> auroc;
    std::vector<std::optional<double>> sensitivity;
    std::vector<std::optional<double>> specificity;

    std::optional<double> macro_auroc;
    std::optional<double> macro_sensitivity;
    std::optional<double> macro_specificity;
    double accuracy = 0.0;
};

/// Probability that a random positive outranks a random negative, ties
/// counted one half (the Mann-Whitney statistic, computed from average
/// ranks). Throws MetricError when either class is empty.
double auroc_binary(const std::vector<double>& scores, const std::vector<bool>& positives);

/// One-vs-rest AUROC per class, macro AUROC over the defined classes,
/// argmax accuracy (ties resolved to the lowest class index), and per-class
/// sensitivity / specificity with macro aggregates.
MetricsReport metrics_report(const ScoredExamples& examples);

/// Gradient of the maximum class logit with respect to the input pixels:
/// channel-max of absolute values per pixel, min-max normalized to [0, 1].
/// An all-zero gradient stays all-zero. The image must already be normalized
/// for the model.
Tensor saliency_map(const ModelParams& params, const Tensor& image);

/// 8-bit binary PGM (P5), values round(255 * v).
void write_pgm(const std::string& path, const Tensor& map);

} // namespace srcl
