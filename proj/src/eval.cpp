#include "srcl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "srcl/core.hpp"

namespace srcl {

void ScoredExamples::validate() const {
    if (scores.rank() != 2) throw ShapeError("scores must be [n x K], got " + scores.shape_str());
    if (labels.size() != scores.rows()) {
        throw ShapeError("label count " + std::to_string(labels.size()) +
                         " does not match score rows " + std::to_string(scores.rows()));
    }
    const std::size_t k = scores.cols();
    for (std::size_t r = 0; r < scores.rows(); ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < k; ++c) total += scores.at(r, c);
        if (std::abs(total - 1.0) > 1e-4) {
            throw ContractError("score row " + std::to_string(r) + " sums to " +
                                std::to_string(total) + ", expected 1");
        }
        if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= k) {
            throw ContractError("label " + std::to_string(labels[r]) + " out of range [0, " +
                                std::to_string(k) + ")");
        }
    }
}

double auroc_binary(const std::vector<double>& scores, const std::vector<bool>& positives) {
    if (scores.size() != positives.size()) {
        throw ShapeError("auroc_binary: scores and positives differ in length");
    }
    const std::size_t n = scores.size();
    std::size_t num_pos = 0;
    for (bool p : positives) num_pos += p ? 1 : 0;
    const std::size_t num_neg = n - num_pos;
    if (num_pos == 0 || num_neg == 0) {
        throw MetricError("auroc undefined: need at least one positive and one negative");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average rank within tie groups; rank sum of positives gives the
    // Mann-Whitney U.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = static_cast<double>(i + 1 + j) / 2.0; // ranks are 1-based
        for (std::size_t t = i; t < j; ++t) {
            if (positives[order[t]]) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    const double u = pos_rank_sum -
                     static_cast<double>(num_pos) * static_cast<double>(num_pos + 1) / 2.0;
    return u / (static_cast<double>(num_pos) * static_cast<double>(num_neg));
}

MetricsReport metrics_report(const ScoredExamples& examples) {
    examples.validate();
    const std::size_t n = examples.scores.rows();
    const std::size_t k = examples.scores.cols();
    if (n == 0) throw ShapeError("metrics_report: empty input");

    MetricsReport report;
    report.auroc.assign(k, std::nullopt);
    report.sensitivity.assign(k, std::nullopt);
    report.specificity.assign(k, std::nullopt);

    // Argmax predictions, ties to the lowest class index.
    std::vector<std::size_t> predicted(n, 0);
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c) {
            if (examples.scores.at(r, c) > examples.scores.at(r, best)) best = c;
        }
        predicted[r] = best;
    }

    std::size_t correct = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (predicted[r] == static_cast<std::size_t>(examples.labels[r])) ++correct;
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(n);

    std::vector<double> class_scores(n);
    std::vector<bool> class_positive(n);
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t tp = 0, fn = 0, fp = 0, tn = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const bool truth = static_cast<std::size_t>(examples.labels[r]) == c;
            const bool pred = predicted[r] == c;
            if (truth && pred) ++tp;
            if (truth && !pred) ++fn;
            if (!truth && pred) ++fp;
            if (!truth && !pred) ++tn;
            class_scores[r] = examples.scores.at(r, c);
            class_positive[r] = truth;
        }
        if (tp + fn > 0) {
            report.sensitivity[c] = static_cast<double>(tp) / static_cast<double>(tp + fn);
        }
        if (tn + fp > 0) {
            report.specificity[c] = static_cast<double>(tn) / static_cast<double>(tn + fp);
        }
        if (tp + fn > 0 && tn + fp > 0) {
            report.auroc[c] = auroc_binary(class_scores, class_positive);
        }
    }

    const auto macro = [](const std::vector<std::optional<double>>& values) {
        double total = 0.0;
        std::size_t count = 0;
        for (const auto& v : values) {
            if (v) {
                total += *v;
                ++count;
            }
        }
        return count ? std::optional<double>(total / static_cast<double>(count)) : std::nullopt;
    };
    report.macro_auroc = macro(report.auroc);
    report.macro_sensitivity = macro(report.sensitivity);
    report.macro_specificity = macro(report.specificity);
    return report;
}

Tensor saliency_map(const ModelParams& params, const Tensor& image) {
    const EncoderConfig& cfg = params.arch.encoder;
    if (image.rank() != 3 || image.dim(0) != cfg.input_channels ||
        image.dim(1) != cfg.input_size || image.dim(2) != cfg.input_size) {
        throw ShapeError("saliency_map expects a [" + std::to_string(cfg.input_channels) + " x " +
                         std::to_string(cfg.input_size) + " x " + std::to_string(cfg.input_size) +
                         "] image, got " + image.shape_str());
    }
    const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);

    Tensor batch = image;
    batch.shape = {1, channels, h, w};

    ForwardTrace trace;
    const Tensor activation = encoder_forward(params, batch, &trace.encoder);
    trace.classifier.emplace();
    classifier_forward(params, activation, &*trace.classifier);

    const Tensor& logits = trace.classifier->logits;
    std::size_t top = 0;
    for (std::size_t c = 1; c < logits.cols(); ++c) {
        if (logits.at(0, c) > logits.at(0, top)) top = c;
    }
    Tensor d_logits = Tensor::zeros(logits.shape);
    d_logits.at(0, top) = 1.0f;

    UpstreamGrads upstream;
    upstream.d_logits = std::move(d_logits);
    NamedTensors grads = zero_grads(params);
    Tensor d_image;
    backward(params, trace, upstream, grads, &d_image);

    Tensor map = Tensor::zeros({h, w});
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            double best = 0.0;
            for (std::size_t c = 0; c < channels; ++c) {
                best = std::max(best, std::abs(static_cast<double>(
                                          d_image.data[c * h * w + y * w + x])));
            }
            map.at(y, x) = static_cast<float>(best);
            lo = std::min(lo, best);
            hi = std::max(hi, best);
        }
    }
    if (hi > lo) {
        for (float& v : map.data) v = static_cast<float>((v - lo) / (hi - lo));
    } else {
        for (float& v : map.data) v = 0.0f;
    }
    return map;
}

void write_pgm(const std::string& path, const Tensor& map) {
    if (map.rank() != 2) throw ShapeError("write_pgm expects a [H x W] map, got " + map.shape_str());
    const std::size_t h = map.rows(), w = map.cols();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open PGM for writing: " + path);
    out << "P5\n" << w << " " << h << "\n255\n";
    std::vector<char> raw(h * w);
    for (std::size_t i = 0; i < h * w; ++i) {
        const double v = std::clamp(static_cast<double>(map.data[i]), 0.0, 1.0);
        raw[i] = static_cast<char>(std::lround(v * 255.0));
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("write failed for PGM: " + path);
}

} // namespace srcl
