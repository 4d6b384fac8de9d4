#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "srcl/core.hpp"
#include "srcl/random.hpp"
#include "srcl/tensor.hpp"

namespace srcl {

struct LabeledImage {
    std::string id;
    Tensor pixels;          // C x H x W, values in [0, 1]
    int label = kUnlabeled; // class id, or kUnlabeled
};

struct Dataset {
    std::vector<LabeledImage> images;
    std::vector<std::string> class_names;

    std::size_t size() const { return images.size(); }
    std::size_t num_classes() const { return class_names.size(); }
};

struct AugmentConfig {
    // Random area crop, as a fraction of the original area.
    double crop_min = 0.6;
    double crop_max = 1.0;
    // Jitter strengths; each factor is drawn uniformly from 1 +- strength.
    double brightness = 0.4;
    double contrast = 0.4;
    double saturation = 0.4;
    double grayscale_prob = 0.2;
    // Per-channel normalization applied last.
    std::array<double, 3> norm_mean = {0.485, 0.456, 0.406};
    std::array<double, 3> norm_std = {0.229, 0.224, 0.225};

    void validate() const;
};

struct Batch {
    Tensor images;                           // N x C x H x W, raw [0,1] pixels
    std::vector<int> labels;                 // size N, kUnlabeled where hidden
    std::vector<std::uint8_t> labeled_mask;  // 1 where the label is visible
    std::vector<std::size_t> indices;        // positions in the source dataset

    std::size_t size() const { return labels.size(); }
};

// ---------------------------------------------------------------------------
// PPM / dataset ingestion
// ---------------------------------------------------------------------------

/// Binary P6, 8-bit RGB. Values scaled to [0, 1].
Tensor read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Tensor& image);

/// Loads images listed in a CSV with header "image,label". Labels must be
/// members of `class_names`. Errors carry the offending line number.
Dataset load_dataset(const std::string& image_dir, const std::string& labels_csv,
                     const std::vector<std::string>& class_names);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

/// Deterministic synthetic dataset: each class is a (color, blob shape)
/// family drawn over a noisy background. Class counts follow a geometric
/// profile: count(c) proportional to imbalance_ratio^c.
Dataset generate_synthetic(std::size_t num_images, std::size_t num_classes,
                           std::size_t image_size, double imbalance_ratio, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Splitting / masking / batching
// ---------------------------------------------------------------------------

struct SplitFractions {
    double train = 0.7;
    double val = 0.1;
    double test = 0.2;
};

struct Splits {
    Dataset train;
    Dataset val;
    Dataset test;
};

/// Stratified by class, disjoint, deterministic per seed. Fractions must sum
/// to 1 within 1e-6.
Splits split(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed);

/// Keeps ceil(fraction * n_c) labels per class, stratified; the rest become
/// kUnlabeled. Pixels and ids are untouched.
Dataset mask_labels(const Dataset& train, double labeled_fraction, std::uint64_t seed);

/// Epoch-wise shuffle keyed by (seed, epoch); the last short batch is
/// dropped.
std::vector<Batch> make_batches(const Dataset& dataset, std::size_t batch_size, std::size_t epoch,
                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

/// Random area crop (resized back with nearest neighbor), brightness /
/// contrast / saturation jitter, probabilistic grayscale, then per-channel
/// normalization. Deterministic per stream state.
Tensor augment_view(const Tensor& image, const AugmentConfig& config, RandomStream& stream);

/// Per-channel normalization only; the deterministic path used for teacher
/// inputs and evaluation.
Tensor normalize_only(const Tensor& image, const AugmentConfig& config);

/// Two independent augmentations per original; rows (2k, 2k+1) come from
/// original k. Sample k's view v uses stream.fork(2k + v), so views are
/// independent of one another and of batch traversal order.
Tensor make_contrastive_views(const Batch& batch, const AugmentConfig& config,
                              const RandomStream& stream);

/// One augmented view per original, drawn exactly like view 0 of
/// make_contrastive_views.
Tensor augment_batch(const Batch& batch, const AugmentConfig& config, const RandomStream& stream);

/// All images of a dataset, normalized, as one N x C x H x W tensor.
Tensor normalized_images(const Dataset& dataset, const AugmentConfig& config);

std::vector<int> dataset_labels(const Dataset& dataset);
std::size_t count_labeled(const Dataset& dataset);

} // namespace srcl
