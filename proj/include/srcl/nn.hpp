#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "srcl/tensor.hpp"

namespace srcl {

struct ConvBlockSpec {
    std::size_t out_channels = 0;
    std::size_t kernel_size = 3;
    std::size_t stride = 2;
};

struct FeatureShape {
    std::size_t channels = 0;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t flat() const { return channels * height * width; }
};

/// Small convolutional encoder: a stack of valid-padding conv blocks with
/// ReLU, producing the flattened activation map each loss consumes.
struct EncoderConfig {
    std::size_t input_size = 32;
    std::size_t input_channels = 3;
    std::vector<ConvBlockSpec> conv_blocks = {{8, 3, 2}, {16, 3, 2}, {32, 3, 2}};

    /// Shape after the final block. Throws ConfigError when any block
    /// collapses the map below 1x1.
    FeatureShape activation_shape() const;
    std::size_t activation_map_channels() const;
};

struct ArchConfig {
    EncoderConfig encoder;
    std::vector<std::size_t> projection_sizes = {100, 50, 25};
    std::size_t num_classes = 2;
};

/// Insertion-ordered name -> tensor map. Order is the checkpoint order.
struct NamedTensors {
    std::vector<std::string> names;
    std::vector<Tensor> values;

    void add(std::string name, Tensor value);
    bool has(std::string_view name) const;
    Tensor& at(std::string_view name);
    const Tensor& at(std::string_view name) const;
    std::size_t count() const { return names.size(); }
};

bool bit_equal(const NamedTensors& a, const NamedTensors& b);

struct ModelParams {
    ArchConfig arch;
    NamedTensors tensors;
};

/// He-initialized weights, zero biases, deterministic per seed.
ModelParams init_params(const ArchConfig& arch, std::uint64_t seed);
ModelParams init_params(const EncoderConfig& encoder, std::size_t num_classes, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Forward passes and traces
// ---------------------------------------------------------------------------

struct EncoderTrace {
    Tensor input;                    // N x C x H x W
    std::vector<Tensor> preact;      // conv outputs before ReLU, per block
    std::vector<Tensor> postact;     // after ReLU, per block
};

struct ProjectionTrace {
    Tensor input;                    // N x D activation
    std::vector<Tensor> preact;      // per fc layer, before ReLU / normalization
    std::vector<Tensor> hidden;      // post-ReLU inputs of fc layers 1..
    Tensor prenorm;                  // final fc output before row normalization
};

struct ClassifierTrace {
    Tensor input;                    // N x D activation
    Tensor pooled;                   // N x C' global average pool
    Tensor logits;                   // N x K
    Tensor probabilities;            // N x K
};

struct ForwardTrace {
    EncoderTrace encoder;
    std::optional<ProjectionTrace> projection;
    std::optional<ClassifierTrace> classifier;
};

/// Flattened activation map, rows are per-sample features of size
/// channels * height * width. Pass a trace to enable the backward pass.
Tensor encoder_forward(const ModelParams& params, const Tensor& images,
                       EncoderTrace* trace = nullptr);

/// Three fully connected layers (ReLU after the first two), output rows
/// L2-normalized.
Tensor projection_forward(const ModelParams& params, const Tensor& activation,
                          ProjectionTrace* trace = nullptr);

/// Global average pool over the activation map, one FC layer, softmax rows.
Tensor classifier_forward(const ModelParams& params, const Tensor& activation,
                          ClassifierTrace* trace = nullptr);

// ---------------------------------------------------------------------------
// Backward pass
// ---------------------------------------------------------------------------

struct UpstreamGrads {
    std::optional<Tensor> d_embeddings;     // w.r.t. projection output
    std::optional<Tensor> d_probabilities;  // w.r.t. classifier softmax output
    std::optional<Tensor> d_logits;         // w.r.t. classifier logits
    std::optional<Tensor> d_activation;     // directly on the activation map
};

NamedTensors zero_grads(const ModelParams& params);

/// Accumulates parameter gradients for every head named in `upstream` into
/// `grads`. When `d_images` is non-null it also receives the gradient with
/// respect to the input batch.
void backward(const ModelParams& params, const ForwardTrace& trace, const UpstreamGrads& upstream,
              NamedTensors& grads, Tensor* d_images = nullptr);

// Per-head pieces. Each returns the gradient w.r.t. the activation map and,
// when `grads` is non-null, accumulates that head's parameter gradients.
Tensor projection_backward(const ModelParams& params, const ProjectionTrace& trace,
                           const Tensor& d_embeddings, NamedTensors* grads);
Tensor classifier_backward(const ModelParams& params, const ClassifierTrace& trace,
                           const Tensor& d_probabilities, NamedTensors* grads);
Tensor classifier_backward_from_logits(const ModelParams& params, const ClassifierTrace& trace,
                                       const Tensor& d_logits, NamedTensors* grads);
void encoder_backward(const ModelParams& params, const EncoderTrace& trace,
                      const Tensor& d_activation, NamedTensors* grads,
                      Tensor* d_images = nullptr);

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

enum class OptimAlgo { Adam, Sgd };

struct OptimizerConfig {
    OptimAlgo algo = OptimAlgo::Adam;
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct OptimizerState {
    OptimizerConfig config;
    std::uint64_t step_count = 0;
    // First and second moments, aligned with the parameter tensor order.
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;
};

OptimizerState make_optimizer(const OptimizerConfig& config, const ModelParams& params);
void optimizer_step(ModelParams& params, const NamedTensors& grads, OptimizerState& state);

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------
//
// Binary format, little-endian: magic "SRCL", u32 version (1), u32 tensor
// count, then per tensor: u32 name length, name bytes, u32 rank, u64 dims,
// f32 data. Round-trips bit-exactly.

void save_checkpoint(const ModelParams& params, const std::string& path);
NamedTensors load_checkpoint_tensors(const std::string& path);
ModelParams load_checkpoint(const std::string& path, const ArchConfig& arch);

} // namespace srcl
