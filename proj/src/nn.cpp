#include "srcl/nn.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "srcl/core.hpp"
#include "srcl/random.hpp"

namespace srcl {

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

FeatureShape EncoderConfig::activation_shape() const {
    if (input_size == 0 || input_channels == 0) {
        throw ConfigError("encoder input size and channels must be positive");
    }
    if (conv_blocks.empty()) throw ConfigError("encoder needs at least one conv block");
    std::size_t h = input_size, w = input_size, c = input_channels;
    for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
        const ConvBlockSpec& blk = conv_blocks[i];
        if (blk.out_channels == 0 || blk.kernel_size == 0 || blk.stride == 0) {
            throw ConfigError("conv block " + std::to_string(i) + " has a zero field");
        }
        if (h < blk.kernel_size || w < blk.kernel_size) {
            throw ConfigError("conv block " + std::to_string(i) + " kernel " +
                              std::to_string(blk.kernel_size) + " exceeds map size " +
                              std::to_string(h) + "x" + std::to_string(w));
        }
        h = (h - blk.kernel_size) / blk.stride + 1;
        w = (w - blk.kernel_size) / blk.stride + 1;
        c = blk.out_channels;
    }
    if (h == 0 || w == 0) throw ConfigError("encoder produces an empty activation map");
    return {c, h, w};
}

std::size_t EncoderConfig::activation_map_channels() const { return activation_shape().channels; }

// ---------------------------------------------------------------------------
// NamedTensors
// ---------------------------------------------------------------------------

void NamedTensors::add(std::string name, Tensor value) {
    if (has(name)) throw Error("duplicate tensor name: " + name);
    names.push_back(std::move(name));
    values.push_back(std::move(value));
}

bool NamedTensors::has(std::string_view name) const {
    for (const auto& n : names) {
        if (n == name) return true;
    }
    return false;
}

Tensor& NamedTensors::at(std::string_view name) {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return values[i];
    }
    throw Error("no tensor named '" + std::string(name) + "'");
}

const Tensor& NamedTensors::at(std::string_view name) const {
    return const_cast<NamedTensors*>(this)->at(name);
}

bool bit_equal(const NamedTensors& a, const NamedTensors& b) {
    if (a.names != b.names) return false;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        if (!bit_equal(a.values[i], b.values[i])) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

namespace {

Tensor he_weights(std::vector<std::size_t> shape, std::size_t fan_in, RandomStream stream) {
    Tensor t = Tensor::zeros(std::move(shape));
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (float& v : t.data) v = static_cast<float>(stream.normal() * stddev);
    return t;
}

std::string conv_name(std::size_t i, const char* part) {
    return "encoder.conv" + std::to_string(i) + "." + part;
}

std::string fc_name(std::size_t i, const char* part) {
    return "projection.fc" + std::to_string(i) + "." + part;
}

} // namespace

ModelParams init_params(const ArchConfig& arch, std::uint64_t seed) {
    const FeatureShape feat = arch.encoder.activation_shape(); // validates the config
    if (arch.num_classes < 2) throw ConfigError("num_classes must be at least 2");
    if (arch.projection_sizes.empty()) throw ConfigError("projection head needs at least one layer");

    ModelParams params;
    params.arch = arch;
    RandomStream init_root = RandomStream(seed).fork("init");

    std::size_t in_c = arch.encoder.input_channels;
    for (std::size_t i = 0; i < arch.encoder.conv_blocks.size(); ++i) {
        const ConvBlockSpec& blk = arch.encoder.conv_blocks[i];
        const std::size_t k = blk.kernel_size;
        const std::string wname = conv_name(i, "weight");
        params.tensors.add(wname, he_weights({blk.out_channels, in_c, k, k}, in_c * k * k,
                                             init_root.fork(wname)));
        params.tensors.add(conv_name(i, "bias"), Tensor::zeros({blk.out_channels}));
        in_c = blk.out_channels;
    }

    std::size_t in_d = feat.flat();
    for (std::size_t i = 0; i < arch.projection_sizes.size(); ++i) {
        const std::size_t out_d = arch.projection_sizes[i];
        if (out_d == 0) throw ConfigError("projection layer width must be positive");
        const std::string wname = fc_name(i, "weight");
        params.tensors.add(wname, he_weights({in_d, out_d}, in_d, init_root.fork(wname)));
        params.tensors.add(fc_name(i, "bias"), Tensor::zeros({out_d}));
        in_d = out_d;
    }

    params.tensors.add("classifier.weight", he_weights({feat.channels, arch.num_classes},
                                                       feat.channels,
                                                       init_root.fork("classifier.weight")));
    params.tensors.add("classifier.bias", Tensor::zeros({arch.num_classes}));
    return params;
}

ModelParams init_params(const EncoderConfig& encoder, std::size_t num_classes,
                        std::uint64_t seed) {
    ArchConfig arch;
    arch.encoder = encoder;
    arch.num_classes = num_classes;
    return init_params(arch, seed);
}

// ---------------------------------------------------------------------------
// Layer primitives
// ---------------------------------------------------------------------------

namespace {

Tensor conv_forward(const Tensor& input, const Tensor& weight, const Tensor& bias,
                    std::size_t stride) {
    const std::size_t n = input.dim(0), ic = input.dim(1), ih = input.dim(2), iw = input.dim(3);
    const std::size_t oc = weight.dim(0), k = weight.dim(2);
    const std::size_t oh = (ih - k) / stride + 1;
    const std::size_t ow = (iw - k) / stride + 1;
    Tensor out = Tensor::zeros({n, oc, oh, ow});
    const std::size_t in_plane = ih * iw;
    const std::size_t out_plane = oh * ow;
    for (std::size_t b = 0; b < n; ++b) {
        const float* in_b = input.data.data() + b * ic * in_plane;
        float* out_b = out.data.data() + b * oc * out_plane;
        for (std::size_t o = 0; o < oc; ++o) {
            const float* w_o = weight.data.data() + o * ic * k * k;
            const double bias_o = bias.data[o];
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    double acc = bias_o;
                    for (std::size_t c = 0; c < ic; ++c) {
                        const float* in_c = in_b + c * in_plane + y * stride * iw + x * stride;
                        const float* w_c = w_o + c * k * k;
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            const float* in_row = in_c + ky * iw;
                            const float* w_row = w_c + ky * k;
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                acc += static_cast<double>(in_row[kx]) * w_row[kx];
                            }
                        }
                    }
                    out_b[o * out_plane + y * ow + x] = static_cast<float>(acc);
                }
            }
        }
    }
    return out;
}

void conv_backward(const Tensor& input, const Tensor& weight, std::size_t stride,
                   const Tensor& d_out, Tensor* d_weight, Tensor* d_bias, Tensor* d_input) {
    const std::size_t n = input.dim(0), ic = input.dim(1), ih = input.dim(2), iw = input.dim(3);
    const std::size_t oc = weight.dim(0), k = weight.dim(2);
    const std::size_t oh = d_out.dim(2), ow = d_out.dim(3);
    const std::size_t in_plane = ih * iw;
    const std::size_t out_plane = oh * ow;

    std::vector<double> dw_acc, db_acc;
    if (d_weight) dw_acc.assign(weight.size(), 0.0);
    if (d_bias) db_acc.assign(oc, 0.0);
    if (d_input) *d_input = Tensor::zeros(input.shape);

    for (std::size_t b = 0; b < n; ++b) {
        const float* in_b = input.data.data() + b * ic * in_plane;
        const float* dout_b = d_out.data.data() + b * oc * out_plane;
        float* din_b = d_input ? d_input->data.data() + b * ic * in_plane : nullptr;
        for (std::size_t o = 0; o < oc; ++o) {
            const float* w_o = weight.data.data() + o * ic * k * k;
            double* dw_o = d_weight ? dw_acc.data() + o * ic * k * k : nullptr;
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    const double g = dout_b[o * out_plane + y * ow + x];
                    if (d_bias) db_acc[o] += g;
                    if (g == 0.0 && !d_input) continue;
                    for (std::size_t c = 0; c < ic; ++c) {
                        const float* in_c = in_b + c * in_plane + y * stride * iw + x * stride;
                        const float* w_c = w_o + c * k * k;
                        float* din_c = din_b ? din_b + c * in_plane + y * stride * iw + x * stride
                                             : nullptr;
                        for (std::size_t ky = 0; ky < k; ++ky) {
                            for (std::size_t kx = 0; kx < k; ++kx) {
                                if (dw_o) dw_o[c * k * k + ky * k + kx] += g * in_c[ky * iw + kx];
                                if (din_c) {
                                    din_c[ky * iw + kx] = static_cast<float>(
                                        din_c[ky * iw + kx] + g * w_c[ky * k + kx]);
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if (d_weight) {
        *d_weight = Tensor::zeros(weight.shape);
        for (std::size_t i = 0; i < dw_acc.size(); ++i) {
            d_weight->data[i] = static_cast<float>(dw_acc[i]);
        }
    }
    if (d_bias) {
        *d_bias = Tensor::zeros({oc});
        for (std::size_t i = 0; i < oc; ++i) d_bias->data[i] = static_cast<float>(db_acc[i]);
    }
}

Tensor relu(const Tensor& x) {
    Tensor out = x;
    for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
    return out;
}

Tensor relu_backward(const Tensor& preact, const Tensor& d_out) {
    Tensor d_in = d_out;
    for (std::size_t i = 0; i < d_in.size(); ++i) {
        if (preact.data[i] <= 0.0f) d_in.data[i] = 0.0f;
    }
    return d_in;
}

Tensor fc_forward(const Tensor& x, const Tensor& weight, const Tensor& bias) {
    const std::size_t n = x.rows(), in_d = x.cols(), out_d = weight.dim(1);
    Tensor out = Tensor::zeros({n, out_d});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t j = 0; j < out_d; ++j) {
            double acc = bias.data[j];
            for (std::size_t i = 0; i < in_d; ++i) {
                acc += static_cast<double>(x.at(b, i)) * weight.at(i, j);
            }
            out.at(b, j) = static_cast<float>(acc);
        }
    }
    return out;
}

void fc_backward(const Tensor& x, const Tensor& weight, const Tensor& d_out, Tensor* d_weight,
                 Tensor* d_bias, Tensor* d_input) {
    const std::size_t n = x.rows(), in_d = x.cols(), out_d = weight.dim(1);
    std::vector<double> dw_acc, db_acc;
    if (d_weight) dw_acc.assign(in_d * out_d, 0.0);
    if (d_bias) db_acc.assign(out_d, 0.0);
    if (d_input) *d_input = Tensor::zeros(x.shape);

    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t j = 0; j < out_d; ++j) {
            const double g = d_out.at(b, j);
            if (d_bias) db_acc[j] += g;
            if (g == 0.0) continue;
            for (std::size_t i = 0; i < in_d; ++i) {
                if (d_weight) dw_acc[i * out_d + j] += g * x.at(b, i);
            }
        }
        if (d_input) {
            for (std::size_t i = 0; i < in_d; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < out_d; ++j) {
                    acc += static_cast<double>(d_out.at(b, j)) * weight.at(i, j);
                }
                d_input->at(b, i) = static_cast<float>(acc);
            }
        }
    }

    if (d_weight) {
        *d_weight = Tensor::zeros(weight.shape);
        for (std::size_t i = 0; i < dw_acc.size(); ++i) {
            d_weight->data[i] = static_cast<float>(dw_acc[i]);
        }
    }
    if (d_bias) {
        *d_bias = Tensor::zeros({out_d});
        for (std::size_t j = 0; j < out_d; ++j) d_bias->data[j] = static_cast<float>(db_acc[j]);
    }
}

} // namespace

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

Tensor encoder_forward(const ModelParams& params, const Tensor& images, EncoderTrace* trace) {
    const EncoderConfig& cfg = params.arch.encoder;
    if (images.rank() != 4 || images.dim(1) != cfg.input_channels ||
        images.dim(2) != cfg.input_size || images.dim(3) != cfg.input_size) {
        throw ShapeError("encoder expects [N x " + std::to_string(cfg.input_channels) + " x " +
                         std::to_string(cfg.input_size) + " x " + std::to_string(cfg.input_size) +
                         "] images, got " + images.shape_str());
    }
    const std::size_t n = images.dim(0);

    if (trace) {
        trace->input = images;
        trace->preact.clear();
        trace->postact.clear();
    }

    Tensor current = images;
    for (std::size_t i = 0; i < cfg.conv_blocks.size(); ++i) {
        Tensor pre = conv_forward(current, params.tensors.at(conv_name(i, "weight")),
                                  params.tensors.at(conv_name(i, "bias")),
                                  cfg.conv_blocks[i].stride);
        Tensor post = relu(pre);
        if (trace) {
            trace->preact.push_back(std::move(pre));
            trace->postact.push_back(post);
        }
        current = std::move(post);
    }

    const FeatureShape feat = cfg.activation_shape();
    Tensor flat = std::move(current);
    flat.shape = {n, feat.flat()};
    return flat;
}

void encoder_backward(const ModelParams& params, const EncoderTrace& trace,
                      const Tensor& d_activation, NamedTensors* grads, Tensor* d_images) {
    const EncoderConfig& cfg = params.arch.encoder;
    const std::size_t n = trace.input.dim(0);
    const FeatureShape feat = cfg.activation_shape();
    if (d_activation.rank() != 2 || d_activation.rows() != n ||
        d_activation.cols() != feat.flat()) {
        throw ShapeError("encoder_backward: activation gradient " + d_activation.shape_str() +
                         " does not match trace");
    }
    if (trace.preact.size() != cfg.conv_blocks.size()) {
        throw ShapeError("encoder_backward: trace does not match the encoder config");
    }

    Tensor d_current = d_activation;
    d_current.shape = {n, feat.channels, feat.height, feat.width};

    for (std::size_t i = cfg.conv_blocks.size(); i-- > 0;) {
        d_current = relu_backward(trace.preact[i], d_current);
        const Tensor& block_input = (i == 0) ? trace.input : trace.postact[i - 1];
        const bool want_input = (i > 0) || (d_images != nullptr);
        Tensor dw, db, din;
        conv_backward(block_input, params.tensors.at(conv_name(i, "weight")),
                      cfg.conv_blocks[i].stride, d_current, grads ? &dw : nullptr,
                      grads ? &db : nullptr, want_input ? &din : nullptr);
        if (grads) {
            add_in_place(grads->at(conv_name(i, "weight")), dw);
            add_in_place(grads->at(conv_name(i, "bias")), db);
        }
        if (want_input) d_current = std::move(din);
    }
    if (d_images) *d_images = std::move(d_current);
}

// ---------------------------------------------------------------------------
// Projection head
// ---------------------------------------------------------------------------

Tensor projection_forward(const ModelParams& params, const Tensor& activation,
                          ProjectionTrace* trace) {
    const std::size_t layers = params.arch.projection_sizes.size();
    const Tensor& w0 = params.tensors.at(fc_name(0, "weight"));
    if (activation.rank() != 2 || activation.cols() != w0.dim(0)) {
        throw ShapeError("projection expects [N x " + std::to_string(w0.dim(0)) +
                         "] activations, got " + activation.shape_str());
    }
    if (trace) {
        trace->input = activation;
        trace->preact.clear();
        trace->hidden.clear();
    }

    Tensor current = activation;
    for (std::size_t i = 0; i < layers; ++i) {
        Tensor pre = fc_forward(current, params.tensors.at(fc_name(i, "weight")),
                                params.tensors.at(fc_name(i, "bias")));
        if (trace) trace->preact.push_back(pre);
        if (i + 1 < layers) {
            current = relu(pre);
            if (trace) trace->hidden.push_back(current);
        } else {
            current = std::move(pre);
        }
    }
    if (trace) trace->prenorm = current;
    return l2_normalize_rows(current);
}

Tensor projection_backward(const ModelParams& params, const ProjectionTrace& trace,
                           const Tensor& d_embeddings, NamedTensors* grads) {
    const std::size_t layers = params.arch.projection_sizes.size();
    require_same_shape(d_embeddings, trace.prenorm, "projection_backward");

    // Through the row normalization y = v / |v|.
    const Tensor& prenorm = trace.prenorm;
    Tensor d_current = Tensor::zeros(prenorm.shape);
    for (std::size_t r = 0; r < prenorm.rows(); ++r) {
        const double norm = row_norm(prenorm, r);
        if (norm < 1e-12) {
            for (std::size_t j = 0; j < prenorm.cols(); ++j) {
                d_current.at(r, j) = d_embeddings.at(r, j);
            }
            continue;
        }
        double dot = 0.0;
        for (std::size_t j = 0; j < prenorm.cols(); ++j) {
            dot += static_cast<double>(d_embeddings.at(r, j)) * (prenorm.at(r, j) / norm);
        }
        for (std::size_t j = 0; j < prenorm.cols(); ++j) {
            const double y = prenorm.at(r, j) / norm;
            d_current.at(r, j) = static_cast<float>((d_embeddings.at(r, j) - dot * y) / norm);
        }
    }

    for (std::size_t i = layers; i-- > 0;) {
        if (i + 1 < layers) d_current = relu_backward(trace.preact[i], d_current);
        const Tensor& layer_input = (i == 0) ? trace.input : trace.hidden[i - 1];
        Tensor dw, db, din;
        fc_backward(layer_input, params.tensors.at(fc_name(i, "weight")), d_current,
                    grads ? &dw : nullptr, grads ? &db : nullptr, &din);
        if (grads) {
            add_in_place(grads->at(fc_name(i, "weight")), dw);
            add_in_place(grads->at(fc_name(i, "bias")), db);
        }
        d_current = std::move(din);
    }
    return d_current;
}

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

namespace {

Tensor global_average_pool(const Tensor& activation, const FeatureShape& feat) {
    const std::size_t n = activation.rows();
    const std::size_t plane = feat.height * feat.width;
    Tensor pooled = Tensor::zeros({n, feat.channels});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < feat.channels; ++c) {
            double acc = 0.0;
            const float* src = activation.data.data() + b * feat.flat() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) acc += src[i];
            pooled.at(b, c) = static_cast<float>(acc / static_cast<double>(plane));
        }
    }
    return pooled;
}

Tensor global_average_pool_backward(const Tensor& d_pooled, const FeatureShape& feat) {
    const std::size_t n = d_pooled.rows();
    const std::size_t plane = feat.height * feat.width;
    Tensor d_activation = Tensor::zeros({n, feat.flat()});
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = 0; c < feat.channels; ++c) {
            const float g = static_cast<float>(static_cast<double>(d_pooled.at(b, c)) /
                                               static_cast<double>(plane));
            float* dst = d_activation.data.data() + b * feat.flat() + c * plane;
            for (std::size_t i = 0; i < plane; ++i) dst[i] = g;
        }
    }
    return d_activation;
}

Tensor softmax_backward(const Tensor& probabilities, const Tensor& d_probabilities) {
    Tensor d_logits = Tensor::zeros(probabilities.shape);
    for (std::size_t r = 0; r < probabilities.rows(); ++r) {
        double inner = 0.0;
        for (std::size_t j = 0; j < probabilities.cols(); ++j) {
            inner += static_cast<double>(d_probabilities.at(r, j)) * probabilities.at(r, j);
        }
        for (std::size_t j = 0; j < probabilities.cols(); ++j) {
            d_logits.at(r, j) = static_cast<float>(
                static_cast<double>(probabilities.at(r, j)) *
                (static_cast<double>(d_probabilities.at(r, j)) - inner));
        }
    }
    return d_logits;
}

} // namespace

Tensor classifier_forward(const ModelParams& params, const Tensor& activation,
                          ClassifierTrace* trace) {
    const FeatureShape feat = params.arch.encoder.activation_shape();
    if (activation.rank() != 2 || activation.cols() != feat.flat()) {
        throw ShapeError("classifier expects [N x " + std::to_string(feat.flat()) +
                         "] activations, got " + activation.shape_str());
    }
    Tensor pooled = global_average_pool(activation, feat);
    Tensor logits = fc_forward(pooled, params.tensors.at("classifier.weight"),
                               params.tensors.at("classifier.bias"));
    Tensor probs = softmax_rows(logits);
    if (trace) {
        trace->input = activation;
        trace->pooled = std::move(pooled);
        trace->logits = std::move(logits);
        trace->probabilities = probs;
    }
    return probs;
}

Tensor classifier_backward_from_logits(const ModelParams& params, const ClassifierTrace& trace,
                                       const Tensor& d_logits, NamedTensors* grads) {
    Tensor dw, db, d_pooled;
    fc_backward(trace.pooled, params.tensors.at("classifier.weight"), d_logits,
                grads ? &dw : nullptr, grads ? &db : nullptr, &d_pooled);
    if (grads) {
        add_in_place(grads->at("classifier.weight"), dw);
        add_in_place(grads->at("classifier.bias"), db);
    }
    return global_average_pool_backward(d_pooled, params.arch.encoder.activation_shape());
}

Tensor classifier_backward(const ModelParams& params, const ClassifierTrace& trace,
                           const Tensor& d_probabilities, NamedTensors* grads) {
    Tensor d_logits = softmax_backward(trace.probabilities, d_probabilities);
    return classifier_backward_from_logits(params, trace, d_logits, grads);
}

// ---------------------------------------------------------------------------
// Combined backward
// ---------------------------------------------------------------------------

NamedTensors zero_grads(const ModelParams& params) {
    NamedTensors grads;
    for (std::size_t i = 0; i < params.tensors.count(); ++i) {
        grads.add(params.tensors.names[i], Tensor::zeros(params.tensors.values[i].shape));
    }
    return grads;
}

void backward(const ModelParams& params, const ForwardTrace& trace, const UpstreamGrads& upstream,
              NamedTensors& grads, Tensor* d_images) {
    const FeatureShape feat = params.arch.encoder.activation_shape();
    const std::size_t n = trace.encoder.input.dim(0);
    Tensor d_activation = Tensor::zeros({n, feat.flat()});
    bool any = false;

    if (upstream.d_activation) {
        require_same_shape(*upstream.d_activation, d_activation, "backward: d_activation");
        add_in_place(d_activation, *upstream.d_activation);
        any = true;
    }
    if (upstream.d_embeddings) {
        if (!trace.projection) throw Error("backward: embedding gradient without projection trace");
        add_in_place(d_activation, projection_backward(params, *trace.projection,
                                                       *upstream.d_embeddings, &grads));
        any = true;
    }
    if (upstream.d_probabilities) {
        if (!trace.classifier) throw Error("backward: probability gradient without classifier trace");
        add_in_place(d_activation, classifier_backward(params, *trace.classifier,
                                                       *upstream.d_probabilities, &grads));
        any = true;
    }
    if (upstream.d_logits) {
        if (!trace.classifier) throw Error("backward: logit gradient without classifier trace");
        add_in_place(d_activation, classifier_backward_from_logits(params, *trace.classifier,
                                                                   *upstream.d_logits, &grads));
        any = true;
    }
    if (!any) return;
    encoder_backward(params, trace.encoder, d_activation, &grads, d_images);
}

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

OptimizerState make_optimizer(const OptimizerConfig& config, const ModelParams& params) {
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
        throw ConfigError("Adam betas must lie in [0, 1)");
    }
    OptimizerState state;
    state.config = config;
    if (config.algo == OptimAlgo::Adam) {
        for (const Tensor& t : params.tensors.values) {
            state.m.emplace_back(t.size(), 0.0);
            state.v.emplace_back(t.size(), 0.0);
        }
    }
    return state;
}

void optimizer_step(ModelParams& params, const NamedTensors& grads, OptimizerState& state) {
    if (grads.names != params.tensors.names) {
        throw ShapeError("optimizer_step: gradient names do not match parameters");
    }
    const OptimizerConfig& cfg = state.config;
    ++state.step_count;

    if (cfg.algo == OptimAlgo::Sgd) {
        for (std::size_t t = 0; t < params.tensors.count(); ++t) {
            Tensor& p = params.tensors.values[t];
            const Tensor& g = grads.values[t];
            require_same_shape(p, g, "optimizer_step");
            for (std::size_t i = 0; i < p.size(); ++i) {
                p.data[i] = static_cast<float>(p.data[i] - cfg.learning_rate * g.data[i]);
            }
        }
        return;
    }

    if (state.m.size() != params.tensors.count()) {
        throw ShapeError("optimizer_step: state does not match parameters");
    }
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_count));
    for (std::size_t t = 0; t < params.tensors.count(); ++t) {
        Tensor& p = params.tensors.values[t];
        const Tensor& g = grads.values[t];
        require_same_shape(p, g, "optimizer_step");
        std::vector<double>& m = state.m[t];
        std::vector<double>& v = state.v[t];
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double gi = g.data[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
            const double update = cfg.learning_rate * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg.epsilon);
            p.data[i] = static_cast<float>(p.data[i] - update);
        }
    }
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'S', 'R', 'C', 'L'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

class Reader {
public:
    Reader(const std::string& bytes, const std::string& path) : bytes_(bytes), path_(path) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    float f32() { return std::bit_cast<float>(u32()); }

    std::string str(std::size_t len) {
        need(len);
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    bool exhausted() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) {
        if (pos_ + n > bytes_.size()) {
            throw CheckpointError(CheckpointError::Kind::Truncated,
                                  "checkpoint truncated: " + path_);
        }
    }

    const std::string& bytes_;
    std::string path_;
    std::size_t pos_ = 0;
};

} // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(params.tensors.count()));
    for (std::size_t t = 0; t < params.tensors.count(); ++t) {
        const std::string& name = params.tensors.names[t];
        const Tensor& tensor = params.tensors.values[t];
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(tensor.rank()));
        for (std::size_t d : tensor.shape) put_u64(out, static_cast<std::uint64_t>(d));
        for (float f : tensor.data) put_f32(out, f);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot open checkpoint for writing: " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw IoError("write failed for checkpoint: " + path);
}

NamedTensors load_checkpoint_tensors(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw IoError("cannot open checkpoint: " + path);
    std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());

    Reader r(bytes, path);
    const std::string magic = r.str(4);
    if (std::memcmp(magic.data(), kMagic, 4) != 0) {
        throw CheckpointError(CheckpointError::Kind::BadMagic,
                              "bad checkpoint magic in " + path);
    }
    const std::uint32_t version = r.u32();
    if (version != kVersion) {
        throw CheckpointError(CheckpointError::Kind::BadVersion,
                              "unsupported checkpoint version " + std::to_string(version) +
                                  " in " + path);
    }
    const std::uint32_t count = r.u32();
    NamedTensors tensors;
    for (std::uint32_t t = 0; t < count; ++t) {
        const std::uint32_t name_len = r.u32();
        const std::string name = r.str(name_len);
        const std::uint32_t rank = r.u32();
        std::vector<std::size_t> shape;
        std::size_t total = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            const std::uint64_t dim = r.u64();
            shape.push_back(static_cast<std::size_t>(dim));
            total *= static_cast<std::size_t>(dim);
        }
        std::vector<float> data(total);
        for (std::size_t i = 0; i < total; ++i) data[i] = r.f32();
        tensors.add(name, Tensor(std::move(shape), std::move(data)));
    }
    if (!r.exhausted()) {
        throw CheckpointError(CheckpointError::Kind::TrailingData,
                              "trailing bytes after checkpoint data in " + path);
    }
    return tensors;
}

ModelParams load_checkpoint(const std::string& path, const ArchConfig& arch) {
    NamedTensors tensors = load_checkpoint_tensors(path);
    const ModelParams reference = init_params(arch, 0);
    if (tensors.names != reference.tensors.names) {
        throw IoError("checkpoint " + path + " does not match the configured architecture");
    }
    for (std::size_t t = 0; t < tensors.count(); ++t) {
        if (!tensors.values[t].same_shape(reference.tensors.values[t])) {
            throw IoError("checkpoint tensor '" + tensors.names[t] + "' has shape " +
                          tensors.values[t].shape_str() + ", expected " +
                          reference.tensors.values[t].shape_str());
        }
    }
    ModelParams params;
    params.arch = arch;
    params.tensors = std::move(tensors);
    return params;
}

} // namespace srcl
