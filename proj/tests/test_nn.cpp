#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "srcl/core.hpp"
#include "srcl/gradcheck.hpp"
#include "srcl/nn.hpp"
#include "srcl/random.hpp"
#include "testutil.hpp"

using namespace srcl;

namespace {

ArchConfig tiny_arch() {
    ArchConfig arch;
    arch.encoder.input_size = 7;
    arch.encoder.input_channels = 2;
    arch.encoder.conv_blocks = {{3, 3, 2}, {4, 3, 1}};
    arch.projection_sizes = {6, 5};
    arch.num_classes = 3;
    return arch;
}

void zero_all(ModelParams& params) {
    for (Tensor& t : params.tensors.values) {
        for (float& v : t.data) v = 0.0f;
    }
}

bool relu_margins_ok(const EncoderTrace& trace, double margin) {
    for (const Tensor& pre : trace.preact) {
        for (float v : pre.data) {
            if (std::abs(v) < margin) return false;
        }
    }
    return true;
}

} // namespace

TEST_SUITE_BEGIN("nn");

TEST_CASE("init_params is deterministic and zero-biased") {
    const ArchConfig arch = tiny_arch();
    const ModelParams a = init_params(arch, 42);
    const ModelParams b = init_params(arch, 42);
    CHECK(bit_equal(a.tensors, b.tensors));
    const ModelParams c = init_params(arch, 43);
    CHECK_FALSE(bit_equal(a.tensors, c.tensors));

    for (std::size_t i = 0; i < a.tensors.count(); ++i) {
        if (a.tensors.names[i].ends_with("bias")) {
            for (float v : a.tensors.values[i].data) CHECK(v == 0.0f);
        }
    }
}

TEST_CASE("weight variance tracks 2/fan_in") {
    ArchConfig arch;
    arch.encoder.input_size = 14;
    arch.encoder.input_channels = 3;
    arch.encoder.conv_blocks = {{8, 3, 2}};
    arch.projection_sizes = {100, 50};
    arch.num_classes = 2;
    const ModelParams params = init_params(arch, 7);

    // projection.fc0.weight is 288 x 100 = 28800 elements, fan_in 288.
    const Tensor& w = params.tensors.at("projection.fc0.weight");
    REQUIRE(w.size() >= 10000);
    double mean = 0.0;
    for (float v : w.data) mean += v;
    mean /= static_cast<double>(w.size());
    double var = 0.0;
    for (float v : w.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.size());
    const double expected = 2.0 / 288.0;
    CHECK(var > expected * 0.8);
    CHECK(var < expected * 1.2);
}

TEST_CASE("invalid encoder configs are rejected") {
    EncoderConfig cfg;
    cfg.input_size = 4;
    cfg.conv_blocks = {{8, 5, 2}}; // kernel larger than the map
    CHECK_THROWS_AS(cfg.activation_shape(), ConfigError);
}

TEST_CASE("zero weights give zero activations") {
    ModelParams params = init_params(tiny_arch(), 1);
    zero_all(params);
    RandomStream rng(2);
    const Tensor images = testutil::random_tensor({2, 2, 7, 7}, rng);
    const Tensor act = encoder_forward(params, images);
    for (float v : act.data) CHECK(v == 0.0f);
}

TEST_CASE("encoder rows are independent of the rest of the batch") {
    const ModelParams params = init_params(tiny_arch(), 5);
    RandomStream rng(8);
    const Tensor pair = testutil::random_tensor({2, 2, 7, 7}, rng);
    Tensor single = Tensor::zeros({1, 2, 7, 7});
    std::copy(pair.data.begin(), pair.data.begin() + static_cast<std::ptrdiff_t>(single.size()),
              single.data.begin());

    const Tensor act_pair = encoder_forward(params, pair);
    const Tensor act_single = encoder_forward(params, single);
    for (std::size_t j = 0; j < act_single.cols(); ++j) {
        CHECK(act_pair.at(0, j) == act_single.at(0, j));
    }
}

TEST_CASE("encoder matches the scalar convolution oracle") {
    ArchConfig arch;
    arch.encoder.input_size = 5;
    arch.encoder.input_channels = 2;
    arch.encoder.conv_blocks = {{3, 3, 1}};
    arch.projection_sizes = {4};
    arch.num_classes = 2;
    const ModelParams params = init_params(arch, 3);

    RandomStream rng(4);
    const Tensor image = testutil::random_tensor({1, 2, 5, 5}, rng);
    const Tensor act = encoder_forward(params, image);

    // Repack for the oracle.
    std::vector<oracle::Matrix> in(2, oracle::Matrix(5, std::vector<double>(5)));
    for (std::size_t c = 0; c < 2; ++c)
        for (std::size_t y = 0; y < 5; ++y)
            for (std::size_t x = 0; x < 5; ++x) in[c][y][x] = image.data[c * 25 + y * 5 + x];
    const Tensor& w = params.tensors.at("encoder.conv0.weight");
    std::vector<std::vector<oracle::Matrix>> weight(
        3, std::vector<oracle::Matrix>(2, oracle::Matrix(3, std::vector<double>(3))));
    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t c = 0; c < 2; ++c)
            for (std::size_t ky = 0; ky < 3; ++ky)
                for (std::size_t kx = 0; kx < 3; ++kx)
                    weight[o][c][ky][kx] = w.data[((o * 2 + c) * 3 + ky) * 3 + kx];
    const auto out = oracle::conv2d(in, weight, {0.0, 0.0, 0.0}, 1);

    for (std::size_t o = 0; o < 3; ++o)
        for (std::size_t y = 0; y < 3; ++y)
            for (std::size_t x = 0; x < 3; ++x) {
                const double expected = std::max(0.0, out[o][y][x]);
                CHECK(std::abs(act.at(0, (o * 3 + y) * 3 + x) - expected) < 1e-5);
            }
}

TEST_CASE("projection rows are unit length") {
    const ArchConfig arch = tiny_arch();
    const ModelParams params = init_params(arch, 11);
    RandomStream rng(12);
    const Tensor images = testutil::random_tensor({3, 2, 7, 7}, rng);
    const Tensor act = encoder_forward(params, images);
    const Tensor emb = projection_forward(params, act);
    for (std::size_t r = 0; r < emb.rows(); ++r) {
        CHECK(std::abs(row_norm(emb, r) - 1.0) < 1e-6);
    }
}

TEST_CASE("zero projection weights fall back to the zero-row rule") {
    ModelParams params = init_params(tiny_arch(), 11);
    zero_all(params);
    RandomStream rng(13);
    const Tensor act = testutil::random_tensor({2, 4}, rng);
    const Tensor emb = projection_forward(params, act);
    for (float v : emb.data) CHECK(v == 0.0f);
}

TEST_CASE("projection pre-normalization matches an FC oracle") {
    const ArchConfig arch = tiny_arch();
    const ModelParams params = init_params(arch, 21);
    RandomStream rng(22);
    const Tensor act = testutil::random_tensor({2, 4}, rng);
    ProjectionTrace trace;
    projection_forward(params, act, &trace);

    oracle::Matrix x = testutil::to_matrix(act);
    for (std::size_t layer = 0; layer < 2; ++layer) {
        const Tensor& w = params.tensors.at("projection.fc" + std::to_string(layer) + ".weight");
        const oracle::Matrix prod = oracle::matmul(x, testutil::to_matrix(w));
        oracle::Matrix next = prod;
        if (layer + 1 < 2) {
            for (auto& row : next)
                for (double& v : row) v = std::max(0.0, v);
        }
        x = next;
    }
    CHECK(trace.prenorm.rows() == 2);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < trace.prenorm.cols(); ++j)
            CHECK(std::abs(trace.prenorm.at(i, j) - x[i][j]) < 1e-5);
}

TEST_CASE("zero classifier weights give uniform rows") {
    ModelParams params = init_params(tiny_arch(), 31);
    zero_all(params);
    RandomStream rng(32);
    const Tensor act = testutil::random_tensor({4, 4}, rng);
    const Tensor probs = classifier_forward(params, act);
    for (float v : probs.data) CHECK(v == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("classifier rows sum to one and match the oracle") {
    const ArchConfig arch = tiny_arch();
    const ModelParams params = init_params(arch, 41);
    RandomStream rng(42);
    const Tensor images = testutil::random_tensor({2, 2, 7, 7}, rng);
    const Tensor act = encoder_forward(params, images);
    const Tensor probs = classifier_forward(params, act);

    const FeatureShape feat = arch.encoder.activation_shape();
    const Tensor& w = params.tensors.at("classifier.weight");
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        double total = 0.0;
        for (std::size_t c = 0; c < probs.cols(); ++c) total += probs.at(r, c);
        CHECK(std::abs(total - 1.0) < 1e-6);

        std::vector<double> logits(arch.num_classes, 0.0);
        for (std::size_t c = 0; c < feat.channels; ++c) {
            double pooled = 0.0;
            for (std::size_t i = 0; i < feat.height * feat.width; ++i) {
                pooled += act.at(r, c * feat.height * feat.width + i);
            }
            pooled /= static_cast<double>(feat.height * feat.width);
            for (std::size_t k = 0; k < arch.num_classes; ++k) logits[k] += pooled * w.at(c, k);
        }
        const auto expected = oracle::softmax_row(logits);
        for (std::size_t k = 0; k < arch.num_classes; ++k) {
            CHECK(std::abs(probs.at(r, k) - expected[k]) < 1e-5);
        }
    }
}

TEST_CASE("zero upstream gradients give zero parameter gradients") {
    const ArchConfig arch = tiny_arch();
    const ModelParams params = init_params(arch, 51);
    RandomStream rng(52);
    const Tensor images = testutil::random_tensor({2, 2, 7, 7}, rng);

    ForwardTrace trace;
    const Tensor act = encoder_forward(params, images, &trace.encoder);
    trace.projection.emplace();
    projection_forward(params, act, &*trace.projection);
    trace.classifier.emplace();
    classifier_forward(params, act, &*trace.classifier);

    UpstreamGrads upstream;
    upstream.d_embeddings = Tensor::zeros({2, 5});
    upstream.d_probabilities = Tensor::zeros({2, 3});
    upstream.d_activation = Tensor::zeros(act.shape);
    NamedTensors grads = zero_grads(params);
    backward(params, trace, upstream, grads);
    for (const Tensor& g : grads.values) {
        for (float v : g.data) CHECK(v == 0.0f);
    }
}

TEST_CASE("backward is linear in the upstream gradient") {
    const ArchConfig arch = tiny_arch();
    const ModelParams params = init_params(arch, 61);
    RandomStream rng(62);
    const Tensor images = testutil::random_tensor({2, 2, 7, 7}, rng);

    ForwardTrace trace;
    const Tensor act = encoder_forward(params, images, &trace.encoder);
    trace.projection.emplace();
    projection_forward(params, act, &*trace.projection);

    const Tensor upstream_small = testutil::random_tensor({2, 5}, rng);
    UpstreamGrads u1, u2;
    u1.d_embeddings = upstream_small;
    u2.d_embeddings = scale(upstream_small, 2.0);

    NamedTensors g1 = zero_grads(params), g2 = zero_grads(params);
    backward(params, trace, u1, g1);
    backward(params, trace, u2, g2);
    for (std::size_t t = 0; t < g1.count(); ++t) {
        CHECK(max_abs_diff(scale(g1.values[t], 2.0), g2.values[t]) < 1e-6);
    }
}

TEST_CASE("encoder gradient of sum(output) matches finite differences") {
    ArchConfig arch;
    arch.encoder.input_size = 3;
    arch.encoder.input_channels = 1;
    arch.encoder.conv_blocks = {{2, 3, 1}};
    arch.projection_sizes = {3};
    arch.num_classes = 2;

    // Pick a seed whose ReLU preactivations stay clear of the kink.
    std::uint64_t seed = 0;
    ModelParams params = init_params(arch, seed);
    RandomStream img_rng(70);
    Tensor image = testutil::random_tensor({1, 1, 3, 3}, img_rng, 0.2, 1.0);
    for (; seed < 50; ++seed) {
        params = init_params(arch, seed);
        EncoderTrace trace;
        encoder_forward(params, image, &trace);
        if (relu_margins_ok(trace, 0.05)) break;
    }
    REQUIRE(seed < 50);

    EncoderTrace trace;
    const Tensor act = encoder_forward(params, image, &trace);
    NamedTensors grads = zero_grads(params);
    encoder_backward(params, trace, Tensor::full(act.shape, 1.0f), &grads);

    GradCheckReport report;
    for (const std::string& name : {"encoder.conv0.weight", "encoder.conv0.bias"}) {
        const auto f = [&](const Tensor& t) {
            ModelParams probe = params;
            probe.tensors.at(name) = t;
            return sum(encoder_forward(probe, image));
        };
        const Tensor numeric = finite_difference_grad(f, params.tensors.at(name), 1e-3);
        report.record(name, relative_error(grads.at(name), numeric));
    }
    CHECK(report.max_relative_error <= 1e-3);
}

TEST_CASE("optimizer leaves parameters alone under zero gradients") {
    ModelParams params = init_params(tiny_arch(), 81);
    const ModelParams before = params;
    OptimizerState state = make_optimizer({}, params);
    const NamedTensors grads = zero_grads(params);
    optimizer_step(params, grads, state);
    optimizer_step(params, grads, state);
    CHECK(bit_equal(params.tensors, before.tensors));
}

TEST_CASE("a single Adam step moves against the gradient") {
    ModelParams params;
    params.tensors.add("w", Tensor({1}, {0.0f}));
    OptimizerState state = make_optimizer({}, params);
    NamedTensors grads;
    grads.add("w", Tensor({1}, {1.0f}));
    optimizer_step(params, grads, state);
    CHECK(params.tensors.at("w").data[0] < 0.0f);
}

TEST_CASE("Adam descends on w^2") {
    ModelParams params;
    params.tensors.add("w", Tensor({1}, {1.0f}));
    OptimizerConfig cfg;
    cfg.learning_rate = 0.1;
    OptimizerState state = make_optimizer(cfg, params);
    double prev = 1.0;
    for (int step = 0; step < 3; ++step) {
        const float w = params.tensors.at("w").data[0];
        NamedTensors grads;
        grads.add("w", Tensor({1}, {2.0f * w}));
        optimizer_step(params, grads, state);
        const double now = std::abs(params.tensors.at("w").data[0]);
        CHECK(now < prev);
        prev = now;
    }
}

TEST_CASE("plain SGD is selectable") {
    ModelParams params;
    params.tensors.add("w", Tensor({1}, {1.0f}));
    OptimizerConfig cfg;
    cfg.algo = OptimAlgo::Sgd;
    cfg.learning_rate = 0.5;
    OptimizerState state = make_optimizer(cfg, params);
    NamedTensors grads;
    grads.add("w", Tensor({1}, {1.0f}));
    optimizer_step(params, grads, state);
    CHECK(params.tensors.at("w").data[0] == doctest::Approx(0.5f));
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::path("tmp_nn_ckpt");
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string path = (dir / "model.srcl").string();

    const ArchConfig arch = tiny_arch();
    const ModelParams params = init_params(arch, 91);
    save_checkpoint(params, path);
    const ModelParams loaded = load_checkpoint(path, arch);
    CHECK(bit_equal(params.tensors, loaded.tensors));

    SUBCASE("corrupted magic") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
        f.close();
        try {
            load_checkpoint(path, arch);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(e.kind == CheckpointError::Kind::BadMagic);
        }
    }

    SUBCASE("unsupported version") {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(4);
        const char version2[4] = {2, 0, 0, 0};
        f.write(version2, 4);
        f.close();
        try {
            load_checkpoint(path, arch);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(e.kind == CheckpointError::Kind::BadVersion);
        }
    }

    SUBCASE("file truncated mid-tensor") {
        const auto size = fs::file_size(path);
        fs::resize_file(path, size / 2);
        try {
            load_checkpoint(path, arch);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(e.kind == CheckpointError::Kind::Truncated);
        }
    }

    SUBCASE("trailing bytes") {
        std::ofstream f(path, std::ios::app | std::ios::binary);
        f << "junk";
        f.close();
        try {
            load_checkpoint(path, arch);
            FAIL("expected CheckpointError");
        } catch (const CheckpointError& e) {
            CHECK(e.kind == CheckpointError::Kind::TrailingData);
        }
    }
}

TEST_SUITE_END();
