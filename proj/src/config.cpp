#include "srcl/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "srcl/core.hpp"

namespace srcl {

std::string regime_name(Regime regime) {
    switch (regime) {
        case Regime::Supervised: return "supervised";
        case Regime::Src: return "src";
        case Regime::Srcl: return "srcl";
        case Regime::SrclJoint: return "srcl-joint";
    }
    return "?";
}

Regime regime_from_name(const std::string& name) {
    if (name == "supervised") return Regime::Supervised;
    if (name == "src") return Regime::Src;
    if (name == "srcl") return Regime::Srcl;
    if (name == "srcl-joint") return Regime::SrclJoint;
    throw ConfigError("unknown regime '" + name + "' (expected supervised|src|srcl|srcl-joint)");
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_commas(const std::string& value) {
    std::vector<std::string> parts;
    std::stringstream stream(value);
    std::string item;
    while (std::getline(stream, item, ',')) parts.push_back(trim(item));
    if (parts.empty()) parts.push_back("");
    return parts;
}

double to_double(const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("expected a number, got '" + value + "'");
    }
}

std::uint64_t to_u64(const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("expected an unsigned integer, got '" + value + "'");
    }
    return v;
}

std::size_t to_size(const std::string& value) { return static_cast<std::size_t>(to_u64(value)); }

bool to_bool(const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError("expected true|false, got '" + value + "'");
}

void require(bool ok, const std::string& constraint) {
    if (!ok) throw ConfigError("constraint violated: " + constraint);
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& key_table() {
    static const std::map<std::string, Setter> table = {
        {"seed", [](RunConfig& c, const std::string& v) { c.seed = to_u64(v); }},
        {"out", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
        {"regime", [](RunConfig& c, const std::string& v) { c.regime = regime_from_name(v); }},
        {"labeled_fraction",
         [](RunConfig& c, const std::string& v) {
             c.labeled_fraction = to_double(v);
             require(c.labeled_fraction > 0.0 && c.labeled_fraction <= 1.0,
                     "labeled_fraction in (0, 1]");
         }},
        {"data_source",
         [](RunConfig& c, const std::string& v) {
             if (v == "synthetic") {
                 c.data_source = DataSource::Synthetic;
             } else if (v == "folder") {
                 c.data_source = DataSource::Folder;
             } else {
                 throw ConfigError("expected synthetic|folder, got '" + v + "'");
             }
         }},
        {"image_dir", [](RunConfig& c, const std::string& v) { c.image_dir = v; }},
        {"labels_csv", [](RunConfig& c, const std::string& v) { c.labels_csv = v; }},
        {"class_names",
         [](RunConfig& c, const std::string& v) {
             c.class_names = split_commas(v);
             for (const std::string& name : c.class_names) {
                 require(!name.empty(), "class names must be non-empty");
             }
         }},
        {"num_images",
         [](RunConfig& c, const std::string& v) {
             c.num_images = to_size(v);
             require(c.num_images > 0, "num_images > 0");
         }},
        {"num_classes",
         [](RunConfig& c, const std::string& v) {
             c.num_classes = to_size(v);
             require(c.num_classes >= 2, "num_classes >= 2");
         }},
        {"image_size",
         [](RunConfig& c, const std::string& v) {
             c.image_size = to_size(v);
             require(c.image_size >= 8, "image_size >= 8");
         }},
        {"imbalance_ratio",
         [](RunConfig& c, const std::string& v) {
             c.imbalance_ratio = to_double(v);
             require(c.imbalance_ratio > 0.0 && c.imbalance_ratio <= 1.0,
                     "imbalance_ratio in (0, 1]");
         }},
        {"train_fraction",
         [](RunConfig& c, const std::string& v) {
             c.split_fractions.train = to_double(v);
             require(c.split_fractions.train >= 0.0, "train_fraction >= 0");
         }},
        {"val_fraction",
         [](RunConfig& c, const std::string& v) {
             c.split_fractions.val = to_double(v);
             require(c.split_fractions.val >= 0.0, "val_fraction >= 0");
         }},
        {"test_fraction",
         [](RunConfig& c, const std::string& v) {
             c.split_fractions.test = to_double(v);
             require(c.split_fractions.test >= 0.0, "test_fraction >= 0");
         }},
        {"conv_channels",
         [](RunConfig& c, const std::string& v) {
             c.conv_channels.clear();
             for (const std::string& part : split_commas(v)) {
                 c.conv_channels.push_back(to_size(part));
                 require(c.conv_channels.back() > 0, "conv channels > 0");
             }
         }},
        {"kernel_size",
         [](RunConfig& c, const std::string& v) {
             c.kernel_size = to_size(v);
             require(c.kernel_size >= 1, "kernel_size >= 1");
         }},
        {"stride",
         [](RunConfig& c, const std::string& v) {
             c.stride = to_size(v);
             require(c.stride >= 1, "stride >= 1");
         }},
        {"projection_sizes",
         [](RunConfig& c, const std::string& v) {
             c.projection_sizes.clear();
             for (const std::string& part : split_commas(v)) {
                 c.projection_sizes.push_back(to_size(part));
                 require(c.projection_sizes.back() > 0, "projection sizes > 0");
             }
         }},
        {"optimizer",
         [](RunConfig& c, const std::string& v) {
             if (v == "adam") {
                 c.train.optimizer.algo = OptimAlgo::Adam;
             } else if (v == "sgd") {
                 c.train.optimizer.algo = OptimAlgo::Sgd;
             } else {
                 throw ConfigError("expected adam|sgd, got '" + v + "'");
             }
         }},
        {"learning_rate",
         [](RunConfig& c, const std::string& v) {
             c.train.optimizer.learning_rate = to_double(v);
             require(c.train.optimizer.learning_rate > 0.0, "learning_rate > 0");
         }},
        {"beta1",
         [](RunConfig& c, const std::string& v) {
             c.train.optimizer.beta1 = to_double(v);
             require(c.train.optimizer.beta1 >= 0.0 && c.train.optimizer.beta1 < 1.0,
                     "beta1 in [0, 1)");
         }},
        {"beta2",
         [](RunConfig& c, const std::string& v) {
             c.train.optimizer.beta2 = to_double(v);
             require(c.train.optimizer.beta2 >= 0.0 && c.train.optimizer.beta2 < 1.0,
                     "beta2 in [0, 1)");
         }},
        {"epsilon",
         [](RunConfig& c, const std::string& v) {
             c.train.optimizer.epsilon = to_double(v);
             require(c.train.optimizer.epsilon > 0.0, "epsilon > 0");
         }},
        {"epochs_pre",
         [](RunConfig& c, const std::string& v) { c.train.epochs_pre = to_size(v); }},
        {"epochs_down",
         [](RunConfig& c, const std::string& v) { c.train.epochs_down = to_size(v); }},
        {"warmup_epochs",
         [](RunConfig& c, const std::string& v) { c.train.warmup_epochs = to_size(v); }},
        {"batch_size",
         [](RunConfig& c, const std::string& v) {
             c.train.batch_size = to_size(v);
             require(c.train.batch_size >= 2, "batch_size >= 2");
         }},
        {"tau",
         [](RunConfig& c, const std::string& v) {
             c.train.tau = to_double(v);
             require(c.train.tau > 0.0, "tau > 0");
         }},
        {"lambda_sup",
         [](RunConfig& c, const std::string& v) {
             c.train.lambda_sup = to_double(v);
             require(c.train.lambda_sup >= 0.0, "lambda_sup >= 0");
         }},
        {"lambda_con",
         [](RunConfig& c, const std::string& v) {
             c.train.lambda_con = to_double(v);
             require(c.train.lambda_con >= 0.0, "lambda_con >= 0");
         }},
        {"lambda_src",
         [](RunConfig& c, const std::string& v) {
             c.train.lambda_src = to_double(v);
             require(c.train.lambda_src >= 0.0, "lambda_src >= 0");
         }},
        {"teacher_alpha",
         [](RunConfig& c, const std::string& v) {
             c.train.teacher_alpha = to_double(v);
             require(c.train.teacher_alpha >= 0.0 && c.train.teacher_alpha <= 1.0,
                     "teacher_alpha in [0, 1]");
         }},
        {"ema_granularity",
         [](RunConfig& c, const std::string& v) {
             if (v == "per-epoch") {
                 c.train.ema_granularity = EmaGranularity::PerEpoch;
             } else if (v == "per-step") {
                 c.train.ema_granularity = EmaGranularity::PerStep;
             } else {
                 throw ConfigError("expected per-epoch|per-step, got '" + v + "'");
             }
         }},
        {"supervised_loss",
         [](RunConfig& c, const std::string& v) {
             if (v == "mse") {
                 c.train.supervised_loss = SupervisedLossKind::Mse;
             } else if (v == "cross_entropy") {
                 c.train.supervised_loss = SupervisedLossKind::CrossEntropy;
             } else {
                 throw ConfigError("expected mse|cross_entropy, got '" + v + "'");
             }
         }},
        {"crop_min",
         [](RunConfig& c, const std::string& v) {
             c.train.augment.crop_min = to_double(v);
             require(c.train.augment.crop_min > 0.0 && c.train.augment.crop_min <= 1.0,
                     "crop_min in (0, 1]");
         }},
        {"crop_max",
         [](RunConfig& c, const std::string& v) {
             c.train.augment.crop_max = to_double(v);
             require(c.train.augment.crop_max > 0.0 && c.train.augment.crop_max <= 1.0,
                     "crop_max in (0, 1]");
         }},
        {"jitter_brightness",
         [](RunConfig& c, const std::string& v) {
             c.train.augment.brightness = to_double(v);
             require(c.train.augment.brightness >= 0.0, "jitter_brightness >= 0");
         }},
        {"jitter_contrast",
         [](RunConfig& c, const std::string& v) {
             c.train.augment.contrast = to_double(v);
             require(c.train.augment.contrast >= 0.0, "jitter_contrast >= 0");
         }},
        {"jitter_saturation",
         [](RunConfig& c, const std::string& v) {
             c.train.augment.saturation = to_double(v);
             require(c.train.augment.saturation >= 0.0, "jitter_saturation >= 0");
         }},
        {"grayscale_prob",
         [](RunConfig& c, const std::string& v) {
             c.train.augment.grayscale_prob = to_double(v);
             require(c.train.augment.grayscale_prob >= 0.0 &&
                         c.train.augment.grayscale_prob <= 1.0,
                     "grayscale_prob in [0, 1]");
         }},
        {"norm_mean",
         [](RunConfig& c, const std::string& v) {
             const auto parts = split_commas(v);
             require(parts.size() == 3, "norm_mean needs 3 comma-separated values");
             for (std::size_t i = 0; i < 3; ++i) c.train.augment.norm_mean[i] = to_double(parts[i]);
         }},
        {"norm_std",
         [](RunConfig& c, const std::string& v) {
             const auto parts = split_commas(v);
             require(parts.size() == 3, "norm_std needs 3 comma-separated values");
             for (std::size_t i = 0; i < 3; ++i) {
                 c.train.augment.norm_std[i] = to_double(parts[i]);
                 require(c.train.augment.norm_std[i] > 0.0, "norm_std > 0");
             }
         }},
        {"sweep_fractions",
         [](RunConfig& c, const std::string& v) {
             c.sweep_fractions.clear();
             for (const std::string& part : split_commas(v)) {
                 c.sweep_fractions.push_back(to_double(part));
                 require(c.sweep_fractions.back() > 0.0 && c.sweep_fractions.back() <= 1.0,
                         "sweep fractions in (0, 1]");
             }
         }},
        {"sweep_regimes",
         [](RunConfig& c, const std::string& v) {
             c.sweep_regimes.clear();
             for (const std::string& part : split_commas(v)) {
                 c.sweep_regimes.push_back(regime_from_name(part));
             }
         }},
        {"sweep_seeds",
         [](RunConfig& c, const std::string& v) {
             c.sweep_seeds.clear();
             for (const std::string& part : split_commas(v)) c.sweep_seeds.push_back(to_u64(part));
         }},
        {"sweep_parallel",
         [](RunConfig& c, const std::string& v) { c.sweep_parallel = to_bool(v); }},
        {"eval_split",
         [](RunConfig& c, const std::string& v) {
             if (v == "none") {
                 c.eval_split = EvalSplit::None;
             } else if (v == "train") {
                 c.eval_split = EvalSplit::Train;
             } else if (v == "val") {
                 c.eval_split = EvalSplit::Val;
             } else if (v == "test") {
                 c.eval_split = EvalSplit::Test;
             } else {
                 throw ConfigError("expected none|train|val|test, got '" + v + "'");
             }
         }},
        {"checkpoint", [](RunConfig& c, const std::string& v) { c.checkpoint_path = v; }},
        {"log_timing", [](RunConfig& c, const std::string& v) { c.log_timing = to_bool(v); }},
    };
    return table;
}

} // namespace

void apply_assignment(RunConfig& config, const std::string& key, const std::string& value,
                      const std::string& where) {
    const auto& table = key_table();
    const auto it = table.find(key);
    if (it == table.end()) {
        throw ConfigError(where + ": unknown key '" + key + "'");
    }
    try {
        it->second(config, value);
    } catch (const ConfigError& e) {
        throw ConfigError(where + ": key '" + key + "': " + e.what());
    }
}

RunConfig parse_config_file(const std::string& path) {
    RunConfig config;
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        const std::string where = path + ":" + std::to_string(line_no);
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError(where + ": missing key");
        apply_assignment(config, key, value, where);
    }
    return config;
}

RunConfig parse_config(const std::string& file_path,
                       const std::vector<std::pair<std::string, std::string>>& overrides) {
    RunConfig config = file_path.empty() ? RunConfig{} : parse_config_file(file_path);
    for (const auto& [key, value] : overrides) {
        apply_assignment(config, key, value, "override");
    }
    config.finalize();
    return config;
}

ArchConfig RunConfig::arch(std::size_t classes) const {
    ArchConfig arch;
    arch.encoder.input_size = image_size;
    arch.encoder.input_channels = 3;
    arch.encoder.conv_blocks.clear();
    for (std::size_t channels : conv_channels) {
        arch.encoder.conv_blocks.push_back({channels, kernel_size, stride});
    }
    arch.projection_sizes = projection_sizes;
    arch.num_classes = classes;
    arch.encoder.activation_shape(); // validate
    return arch;
}

void RunConfig::finalize() const {
    const double sum = split_fractions.train + split_fractions.val + split_fractions.test;
    if (std::abs(sum - 1.0) > 1e-6) {
        throw ConfigError("split fractions must sum to 1, got " + std::to_string(sum));
    }
    if (train.augment.crop_min > train.augment.crop_max) {
        throw ConfigError("crop_min must not exceed crop_max");
    }
    if (data_source == DataSource::Folder) {
        if (image_dir.empty() || labels_csv.empty() || class_names.empty()) {
            throw ConfigError("folder data source needs image_dir, labels_csv, and class_names");
        }
    }
}

} // namespace srcl
