#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "srcl/data.hpp"
#include "srcl/nn.hpp"
#include "srcl/train.hpp"

namespace srcl {

enum class Regime { Supervised, Src, Srcl, SrclJoint };
enum class DataSource { Synthetic, Folder };
enum class EvalSplit { None, Train, Val, Test };

std::string regime_name(Regime regime);
Regime regime_from_name(const std::string& name);

/// Flat key = value configuration covering every tunable in the pipeline.
struct RunConfig {
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    Regime regime = Regime::Supervised;
    double labeled_fraction = 1.0;

    DataSource data_source = DataSource::Synthetic;
    std::string image_dir;
    std::string labels_csv;
    std::vector<std::string> class_names;

    // Synthetic generator.
    std::size_t num_images = 300;
    std::size_t num_classes = 4;
    std::size_t image_size = 32;
    double imbalance_ratio = 0.3;

    SplitFractions split_fractions;

    // Architecture.
    std::vector<std::size_t> conv_channels = {8, 16, 32};
    std::size_t kernel_size = 3;
    std::size_t stride = 2;
    std::vector<std::size_t> projection_sizes = {100, 50, 25};

    TrainConfig train;

    // Sweep grid.
    std::vector<double> sweep_fractions = {0.1, 0.2, 0.5};
    std::vector<Regime> sweep_regimes = {Regime::Supervised, Regime::Src, Regime::Srcl};
    std::vector<std::uint64_t> sweep_seeds; // empty: just `seed`
    bool sweep_parallel = false;

    EvalSplit eval_split = EvalSplit::None;
    std::string checkpoint_path;
    bool log_timing = false;

    /// Encoder + heads for a dataset with `classes` classes.
    ArchConfig arch(std::size_t classes) const;

    /// Cross-field checks that single-key validation cannot catch.
    void finalize() const;
};

/// Applies one `key = value` assignment. `where` prefixes error messages
/// (file:line or "override").
void apply_assignment(RunConfig& config, const std::string& key, const std::string& value,
                      const std::string& where);

/// Line-oriented `key = value` file with '#' comments. Unknown keys, type
/// errors, and constraint violations carry the line number.
RunConfig parse_config_file(const std::string& path);

/// File (optional) plus command-line overrides, which win.
RunConfig parse_config(const std::string& file_path,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

} // namespace srcl
