#include "srcl/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "srcl/config.hpp"
#include "srcl/core.hpp"
#include "srcl/data.hpp"
#include "srcl/eval.hpp"
#include "srcl/nn.hpp"
#include "srcl/train.hpp"

namespace srcl::cli {

namespace {

namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string format_optional(const std::optional<double>& v) {
    return v ? format_double(*v) : "nan";
}

std::string basename_no_ext(const std::string& path) {
    const fs::path p(path);
    return p.stem().string();
}

Dataset build_dataset(const RunConfig& config) {
    if (config.data_source == DataSource::Folder) {
        return load_dataset(config.image_dir, config.labels_csv, config.class_names);
    }
    return generate_synthetic(config.num_images, config.num_classes, config.image_size,
                              config.imbalance_ratio, config.seed);
}

struct RegimeRun {
    TrainOutcome outcome;
    std::vector<EpochLog> pretrain_logs;
};

RegimeRun run_regime(Regime regime, const Dataset& masked_train, const Dataset& val,
                     const ArchConfig& arch, const TrainConfig& train_cfg) {
    RegimeRun run;
    switch (regime) {
        case Regime::Supervised:
            run.outcome = train_supervised(masked_train, val, arch, train_cfg);
            break;
        case Regime::Src:
            run.outcome = finetune_src(init_params(arch, train_cfg.seed), masked_train, val,
                                       train_cfg);
            break;
        case Regime::Srcl: {
            PretrainResult pre = pretrain_contrastive(masked_train, arch, train_cfg);
            run.pretrain_logs = std::move(pre.logs);
            run.outcome = finetune_src(std::move(pre.params), masked_train, val, train_cfg);
            break;
        }
        case Regime::SrclJoint:
            run.outcome = train_joint(masked_train, val, arch, train_cfg);
            break;
    }
    return run;
}

// -----------------------------------------------------------------------
// Commands
// -----------------------------------------------------------------------

int cmd_synth(const RunConfig& config) {
    const Dataset dataset = generate_synthetic(config.num_images, config.num_classes,
                                               config.image_size, config.imbalance_ratio,
                                               config.seed);
    const fs::path out(config.out_dir);
    fs::create_directories(out / "images");

    std::ofstream csv(out / "labels.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write labels CSV under " + config.out_dir);
    csv << "image,label\n";
    for (const LabeledImage& img : dataset.images) {
        const std::string filename = img.id + ".ppm";
        write_ppm((out / "images" / filename).string(), img.pixels);
        csv << filename << "," << dataset.class_names[static_cast<std::size_t>(img.label)] << "\n";
    }
    csv.close();

    std::vector<std::size_t> counts(dataset.num_classes(), 0);
    for (const LabeledImage& img : dataset.images) ++counts[static_cast<std::size_t>(img.label)];
    std::cout << "wrote " << dataset.size() << " images to " << (out / "images").string() << "\n";
    for (std::size_t c = 0; c < counts.size(); ++c) {
        std::cout << dataset.class_names[c] << " " << counts[c] << "\n";
    }
    return 0;
}

int cmd_train(const RunConfig& config) {
    const Dataset dataset = build_dataset(config);
    const Splits splits = split(dataset, config.split_fractions, config.seed);
    const Dataset masked = mask_labels(splits.train, config.labeled_fraction, config.seed);

    TrainConfig train_cfg = config.train;
    train_cfg.seed = config.seed;
    const ArchConfig arch = config.arch(dataset.num_classes());

    const RegimeRun run = run_regime(config.regime, masked, splits.val, arch, train_cfg);

    const fs::path out(config.out_dir);
    fs::create_directories(out);
    if (!run.pretrain_logs.empty()) {
        write_epoch_logs((out / "pretrain_log.jsonl").string(), run.pretrain_logs,
                         config.log_timing);
    }
    write_epoch_logs((out / "train_log.jsonl").string(), run.outcome.logs, config.log_timing);
    save_checkpoint(run.outcome.best, (out / "checkpoint.srcl").string());

    std::cout << "regime " << regime_name(config.regime) << "\n";
    std::cout << "best_epoch " << run.outcome.best_epoch << "\n";
    if (!run.outcome.logs.empty() && run.outcome.logs[run.outcome.best_epoch].validated) {
        std::cout << "best_val_auroc "
                  << format_double(run.outcome.logs[run.outcome.best_epoch].val_auroc) << "\n";
    }
    std::cout << "checkpoint " << (out / "checkpoint.srcl").string() << "\n";
    return 0;
}

struct SweepCell {
    Regime regime;
    double fraction;
    std::uint64_t seed;
};

std::string cell_dir_name(const SweepCell& cell) {
    char frac[32];
    std::snprintf(frac, sizeof(frac), "%g", cell.fraction);
    return regime_name(cell.regime) + "_f" + frac + "_s" + std::to_string(cell.seed);
}

int cmd_sweep(const RunConfig& config) {
    const Dataset dataset = build_dataset(config);
    const Splits splits = split(dataset, config.split_fractions, config.seed);

    std::vector<std::uint64_t> seeds = config.sweep_seeds;
    if (seeds.empty()) seeds.push_back(config.seed);

    std::vector<SweepCell> cells;
    for (Regime regime : config.sweep_regimes) {
        for (double fraction : config.sweep_fractions) {
            for (std::uint64_t seed : seeds) cells.push_back({regime, fraction, seed});
        }
    }

    const fs::path out(config.out_dir);
    fs::create_directories(out / "cells");

    const auto run_cell = [&](const SweepCell& cell) -> std::string {
        const Dataset masked = mask_labels(splits.train, cell.fraction, cell.seed);
        TrainConfig train_cfg = config.train;
        train_cfg.seed = cell.seed;
        const ArchConfig arch = config.arch(dataset.num_classes());

        const RegimeRun run = run_regime(cell.regime, masked, splits.val, arch, train_cfg);
        const MetricsReport report =
            evaluate_model(run.outcome.best, splits.test, config.train.augment);

        const fs::path cell_dir = out / "cells" / cell_dir_name(cell);
        fs::create_directories(cell_dir);
        if (!run.pretrain_logs.empty()) {
            write_epoch_logs((cell_dir / "pretrain_log.jsonl").string(), run.pretrain_logs,
                             config.log_timing);
        }
        write_epoch_logs((cell_dir / "train_log.jsonl").string(), run.outcome.logs,
                         config.log_timing);
        save_checkpoint(run.outcome.best, (cell_dir / "checkpoint.srcl").string());

        return regime_name(cell.regime) + "," + format_double(cell.fraction) + "," +
               std::to_string(cell.seed) + "," + format_optional(report.macro_auroc) + "," +
               format_double(report.accuracy) + "," + format_optional(report.macro_sensitivity) +
               "," + format_optional(report.macro_specificity);
    };

    std::vector<std::string> rows(cells.size());
    if (config.sweep_parallel && cells.size() > 1) {
        // Cells are independent and individually deterministic; rows merge in
        // fixed order afterwards, so parallelism cannot change any bytes.
        const std::size_t workers =
            std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), cells.size());
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
                    rows[i] = run_cell(cells[i]);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    } else {
        for (std::size_t i = 0; i < cells.size(); ++i) rows[i] = run_cell(cells[i]);
    }

    std::ofstream csv(out / "results.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write results CSV under " + config.out_dir);
    csv << "regime,labeled_fraction,seed,auroc,accuracy,sensitivity,specificity\n";
    for (const std::string& row : rows) csv << row << "\n";
    csv.close();

    std::cout << "wrote " << rows.size() << " rows to " << (out / "results.csv").string() << "\n";
    return 0;
}

Dataset select_eval_split(const RunConfig& config, const Dataset& dataset) {
    if (config.eval_split == EvalSplit::None) return dataset;
    const Splits splits = split(dataset, config.split_fractions, config.seed);
    switch (config.eval_split) {
        case EvalSplit::Train: return splits.train;
        case EvalSplit::Val: return splits.val;
        case EvalSplit::Test: return splits.test;
        default: return dataset;
    }
}

int cmd_evaluate(const RunConfig& config) {
    if (config.checkpoint_path.empty()) {
        throw ConfigError("evaluate needs a checkpoint (set checkpoint = <path>)");
    }
    const Dataset dataset = build_dataset(config);
    const Dataset subset = select_eval_split(config, dataset);
    const ArchConfig arch = config.arch(dataset.num_classes());
    const ModelParams params = load_checkpoint(config.checkpoint_path, arch);

    const MetricsReport report = evaluate_model(params, subset, config.train.augment);

    const fs::path out(config.out_dir);
    fs::create_directories(out);
    std::ofstream csv(out / "per_class_metrics.csv", std::ios::trunc);
    if (!csv) throw IoError("cannot write per-class CSV under " + config.out_dir);
    csv << "class_index,class_name,auroc,sensitivity,specificity\n";
    for (std::size_t c = 0; c < dataset.num_classes(); ++c) {
        csv << c << "," << dataset.class_names[c] << "," << format_optional(report.auroc[c]) << ","
            << format_optional(report.sensitivity[c]) << ","
            << format_optional(report.specificity[c]) << "\n";
    }
    csv.close();

    std::cout << "examples " << subset.size() << "\n";
    std::cout << "accuracy " << format_double(report.accuracy) << "\n";
    std::cout << "macro_auroc " << format_optional(report.macro_auroc) << "\n";
    std::cout << "macro_sensitivity " << format_optional(report.macro_sensitivity) << "\n";
    std::cout << "macro_specificity " << format_optional(report.macro_specificity) << "\n";
    return 0;
}

int cmd_saliency(const RunConfig& config, const std::vector<std::string>& images) {
    if (config.checkpoint_path.empty()) {
        throw ConfigError("saliency needs a checkpoint (set checkpoint = <path>)");
    }
    if (images.empty()) throw ConfigError("saliency needs at least one image path");

    // num_classes is not recoverable from the image list; reuse the
    // configured class count (synthetic) or the class-name list (folder).
    const std::size_t classes = config.data_source == DataSource::Folder
                                    ? config.class_names.size()
                                    : config.num_classes;
    const ArchConfig arch = config.arch(classes);
    const ModelParams params = load_checkpoint(config.checkpoint_path, arch);

    const fs::path out(config.out_dir);
    fs::create_directories(out);
    for (const std::string& path : images) {
        const Tensor raw = read_ppm(path);
        const Tensor image = normalize_only(raw, config.train.augment);
        const Tensor map = saliency_map(params, image);
        const std::string name = basename_no_ext(path) + "_saliency.pgm";
        write_pgm((out / name).string(), map);
        std::cout << (out / name).string() << "\n";
    }
    return 0;
}

} // namespace

int run(const std::vector<std::string>& args) {
    CLI::App app{"Semi-supervised relational contrastive learning toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> out_override;
    std::vector<std::string> set_overrides;
    app.add_option("--config", config_path, "Config file (key = value lines)");
    app.add_option("--seed", seed_override, "Override the seed");
    app.add_option("--out", out_override, "Override the output directory");
    app.add_option("--set", set_overrides, "Override any config key, as key=value")
        ->type_size(1)
        ->allow_extra_args(false);

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic PPM dataset");
    CLI::App* train = app.add_subcommand("train", "Train one regime");
    CLI::App* sweep = app.add_subcommand("sweep", "Label-fraction sweep; writes results.csv");
    CLI::App* evaluate = app.add_subcommand("evaluate", "Evaluate a checkpoint");
    CLI::App* saliency = app.add_subcommand("saliency", "Write saliency maps for images");
    std::vector<std::string> saliency_images;
    saliency->add_option("images", saliency_images, "PPM images to explain");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        std::vector<std::pair<std::string, std::string>> overrides;
        for (const std::string& item : set_overrides) {
            const std::size_t eq = item.find('=');
            if (eq == std::string::npos) {
                throw ConfigError("--set expects key=value, got '" + item + "'");
            }
            overrides.emplace_back(item.substr(0, eq), item.substr(eq + 1));
        }
        if (seed_override) overrides.emplace_back("seed", std::to_string(*seed_override));
        if (out_override) overrides.emplace_back("out", *out_override);

        const RunConfig config = parse_config(config_path, overrides);

        if (synth->parsed()) return cmd_synth(config);
        if (train->parsed()) return cmd_train(config);
        if (sweep->parsed()) return cmd_sweep(config);
        if (evaluate->parsed()) return cmd_evaluate(config);
        if (saliency->parsed()) return cmd_saliency(config, saliency_images);
        std::cerr << "error: no command given\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace srcl::cli
