#include "srcl/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

namespace srcl {

// ---------------------------------------------------------------------------
// PPM
// ---------------------------------------------------------------------------

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string ppm_token(std::istream& in, const std::string& path) {
    std::string tok;
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
            continue;
        }
        if (std::isspace(c)) {
            if (!tok.empty()) return tok;
            continue;
        }
        tok.push_back(static_cast<char>(c));
    }
    if (tok.empty()) throw IoError("unexpected end of PPM header in " + path);
    return tok;
}

std::size_t ppm_number(std::istream& in, const std::string& path) {
    const std::string tok = ppm_token(in, path);
    std::size_t value = 0;
    for (char ch : tok) {
        if (ch < '0' || ch > '9') throw IoError("malformed PPM header token '" + tok + "' in " + path);
        value = value * 10 + static_cast<std::size_t>(ch - '0');
    }
    return value;
}

} // namespace

Tensor read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open image: " + path);
    if (ppm_token(in, path) != "P6") throw IoError("not a binary PPM (P6) file: " + path);
    const std::size_t w = ppm_number(in, path);
    const std::size_t h = ppm_number(in, path);
    const std::size_t maxval = ppm_number(in, path);
    if (maxval != 255) throw IoError("unsupported PPM maxval " + std::to_string(maxval) + " in " + path);
    if (w == 0 || h == 0) throw IoError("empty PPM image: " + path);

    std::vector<char> raw(w * h * 3);
    in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
        throw IoError("PPM pixel data truncated in " + path);
    }
    Tensor image = Tensor::zeros({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const unsigned char byte = static_cast<unsigned char>(raw[(y * w + x) * 3 + c]);
                image.data[c * h * w + y * w + x] = static_cast<float>(byte) / 255.0f;
            }
        }
    }
    return image;
}

void write_ppm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.dim(0) != 3) {
        throw ShapeError("write_ppm expects a [3 x H x W] image, got " + image.shape_str());
    }
    const std::size_t h = image.dim(1), w = image.dim(2);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open image for writing: " + path);
    out << "P6\n" << w << " " << h << "\n255\n";
    std::vector<char> raw(w * h * 3);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = std::clamp(static_cast<double>(image.data[c * h * w + y * w + x]),
                                            0.0, 1.0);
                raw[(y * w + x) * 3 + c] = static_cast<char>(std::lround(v * 255.0));
            }
        }
    }
    out.write(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!out) throw IoError("write failed for image: " + path);
}

// ---------------------------------------------------------------------------
// CSV ingestion
// ---------------------------------------------------------------------------

Dataset load_dataset(const std::string& image_dir, const std::string& labels_csv,
                     const std::vector<std::string>& class_names) {
    std::ifstream in(labels_csv);
    if (!in) throw IoError("cannot open labels CSV: " + labels_csv);

    const auto line_error = [&](std::size_t line, const std::string& msg) {
        return IoError(labels_csv + ":" + std::to_string(line) + ": " + msg);
    };
    const auto strip_cr = [](std::string& s) {
        if (!s.empty() && s.back() == '\r') s.pop_back();
    };

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw IoError("labels CSV is empty: " + labels_csv);
    ++line_no;
    strip_cr(line);
    if (line != "image,label") {
        throw line_error(line_no, "expected header 'image,label', got '" + line + "'");
    }

    Dataset dataset;
    dataset.class_names = class_names;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        const std::size_t comma = line.find(',');
        if (comma == std::string::npos || comma == 0 || comma + 1 >= line.size()) {
            throw line_error(line_no, "malformed row '" + line + "'");
        }
        const std::string filename = line.substr(0, comma);
        const std::string label_str = line.substr(comma + 1);

        const auto it = std::find(class_names.begin(), class_names.end(), label_str);
        if (it == class_names.end()) {
            throw line_error(line_no, "unknown class '" + label_str + "'");
        }
        const int label = static_cast<int>(it - class_names.begin());

        LabeledImage img;
        const std::size_t dot = filename.rfind('.');
        img.id = (dot == std::string::npos) ? filename : filename.substr(0, dot);
        try {
            img.pixels = read_ppm(image_dir + "/" + filename);
        } catch (const IoError& e) {
            throw line_error(line_no, "image '" + img.id + "': " + e.what());
        }
        img.label = label;

        if (!dataset.images.empty() && !img.pixels.same_shape(dataset.images.front().pixels)) {
            throw line_error(line_no, "image '" + img.id + "' has shape " + img.pixels.shape_str() +
                                          ", expected " + dataset.images.front().pixels.shape_str());
        }
        dataset.images.push_back(std::move(img));
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

namespace {

std::array<double, 3> hsv_to_rgb(double h, double s, double v) {
    const double hh = h * 6.0;
    const int sector = static_cast<int>(hh) % 6;
    const double f = hh - std::floor(hh);
    const double p = v * (1.0 - s);
    const double q = v * (1.0 - s * f);
    const double t = v * (1.0 - s * (1.0 - f));
    switch (sector) {
        case 0: return {v, t, p};
        case 1: return {q, v, p};
        case 2: return {p, v, t};
        case 3: return {p, q, v};
        case 4: return {t, p, v};
        default: return {v, p, q};
    }
}

/// Largest-remainder apportionment of `total` items over `weights`.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> fracs;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        const double ideal = static_cast<double>(total) * weights[i] / wsum;
        counts[i] = static_cast<std::size_t>(std::floor(ideal));
        assigned += counts[i];
        fracs.emplace_back(ideal - std::floor(ideal), i);
    }
    std::stable_sort(fracs.begin(), fracs.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t r = 0; assigned < total; ++r, ++assigned) {
        ++counts[fracs[r % fracs.size()].second];
    }
    return counts;
}

bool inside_blob(std::size_t shape_kind, double dx, double dy, double r) {
    switch (shape_kind % 4) {
        case 0: // disk
            return dx * dx + dy * dy < r * r;
        case 1: // square
            return std::abs(dx) < 0.82 * r && std::abs(dy) < 0.82 * r;
        case 2: // ring
        {
            const double d2 = dx * dx + dy * dy;
            return d2 < r * r && d2 > 0.55 * 0.55 * r * r;
        }
        default: // upward triangle
            return dy > -r && dy < 0.6 * r && std::abs(dx) < 0.62 * (dy + r);
    }
}

} // namespace

Dataset generate_synthetic(std::size_t num_images, std::size_t num_classes,
                           std::size_t image_size, double imbalance_ratio, std::uint64_t seed) {
    if (num_classes < 2) throw ConfigError("generate_synthetic requires at least 2 classes");
    if (image_size < 8) throw ConfigError("generate_synthetic requires image_size >= 8");
    if (num_images < num_classes) {
        throw ConfigError("generate_synthetic requires at least one image per class");
    }
    if (!(imbalance_ratio > 0.0) || imbalance_ratio > 1.0) {
        throw ConfigError("imbalance_ratio must lie in (0, 1]");
    }

    std::vector<double> weights(num_classes);
    for (std::size_t c = 0; c < num_classes; ++c) weights[c] = std::pow(imbalance_ratio, static_cast<double>(c));
    std::vector<std::size_t> counts = apportion(num_images, weights);
    for (std::size_t c = 0; c < num_classes; ++c) {
        if (counts[c] == 0) {
            throw ConfigError("class " + std::to_string(c) +
                              " received zero images; increase num_images or the ratio");
        }
    }

    Dataset dataset;
    for (std::size_t c = 0; c < num_classes; ++c) {
        dataset.class_names.push_back("class" + std::to_string(c));
    }

    const RandomStream root = RandomStream(seed).fork("synth");
    const double s = static_cast<double>(image_size);
    std::size_t index = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        for (std::size_t n = 0; n < counts[c]; ++n, ++index) {
            RandomStream rng = root.fork(index);

            // The class signal is the blob shape family; color, position,
            // size, opacity, and background are per-image nuisance.
            const double bg = rng.uniform(0.25, 0.75);
            const double cx = rng.uniform(0.25, 0.75) * s;
            const double cy = rng.uniform(0.25, 0.75) * s;
            const double radius = rng.uniform(0.14, 0.32) * s;
            const double alpha = rng.uniform(0.45, 0.85);
            const std::array<double, 3> color =
                hsv_to_rgb(rng.uniform(0.0, 1.0), rng.uniform(0.4, 0.9), rng.uniform(0.5, 0.95));

            Tensor pixels = Tensor::zeros({3, image_size, image_size});
            for (std::size_t y = 0; y < image_size; ++y) {
                for (std::size_t x = 0; x < image_size; ++x) {
                    const double noise = rng.uniform(-0.22, 0.22);
                    const bool blob = inside_blob(c, static_cast<double>(x) + 0.5 - cx,
                                                  static_cast<double>(y) + 0.5 - cy, radius);
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        double v = bg + noise;
                        if (blob) v = (1.0 - alpha) * v + alpha * color[ch];
                        v += rng.uniform(-0.06, 0.06);
                        pixels.data[ch * image_size * image_size + y * image_size + x] =
                            static_cast<float>(std::clamp(v, 0.0, 1.0));
                    }
                }
            }

            char id[16];
            std::snprintf(id, sizeof(id), "img%05zu", index);
            dataset.images.push_back(LabeledImage{id, std::move(pixels), static_cast<int>(c)});
        }
    }
    return dataset;
}

// ---------------------------------------------------------------------------
// Split / mask / batch
// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& dataset) {
    // kUnlabeled images form their own stratum at the end.
    std::vector<std::vector<std::size_t>> groups(dataset.num_classes() + 1);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const int label = dataset.images[i].label;
        const std::size_t g = label == kUnlabeled ? dataset.num_classes()
                                                  : static_cast<std::size_t>(label);
        groups[g].push_back(i);
    }
    return groups;
}

} // namespace

Splits split(const Dataset& dataset, const SplitFractions& fractions, std::uint64_t seed) {
    const double sum = fractions.train + fractions.val + fractions.test;
    if (std::abs(sum - 1.0) > 1e-6) {
        throw ConfigError("split fractions must sum to 1, got " + std::to_string(sum));
    }
    if (fractions.train < 0.0 || fractions.val < 0.0 || fractions.test < 0.0) {
        throw ConfigError("split fractions must be non-negative");
    }

    const std::array<double, 3> f = {fractions.train, fractions.val, fractions.test};
    RandomStream rng = RandomStream(seed).fork("split");

    Splits out;
    out.train.class_names = out.val.class_names = out.test.class_names = dataset.class_names;
    std::array<Dataset*, 3> targets = {&out.train, &out.val, &out.test};

    // Largest remainder per class with carried residuals, so per-class
    // proportions stay within one image while global sizes land exactly when
    // n * fraction is integral.
    std::array<double, 3> carry = {0.0, 0.0, 0.0};
    auto groups = indices_by_class(dataset);
    for (std::size_t g = 0; g < groups.size(); ++g) {
        std::vector<std::size_t>& members = groups[g];
        if (members.empty()) continue;
        RandomStream class_rng = rng.fork(g);
        class_rng.shuffle(members);

        const double n_c = static_cast<double>(members.size());
        std::array<double, 3> target;
        std::array<std::size_t, 3> take = {0, 0, 0};
        std::size_t assigned = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            target[s] = f[s] * n_c + carry[s];
            take[s] = static_cast<std::size_t>(std::max(0.0, std::floor(target[s])));
            assigned += take[s];
        }
        std::array<std::size_t, 3> order = {0, 1, 2};
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return target[a] - static_cast<double>(take[a]) > target[b] - static_cast<double>(take[b]);
        });
        for (std::size_t r = 0; assigned < members.size(); ++r, ++assigned) {
            ++take[order[r % 3]];
        }
        // A negative carry can make floors overshoot; trim from the largest
        // surplus if that ever happens.
        while (assigned > members.size()) {
            std::size_t best = 0;
            double surplus = -1e18;
            for (std::size_t s = 0; s < 3; ++s) {
                const double d = static_cast<double>(take[s]) - target[s];
                if (take[s] > 0 && d > surplus) {
                    surplus = d;
                    best = s;
                }
            }
            --take[best];
            --assigned;
        }
        for (std::size_t s = 0; s < 3; ++s) carry[s] = target[s] - static_cast<double>(take[s]);

        std::size_t cursor = 0;
        for (std::size_t s = 0; s < 3; ++s) {
            for (std::size_t i = 0; i < take[s]; ++i, ++cursor) {
                targets[s]->images.push_back(dataset.images[members[cursor]]);
            }
        }
    }
    return out;
}

Dataset mask_labels(const Dataset& train, double labeled_fraction, std::uint64_t seed) {
    if (!(labeled_fraction > 0.0) || labeled_fraction > 1.0) {
        throw ConfigError("labeled_fraction must lie in (0, 1]");
    }
    Dataset out = train;
    if (labeled_fraction == 1.0) return out;

    RandomStream rng = RandomStream(seed).fork("mask");
    auto groups = indices_by_class(train);
    for (std::size_t g = 0; g + 1 < groups.size(); ++g) { // already-unlabeled stratum untouched
        std::vector<std::size_t>& members = groups[g];
        if (members.empty()) continue;
        RandomStream class_rng = rng.fork(g);
        class_rng.shuffle(members);
        const std::size_t keep = static_cast<std::size_t>(
            std::ceil(labeled_fraction * static_cast<double>(members.size())));
        for (std::size_t i = keep; i < members.size(); ++i) {
            out.images[members[i]].label = kUnlabeled;
        }
    }
    return out;
}

std::vector<Batch> make_batches(const Dataset& dataset, std::size_t batch_size, std::size_t epoch,
                                std::uint64_t seed) {
    if (batch_size < 2) throw ConfigError("batch_size must be at least 2");
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    RandomStream rng = RandomStream(seed).fork("batch").fork(epoch);
    rng.shuffle(order);

    const std::size_t num_batches = dataset.size() / batch_size;
    std::vector<Batch> batches;
    batches.reserve(num_batches);
    for (std::size_t b = 0; b < num_batches; ++b) {
        Batch batch;
        const Tensor& first = dataset.images.front().pixels;
        batch.images = Tensor::zeros({batch_size, first.dim(0), first.dim(1), first.dim(2)});
        const std::size_t stride = first.size();
        for (std::size_t k = 0; k < batch_size; ++k) {
            const std::size_t idx = order[b * batch_size + k];
            const LabeledImage& img = dataset.images[idx];
            if (img.pixels.size() != stride) {
                throw ShapeError("dataset images have inconsistent shapes");
            }
            std::copy(img.pixels.data.begin(), img.pixels.data.end(),
                      batch.images.data.begin() + static_cast<std::ptrdiff_t>(k * stride));
            batch.labels.push_back(img.label);
            batch.labeled_mask.push_back(img.label == kUnlabeled ? 0 : 1);
            batch.indices.push_back(idx);
        }
        batches.push_back(std::move(batch));
    }
    return batches;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

void AugmentConfig::validate() const {
    if (!(crop_min > 0.0) || crop_min > crop_max || crop_max > 1.0) {
        throw ConfigError("crop range must satisfy 0 < crop_min <= crop_max <= 1");
    }
    if (brightness < 0.0 || contrast < 0.0 || saturation < 0.0) {
        throw ConfigError("jitter strengths must be non-negative");
    }
    if (grayscale_prob < 0.0 || grayscale_prob > 1.0) {
        throw ConfigError("grayscale_prob must lie in [0, 1]");
    }
    for (double sd : norm_std) {
        if (!(sd > 0.0)) throw ConfigError("normalization std must be positive");
    }
}

namespace {

double luma(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

} // namespace

Tensor augment_view(const Tensor& image, const AugmentConfig& config, RandomStream& stream) {
    config.validate();
    if (image.rank() != 3) throw ShapeError("augment_view expects a [C x H x W] image");
    const std::size_t channels = image.dim(0), h = image.dim(1), w = image.dim(2);

    // Fixed draw order: area, top, left, brightness, contrast, saturation,
    // grayscale coin.
    const double area = stream.uniform(config.crop_min, config.crop_max);
    const double side = std::sqrt(area);
    const std::size_t crop_h = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(side * static_cast<double>(h))), 1, h);
    const std::size_t crop_w = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::lround(side * static_cast<double>(w))), 1, w);
    const std::size_t top = static_cast<std::size_t>(stream.below(h - crop_h + 1));
    const std::size_t left = static_cast<std::size_t>(stream.below(w - crop_w + 1));
    const double f_brightness = 1.0 + stream.uniform(-config.brightness, config.brightness);
    const double f_contrast = 1.0 + stream.uniform(-config.contrast, config.contrast);
    const double f_saturation = 1.0 + stream.uniform(-config.saturation, config.saturation);
    const bool to_gray = stream.uniform() < config.grayscale_prob;

    // Crop and nearest-neighbor resize back to the input size.
    Tensor out = Tensor::zeros(image.shape);
    for (std::size_t y = 0; y < h; ++y) {
        const std::size_t sy =
            top + std::min(crop_h - 1, static_cast<std::size_t>((y + 0.5) * crop_h / h));
        for (std::size_t x = 0; x < w; ++x) {
            const std::size_t sx =
                left + std::min(crop_w - 1, static_cast<std::size_t>((x + 0.5) * crop_w / w));
            for (std::size_t c = 0; c < channels; ++c) {
                out.data[c * h * w + y * w + x] = image.data[c * h * w + sy * w + sx];
            }
        }
    }

    const auto clamp01 = [](double v) { return std::clamp(v, 0.0, 1.0); };

    if (f_brightness != 1.0) {
        for (float& v : out.data) v = static_cast<float>(clamp01(v * f_brightness));
    }

    if (f_contrast != 1.0) {
        double mean = 0.0;
        if (channels == 3) {
            for (std::size_t i = 0; i < h * w; ++i) {
                mean += luma(out.data[i], out.data[h * w + i], out.data[2 * h * w + i]);
            }
        } else {
            for (float v : out.data) mean += v;
            mean /= static_cast<double>(channels);
        }
        mean /= static_cast<double>(h * w);
        for (float& v : out.data) {
            v = static_cast<float>(clamp01(mean + f_contrast * (v - mean)));
        }
    }

    if (f_saturation != 1.0 && channels == 3) {
        for (std::size_t i = 0; i < h * w; ++i) {
            const double l = luma(out.data[i], out.data[h * w + i], out.data[2 * h * w + i]);
            for (std::size_t c = 0; c < 3; ++c) {
                float& v = out.data[c * h * w + i];
                v = static_cast<float>(clamp01(l + f_saturation * (v - l)));
            }
        }
    }

    if (to_gray && channels == 3) {
        for (std::size_t i = 0; i < h * w; ++i) {
            const float l = static_cast<float>(
                luma(out.data[i], out.data[h * w + i], out.data[2 * h * w + i]));
            out.data[i] = l;
            out.data[h * w + i] = l;
            out.data[2 * h * w + i] = l;
        }
    }

    for (std::size_t c = 0; c < channels; ++c) {
        const double mean = config.norm_mean[std::min<std::size_t>(c, 2)];
        const double sd = config.norm_std[std::min<std::size_t>(c, 2)];
        if (mean == 0.0 && sd == 1.0) continue;
        for (std::size_t i = 0; i < h * w; ++i) {
            float& v = out.data[c * h * w + i];
            v = static_cast<float>((v - mean) / sd);
        }
    }
    return out;
}

Tensor normalize_only(const Tensor& image, const AugmentConfig& config) {
    if (image.rank() != 3) throw ShapeError("normalize_only expects a [C x H x W] image");
    Tensor out = image;
    const std::size_t channels = image.dim(0), plane = image.dim(1) * image.dim(2);
    for (std::size_t c = 0; c < channels; ++c) {
        const double mean = config.norm_mean[std::min<std::size_t>(c, 2)];
        const double sd = config.norm_std[std::min<std::size_t>(c, 2)];
        if (mean == 0.0 && sd == 1.0) continue;
        for (std::size_t i = 0; i < plane; ++i) {
            float& v = out.data[c * plane + i];
            v = static_cast<float>((v - mean) / sd);
        }
    }
    return out;
}

namespace {

Tensor image_of_batch(const Batch& batch, std::size_t k) {
    const std::size_t c = batch.images.dim(1), h = batch.images.dim(2), w = batch.images.dim(3);
    Tensor img = Tensor::zeros({c, h, w});
    std::copy(batch.images.data.begin() + static_cast<std::ptrdiff_t>(k * img.size()),
              batch.images.data.begin() + static_cast<std::ptrdiff_t>((k + 1) * img.size()),
              img.data.begin());
    return img;
}

} // namespace

Tensor make_contrastive_views(const Batch& batch, const AugmentConfig& config,
                              const RandomStream& stream) {
    const std::size_t n = batch.size();
    const std::size_t c = batch.images.dim(1), h = batch.images.dim(2), w = batch.images.dim(3);
    Tensor out = Tensor::zeros({2 * n, c, h, w});
    for (std::size_t k = 0; k < n; ++k) {
        const Tensor img = image_of_batch(batch, k);
        for (std::size_t view = 0; view < 2; ++view) {
            RandomStream view_stream = stream.fork(2 * k + view);
            const Tensor aug = augment_view(img, config, view_stream);
            std::copy(aug.data.begin(), aug.data.end(),
                      out.data.begin() + static_cast<std::ptrdiff_t>((2 * k + view) * aug.size()));
        }
    }
    return out;
}

Tensor augment_batch(const Batch& batch, const AugmentConfig& config, const RandomStream& stream) {
    const std::size_t n = batch.size();
    const std::size_t c = batch.images.dim(1), h = batch.images.dim(2), w = batch.images.dim(3);
    Tensor out = Tensor::zeros({n, c, h, w});
    for (std::size_t k = 0; k < n; ++k) {
        const Tensor img = image_of_batch(batch, k);
        RandomStream view_stream = stream.fork(2 * k);
        const Tensor aug = augment_view(img, config, view_stream);
        std::copy(aug.data.begin(), aug.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(k * aug.size()));
    }
    return out;
}

Tensor normalized_images(const Dataset& dataset, const AugmentConfig& config) {
    if (dataset.images.empty()) throw Error("normalized_images: empty dataset");
    const Tensor& first = dataset.images.front().pixels;
    Tensor out = Tensor::zeros({dataset.size(), first.dim(0), first.dim(1), first.dim(2)});
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Tensor norm = normalize_only(dataset.images[i].pixels, config);
        std::copy(norm.data.begin(), norm.data.end(),
                  out.data.begin() + static_cast<std::ptrdiff_t>(i * norm.size()));
    }
    return out;
}

std::vector<int> dataset_labels(const Dataset& dataset) {
    std::vector<int> labels;
    labels.reserve(dataset.size());
    for (const LabeledImage& img : dataset.images) labels.push_back(img.label);
    return labels;
}

std::size_t count_labeled(const Dataset& dataset) {
    std::size_t n = 0;
    for (const LabeledImage& img : dataset.images) {
        if (img.label != kUnlabeled) ++n;
    }
    return n;
}

} // namespace srcl
