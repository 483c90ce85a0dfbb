#include "corvid/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "corvid/error.hpp"
#include "corvid/io.hpp"

namespace corvid {

using json = nlohmann::json;

HsvHistogram::HsvHistogram(HistogramBinning binning, std::vector<double> bins, double pixel_count)
    : binning_(binning), bins_(std::move(bins)), pixel_count_(pixel_count) {
    if (bins_.size() != binning_.dims()) throw std::invalid_argument("HsvHistogram: bin count mismatch");
}

HsvHistogram HsvHistogram::normalized() const {
    std::vector<double> out(bins_.size(), 0.0);
    const int widths[3] = {binning_.hue_bins, binning_.saturation_bins, binning_.value_bins};
    std::size_t offset = 0;
    for (int width : widths) {
        auto first = bins_.begin() + static_cast<std::ptrdiff_t>(offset);
        double total = std::accumulate(first, first + width, 0.0);
        if (total > 0)
            for (int i = 0; i < width; ++i) out[offset + i] = bins_[offset + i] / total;
        offset += static_cast<std::size_t>(width);
    }
    return HsvHistogram(binning_, std::move(out), pixel_count_);
}

HsvHistogram extract_histogram(const Raster3& hsv, const HistogramBinning& binning) {
    std::vector<double> bins(binning.dims(), 0.0);
    const std::size_t s_off = static_cast<std::size_t>(binning.hue_bins);
    const std::size_t v_off = s_off + static_cast<std::size_t>(binning.saturation_bins);
    double count = 0;
    for (const auto& p : hsv.pixels) {
        if (p.c2 <= 0.0) continue;
        int hb = std::min(static_cast<int>(p.c0 / 360.0 * binning.hue_bins), binning.hue_bins - 1);
        int sb = std::min(static_cast<int>(p.c1 * binning.saturation_bins), binning.saturation_bins - 1);
        int vb = std::min(static_cast<int>(p.c2 * binning.value_bins), binning.value_bins - 1);
        bins[static_cast<std::size_t>(std::max(hb, 0))] += 1;
        bins[s_off + static_cast<std::size_t>(std::max(sb, 0))] += 1;
        bins[v_off + static_cast<std::size_t>(vb)] += 1;
        count += 1;
    }
    return HsvHistogram(binning, std::move(bins), count);
}

HsvHistogram crop_features(const RgbImage& crop, const HistogramBinning& binning) {
    return extract_histogram(rgb_to_hsv(resize_20x20(crop)), binning).normalized();
}

double chi_squared(std::span<const double> a, std::span<const double> b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double s = a[i] + b[i];
        if (s > 0) d += (a[i] - b[i]) * (a[i] - b[i]) / s;
    }
    return 0.5 * d;
}

ColorProbVector::ColorProbVector(std::vector<double> probs) : probs_(std::move(probs)) {
    double sum = 0;
    for (double p : probs_) {
        if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorKind::SchemaError, "probability outside [0,1]");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw Error(ErrorKind::SchemaError, "probabilities do not sum to 1");
}

ColorProbVector ColorProbVector::normalize(std::vector<double> weights) {
    double sum = 0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw Error(ErrorKind::SchemaError, "negative or non-finite weight");
        sum += w;
    }
    if (sum <= 0) throw Error(ErrorKind::SchemaError, "weights sum to zero");
    for (double& w : weights) w /= sum;
    return ColorProbVector(std::move(weights));
}

ColorProbVector ColorProbVector::delta(std::size_t n, ColorIndex hot) {
    std::vector<double> p(n, 0.0);
    p.at(hot) = 1.0;
    return ColorProbVector(std::move(p));
}

ColorProbVector ColorProbVector::uniform(std::size_t n) { return ColorProbVector(std::vector<double>(n, 1.0 / n)); }

ColorIndex ColorProbVector::argmax() const {
    return static_cast<ColorIndex>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

PrototypeModel::PrototypeModel(ColorTable colors, HistogramBinning binning, std::vector<std::vector<double>> prototypes,
                               double distance_scale, double temperature, std::size_t training_samples)
    : colors_(std::move(colors)),
      binning_(binning),
      prototypes_(std::move(prototypes)),
      distance_scale_(distance_scale),
      temperature_(temperature),
      training_samples_(training_samples) {
    if (prototypes_.size() != colors_.size())
        throw Error(ErrorKind::SchemaError, "model: need exactly one prototype per color class");
    for (const auto& p : prototypes_)
        if (p.size() != binning_.dims()) throw Error(ErrorKind::SchemaError, "model: prototype has wrong length");
    if (!(temperature_ > 0) || !std::isfinite(temperature_))
        throw Error(ErrorKind::SchemaError, "model: temperature must be positive");
    if (!(distance_scale_ > 0) || !std::isfinite(distance_scale_))
        throw Error(ErrorKind::SchemaError, "model: distance_scale must be positive");
}

ColorProbVector PrototypeModel::predict_histogram(const HsvHistogram& hist) const {
    std::vector<double> logits(prototypes_.size());
    for (std::size_t c = 0; c < prototypes_.size(); ++c)
        logits[c] = -chi_squared(hist.bins(), prototypes_[c]) / (distance_scale_ * temperature_);
    double mx = *std::max_element(logits.begin(), logits.end());
    double sum = 0;
    for (double& l : logits) {
        l = std::exp(l - mx);
        sum += l;
    }
    for (double& l : logits) l /= sum;
    return ColorProbVector(std::move(logits));
}

ColorProbVector PrototypeModel::predict(const RingCrop& crop) const {
    return predict_histogram(crop_features(crop.pixels, binning_));
}

PrototypeModel PrototypeModel::with_temperature(double temperature) const {
    return PrototypeModel(colors_, binning_, prototypes_, distance_scale_, temperature, training_samples_);
}

std::string PrototypeModel::to_json() const {
    json doc;
    doc["format"] = "corvid-prototype-model";
    doc["version"] = kFormatVersion;
    doc["color_table_hash"] = colors_.hash_hex();
    doc["bins"] = {{"hue", binning_.hue_bins}, {"saturation", binning_.saturation_bins}, {"value", binning_.value_bins}};
    doc["temperature"] = temperature_;
    doc["distance_scale"] = distance_scale_;
    doc["training_samples"] = training_samples_;
    doc["classes"] = json::array();
    for (std::size_t c = 0; c < prototypes_.size(); ++c)
        doc["classes"].push_back({{"code", std::string(1, colors_[static_cast<ColorIndex>(c)].code)},
                                  {"display_name", colors_[static_cast<ColorIndex>(c)].display_name},
                                  {"prototype", prototypes_[c]}});
    return doc.dump(1) + "\n";
}

PrototypeModel PrototypeModel::from_json(std::string_view text, const ColorTable* expected) {
    try {
        auto doc = json::parse(text);
        if (doc.at("format") != "corvid-prototype-model")
            throw Error(ErrorKind::SchemaError, "model: unrecognised format tag");
        if (doc.at("version").get<int>() != kFormatVersion)
            throw Error(ErrorKind::SchemaError, "model: unsupported version");
        std::vector<ColorClass> classes;
        std::vector<std::vector<double>> prototypes;
        for (const auto& c : doc.at("classes")) {
            auto code = c.at("code").get<std::string>();
            if (code.size() != 1) throw Error(ErrorKind::SchemaError, "model: class code must be one character");
            ColorClass cls{code[0], c.at("display_name").get<std::string>(), std::nullopt};
            if (expected)
                if (auto idx = expected->find(cls.code)) cls.reference = (*expected)[*idx].reference;
            classes.push_back(std::move(cls));
            prototypes.push_back(c.at("prototype").get<std::vector<double>>());
        }
        ColorTable table(std::move(classes));
        if (table.hash_hex() != doc.at("color_table_hash").get<std::string>())
            throw Error(ErrorKind::SchemaError, "model: color_table_hash does not match its classes");
        if (expected && !(*expected == table))
            throw Error(ErrorKind::SchemaError, "model: trained on color table " + table.hash_hex() +
                                                    ", but active table is " + expected->hash_hex());
        const auto& bins = doc.at("bins");
        HistogramBinning binning{bins.at("hue").get<int>(), bins.at("saturation").get<int>(),
                                 bins.at("value").get<int>()};
        if (binning.hue_bins <= 0 || binning.saturation_bins <= 0 || binning.value_bins <= 0)
            throw Error(ErrorKind::SchemaError, "model: bin counts must be positive");
        return PrototypeModel(std::move(table), binning, std::move(prototypes), doc.at("distance_scale").get<double>(),
                              doc.at("temperature").get<double>(), doc.at("training_samples").get<std::size_t>());
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("model: ") + e.what());
    }
}

PrototypeModel train(std::span<const LabeledCrop> samples, const ColorTable& colors, const TrainOptions& options) {
    const std::size_t n = colors.size();
    const std::size_t dims = options.binning.dims();
    std::vector<std::vector<double>> sums(n, std::vector<double>(dims, 0.0));
    std::vector<std::size_t> counts(n, 0);
    std::vector<HsvHistogram> features;
    features.reserve(samples.size());
    for (const auto& s : samples) {
        if (s.label >= n) throw Error(ErrorKind::SchemaError, "training label outside color table");
        features.push_back(crop_features(s.crop.pixels, options.binning));
        auto bins = features.back().bins();
        for (std::size_t d = 0; d < dims; ++d) sums[s.label][d] += bins[d];
        ++counts[s.label];
    }
    for (std::size_t c = 0; c < n; ++c) {
        if (counts[c] == 0)
            throw Error(ErrorKind::MissingClass, std::string("no training samples for class '") +
                                                     colors[static_cast<ColorIndex>(c)].code + "'");
        for (double& v : sums[c]) v /= static_cast<double>(counts[c]);
    }
    double dispersion = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) dispersion += chi_squared(features[i].bins(), sums[samples[i].label]);
    dispersion /= static_cast<double>(samples.size());
    return PrototypeModel(colors, options.binning, std::move(sums),
                          std::max(dispersion, PrototypeModel::kMinDistanceScale), options.temperature, samples.size());
}

std::vector<LabeledCrop> load_labeled_manifest(const std::filesystem::path& path, const ColorTable& colors) {
    auto text = io::read_text(path);
    auto base = path.parent_path();
    std::vector<LabeledCrop> out;
    std::size_t line_no = 0;
    for (auto line : io::lines(text)) {
        ++line_no;
        if (io::trim(line).empty()) continue;
        auto where = path.string() + ":" + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaError, where + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("image") || !rec["image"].is_string() || !rec.contains("label") ||
            !rec["label"].is_string() || rec["label"].get<std::string>().size() != 1)
            throw Error(ErrorKind::SchemaError, where + ": expected {\"image\": path, \"label\": code}");
        auto label = colors.find(rec["label"].get<std::string>()[0]);
        if (!label) throw Error(ErrorKind::UnknownColorCode, where + ": label not in color table");
        auto image = decode_ppm(io::read_text(base / rec["image"].get<std::string>()));
        out.push_back({RingCrop{std::move(image), 0, {}}, *label});
    }
    return out;
}

}  // namespace corvid
