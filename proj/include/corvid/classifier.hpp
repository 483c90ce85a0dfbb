#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corvid/identity.hpp"
#include "corvid/image.hpp"

namespace corvid {

struct RingCrop {
    RgbImage pixels;
    long frame = 0;
    Point centroid;
};

struct HistogramBinning {
    int hue_bins = 18;
    int saturation_bins = 8;
    int value_bins = 8;

    std::size_t dims() const noexcept { return static_cast<std::size_t>(hue_bins + saturation_bins + value_bins); }
    bool operator==(const HistogramBinning&) const = default;
};

// Concatenated H|S|V histograms. Pixels with V == 0 are treated as masked
// background and excluded, so each channel counts the foreground pixels only.
class HsvHistogram {
public:
    HsvHistogram(HistogramBinning binning, std::vector<double> bins, double pixel_count);

    const HistogramBinning& binning() const noexcept { return binning_; }
    std::span<const double> bins() const noexcept { return bins_; }
    double pixel_count() const noexcept { return pixel_count_; }

    // Each channel scaled to sum to 1; all zeros when no foreground pixel exists.
    HsvHistogram normalized() const;

private:
    HistogramBinning binning_;
    std::vector<double> bins_;
    double pixel_count_;
};

HsvHistogram extract_histogram(const Raster3& hsv, const HistogramBinning& binning = {});

// resize_20x20 → rgb_to_hsv → extract_histogram → normalized.
HsvHistogram crop_features(const RgbImage& crop, const HistogramBinning& binning = {});

// χ² distance ½ Σ (a-b)²/(a+b), skipping bins empty on both sides.
double chi_squared(std::span<const double> a, std::span<const double> b);

// Probability per class of a ColorTable, in table order.
class ColorProbVector {
public:
    ColorProbVector() = default;
    // Throws SchemaError unless entries are in [0,1] and sum to 1 ± 1e-9.
    explicit ColorProbVector(std::vector<double> probs);
    // Divides by the sum; throws SchemaError on negative entries or zero sum.
    static ColorProbVector normalize(std::vector<double> weights);
    static ColorProbVector delta(std::size_t n, ColorIndex hot);
    static ColorProbVector uniform(std::size_t n);

    std::size_t size() const noexcept { return probs_.size(); }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::span<const double> values() const noexcept { return probs_; }
    ColorIndex argmax() const;

private:
    std::vector<double> probs_;
};

// Anything mapping a ring crop to per-color probabilities can drive the matcher.
class RingClassifier {
public:
    virtual ~RingClassifier() = default;
    virtual const ColorTable& colors() const = 0;
    virtual ColorProbVector predict(const RingCrop& crop) const = 0;
};

struct LabeledCrop {
    RingCrop crop;
    ColorIndex label = 0;
};

struct TrainOptions {
    double temperature = 1.0;
    HistogramBinning binning{};
};

// Nearest-prototype classifier: one mean histogram per class, probabilities
// from a softmax over -χ²/(distance_scale · temperature).
class PrototypeModel final : public RingClassifier {
public:
    static constexpr int kFormatVersion = 1;
    // Floor for the pooled within-class dispersion used as distance scale.
    static constexpr double kMinDistanceScale = 0.05;

    PrototypeModel(ColorTable colors, HistogramBinning binning, std::vector<std::vector<double>> prototypes,
                   double distance_scale, double temperature, std::size_t training_samples);

    const ColorTable& colors() const override { return colors_; }
    ColorProbVector predict(const RingCrop& crop) const override;
    ColorProbVector predict_histogram(const HsvHistogram& normalized_hist) const;

    const HistogramBinning& binning() const noexcept { return binning_; }
    std::span<const std::vector<double>> prototypes() const noexcept { return prototypes_; }
    double distance_scale() const noexcept { return distance_scale_; }
    double temperature() const noexcept { return temperature_; }
    std::size_t training_samples() const noexcept { return training_samples_; }

    // Same model with another temperature.
    PrototypeModel with_temperature(double temperature) const;

    std::string to_json() const;
    // Rejects files whose color-table hash disagrees with `expected` when given.
    static PrototypeModel from_json(std::string_view text, const ColorTable* expected = nullptr);

private:
    ColorTable colors_;
    HistogramBinning binning_;
    std::vector<std::vector<double>> prototypes_;
    double distance_scale_;
    double temperature_;
    std::size_t training_samples_;
};

// Deterministic in input order. Throws MissingClass if a class has no sample.
PrototypeModel train(std::span<const LabeledCrop> samples, const ColorTable& colors, const TrainOptions& options = {});

// JSON-lines manifest `{"image": path, "label": "o"}`; image paths are PPM
// files relative to the manifest's directory.
std::vector<LabeledCrop> load_labeled_manifest(const std::filesystem::path& path, const ColorTable& colors);

}  // namespace corvid
