#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corvid/classifier.hpp"
#include "corvid/identity.hpp"

namespace corvid {

struct RingDetection {
    long frame = 0;
    Point centroid;
    ColorProbVector prob;
};

// Two rings stacked on one leg (top has the smaller image y), or a lone ring.
struct RingPairObservation {
    long frame = 0;
    RingDetection top;
    std::optional<RingDetection> bottom;
};

// Greedy nearest-first pairing within one frame: the globally closest
// unmatched couple with distance <= threshold is linked first. Unlinked rings
// become single-ring observations. Output order: linked pairs in link order,
// then singles in input order.
std::vector<RingPairObservation> pair_rings(std::span<const RingDetection> detections, double threshold);

// Joint (top, bottom) color probabilities over n × (n + 1) cells; the last
// column holds "no bottom ring".
class PairTable {
public:
    explicit PairTable(std::size_t colors = 0) : n_(colors), cells_(colors * (colors + 1), 0.0) {}

    std::size_t colors() const noexcept { return n_; }
    double at(ColorIndex top, ColorIndex bottom) const { return cells_[index(top, bottom)]; }
    double& at(ColorIndex top, ColorIndex bottom) { return cells_[index(top, bottom)]; }
    double at(const Leg& leg) const { return at(leg.top, leg.bottom); }
    std::span<const double> cells() const noexcept { return cells_; }
    double total() const;

    PairTable& operator+=(const PairTable& other);

private:
    std::size_t index(ColorIndex top, ColorIndex bottom) const {
        return static_cast<std::size_t>(top) * (n_ + 1) + (bottom == kAbsent ? n_ : bottom);
    }
    std::size_t n_;
    std::vector<double> cells_;
};

// Independence product p_top(a)·p_bottom(b); singles put p_top(a) in the
// no-bottom column.
PairTable pair_probability(const RingPairObservation& obs);

struct PairProbabilityMatrix {
    PairTable mass;
    std::size_t frames_pooled = 0;
    std::size_t pairs_pooled = 0;

    bool empty() const noexcept { return pairs_pooled == 0; }
};

// Elementwise sum of every observation's table.
PairProbabilityMatrix pool_clip(std::span<const RingPairObservation> observations, std::size_t colors);

struct FrameObservations {
    long frame = 0;
    std::vector<RingPairObservation> pairs;
};

// Groups observations by frame, frames ascending.
std::vector<FrameObservations> group_by_frame(std::span<const RingPairObservation> observations);

struct RankedCandidate {
    std::string bird_id;
    std::string combination;
    double score = 0;
};

struct IdRanking {
    std::vector<RankedCandidate> scores;  // descending score, ties by combination string
    bool empty = false;                   // clip had no ring observations
    std::size_t observations = 0;         // pair and single-ring observations over the clip
    std::size_t singletons = 0;           // of which scored through the ABSENT column

    // 1-based position of `bird_id`, or nullopt if absent.
    std::optional<std::size_t> rank_of(std::string_view bird_id) const;
};

// Best leg assignment for one frame: each leg takes at most one observation,
// each observation at most one leg; the frame contributes the largest sum of
// P_obs(leg colors).
double frame_score(std::span<const PairTable> frame_tables, const RingCombination& candidate);

// Sums frame_score over frames. Throws EmptyRoster.
IdRanking score_candidates(const PairProbabilityMatrix& matrix, std::span<const FrameObservations> frames,
                           const Roster& roster);

std::vector<std::string> top_k(const IdRanking& ranking, std::size_t k);

// ---- clip input -----------------------------------------------------------

struct ClipRing {
    Point centroid;
    std::optional<RgbImage> crop;
    std::optional<ColorProbVector> probs;
    // Ring bounding box; taken from the crop when not given explicitly.
    std::optional<double> width, height;

    std::optional<double> diagonal() const;
};

struct ClipFrame {
    long frame = 0;
    std::vector<ClipRing> rings;
};

struct Clip {
    std::string id;
    std::vector<ClipFrame> frames;
};

// One JSON object per line: {"frame": n, "rings": [{"cx", "cy", "crop" | "probs", ["w", "h"]}]}.
// `crop` is a PPM path relative to `base_dir`, or inline "base64:<ppm bytes>".
Clip parse_clip_jsonl(std::string_view text, std::string id, const ColorTable& colors,
                      const std::filesystem::path& base_dir = {});
Clip load_clip(const std::filesystem::path& path, const ColorTable& colors);
// Crops are written inline as base64 PPM.
std::string clip_to_jsonl(const Clip& clip, const ColorTable& colors);

struct PairingOptions {
    // Overrides the clip-relative default.
    std::optional<double> threshold_px;
    double median_diagonal_factor = 0.5;
};

// 0.5 × median ring bounding-box diagonal over the clip, unless overridden.
// Throws SchemaError when no ring carries a size and no override is set.
double pairing_threshold(const Clip& clip, const PairingOptions& options);

struct IdentifyResult {
    IdRanking ranking;
    PairProbabilityMatrix matrix;
    std::vector<FrameObservations> frames;
};

// predict → pair_rings → pair_probability → pool_clip → score_candidates.
// `classifier` may be null when every ring carries precomputed probabilities.
IdentifyResult identify_tracklet(const Clip& clip, const RingClassifier* classifier, const RosterSet& rosters,
                                 RosterScope scope, const PairingOptions& options = {});

std::string ranking_to_json(const IdRanking& ranking, std::string_view clip_id, RosterScope scope);

}  // namespace corvid
