#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corvid/matcher.hpp"
#include "corvid/tracks.hpp"

namespace corvid {

// ---- re-identification ----------------------------------------------------

struct ReIdResult {
    IdRanking ranking;
    std::string true_id;
};

// Fraction of clips whose first k ids contain the true id; empty rankings are
// misses. Throws TrueIdNotInRoster.
double topk_accuracy(std::span<const ReIdResult> results, std::size_t k);

struct ReIdReportRow {
    std::string split;
    RosterScope scope = RosterScope::WithinTerritory;
    double top1 = 0;
    double top3 = 0;
    std::size_t n_clips = 0;
};

ReIdReportRow reid_report(std::span<const ReIdResult> results, std::string split, RosterScope scope);

// ---- lower-level application metrics --------------------------------------

struct FrameCorrectness {
    std::size_t truth_frames = 0;    // all ground-truth track-frames
    std::size_t matched_frames = 0;  // of those, matched to a prediction
    std::size_t correct_frames = 0;  // matched and carrying the right bird id

    double over_truth() const { return truth_frames ? double(correct_frames) / double(truth_frames) : 1.0; }
    double over_matched() const { return matched_frames ? double(correct_frames) / double(matched_frames) : 1.0; }
    FrameCorrectness& operator+=(const FrameCorrectness& o);
};

FrameCorrectness prop_correct_frames(std::span<const FrameMatch> correspondence, std::span<const Tracklet> predicted,
                                     std::span<const Tracklet> truth);

struct PeckScores {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
};

struct PeckWindowReport {
    std::map<std::string, PeckScores> per_bird;  // birds with at least one peck on either side
    PeckScores macro;                            // mean over per_bird; 1/1/1 when per_bird is empty
};

long window_index(long frame, double fps, double window_s);

PeckWindowReport peck_window_prf(std::span<const PeckEvent> predicted, std::span<const PeckEvent> truth, double fps,
                                 double window_s = 1.0);

// ---- higher-level biological measures -------------------------------------

// Pecks per minute.
double feeding_rate(std::size_t pecks, long video_length_frames, double fps);

// Fraction of the video during which both birds are present.
double cooccurrence_rate(const PresenceTimeline& timeline, const std::string& a, const std::string& b,
                         long video_length_frames);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

struct ErrorStats {
    std::size_t n = 0;
    double mean = 0;
    double median = 0;
    double sd = 0;                    // population SD of |predicted - truth|
    std::optional<double> pearson_r;  // nullopt when a side has zero variance or n < 2
};

ErrorStats error_stats(std::span<const double> predicted, std::span<const double> truth);

// ---- per-video evaluation -------------------------------------------------

struct IndividualMeasure {
    std::string video_id;
    std::string bird_id;
    double predicted = 0;
    double truth = 0;
};

struct PairMeasure {
    std::string video_id;
    std::string bird_a;
    std::string bird_b;
    double predicted = 0;
    double truth = 0;
};

struct VideoData {
    std::vector<Tracklet> tracks;
    std::vector<PeckEvent> pecks;
};

struct VideoEvaluation {
    std::string video_id;
    FrameCorrectness frames;
    PeckWindowReport pecks;
    std::vector<IndividualMeasure> feeding;
    std::vector<PairMeasure> cooccurrence;
};

struct EvaluateOptions {
    double iou_min = 0.5;
    double window_s = 1.0;
};

// Individuals are the territory roster plus every bird id seen on either side.
VideoEvaluation evaluate_video(const VideoData& predicted, const VideoData& truth, const VideoManifest& manifest,
                               const EvaluateOptions& options = {});

struct BenchmarkReport {
    std::size_t videos = 0;
    double prop_correct_frames = 0;
    double prop_correct_frames_matched = 0;
    double peck_precision = 0;
    double peck_recall = 0;
    double peck_f1 = 0;
    ErrorStats feeding_rate_errors;
    ErrorStats cooccurrence_errors;
};

// Pools track-frames, (video, bird) peck scores, individuals and pairs across videos.
BenchmarkReport aggregate(std::span<const VideoEvaluation> videos);

struct VideoCase {
    VideoData predicted;
    VideoData truth;
    VideoManifest manifest;
};

struct BaselineReport {
    std::size_t trials = 0;
    BenchmarkReport mean;  // each statistic averaged over trials; r averaged over trials where defined
    // r computed once on per-individual / per-pair predictions averaged over trials
    std::optional<double> feeding_r_of_mean;
    std::optional<double> cooccurrence_r_of_mean;
};

// Re-assigns every predicted tracklet a uniformly random territory member,
// carrying its pecks along, and evaluates each trial.
BaselineReport random_assignment_baseline(std::span<const VideoCase> videos, std::size_t trials, std::uint64_t seed,
                                          const EvaluateOptions& options = {});

// Index of the predicted tracklet a peck belongs to: the tracklet with the
// peck's bird id covering the frame, else the temporally nearest one.
std::optional<std::size_t> owning_tracklet(const PeckEvent& peck, std::span<const Tracklet> tracks);

// ---- report output --------------------------------------------------------

std::string report_to_json(const BenchmarkReport& report, const std::optional<BaselineReport>& baseline);
// Lower-level table: method,prop_correct_frames,prop_correct_frames_matched,peck_precision,peck_recall,peck_f1
std::string lower_level_csv(const BenchmarkReport& report, const std::optional<BaselineReport>& baseline);
// Higher-level table: method,measure,mean_abs_error,median_abs_error,sd_abs_error,pearson_r
std::string higher_level_csv(const BenchmarkReport& report, const std::optional<BaselineReport>& baseline);
std::string feeding_scatter_csv(std::span<const VideoEvaluation> videos);
std::string cooccurrence_scatter_csv(std::span<const VideoEvaluation> videos);
std::string reid_table_csv(std::span<const ReIdReportRow> rows);

}  // namespace corvid
