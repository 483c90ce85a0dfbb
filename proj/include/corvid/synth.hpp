#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "corvid/classifier.hpp"
#include "corvid/identity.hpp"
#include "corvid/matcher.hpp"
#include "corvid/metrics.hpp"
#include "corvid/tracks.hpp"

namespace corvid::synth {

struct SynthConfig {
    std::uint64_t seed = 7;
    std::size_t n_birds = 60;
    ColorTable colors = ColorTable::chirp_default();
    ParseOptions parse{};

    // ring crops
    double noise_sigma = 0.0;
    int crop_width = 10;
    int crop_height = 8;
    std::size_t train_per_class = 10;

    // re-id clips
    std::size_t n_clips = 50;
    std::size_t frames_per_clip = 25;
    double drop_prob = 0.0;
    double leg_spacing_px = 40.0;
    double ring_spacing_px = 5.0;

    // benchmark videos
    std::size_t n_videos = 12;
    long video_length_frames = 3000;
    double fps = 25.0;
    double peck_rate_min = 2.0;   // pecks / minute of presence
    double peck_rate_max = 30.0;
    double fragment_rate = 1.0 / 400;  // predicted-track cut probability per frame
    double id_corruption = 0.0;        // fraction of predicted tracklets given a wrong id
    long peck_jitter_frames = 0;       // uniform ± jitter applied to predicted pecks
    double box_jitter = 0.02;          // Gaussian SD of box offset, relative to box size

    // Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

// splitmix64-based derivation of independent sub-seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0);

// Elliptical blob of `reference` with N(0, sigma) noise per channel, clipped
// to [0,255], on a zero background.
RingCrop gen_ring_crop(const Rgb& reference, double sigma, std::uint64_t seed, int width = 10, int height = 8);

// Population combinations are unique up to swapping left and right legs, since
// a single view cannot tell legs apart.
std::vector<RosterMember> gen_population(const SynthConfig& config);

struct Territory {
    std::string id;
    Roster within_territory;
    Roster with_neighbours;
};

struct World {
    Roster all;
    std::vector<Territory> territories;
};

World gen_world(const SynthConfig& config);

struct ClipTruth {
    std::string clip_id;
    std::string bird_id;
    std::string combination;
    std::string territory;
};

struct GeneratedClip {
    Clip clip;
    ClipTruth truth;
};

// One frame per config.frames_per_clip; each ring independently dropped with
// config.drop_prob.
GeneratedClip gen_clip(const RosterMember& bird, const SynthConfig& config, std::uint64_t seed,
                       std::string clip_id = "clip");

struct GeneratedVideo {
    VideoManifest manifest;
    VideoData truth;
    VideoData predicted;
    std::vector<double> peck_rates;  // per territory member, pecks/min of presence
};

// Ground truth: one tracklet per contiguous visit, piecewise-linear motion,
// Poisson pecks. Predictions: truth tracklets cut into fragments, jittered,
// with a config.id_corruption fraction relabelled. The random draws behind the
// corruption are shared across corruption rates, so raising the rate only adds
// relabelled fragments.
GeneratedVideo gen_video(const Territory& territory, const SynthConfig& config, std::size_t video_index);

struct DatasetSummary {
    std::size_t birds = 0;
    std::size_t territories = 0;
    std::size_t training_crops = 0;
    std::size_t clips = 0;
    std::size_t videos = 0;
};

// Writes the full dataset layout:
//   color_table.csv, truth.json
//   train/manifest.jsonl, train/crops/*.ppm
//   rosters/all.json, rosters/<territory>/{within_territory,with_neighbours}.json
//   clips/index.json, clips/<id>.jsonl, clips/<id>.truth.json
//   videos/truth/<vid>/{manifest.json,tracks.csv,pecks.csv}, videos/pred/<vid>/{tracks.csv,pecks.csv}
DatasetSummary write_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace corvid::synth
