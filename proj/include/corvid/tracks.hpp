#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "corvid/identity.hpp"

namespace corvid {

struct BoundingBox {
    double x = 0, y = 0, w = 1, h = 1;  // top-left origin, pixels

    bool valid() const noexcept;
    bool operator==(const BoundingBox&) const = default;
};

double iou(const BoundingBox& a, const BoundingBox& b);

struct Tracklet {
    long track_id = 0;
    std::map<long, BoundingBox> frames;
    std::optional<std::string> bird_id;

    long first_frame() const { return frames.begin()->first; }
    long last_frame() const { return frames.rbegin()->first; }
};

// Joins `b` onto `a` (a ends before b starts), filling the gap with
// componentwise-lerped boxes. Keeps a's track_id.
// Throws OverlapError or IdentityMismatch.
Tracklet join_tracks(const Tracklet& a, const Tracklet& b);

// Joins all tracklets of each identified bird in time order; unidentified
// tracklets pass through unchanged. Output sorted by track_id.
std::vector<Tracklet> join_by_identity(std::span<const Tracklet> tracklets);

struct FrameMatch {
    long frame = 0;
    long predicted_track = 0;
    long truth_track = 0;
    double iou = 0;
};

// Per frame, a one-to-one predicted↔truth assignment maximising total IoU over
// pairs with IoU >= iou_min. Sorted by (frame, truth_track).
std::vector<FrameMatch> match_frames(std::span<const Tracklet> predicted, std::span<const Tracklet> truth,
                                     double iou_min = 0.5);

// Maximum-weight assignment on a rows × cols matrix of non-negative weights.
// Returns, per row, the assigned column or -1.
std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights);

struct FrameInterval {
    long first = 0;
    long last = 0;  // inclusive
    bool operator==(const FrameInterval&) const = default;
};

struct PresenceTimeline {
    std::map<std::string, std::vector<FrameInterval>> intervals;  // disjoint, sorted

    bool present(std::string_view bird_id, long frame) const;
    std::size_t frames_present(std::string_view bird_id) const;
};

// Per bird, the union of frames covered by its tracklets. Throws SchemaError
// for frames outside [0, video_length).
PresenceTimeline presence_timeline(std::span<const Tracklet> tracklets, long video_length);

struct PeckEvent {
    std::string bird_id;
    long frame = 0;
    bool operator==(const PeckEvent&) const = default;
};

struct VideoManifest {
    std::string video_id;
    double fps = 25.0;
    long length_frames = 0;
    RosterSet rosters;
};

// Track CSV (MOT layout with header): frame,track_id,x,y,w,h,bird_id.
std::vector<Tracklet> parse_tracks_csv(std::string_view text, std::string_view source = "tracks");
std::vector<Tracklet> load_tracks_csv(const std::filesystem::path& path);
std::string tracks_to_csv(std::span<const Tracklet> tracklets);

// Peck CSV with header: frame,bird_id.
std::vector<PeckEvent> parse_pecks_csv(std::string_view text, std::string_view source = "pecks");
std::vector<PeckEvent> load_pecks_csv(const std::filesystem::path& path);
std::string pecks_to_csv(std::span<const PeckEvent> pecks);

// {"video_id", "fps", "length_frames", "rosters": {"within_territory": [...], "with_neighbours": [...], "all": [...]}}
// Each roster entry is {"bird_id", "combination"}; missing scopes are allowed.
VideoManifest parse_manifest(std::string_view text, const ColorTable& colors, const ParseOptions& options = {});
VideoManifest load_manifest(const std::filesystem::path& path, const ColorTable& colors,
                            const ParseOptions& options = {});
std::string manifest_to_json(const VideoManifest& manifest);

std::string matches_to_csv(std::span<const FrameMatch> matches);

}  // namespace corvid
