#include "corvid/tracks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

#include <json.hpp>

#include "corvid/error.hpp"
#include "corvid/io.hpp"

namespace corvid {

using json = nlohmann::json;

bool BoundingBox::valid() const noexcept {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(w) && std::isfinite(h) && w > 0 && h > 0;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    double inter = ix * iy;
    double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0 ? inter / uni : 0.0;
}

Tracklet join_tracks(const Tracklet& a, const Tracklet& b) {
    if (a.bird_id != b.bird_id)
        throw Error(ErrorKind::IdentityMismatch, "tracks " + std::to_string(a.track_id) + " and " +
                                                     std::to_string(b.track_id) + " carry different bird ids");
    if (a.frames.empty() || b.frames.empty()) throw Error(ErrorKind::SchemaError, "cannot join an empty tracklet");
    if (a.last_frame() >= b.first_frame())
        throw Error(ErrorKind::OverlapError, "track " + std::to_string(a.track_id) + " ends at frame " +
                                                 std::to_string(a.last_frame()) + ", track " +
                                                 std::to_string(b.track_id) + " starts at " +
                                                 std::to_string(b.first_frame()));
    Tracklet out = a;
    const long f0 = a.last_frame();
    const long f1 = b.first_frame();
    const BoundingBox& p = a.frames.rbegin()->second;
    const BoundingBox& q = b.frames.begin()->second;
    const double span = static_cast<double>(f1 - f0);
    for (long f = f0 + 1; f < f1; ++f) {
        double t = static_cast<double>(f - f0) / span;
        out.frames[f] = {p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t, p.w + (q.w - p.w) * t, p.h + (q.h - p.h) * t};
    }
    out.frames.insert(b.frames.begin(), b.frames.end());
    return out;
}

std::vector<Tracklet> join_by_identity(std::span<const Tracklet> tracklets) {
    std::map<std::string, std::vector<const Tracklet*>> by_bird;
    std::vector<Tracklet> out;
    for (const auto& t : tracklets) {
        if (t.bird_id)
            by_bird[*t.bird_id].push_back(&t);
        else
            out.push_back(t);
    }
    for (auto& [bird, group] : by_bird) {
        std::sort(group.begin(), group.end(), [](const Tracklet* a, const Tracklet* b) {
            return std::tie(a->frames.begin()->first, a->track_id) < std::tie(b->frames.begin()->first, b->track_id);
        });
        Tracklet joined = *group.front();
        for (std::size_t i = 1; i < group.size(); ++i) joined = join_tracks(joined, *group[i]);
        out.push_back(std::move(joined));
    }
    std::sort(out.begin(), out.end(), [](const Tracklet& a, const Tracklet& b) { return a.track_id < b.track_id; });
    return out;
}

std::vector<int> max_weight_assignment(const std::vector<std::vector<double>>& weights) {
    const std::size_t rows = weights.size();
    const std::size_t cols = rows ? weights[0].size() : 0;
    const std::size_t n = std::max(rows, cols);
    std::vector<int> result(rows, -1);
    if (n == 0) return result;
    double wmax = 0;
    for (const auto& r : weights)
        for (double w : r) wmax = std::max(wmax, w);
    auto cost = [&](std::size_t i, std::size_t j) {
        double w = (i < rows && j < cols) ? weights[i][j] : 0.0;
        return wmax - w;
    };
    // Kuhn-Munkres with potentials, 1-based.
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0), v(n + 1, 0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<double> minv(n + 1, inf);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            std::size_t i0 = p[j0], j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    for (std::size_t j = 1; j <= n; ++j) {
        std::size_t i = p[j] - 1;
        if (i < rows && j - 1 < cols && weights[i][j - 1] > 0) result[i] = static_cast<int>(j - 1);
    }
    return result;
}

std::vector<FrameMatch> match_frames(std::span<const Tracklet> predicted, std::span<const Tracklet> truth,
                                     double iou_min) {
    if (!(iou_min > 0 && iou_min <= 1)) throw std::invalid_argument("match_frames: iou_min must be in (0,1]");
    using Entry = std::pair<long, BoundingBox>;
    auto index = [](std::span<const Tracklet> tracks) {
        std::map<long, std::vector<Entry>> by_frame;
        for (const auto& t : tracks)
            for (const auto& [f, box] : t.frames) by_frame[f].push_back({t.track_id, box});
        for (auto& [f, entries] : by_frame)
            std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
        return by_frame;
    };
    auto pred = index(predicted);
    auto gt = index(truth);

    std::vector<FrameMatch> out;
    for (const auto& [frame, truth_boxes] : gt) {
        auto it = pred.find(frame);
        if (it == pred.end()) continue;
        const auto& pred_boxes = it->second;
        std::vector<std::vector<double>> w(truth_boxes.size(), std::vector<double>(pred_boxes.size(), 0.0));
        for (std::size_t i = 0; i < truth_boxes.size(); ++i)
            for (std::size_t j = 0; j < pred_boxes.size(); ++j) {
                double v = iou(truth_boxes[i].second, pred_boxes[j].second);
                w[i][j] = v >= iou_min ? v : 0.0;
            }
        auto assign = max_weight_assignment(w);
        for (std::size_t i = 0; i < truth_boxes.size(); ++i)
            if (assign[i] >= 0)
                out.push_back({frame, pred_boxes[static_cast<std::size_t>(assign[i])].first, truth_boxes[i].first,
                               w[i][static_cast<std::size_t>(assign[i])]});
    }
    return out;
}

bool PresenceTimeline::present(std::string_view bird_id, long frame) const {
    auto it = intervals.find(std::string(bird_id));
    if (it == intervals.end()) return false;
    const auto& iv = it->second;
    auto pos = std::upper_bound(iv.begin(), iv.end(), frame, [](long f, const FrameInterval& i) { return f < i.first; });
    return pos != iv.begin() && std::prev(pos)->last >= frame;
}

std::size_t PresenceTimeline::frames_present(std::string_view bird_id) const {
    auto it = intervals.find(std::string(bird_id));
    if (it == intervals.end()) return 0;
    std::size_t n = 0;
    for (const auto& i : it->second) n += static_cast<std::size_t>(i.last - i.first + 1);
    return n;
}

PresenceTimeline presence_timeline(std::span<const Tracklet> tracklets, long video_length) {
    std::map<std::string, std::set<long>> frames;
    for (const auto& t : tracklets) {
        if (!t.bird_id) continue;
        auto& s = frames[*t.bird_id];
        for (const auto& [f, box] : t.frames) {
            if (f < 0 || f >= video_length)
                throw Error(ErrorKind::SchemaError, "track " + std::to_string(t.track_id) + " frame " +
                                                        std::to_string(f) + " outside video of length " +
                                                        std::to_string(video_length));
            s.insert(f);
        }
    }
    PresenceTimeline out;
    for (const auto& [bird, set] : frames) {
        auto& iv = out.intervals[bird];
        for (long f : set) {
            if (!iv.empty() && iv.back().last + 1 == f)
                iv.back().last = f;
            else
                iv.push_back({f, f});
        }
    }
    return out;
}

std::vector<Tracklet> parse_tracks_csv(std::string_view text, std::string_view source) {
    auto rows = io::lines(text);
    if (rows.empty() || io::trim(rows[0]) != "frame,track_id,x,y,w,h,bird_id")
        throw Error(ErrorKind::SchemaError,
                    std::string(source) + ": header must be `frame,track_id,x,y,w,h,bird_id`");
    std::map<long, Tracklet> tracks;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (io::trim(rows[i]).empty()) continue;
        auto where = std::string(source) + ":" + std::to_string(i + 1);
        auto f = io::split_csv_line(rows[i]);
        if (f.size() != 7) throw Error(ErrorKind::SchemaError, where + ": expected 7 fields");
        long frame = io::parse_int(f[0], where);
        long id = io::parse_int(f[1], where);
        BoundingBox box{io::parse_double(f[2], where), io::parse_double(f[3], where), io::parse_double(f[4], where),
                        io::parse_double(f[5], where)};
        if (frame < 0) throw Error(ErrorKind::SchemaError, where + ": negative frame");
        if (!box.valid()) throw Error(ErrorKind::SchemaError, where + ": box must be finite with w,h > 0");
        std::optional<std::string> bird = f[6].empty() ? std::nullopt : std::optional<std::string>(f[6]);
        auto [it, fresh] = tracks.try_emplace(id);
        auto& t = it->second;
        if (fresh) {
            t.track_id = id;
            t.bird_id = bird;
        } else if (t.bird_id != bird) {
            throw Error(ErrorKind::SchemaError, where + ": track " + std::to_string(id) + " changes bird_id");
        }
        if (!t.frames.emplace(frame, box).second)
            throw Error(ErrorKind::SchemaError, where + ": duplicate frame for track " + std::to_string(id));
    }
    std::vector<Tracklet> out;
    for (auto& [id, t] : tracks) out.push_back(std::move(t));
    return out;
}

std::vector<Tracklet> load_tracks_csv(const std::filesystem::path& path) {
    return parse_tracks_csv(io::read_text(path), path.string());
}

std::string tracks_to_csv(std::span<const Tracklet> tracklets) {
    struct Row {
        long frame, id;
        const BoundingBox* box;
        const std::optional<std::string>* bird;
    };
    std::vector<Row> rows;
    for (const auto& t : tracklets)
        for (const auto& [f, box] : t.frames) rows.push_back({f, t.track_id, &box, &t.bird_id});
    std::sort(rows.begin(), rows.end(),
              [](const Row& a, const Row& b) { return std::tie(a.frame, a.id) < std::tie(b.frame, b.id); });
    std::string out = "frame,track_id,x,y,w,h,bird_id\n";
    for (const auto& r : rows) {
        out += std::to_string(r.frame) + ',' + std::to_string(r.id) + ',' + io::format_double(r.box->x) + ',' +
               io::format_double(r.box->y) + ',' + io::format_double(r.box->w) + ',' + io::format_double(r.box->h) +
               ',' + r.bird->value_or("") + '\n';
    }
    return out;
}

std::vector<PeckEvent> parse_pecks_csv(std::string_view text, std::string_view source) {
    auto rows = io::lines(text);
    if (rows.empty() || io::trim(rows[0]) != "frame,bird_id")
        throw Error(ErrorKind::SchemaError, std::string(source) + ": header must be `frame,bird_id`");
    std::vector<PeckEvent> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (io::trim(rows[i]).empty()) continue;
        auto where = std::string(source) + ":" + std::to_string(i + 1);
        auto f = io::split_csv_line(rows[i]);
        if (f.size() != 2 || f[1].empty()) throw Error(ErrorKind::SchemaError, where + ": expected frame,bird_id");
        long frame = io::parse_int(f[0], where);
        if (frame < 0) throw Error(ErrorKind::SchemaError, where + ": negative frame");
        out.push_back({f[1], frame});
    }
    return out;
}

std::vector<PeckEvent> load_pecks_csv(const std::filesystem::path& path) {
    return parse_pecks_csv(io::read_text(path), path.string());
}

std::string pecks_to_csv(std::span<const PeckEvent> pecks) {
    std::vector<PeckEvent> sorted(pecks.begin(), pecks.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const PeckEvent& a, const PeckEvent& b) { return std::tie(a.frame, a.bird_id) < std::tie(b.frame, b.bird_id); });
    std::string out = "frame,bird_id\n";
    for (const auto& p : sorted) out += std::to_string(p.frame) + ',' + p.bird_id + '\n';
    return out;
}

namespace {

Roster roster_from_members(const json& arr, RosterScope scope, const ColorTable& colors, const ParseOptions& options) {
    if (!arr.is_array()) throw Error(ErrorKind::SchemaError, "manifest: roster must be an array");
    json wrapped = {{"scope", to_string(scope)}, {"members", arr}};
    return parse_roster_json(wrapped.dump(), colors, options);
}

json members_json(const Roster& r) {
    json arr = json::array();
    for (const auto& m : r.members()) arr.push_back({{"bird_id", m.bird_id}, {"combination", m.combination.str()}});
    return arr;
}

}  // namespace

VideoManifest parse_manifest(std::string_view text, const ColorTable& colors, const ParseOptions& options) {
    VideoManifest m;
    try {
        auto doc = json::parse(text);
        m.video_id = doc.at("video_id").get<std::string>();
        m.fps = doc.at("fps").get<double>();
        m.length_frames = doc.at("length_frames").get<long>();
        if (doc.contains("rosters")) {
            const auto& r = doc.at("rosters");
            if (r.contains("within_territory"))
                m.rosters.within_territory =
                    roster_from_members(r["within_territory"], RosterScope::WithinTerritory, colors, options);
            if (r.contains("with_neighbours"))
                m.rosters.with_neighbours =
                    roster_from_members(r["with_neighbours"], RosterScope::WithNeighbours, colors, options);
            if (r.contains("all")) m.rosters.all = roster_from_members(r["all"], RosterScope::All, colors, options);
        }
    } catch (const json::exception& e) {
        throw Error(ErrorKind::SchemaError, std::string("manifest: ") + e.what());
    }
    if (!(m.fps > 0)) throw Error(ErrorKind::SchemaError, "manifest: fps must be positive");
    if (m.length_frames <= 0) throw Error(ErrorKind::SchemaError, "manifest: length_frames must be positive");
    m.rosters.validate();
    return m;
}

VideoManifest load_manifest(const std::filesystem::path& path, const ColorTable& colors, const ParseOptions& options) {
    try {
        return parse_manifest(io::read_text(path), colors, options);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.what());
    }
}

std::string manifest_to_json(const VideoManifest& m) {
    json doc;
    doc["video_id"] = m.video_id;
    doc["fps"] = m.fps;
    doc["length_frames"] = m.length_frames;
    json rosters = json::object();
    if (m.rosters.within_territory) rosters["within_territory"] = members_json(*m.rosters.within_territory);
    if (m.rosters.with_neighbours) rosters["with_neighbours"] = members_json(*m.rosters.with_neighbours);
    if (m.rosters.all) rosters["all"] = members_json(*m.rosters.all);
    doc["rosters"] = rosters;
    return doc.dump(1) + "\n";
}

std::string matches_to_csv(std::span<const FrameMatch> matches) {
    std::string out = "frame,pred_track_id,truth_track_id,iou\n";
    for (const auto& m : matches)
        out += std::to_string(m.frame) + ',' + std::to_string(m.predicted_track) + ',' + std::to_string(m.truth_track) +
               ',' + io::format_double(m.iou) + '\n';
    return out;
}

}  // namespace corvid
