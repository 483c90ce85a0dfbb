#include "corvid/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include <json.hpp>

#include "corvid/error.hpp"
#include "corvid/io.hpp"

namespace corvid {

using json = nlohmann::json;

std::vector<RingPairObservation> pair_rings(std::span<const RingDetection> detections, double threshold) {
    if (!(threshold > 0)) throw std::invalid_argument("pair_rings: threshold must be positive");
    struct Link {
        double dist;
        std::size_t i, j;
    };
    std::vector<Link> links;
    for (std::size_t i = 0; i < detections.size(); ++i)
        for (std::size_t j = i + 1; j < detections.size(); ++j) {
            double d = std::hypot(detections[i].centroid.x - detections[j].centroid.x,
                                  detections[i].centroid.y - detections[j].centroid.y);
            if (d <= threshold) links.push_back({d, i, j});
        }
    std::stable_sort(links.begin(), links.end(), [](const Link& a, const Link& b) { return a.dist < b.dist; });

    std::vector<bool> used(detections.size(), false);
    std::vector<RingPairObservation> out;
    for (const auto& l : links) {
        if (used[l.i] || used[l.j]) continue;
        used[l.i] = used[l.j] = true;
        const auto* top = &detections[l.i];
        const auto* bottom = &detections[l.j];
        if (bottom->centroid.y < top->centroid.y) std::swap(top, bottom);
        out.push_back({top->frame, *top, *bottom});
    }
    for (std::size_t i = 0; i < detections.size(); ++i)
        if (!used[i]) out.push_back({detections[i].frame, detections[i], std::nullopt});
    return out;
}

double PairTable::total() const { return std::accumulate(cells_.begin(), cells_.end(), 0.0); }

PairTable& PairTable::operator+=(const PairTable& other) {
    if (other.n_ != n_) throw std::invalid_argument("PairTable: color count mismatch");
    for (std::size_t i = 0; i < cells_.size(); ++i) cells_[i] += other.cells_[i];
    return *this;
}

PairTable pair_probability(const RingPairObservation& obs) {
    const auto& top = obs.top.prob;
    const std::size_t n = top.size();
    PairTable t(n);
    if (obs.bottom) {
        const auto& bottom = obs.bottom->prob;
        if (bottom.size() != n) throw std::invalid_argument("pair_probability: vector length mismatch");
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b)
                t.at(static_cast<ColorIndex>(a), static_cast<ColorIndex>(b)) = top[a] * bottom[b];
    } else {
        for (std::size_t a = 0; a < n; ++a) t.at(static_cast<ColorIndex>(a), kAbsent) = top[a];
    }
    return t;
}

PairProbabilityMatrix pool_clip(std::span<const RingPairObservation> observations, std::size_t colors) {
    PairProbabilityMatrix m{PairTable(colors), 0, 0};
    std::vector<long> frames;
    for (const auto& obs : observations) {
        m.mass += pair_probability(obs);
        frames.push_back(obs.frame);
    }
    std::sort(frames.begin(), frames.end());
    m.frames_pooled = static_cast<std::size_t>(std::unique(frames.begin(), frames.end()) - frames.begin());
    m.pairs_pooled = observations.size();
    return m;
}

std::vector<FrameObservations> group_by_frame(std::span<const RingPairObservation> observations) {
    std::map<long, std::vector<RingPairObservation>> by_frame;
    for (const auto& obs : observations) by_frame[obs.frame].push_back(obs);
    std::vector<FrameObservations> out;
    for (auto& [frame, pairs] : by_frame) out.push_back({frame, std::move(pairs)});
    return out;
}

std::optional<std::size_t> IdRanking::rank_of(std::string_view bird_id) const {
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i].bird_id == bird_id) return i + 1;
    return std::nullopt;
}

double frame_score(std::span<const PairTable> tables, const RingCombination& candidate) {
    const Leg left = candidate.left_leg();
    const Leg right = candidate.right_leg();
    double best = 0;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        best = std::max({best, tables[i].at(left), tables[i].at(right)});
        for (std::size_t j = 0; j < tables.size(); ++j)
            if (i != j) best = std::max(best, tables[i].at(left) + tables[j].at(right));
    }
    return best;
}

namespace {

void sort_ranking(std::vector<RankedCandidate>& scores) {
    std::sort(scores.begin(), scores.end(), [](const RankedCandidate& a, const RankedCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.combination < b.combination;
    });
}

}  // namespace

IdRanking score_candidates(const PairProbabilityMatrix& matrix, std::span<const FrameObservations> frames,
                           const Roster& roster) {
    if (roster.empty()) throw Error(ErrorKind::EmptyRoster, "cannot rank against an empty roster");
    IdRanking ranking;
    ranking.empty = matrix.empty();

    std::vector<std::vector<PairTable>> tables;
    tables.reserve(frames.size());
    for (const auto& f : frames) {
        auto& t = tables.emplace_back();
        for (const auto& obs : f.pairs) t.push_back(pair_probability(obs));
    }
    for (const auto& m : roster.members()) {
        double score = 0;
        if (!ranking.empty)
            for (const auto& t : tables) score += frame_score(t, m.combination);
        ranking.scores.push_back({m.bird_id, m.combination.str(), score});
    }
    sort_ranking(ranking.scores);
    return ranking;
}

std::vector<std::string> top_k(const IdRanking& ranking, std::size_t k) {
    if (k < 1) throw std::invalid_argument("top_k: k must be >= 1");
    std::vector<std::string> out;
    for (std::size_t i = 0; i < std::min(k, ranking.scores.size()); ++i) out.push_back(ranking.scores[i].bird_id);
    return out;
}

std::optional<double> ClipRing::diagonal() const {
    if (width && height) return std::hypot(*width, *height);
    if (crop) return std::hypot(double(crop->width()), double(crop->height()));
    return std::nullopt;
}

namespace {

ColorProbVector parse_probs(const json& obj, const ColorTable& colors, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorKind::SchemaError, where + ": probs must be an object");
    std::vector<double> p(colors.size(), 0.0);
    for (const auto& [key, value] : obj.items()) {
        if (key.size() != 1) throw Error(ErrorKind::SchemaError, where + ": probs key must be a color code");
        if (!value.is_number()) throw Error(ErrorKind::SchemaError, where + ": probability must be a number");
        auto idx = colors.find(key[0]);
        if (!idx) throw Error(ErrorKind::UnknownColorCode, where + ": unknown color '" + key + "' in probs");
        p[*idx] = value.get<double>();
    }
    try {
        return ColorProbVector(std::move(p));
    } catch (const Error& e) {
        throw Error(ErrorKind::SchemaError, where + ": " + e.what());
    }
}

double number_field(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key) || !obj[key].is_number())
        throw Error(ErrorKind::SchemaError, where + ": missing numeric field '" + key + "'");
    double v = obj[key].get<double>();
    if (!std::isfinite(v)) throw Error(ErrorKind::SchemaError, where + ": non-finite '" + key + "'");
    return v;
}

}  // namespace

Clip parse_clip_jsonl(std::string_view text, std::string id, const ColorTable& colors,
                      const std::filesystem::path& base_dir) {
    Clip clip{std::move(id), {}};
    std::size_t line_no = 0;
    for (auto line : io::lines(text)) {
        ++line_no;
        if (io::trim(line).empty()) continue;
        auto where = clip.id + ":" + std::to_string(line_no);
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw Error(ErrorKind::SchemaError, where + ": " + e.what());
        }
        if (!rec.is_object() || !rec.contains("frame") || !rec["frame"].is_number_integer() || !rec.contains("rings") ||
            !rec["rings"].is_array())
            throw Error(ErrorKind::SchemaError, where + ": expected {\"frame\": int, \"rings\": [...]}");
        ClipFrame frame{rec["frame"].get<long>(), {}};
        for (const auto& r : rec["rings"]) {
            if (!r.is_object()) throw Error(ErrorKind::SchemaError, where + ": ring must be an object");
            ClipRing ring;
            ring.centroid = {number_field(r, "cx", where), number_field(r, "cy", where)};
            if (ring.centroid.x < 0 || ring.centroid.y < 0)
                throw Error(ErrorKind::SchemaError, where + ": centroid must be non-negative");
            if (r.contains("w") || r.contains("h")) {
                ring.width = number_field(r, "w", where);
                ring.height = number_field(r, "h", where);
                if (*ring.width <= 0 || *ring.height <= 0)
                    throw Error(ErrorKind::SchemaError, where + ": ring size must be positive");
            }
            if (r.contains("probs")) ring.probs = parse_probs(r["probs"], colors, where);
            if (r.contains("crop")) {
                if (!r["crop"].is_string()) throw Error(ErrorKind::SchemaError, where + ": crop must be a string");
                auto ref = r["crop"].get<std::string>();
                constexpr std::string_view prefix = "base64:";
                if (ref.rfind(prefix, 0) == 0)
                    ring.crop = decode_ppm(io::base64_decode(std::string_view(ref).substr(prefix.size())));
                else
                    ring.crop = decode_ppm(io::read_text(base_dir / ref));
            }
            if (!ring.crop && !ring.probs) throw Error(ErrorKind::SchemaError, where + ": ring needs crop or probs");
            frame.rings.push_back(std::move(ring));
        }
        clip.frames.push_back(std::move(frame));
    }
    return clip;
}

Clip load_clip(const std::filesystem::path& path, const ColorTable& colors) {
    return parse_clip_jsonl(io::read_text(path), path.stem().string(), colors, path.parent_path());
}

std::string clip_to_jsonl(const Clip& clip, const ColorTable& colors) {
    std::string out;
    for (const auto& f : clip.frames) {
        json rec;
        rec["frame"] = f.frame;
        rec["rings"] = json::array();
        for (const auto& r : f.rings) {
            json ring;
            ring["cx"] = r.centroid.x;
            ring["cy"] = r.centroid.y;
            if (r.width && r.height) {
                ring["w"] = *r.width;
                ring["h"] = *r.height;
            }
            if (r.crop) ring["crop"] = "base64:" + io::base64_encode(encode_ppm(*r.crop));
            if (r.probs) {
                json p = json::object();
                for (std::size_t i = 0; i < r.probs->size(); ++i)
                    p[std::string(1, colors[static_cast<ColorIndex>(i)].code)] = (*r.probs)[i];
                ring["probs"] = p;
            }
            rec["rings"].push_back(std::move(ring));
        }
        out += rec.dump() + "\n";
    }
    return out;
}

double pairing_threshold(const Clip& clip, const PairingOptions& options) {
    if (options.threshold_px) {
        if (!(*options.threshold_px > 0)) throw Error(ErrorKind::SchemaError, "pairing threshold must be positive");
        return *options.threshold_px;
    }
    std::vector<double> diagonals;
    for (const auto& f : clip.frames)
        for (const auto& r : f.rings)
            if (auto d = r.diagonal()) diagonals.push_back(*d);
    if (diagonals.empty()) {
        if (std::all_of(clip.frames.begin(), clip.frames.end(), [](const auto& f) { return f.rings.empty(); }))
            return 1.0;  // nothing to pair
        throw Error(ErrorKind::SchemaError,
                    "clip " + clip.id + ": rings carry no size; pass an explicit pairing threshold");
    }
    auto mid = diagonals.begin() + static_cast<std::ptrdiff_t>(diagonals.size() / 2);
    std::nth_element(diagonals.begin(), mid, diagonals.end());
    double median = *mid;
    if (diagonals.size() % 2 == 0) median = 0.5 * (median + *std::max_element(diagonals.begin(), mid));
    return options.median_diagonal_factor * median;
}

IdentifyResult identify_tracklet(const Clip& clip, const RingClassifier* classifier, const RosterSet& rosters,
                                 RosterScope scope, const PairingOptions& options) {
    const Roster& roster = rosters.at(scope);
    const ColorTable* colors = classifier ? &classifier->colors() : nullptr;
    const double threshold = pairing_threshold(clip, options);

    std::vector<RingPairObservation> observations;
    std::size_t n_colors = 0;
    for (const auto& f : clip.frames) {
        std::vector<RingDetection> detections;
        for (const auto& r : f.rings) {
            ColorProbVector prob;
            if (r.probs) {
                prob = *r.probs;
            } else {
                if (!classifier)
                    throw Error(ErrorKind::SchemaError, "clip " + clip.id + ": raw crop but no classifier given");
                prob = classifier->predict(RingCrop{*r.crop, f.frame, r.centroid});
            }
            if (n_colors == 0) n_colors = prob.size();
            if (prob.size() != n_colors || (colors && prob.size() != colors->size()))
                throw Error(ErrorKind::SchemaError, "clip " + clip.id + ": inconsistent probability vector length");
            detections.push_back({f.frame, r.centroid, std::move(prob)});
        }
        auto pairs = pair_rings(detections, threshold);
        observations.insert(observations.end(), std::make_move_iterator(pairs.begin()),
                            std::make_move_iterator(pairs.end()));
    }
    if (n_colors == 0) n_colors = colors ? colors->size() : 0;

    IdentifyResult result;
    result.matrix = pool_clip(observations, n_colors);
    result.frames = group_by_frame(observations);
    result.ranking = score_candidates(result.matrix, result.frames, roster);
    result.ranking.observations = observations.size();
    result.ranking.singletons =
        std::size_t(std::count_if(observations.begin(), observations.end(), [](const auto& o) { return !o.bottom; }));
    return result;
}

std::string ranking_to_json(const IdRanking& ranking, std::string_view clip_id, RosterScope scope) {
    json doc;
    doc["clip"] = clip_id;
    doc["scope"] = to_string(scope);
    doc["empty"] = ranking.empty;
    doc["observations"] = ranking.observations;
    doc["singletons"] = ranking.singletons;
    doc["ranking"] = json::array();
    for (const auto& c : ranking.scores) doc["ranking"].push_back({{"bird_id", c.bird_id}, {"score", c.score}});
    return doc.dump();
}

}  // namespace corvid
