#include "corvid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "corvid/io.hpp"

namespace corvid::synth {

using json = nlohmann::json;

void SynthConfig::validate() const {
    auto prob = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must be in [0,1]");
    };
    prob(drop_prob, "drop_prob");
    prob(id_corruption, "id_corruption");
    prob(fragment_rate, "fragment_rate");
    if (!(noise_sigma >= 0)) throw std::invalid_argument("noise_sigma must be >= 0");
    if (!(box_jitter >= 0)) throw std::invalid_argument("box_jitter must be >= 0");
    if (n_birds < 2) throw std::invalid_argument("n_birds must be >= 2");
    if (crop_width < 1 || crop_height < 1) throw std::invalid_argument("crop size must be positive");
    if (frames_per_clip < 1) throw std::invalid_argument("frames_per_clip must be >= 1");
    if (video_length_frames < 1 || !(fps > 0)) throw std::invalid_argument("video length and fps must be positive");
    if (peck_jitter_frames < 0) throw std::invalid_argument("peck_jitter_frames must be >= 0");
    if (!(peck_rate_min >= 0 && peck_rate_max >= peck_rate_min))
        throw std::invalid_argument("peck rate range is invalid");
    if (train_per_class < 1) throw std::invalid_argument("train_per_class must be >= 1");
    for (const auto& c : colors.classes())
        if (!c.reference) throw std::invalid_argument("color table needs reference RGB values for synthesis");
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(mix(base) ^ a) ^ b) ^ c);
}

RingCrop gen_ring_crop(const Rgb& reference, double sigma, std::uint64_t seed, int width, int height) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma > 0 ? sigma : 1.0);
    RgbImage img(width, height);
    const double rx = width / 2.0, ry = height / 2.0;
    auto channel = [&](std::uint8_t base) {
        double v = base + (sigma > 0 ? noise(rng) : 0.0);
        return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
    };
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
            double dx = (x + 0.5 - rx) / rx, dy = (y + 0.5 - ry) / ry;
            if (dx * dx + dy * dy > 1.0) continue;
            img.set(x, y, {channel(reference.r), channel(reference.g), channel(reference.b)});
        }
    return RingCrop{std::move(img), 0, {rx, ry}};
}

namespace {

std::string leg_key(const RingCombination& c) {
    auto code = [](const Leg& l) { return std::string{char(l.top), char(l.bottom)}; };
    auto a = code(c.left_leg()), b = code(c.right_leg());
    return a < b ? a + b : b + a;
}

std::string bird_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "B%04zu", i);
    return buf;
}

}  // namespace

std::vector<RosterMember> gen_population(const SynthConfig& config) {
    const auto& colors = config.colors;
    const std::size_t n = colors.size();
    std::vector<RingCombination> space;
    std::string code(4, ' ');
    const auto alu = colors.aluminium();
    for (std::size_t i = 0; i < (n + 1) * (n + 1) * (n + 1) * (n + 1); ++i) {
        std::size_t rest = i;
        int absent = 0, alus = 0;
        for (int p = 0; p < 4; ++p) {
            std::size_t d = rest % (n + 1);
            rest /= n + 1;
            code[p] = d == n ? kAbsentCode : colors[static_cast<ColorIndex>(d)].code;
            absent += d == n;
            alus += alu && d == *alu;
        }
        if (absent > 1) continue;
        if (alu ? alus != 1 : config.parse.require_aluminium) continue;
        space.push_back(RingCombination::parse(code, colors, config.parse));
    }
    std::mt19937_64 rng(derive_seed(config.seed, 1));
    std::shuffle(space.begin(), space.end(), rng);

    std::vector<RosterMember> out;
    std::set<std::string> keys;
    for (const auto& c : space) {
        if (out.size() == config.n_birds) break;
        if (!keys.insert(leg_key(c)).second) continue;
        out.push_back({bird_name(out.size()), c});
    }
    if (out.size() < config.n_birds)
        throw std::invalid_argument("n_birds exceeds the number of leg-distinguishable combinations (" +
                                    std::to_string(out.size()) + ")");
    return out;
}

World gen_world(const SynthConfig& config) {
    auto population = gen_population(config);
    std::mt19937_64 rng(derive_seed(config.seed, 2));
    std::vector<std::vector<RosterMember>> groups;
    std::uniform_int_distribution<std::size_t> size_dist(2, 4);
    for (std::size_t i = 0; i < population.size();) {
        std::size_t k = std::min(size_dist(rng), population.size() - i);
        if (k < 2 && !groups.empty()) {
            groups.back().push_back(population[i]);
            ++i;
            continue;
        }
        groups.emplace_back(population.begin() + static_cast<std::ptrdiff_t>(i),
                            population.begin() + static_cast<std::ptrdiff_t>(i + k));
        i += k;
    }
    World world{Roster(RosterScope::All, population), {}};
    const std::size_t t = groups.size();
    const std::size_t radius = 2;
    for (std::size_t g = 0; g < t; ++g) {
        std::vector<RosterMember> neighbours = groups[g];
        std::set<std::size_t> seen{g};
        for (std::size_t d = 1; d <= radius && t > 1; ++d) {
            for (std::size_t h : {(g + d) % t, (g + t - d % t) % t}) {
                if (!seen.insert(h).second) continue;
                neighbours.insert(neighbours.end(), groups[h].begin(), groups[h].end());
            }
        }
        char id[32];
        std::snprintf(id, sizeof id, "T%03zu", g);
        world.territories.push_back({id, Roster(RosterScope::WithinTerritory, groups[g]),
                                     Roster(RosterScope::WithNeighbours, std::move(neighbours))});
    }
    return world;
}

GeneratedClip gen_clip(const RosterMember& bird, const SynthConfig& config, std::uint64_t seed, std::string clip_id) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ox(50.0, 550.0), oy(50.0, 350.0), wobble(-2.0, 2.0), unit(0.0, 1.0);
    const double x0 = ox(rng), y0 = oy(rng);
    const bool flip = unit(rng) < 0.5;
    const Leg legs[2] = {bird.combination.left_leg(), bird.combination.right_leg()};

    GeneratedClip out;
    out.clip.id = clip_id;
    out.truth = {std::move(clip_id), bird.bird_id, bird.combination.str(), {}};
    std::uint64_t ring_counter = 0;
    for (std::size_t f = 0; f < config.frames_per_clip; ++f) {
        ClipFrame frame{static_cast<long>(f), {}};
        const double dx = wobble(rng), dy = wobble(rng);
        for (int leg = 0; leg < 2; ++leg) {
            const double lx = x0 + dx + ((leg == 0) != flip ? 0.0 : config.leg_spacing_px);
            const ColorIndex rings[2] = {legs[leg].top, legs[leg].bottom};
            for (int r = 0; r < 2; ++r) {
                if (rings[r] == kAbsent) continue;
                const bool dropped = unit(rng) < config.drop_prob;
                const auto crop_seed = derive_seed(seed, 100, ring_counter++);
                if (dropped) continue;
                auto crop = gen_ring_crop(*config.colors[rings[r]].reference, config.noise_sigma, crop_seed,
                                          config.crop_width, config.crop_height);
                ClipRing ring;
                ring.centroid = {lx, y0 + dy + r * config.ring_spacing_px};
                ring.crop = std::move(crop.pixels);
                frame.rings.push_back(std::move(ring));
            }
        }
        out.clip.frames.push_back(std::move(frame));
    }
    return out;
}

namespace {

struct Waypoint {
    long frame;
    BoundingBox box;
};

BoundingBox random_box(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> px(0.0, 1100.0), py(0.0, 560.0), size(80.0, 140.0);
    return {px(rng), py(rng), size(rng), size(rng)};
}

}  // namespace

GeneratedVideo gen_video(const Territory& territory, const SynthConfig& config, std::size_t video_index) {
    const long L = config.video_length_frames;
    std::mt19937_64 rng(derive_seed(config.seed, 3, video_index));
    std::mt19937_64 corrupt_rng(derive_seed(config.seed, 4, video_index));
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    GeneratedVideo out;
    char vid[32];
    std::snprintf(vid, sizeof vid, "V%03zu", video_index);
    out.manifest.video_id = vid;
    out.manifest.fps = config.fps;
    out.manifest.length_frames = L;
    out.manifest.rosters.within_territory = territory.within_territory;
    out.manifest.rosters.with_neighbours = territory.with_neighbours;

    const auto members = territory.within_territory.members();
    long next_truth_id = 1;
    // Truth tracklets and pecks.
    for (const auto& m : members) {
        std::uniform_int_distribution<int> n_visits(1, 3);
        std::uniform_int_distribution<long> start(0, L - 1), length(std::max(1L, L / 8), std::max(1L, L / 3));
        std::vector<FrameInterval> visits;
        for (int v = n_visits(rng); v > 0; --v) {
            long s = start(rng);
            visits.push_back({s, std::min(L - 1, s + length(rng) - 1)});
        }
        std::sort(visits.begin(), visits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<FrameInterval> merged;
        for (const auto& v : visits) {
            if (!merged.empty() && v.first <= merged.back().last + 1)
                merged.back().last = std::max(merged.back().last, v.last);
            else
                merged.push_back(v);
        }

        std::uniform_real_distribution<double> rate_dist(config.peck_rate_min, config.peck_rate_max);
        const double rate = rate_dist(rng);
        out.peck_rates.push_back(rate);
        for (const auto& v : merged) {
            Tracklet t{next_truth_id++, {}, m.bird_id};
            std::vector<Waypoint> wps;
            for (long f = v.first;; f += 50) {
                wps.push_back({std::min(f, v.last), random_box(rng)});
                if (f >= v.last) break;
            }
            if (wps.size() == 1) t.frames[wps[0].frame] = wps[0].box;
            for (std::size_t w = 0; w + 1 < wps.size(); ++w) {
                const auto& a = wps[w];
                const auto& b = wps[w + 1];
                for (long f = a.frame; f <= b.frame; ++f) {
                    double s = double(f - a.frame) / double(b.frame - a.frame);
                    t.frames[f] = {a.box.x + (b.box.x - a.box.x) * s, a.box.y + (b.box.y - a.box.y) * s,
                                   a.box.w + (b.box.w - a.box.w) * s, a.box.h + (b.box.h - a.box.h) * s};
                }
            }
            out.truth.tracks.push_back(std::move(t));

            if (rate > 0) {
                std::exponential_distribution<double> gap(rate / 60.0);
                double tsec = gap(rng);
                while (true) {
                    long f = v.first + static_cast<long>(std::floor(tsec * config.fps));
                    if (f > v.last) break;
                    out.truth.pecks.push_back({m.bird_id, f});
                    tsec += gap(rng);
                }
            }
        }
    }

    // Predicted fragments.
    struct Fragment {
        std::size_t truth_index;
        long first, last;
        long pred_id;
    };
    std::vector<Fragment> fragments;
    long next_pred_id = 1;
    std::normal_distribution<double> jitter(0.0, 1.0);
    for (std::size_t ti = 0; ti < out.truth.tracks.size(); ++ti) {
        const auto& t = out.truth.tracks[ti];
        const auto& bird = *t.bird_id;
        long seg_start = t.first_frame();
        auto emit = [&](long first, long last) {
            double u = unit(corrupt_rng);
            auto pick = corrupt_rng();
            std::string id = bird;
            if (u < config.id_corruption && members.size() > 1) {
                std::vector<std::string> others;
                for (const auto& m : members)
                    if (m.bird_id != bird) others.push_back(m.bird_id);
                id = others[pick % others.size()];
            }
            Tracklet p{next_pred_id, {}, id};
            for (long f = first; f <= last; ++f) {
                const auto& b = t.frames.at(f);
                p.frames[f] = {b.x + jitter(rng) * config.box_jitter * b.w, b.y + jitter(rng) * config.box_jitter * b.h,
                               b.w, b.h};
            }
            fragments.push_back({ti, first, last, next_pred_id++});
            out.predicted.tracks.push_back(std::move(p));
        };
        for (long f = t.first_frame(); f < t.last_frame(); ++f) {
            if (unit(rng) < config.fragment_rate) {
                emit(seg_start, f);
                seg_start = f + 1;
            }
        }
        emit(seg_start, t.last_frame());
    }

    // Predicted pecks follow the fragment covering the true peck frame.
    std::uniform_int_distribution<long> shift(-config.peck_jitter_frames, config.peck_jitter_frames);
    for (const auto& peck : out.truth.pecks) {
        long delta = shift(corrupt_rng);
        const Tracklet* pred = nullptr;
        for (const auto& fr : fragments) {
            const auto& t = out.truth.tracks[fr.truth_index];
            if (*t.bird_id == peck.bird_id && fr.first <= peck.frame && peck.frame <= fr.last) {
                pred = &out.predicted.tracks[static_cast<std::size_t>(fr.pred_id - 1)];
                break;
            }
        }
        long f = std::clamp(peck.frame + delta, 0L, L - 1);
        out.predicted.pecks.push_back({pred ? *pred->bird_id : peck.bird_id, f});
    }
    return out;
}

DatasetSummary write_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
    config.validate();
    namespace fs = std::filesystem;
    DatasetSummary summary;
    const auto& colors = config.colors;
    io::write_atomic(out_dir / "color_table.csv", colors.to_csv());

    // training crops
    std::string manifest;
    for (std::size_t c = 0; c < colors.size(); ++c) {
        for (std::size_t i = 0; i < config.train_per_class; ++i) {
            auto crop = gen_ring_crop(*colors[static_cast<ColorIndex>(c)].reference, config.noise_sigma,
                                      derive_seed(config.seed, 5, c, i), config.crop_width, config.crop_height);
            char name[48];
            std::snprintf(name, sizeof name, "crops/c%02zu_%04zu.ppm", c, i);
            io::write_atomic(out_dir / "train" / name, encode_ppm(crop.pixels));
            manifest += json{{"image", name}, {"label", std::string(1, colors[static_cast<ColorIndex>(c)].code)}}.dump() + "\n";
            ++summary.training_crops;
        }
    }
    io::write_atomic(out_dir / "train" / "manifest.jsonl", manifest);

    // rosters
    auto world = gen_world(config);
    summary.birds = world.all.size();
    summary.territories = world.territories.size();
    io::write_atomic(out_dir / "rosters" / "all.json", roster_to_json(world.all));
    for (const auto& t : world.territories) {
        io::write_atomic(out_dir / "rosters" / t.id / "within_territory.json", roster_to_json(t.within_territory));
        io::write_atomic(out_dir / "rosters" / t.id / "with_neighbours.json", roster_to_json(t.with_neighbours));
    }

    // clips
    json index = json::array();
    json clip_truths = json::array();
    std::mt19937_64 rng(derive_seed(config.seed, 6));
    for (std::size_t i = 0; i < config.n_clips; ++i) {
        const auto& t = world.territories[rng() % world.territories.size()];
        const auto& bird = t.within_territory.members()[rng() % t.within_territory.size()];
        char id[32];
        std::snprintf(id, sizeof id, "c%04zu", i);
        auto gc = gen_clip(bird, config, derive_seed(config.seed, 7, i), id);
        gc.truth.territory = t.id;
        io::write_atomic(out_dir / "clips" / (std::string(id) + ".jsonl"), clip_to_jsonl(gc.clip, colors));
        json truth = {{"clip", id}, {"bird_id", gc.truth.bird_id}, {"combination", gc.truth.combination},
                      {"territory", t.id}};
        io::write_atomic(out_dir / "clips" / (std::string(id) + ".truth.json"), truth.dump(1) + "\n");
        index.push_back({{"clip", id}, {"territory", t.id}});
        clip_truths.push_back(truth);
        ++summary.clips;
    }
    io::write_atomic(out_dir / "clips" / "index.json", index.dump(1) + "\n");

    // videos
    json videos = json::array();
    for (std::size_t v = 0; v < config.n_videos; ++v) {
        const auto& t = world.territories[derive_seed(config.seed, 8, v) % world.territories.size()];
        auto gv = gen_video(t, config, v);
        const auto& vid = gv.manifest.video_id;
        io::write_atomic(out_dir / "videos" / "truth" / vid / "manifest.json", manifest_to_json(gv.manifest));
        io::write_atomic(out_dir / "videos" / "truth" / vid / "tracks.csv", tracks_to_csv(gv.truth.tracks));
        io::write_atomic(out_dir / "videos" / "truth" / vid / "pecks.csv", pecks_to_csv(gv.truth.pecks));
        io::write_atomic(out_dir / "videos" / "pred" / vid / "tracks.csv", tracks_to_csv(gv.predicted.tracks));
        io::write_atomic(out_dir / "videos" / "pred" / vid / "pecks.csv", pecks_to_csv(gv.predicted.pecks));
        videos.push_back({{"video_id", vid},
                          {"territory", t.id},
                          {"truth_tracks", gv.truth.tracks.size()},
                          {"truth_pecks", gv.truth.pecks.size()},
                          {"predicted_tracks", gv.predicted.tracks.size()}});
        ++summary.videos;
    }

    json truth = {{"seed", config.seed},
                  {"birds", summary.birds},
                  {"territories", summary.territories},
                  {"training_crops", summary.training_crops},
                  {"clips", clip_truths},
                  {"videos", videos}};
    io::write_atomic(out_dir / "truth.json", truth.dump(1) + "\n");
    return summary;
}

}  // namespace corvid::synth
