#include "corvid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <json.hpp>

#include "corvid/error.hpp"
#include "corvid/io.hpp"

namespace corvid {

using json = nlohmann::json;

double topk_accuracy(std::span<const ReIdResult> results, std::size_t k) {
    if (results.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& r : results) {
        auto rank = r.ranking.rank_of(r.true_id);
        if (!rank) throw Error(ErrorKind::TrueIdNotInRoster, "true id '" + r.true_id + "' is not in the gallery");
        if (!r.ranking.empty && *rank <= k) ++hits;
    }
    return double(hits) / double(results.size());
}

ReIdReportRow reid_report(std::span<const ReIdResult> results, std::string split, RosterScope scope) {
    return {std::move(split), scope, topk_accuracy(results, 1), topk_accuracy(results, 3), results.size()};
}

FrameCorrectness& FrameCorrectness::operator+=(const FrameCorrectness& o) {
    truth_frames += o.truth_frames;
    matched_frames += o.matched_frames;
    correct_frames += o.correct_frames;
    return *this;
}

FrameCorrectness prop_correct_frames(std::span<const FrameMatch> correspondence, std::span<const Tracklet> predicted,
                                     std::span<const Tracklet> truth) {
    std::map<long, const std::optional<std::string>*> pred_ids, truth_ids;
    for (const auto& t : predicted) pred_ids[t.track_id] = &t.bird_id;
    for (const auto& t : truth) truth_ids[t.track_id] = &t.bird_id;

    FrameCorrectness out;
    for (const auto& t : truth) out.truth_frames += t.frames.size();
    for (const auto& m : correspondence) {
        ++out.matched_frames;
        auto p = pred_ids.find(m.predicted_track);
        auto g = truth_ids.find(m.truth_track);
        if (p == pred_ids.end() || g == truth_ids.end()) continue;
        const auto& pid = *p->second;
        const auto& gid = *g->second;
        if (pid && gid && *pid == *gid) ++out.correct_frames;
    }
    return out;
}

long window_index(long frame, double fps, double window_s) {
    return static_cast<long>(std::floor(static_cast<double>(frame) / (fps * window_s)));
}

PeckWindowReport peck_window_prf(std::span<const PeckEvent> predicted, std::span<const PeckEvent> truth, double fps,
                                 double window_s) {
    if (!(fps > 0) || !(window_s > 0)) throw std::invalid_argument("peck_window_prf: fps and window must be positive");
    std::map<std::string, std::set<long>> pw, tw;
    for (const auto& p : predicted) pw[p.bird_id].insert(window_index(p.frame, fps, window_s));
    for (const auto& p : truth) tw[p.bird_id].insert(window_index(p.frame, fps, window_s));
    std::set<std::string> birds;
    for (const auto& [b, s] : pw) birds.insert(b);
    for (const auto& [b, s] : tw) birds.insert(b);

    PeckWindowReport out;
    for (const auto& b : birds) {
        const auto& p = pw[b];
        const auto& t = tw[b];
        std::size_t tp = 0;
        for (long w : p) tp += t.count(w);
        PeckScores s;
        s.precision = p.empty() ? 0.0 : double(tp) / double(p.size());
        s.recall = t.empty() ? 0.0 : double(tp) / double(t.size());
        s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        out.per_bird[b] = s;
    }
    if (out.per_bird.empty()) {
        out.macro = {1.0, 1.0, 1.0};
    } else {
        for (const auto& [b, s] : out.per_bird) {
            out.macro.precision += s.precision;
            out.macro.recall += s.recall;
            out.macro.f1 += s.f1;
        }
        double n = double(out.per_bird.size());
        out.macro.precision /= n;
        out.macro.recall /= n;
        out.macro.f1 /= n;
    }
    return out;
}

double feeding_rate(std::size_t pecks, long video_length_frames, double fps) {
    if (video_length_frames <= 0 || !(fps > 0)) throw std::invalid_argument("feeding_rate: length and fps must be positive");
    return double(pecks) / (double(video_length_frames) / fps / 60.0);
}

double cooccurrence_rate(const PresenceTimeline& timeline, const std::string& a, const std::string& b,
                         long video_length_frames) {
    if (video_length_frames <= 0) throw std::invalid_argument("cooccurrence_rate: length must be positive");
    auto ia = timeline.intervals.find(a);
    auto ib = timeline.intervals.find(b);
    if (ia == timeline.intervals.end() || ib == timeline.intervals.end()) return 0.0;
    const auto& x = ia->second;
    const auto& y = ib->second;
    std::size_t i = 0, j = 0;
    long together = 0;
    while (i < x.size() && j < y.size()) {
        long lo = std::max(x[i].first, y[j].first);
        long hi = std::min(x[i].last, y[j].last);
        if (lo <= hi) together += hi - lo + 1;
        if (x[i].last < y[j].last)
            ++i;
        else
            ++j;
    }
    return double(together) / double(video_length_frames);
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 2) return std::nullopt;
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / double(n);
    double my = std::accumulate(y.begin(), y.end(), 0.0) / double(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0 || syy <= 0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

ErrorStats error_stats(std::span<const double> predicted, std::span<const double> truth) {
    if (predicted.size() != truth.size()) throw std::invalid_argument("error_stats: length mismatch");
    ErrorStats s;
    s.n = predicted.size();
    if (s.n == 0) return s;
    std::vector<double> err(s.n);
    for (std::size_t i = 0; i < s.n; ++i) err[i] = std::abs(predicted[i] - truth[i]);
    s.mean = std::accumulate(err.begin(), err.end(), 0.0) / double(s.n);
    double var = 0;
    for (double e : err) var += (e - s.mean) * (e - s.mean);
    s.sd = std::sqrt(var / double(s.n));
    std::sort(err.begin(), err.end());
    s.median = s.n % 2 ? err[s.n / 2] : 0.5 * (err[s.n / 2 - 1] + err[s.n / 2]);
    s.pearson_r = pearson(predicted, truth);
    return s;
}

namespace {

std::set<std::string> individuals(const VideoData& predicted, const VideoData& truth, const VideoManifest& manifest) {
    std::set<std::string> ids;
    if (manifest.rosters.within_territory)
        for (const auto& m : manifest.rosters.within_territory->members()) ids.insert(m.bird_id);
    for (const auto* side : {&predicted, &truth}) {
        for (const auto& t : side->tracks)
            if (t.bird_id) ids.insert(*t.bird_id);
        for (const auto& p : side->pecks) ids.insert(p.bird_id);
    }
    return ids;
}

}  // namespace

VideoEvaluation evaluate_video(const VideoData& predicted, const VideoData& truth, const VideoManifest& manifest,
                               const EvaluateOptions& options) {
    VideoEvaluation ev;
    ev.video_id = manifest.video_id;
    auto matches = match_frames(predicted.tracks, truth.tracks, options.iou_min);
    ev.frames = prop_correct_frames(matches, predicted.tracks, truth.tracks);
    ev.pecks = peck_window_prf(predicted.pecks, truth.pecks, manifest.fps, options.window_s);

    const auto ids = individuals(predicted, truth, manifest);
    std::map<std::string, std::size_t> pred_count, truth_count;
    for (const auto& p : predicted.pecks) ++pred_count[p.bird_id];
    for (const auto& p : truth.pecks) ++truth_count[p.bird_id];
    for (const auto& id : ids)
        ev.feeding.push_back({manifest.video_id, id, feeding_rate(pred_count[id], manifest.length_frames, manifest.fps),
                              feeding_rate(truth_count[id], manifest.length_frames, manifest.fps)});

    auto pred_tl = presence_timeline(predicted.tracks, manifest.length_frames);
    auto truth_tl = presence_timeline(truth.tracks, manifest.length_frames);
    for (auto a = ids.begin(); a != ids.end(); ++a)
        for (auto b = std::next(a); b != ids.end(); ++b)
            ev.cooccurrence.push_back({manifest.video_id, *a, *b,
                                       cooccurrence_rate(pred_tl, *a, *b, manifest.length_frames),
                                       cooccurrence_rate(truth_tl, *a, *b, manifest.length_frames)});
    return ev;
}

BenchmarkReport aggregate(std::span<const VideoEvaluation> videos) {
    BenchmarkReport r;
    r.videos = videos.size();
    FrameCorrectness frames;
    std::size_t birds = 0;
    std::vector<double> fp, ft, cp, ct;
    for (const auto& v : videos) {
        frames += v.frames;
        for (const auto& [b, s] : v.pecks.per_bird) {
            r.peck_precision += s.precision;
            r.peck_recall += s.recall;
            r.peck_f1 += s.f1;
            ++birds;
        }
        for (const auto& m : v.feeding) {
            fp.push_back(m.predicted);
            ft.push_back(m.truth);
        }
        for (const auto& m : v.cooccurrence) {
            cp.push_back(m.predicted);
            ct.push_back(m.truth);
        }
    }
    r.prop_correct_frames = frames.over_truth();
    r.prop_correct_frames_matched = frames.over_matched();
    if (birds) {
        r.peck_precision /= double(birds);
        r.peck_recall /= double(birds);
        r.peck_f1 /= double(birds);
    } else {
        r.peck_precision = r.peck_recall = r.peck_f1 = 1.0;
    }
    r.feeding_rate_errors = error_stats(fp, ft);
    r.cooccurrence_errors = error_stats(cp, ct);
    return r;
}

std::optional<std::size_t> owning_tracklet(const PeckEvent& peck, std::span<const Tracklet> tracks) {
    std::optional<std::size_t> best;
    long best_gap = 0;
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const auto& t = tracks[i];
        if (!t.bird_id || *t.bird_id != peck.bird_id || t.frames.empty()) continue;
        long gap = 0;
        if (peck.frame < t.first_frame())
            gap = t.first_frame() - peck.frame;
        else if (peck.frame > t.last_frame())
            gap = peck.frame - t.last_frame();
        if (!best || gap < best_gap || (gap == best_gap && t.track_id < tracks[*best].track_id)) {
            best = i;
            best_gap = gap;
        }
    }
    return best;
}

namespace {

void accumulate_stats(ErrorStats& into, const ErrorStats& s, std::size_t& r_count) {
    into.n = s.n;
    into.mean += s.mean;
    into.median += s.median;
    into.sd += s.sd;
    if (s.pearson_r) {
        into.pearson_r = into.pearson_r.value_or(0.0) + *s.pearson_r;
        ++r_count;
    }
}

void finish_stats(ErrorStats& s, std::size_t trials, std::size_t r_count) {
    s.mean /= double(trials);
    s.median /= double(trials);
    s.sd /= double(trials);
    if (r_count) s.pearson_r = *s.pearson_r / double(r_count);
}

}  // namespace

BaselineReport random_assignment_baseline(std::span<const VideoCase> videos, std::size_t trials, std::uint64_t seed,
                                          const EvaluateOptions& options) {
    BaselineReport out;
    out.trials = trials;
    if (trials == 0) return out;

    // Peck ownership and candidate lists do not change between trials.
    std::vector<std::vector<std::optional<std::size_t>>> owners(videos.size());
    std::vector<std::vector<std::string>> candidates(videos.size());
    for (std::size_t v = 0; v < videos.size(); ++v) {
        const auto& vc = videos[v];
        for (const auto& p : vc.predicted.pecks) owners[v].push_back(owning_tracklet(p, vc.predicted.tracks));
        if (vc.manifest.rosters.within_territory)
            for (const auto& m : vc.manifest.rosters.within_territory->members()) candidates[v].push_back(m.bird_id);
        if (candidates[v].empty()) {
            std::set<std::string> ids;
            for (const auto& t : vc.truth.tracks)
                if (t.bird_id) ids.insert(*t.bird_id);
            candidates[v].assign(ids.begin(), ids.end());
        }
    }

    std::mt19937_64 rng(seed);
    std::size_t feeding_r_count = 0, cooc_r_count = 0;
    std::vector<double> mean_feeding_pred, mean_cooc_pred, feeding_truth, cooc_truth;
    for (std::size_t trial = 0; trial < trials; ++trial) {
        std::vector<VideoEvaluation> evals;
        for (std::size_t v = 0; v < videos.size(); ++v) {
            const auto& vc = videos[v];
            const auto& cands = candidates[v];
            if (cands.empty()) {
                evals.push_back(evaluate_video(vc.predicted, vc.truth, vc.manifest, options));
                continue;
            }
            std::uniform_int_distribution<std::size_t> pick(0, cands.size() - 1);
            VideoData shuffled{vc.predicted.tracks, vc.predicted.pecks};
            for (auto& t : shuffled.tracks) t.bird_id = cands[pick(rng)];
            for (std::size_t i = 0; i < shuffled.pecks.size(); ++i)
                shuffled.pecks[i].bird_id = owners[v][i] ? *shuffled.tracks[*owners[v][i]].bird_id : cands[pick(rng)];
            evals.push_back(evaluate_video(shuffled, vc.truth, vc.manifest, options));
        }
        auto rep = aggregate(evals);
        auto& m = out.mean;
        m.videos = rep.videos;
        m.prop_correct_frames += rep.prop_correct_frames;
        m.prop_correct_frames_matched += rep.prop_correct_frames_matched;
        m.peck_precision += rep.peck_precision;
        m.peck_recall += rep.peck_recall;
        m.peck_f1 += rep.peck_f1;
        accumulate_stats(m.feeding_rate_errors, rep.feeding_rate_errors, feeding_r_count);
        accumulate_stats(m.cooccurrence_errors, rep.cooccurrence_errors, cooc_r_count);

        std::size_t fi = 0, ci = 0;
        for (const auto& e : evals) {
            for (const auto& f : e.feeding) {
                if (trial == 0) {
                    mean_feeding_pred.push_back(0);
                    feeding_truth.push_back(f.truth);
                }
                mean_feeding_pred[fi++] += f.predicted / double(trials);
            }
            for (const auto& c : e.cooccurrence) {
                if (trial == 0) {
                    mean_cooc_pred.push_back(0);
                    cooc_truth.push_back(c.truth);
                }
                mean_cooc_pred[ci++] += c.predicted / double(trials);
            }
        }
    }
    auto& m = out.mean;
    const double n = double(trials);
    m.prop_correct_frames /= n;
    m.prop_correct_frames_matched /= n;
    m.peck_precision /= n;
    m.peck_recall /= n;
    m.peck_f1 /= n;
    finish_stats(m.feeding_rate_errors, trials, feeding_r_count);
    finish_stats(m.cooccurrence_errors, trials, cooc_r_count);
    out.feeding_r_of_mean = pearson(mean_feeding_pred, feeding_truth);
    out.cooccurrence_r_of_mean = pearson(mean_cooc_pred, cooc_truth);
    return out;
}

namespace {

json stats_json(const ErrorStats& s) {
    json j = {{"n", s.n}, {"mean_abs_error", s.mean}, {"median_abs_error", s.median}, {"sd_abs_error", s.sd}};
    j["pearson_r"] = s.pearson_r ? json(*s.pearson_r) : json(nullptr);
    return j;
}

json report_json(const BenchmarkReport& r) {
    return {{"videos", r.videos},
            {"prop_correct_frames", r.prop_correct_frames},
            {"prop_correct_frames_matched", r.prop_correct_frames_matched},
            {"peck_precision", r.peck_precision},
            {"peck_recall", r.peck_recall},
            {"peck_f1", r.peck_f1},
            {"feeding_rate", stats_json(r.feeding_rate_errors)},
            {"cooccurrence_rate", stats_json(r.cooccurrence_errors)}};
}

std::string num(double v) { return io::format_double(v); }
std::string num(const std::optional<double>& v) { return v ? io::format_double(*v) : "NA"; }

std::string lower_row(const std::string& method, const BenchmarkReport& r) {
    return method + ',' + num(r.prop_correct_frames) + ',' + num(r.prop_correct_frames_matched) + ',' +
           num(r.peck_precision) + ',' + num(r.peck_recall) + ',' + num(r.peck_f1) + '\n';
}

std::string higher_rows(const std::string& method, const BenchmarkReport& r) {
    auto row = [&](const char* measure, const ErrorStats& s) {
        return method + ',' + measure + ',' + num(s.mean) + ',' + num(s.median) + ',' + num(s.sd) + ',' +
               num(s.pearson_r) + '\n';
    };
    return row("feeding_rate", r.feeding_rate_errors) + row("cooccurrence_rate", r.cooccurrence_errors);
}

}  // namespace

std::string report_to_json(const BenchmarkReport& report, const std::optional<BaselineReport>& baseline) {
    json doc;
    doc["pipeline"] = report_json(report);
    if (baseline) {
        json b = report_json(baseline->mean);
        b["trials"] = baseline->trials;
        b["feeding_rate"]["pearson_r_of_mean_prediction"] =
            baseline->feeding_r_of_mean ? json(*baseline->feeding_r_of_mean) : json(nullptr);
        b["cooccurrence_rate"]["pearson_r_of_mean_prediction"] =
            baseline->cooccurrence_r_of_mean ? json(*baseline->cooccurrence_r_of_mean) : json(nullptr);
        doc["random_assignment"] = b;
    }
    return doc.dump(1) + "\n";
}

std::string lower_level_csv(const BenchmarkReport& report, const std::optional<BaselineReport>& baseline) {
    std::string out = "method,prop_correct_frames,prop_correct_frames_matched,peck_precision,peck_recall,peck_f1\n";
    out += lower_row("pipeline", report);
    if (baseline) out += lower_row("random", baseline->mean);
    return out;
}

std::string higher_level_csv(const BenchmarkReport& report, const std::optional<BaselineReport>& baseline) {
    std::string out = "method,measure,mean_abs_error,median_abs_error,sd_abs_error,pearson_r\n";
    out += higher_rows("pipeline", report);
    if (baseline) out += higher_rows("random", baseline->mean);
    return out;
}

std::string feeding_scatter_csv(std::span<const VideoEvaluation> videos) {
    std::string out = "video_id,bird_id,predicted_pecks_per_min,truth_pecks_per_min\n";
    for (const auto& v : videos)
        for (const auto& m : v.feeding) out += m.video_id + ',' + m.bird_id + ',' + num(m.predicted) + ',' + num(m.truth) + '\n';
    return out;
}

std::string cooccurrence_scatter_csv(std::span<const VideoEvaluation> videos) {
    std::string out = "video_id,bird_a,bird_b,predicted_rate,truth_rate\n";
    for (const auto& v : videos)
        for (const auto& m : v.cooccurrence)
            out += m.video_id + ',' + m.bird_a + ',' + m.bird_b + ',' + num(m.predicted) + ',' + num(m.truth) + '\n';
    return out;
}

std::string reid_table_csv(std::span<const ReIdReportRow> rows) {
    std::string out = "split,scope,top1,top3,n_clips\n";
    for (const auto& r : rows)
        out += r.split + ',' + std::string(to_string(r.scope)) + ',' + num(r.top1) + ',' + num(r.top3) + ',' +
               std::to_string(r.n_clips) + '\n';
    return out;
}

}  // namespace corvid
