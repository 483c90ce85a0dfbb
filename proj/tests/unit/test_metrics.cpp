#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "corvid/metrics.hpp"
#include "corvid/synth.hpp"
#include "support.hpp"

using namespace corvid;
using testing::throws_kind;

namespace {

IdRanking ranking_of(std::vector<std::string> ids) {
    IdRanking r;
    double s = double(ids.size());
    for (auto& id : ids) r.scores.push_back({id, id, s--});
    return r;
}

Tracklet track(long id, long first, long last, std::optional<std::string> bird, BoundingBox box = {0, 0, 10, 10}) {
    Tracklet t{id, {}, std::move(bird)};
    for (long f = first; f <= last; ++f) t.frames[f] = box;
    return t;
}

struct NaiveScores {
    double p, r, f1;
};

// Window sets per bird, compared by plain set intersection.
std::map<std::string, NaiveScores> naive_windows(const std::vector<PeckEvent>& pred, const std::vector<PeckEvent>& truth,
                                                 long frames_per_window) {
    std::map<std::string, std::set<long>> p, t;
    for (const auto& e : pred) p[e.bird_id].insert(e.frame / frames_per_window);
    for (const auto& e : truth) t[e.bird_id].insert(e.frame / frames_per_window);
    std::set<std::string> birds;
    for (auto& [b, s] : p) birds.insert(b);
    for (auto& [b, s] : t) birds.insert(b);
    std::map<std::string, NaiveScores> out;
    for (const auto& b : birds) {
        std::vector<long> inter;
        std::set_intersection(p[b].begin(), p[b].end(), t[b].begin(), t[b].end(), std::back_inserter(inter));
        double prec = p[b].empty() ? 0 : double(inter.size()) / p[b].size();
        double rec = t[b].empty() ? 0 : double(inter.size()) / t[b].size();
        out[b] = {prec, rec, prec + rec > 0 ? 2 * prec * rec / (prec + rec) : 0};
    }
    return out;
}

}  // namespace

TEST_CASE("top-k accuracy") {
    std::vector<ReIdResult> all_first = {{ranking_of({"a", "b"}), "a"}, {ranking_of({"c", "d"}), "c"}};
    CHECK(topk_accuracy(all_first, 1) == 1.0);
    std::vector<ReIdResult> singles = {{ranking_of({"a"}), "a"}, {ranking_of({"z"}), "z"}};
    CHECK(topk_accuracy(singles, 1) == 1.0);
    std::vector<ReIdResult> stranger = {{ranking_of({"a"}), "q"}};
    CHECK(throws_kind([&] { topk_accuracy(stranger, 1); }, ErrorKind::TrueIdNotInRoster));
    auto empty = ranking_of({"a"});
    empty.empty = true;
    std::vector<ReIdResult> blank = {{empty, "a"}};
    CHECK(topk_accuracy(blank, 1) == 0.0);
}

TEST_CASE("top-k accuracy equals direct rank counting") {
    std::mt19937_64 rng(41);
    std::vector<ReIdResult> results;
    std::vector<int> planted;
    for (int i = 0; i < 200; ++i) {
        std::vector<std::string> ids;
        for (int k = 0; k < 10; ++k) ids.push_back("id" + std::to_string(k));
        std::shuffle(ids.begin(), ids.end(), rng);
        int rank = testing::uniform_int(rng, 1, 10);
        results.push_back({ranking_of(ids), ids[rank - 1]});
        planted.push_back(rank);
    }
    for (std::size_t k : {1u, 3u, 5u}) {
        double expect = double(std::count_if(planted.begin(), planted.end(), [&](int r) { return r <= int(k); })) / 200.0;
        CHECK(topk_accuracy(results, k) == expect);
    }
}

TEST_CASE("proportion of correct frames") {
    std::vector<Tracklet> truth = {track(1, 0, 9, "A"), track(2, 0, 9, "B", {50, 50, 10, 10})};
    auto self = match_frames(truth, truth);
    CHECK(prop_correct_frames(self, truth, truth).over_truth() == 1.0);

    std::vector<Tracklet> swapped = {track(1, 0, 9, "B"), track(2, 0, 9, "A", {50, 50, 10, 10})};
    CHECK(prop_correct_frames(match_frames(swapped, truth), swapped, truth).over_truth() == 0.0);

    // track A: 3 of its 10 frames predicted with the wrong id; B perfect
    std::vector<Tracklet> partial = {track(10, 0, 6, "A"), track(11, 7, 9, "B"), track(12, 0, 9, "B", {50, 50, 10, 10})};
    auto fc = prop_correct_frames(match_frames(partial, truth), partial, truth);
    CHECK(fc.truth_frames == 20);
    CHECK(fc.correct_frames == 17);
    CHECK(fc.over_truth() == doctest::Approx(17.0 / 20.0));

    // unmatched truth frames count against over_truth but not over_matched
    std::vector<Tracklet> half = {track(10, 0, 4, "A")};
    auto hc = prop_correct_frames(match_frames(half, truth), half, truth);
    CHECK(hc.over_truth() == doctest::Approx(5.0 / 20.0));
    CHECK(hc.over_matched() == 1.0);
}

TEST_CASE("window peck scores") {
    std::vector<PeckEvent> t = {{"A", 4}, {"A", 60}, {"B", 30}};
    auto self = peck_window_prf(t, t, 25);
    CHECK(self.macro.precision == 1.0);
    CHECK(self.macro.recall == 1.0);
    CHECK(self.macro.f1 == 1.0);

    auto same_window = peck_window_prf(std::vector<PeckEvent>{{"A", 20}}, std::vector<PeckEvent>{{"A", 4}}, 25);
    CHECK(same_window.per_bird.at("A").precision == 1.0);
    auto next_window = peck_window_prf(std::vector<PeckEvent>{{"A", 25}}, std::vector<PeckEvent>{{"A", 24}}, 25);
    CHECK(next_window.per_bird.at("A").recall == 0.0);

    auto none = peck_window_prf({}, {}, 25);
    CHECK(none.per_bird.empty());
    CHECK(none.macro.f1 == 1.0);
    CHECK(window_index(49, 25, 1.0) == 1);
    CHECK(window_index(50, 25, 2.0) == 1);
}

TEST_CASE("window peck scores equal a brute-force window-set computation") {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<PeckEvent> p, t;
        const long len = 60 * 25;
        int np = testing::uniform_int(rng, 0, 40), nt = testing::uniform_int(rng, 0, 40);
        for (int i = 0; i < np; ++i)
            p.push_back({"B" + std::to_string(testing::uniform_int(rng, 0, 3)), testing::uniform_int(rng, 0, len - 1)});
        for (int i = 0; i < nt; ++i)
            t.push_back({"B" + std::to_string(testing::uniform_int(rng, 0, 3)), testing::uniform_int(rng, 0, len - 1)});
        auto got = peck_window_prf(p, t, 25, 1.0);
        auto expect = naive_windows(p, t, 25);
        REQUIRE(got.per_bird.size() == expect.size());
        double mp = 0, mr = 0, mf = 0;
        for (auto& [b, s] : expect) {
            CHECK(got.per_bird.at(b).precision == s.p);
            CHECK(got.per_bird.at(b).recall == s.r);
            CHECK(got.per_bird.at(b).f1 == s.f1);
            mp += s.p, mr += s.r, mf += s.f1;
        }
        if (!expect.empty()) {
            CHECK(got.macro.precision == doctest::Approx(mp / expect.size()).epsilon(1e-15));
            CHECK(got.macro.f1 == doctest::Approx(mf / expect.size()).epsilon(1e-15));
        }
    }
}

TEST_CASE("feeding rate") {
    CHECK(feeding_rate(0, 1500, 25) == 0.0);
    CHECK(feeding_rate(10, 1500, 25) == 10.0);
    const long frames = static_cast<long>(13.5 * 60 * 25);
    CHECK(feeding_rate(37, frames, 25) == doctest::Approx(37.0 / 13.5).epsilon(1e-15));
}

TEST_CASE("co-occurrence") {
    std::vector<Tracklet> ts = {track(1, 0, 99, "A"), track(2, 0, 99, "B"), track(3, 0, 10, "C")};
    auto tl = presence_timeline(ts, 100);
    CHECK(cooccurrence_rate(tl, "A", "B", 100) == 1.0);
    CHECK(cooccurrence_rate(tl, "A", "Z", 100) == 0.0);
    CHECK(cooccurrence_rate(tl, "A", "C", 100) == doctest::Approx(0.11));

    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Tracklet> rs;
        const long len = 400;
        for (int i = 0; i < 10; ++i) {
            long s = testing::uniform_int(rng, 0, len - 1);
            rs.push_back(track(i, s, std::min<long>(len - 1, s + testing::uniform_int(rng, 0, 80)),
                               i % 2 ? "A" : "B"));
        }
        auto rtl = presence_timeline(rs, len);
        long both = 0;
        for (long f = 0; f < len; ++f) both += rtl.present("A", f) && rtl.present("B", f);
        CHECK(cooccurrence_rate(rtl, "A", "B", len) == double(both) / len);
    }
}

TEST_CASE("error statistics") {
    std::vector<double> x = {1, 2, 3, 4};
    auto self = error_stats(x, x);
    CHECK(self.mean == 0);
    CHECK(self.median == 0);
    CHECK(self.sd == 0);
    REQUIRE(self.pearson_r);
    CHECK(*self.pearson_r == doctest::Approx(1.0));

    std::vector<double> flat = {2, 2, 2, 2};
    CHECK(!error_stats(x, flat).pearson_r);

    std::mt19937_64 rng(53);
    std::vector<double> p, t;
    for (int i = 0; i < 20; ++i) {
        p.push_back(testing::uniform(rng, 0, 10));
        t.push_back(testing::uniform(rng, 0, 10));
    }
    std::vector<double> e;
    for (int i = 0; i < 20; ++i) e.push_back(std::abs(p[i] - t[i]));
    double mean = 0;
    for (double v : e) mean += v / 20;
    double var = 0;
    for (double v : e) var += (v - mean) * (v - mean) / 20;
    auto sorted = e;
    std::sort(sorted.begin(), sorted.end());
    double median = (sorted[9] + sorted[10]) / 2;
    double mp = 0, mt = 0;
    for (int i = 0; i < 20; ++i) mp += p[i] / 20, mt += t[i] / 20;
    double num = 0, dp = 0, dt = 0;
    for (int i = 0; i < 20; ++i) {
        num += (p[i] - mp) * (t[i] - mt);
        dp += (p[i] - mp) * (p[i] - mp);
        dt += (t[i] - mt) * (t[i] - mt);
    }
    auto s = error_stats(p, t);
    CHECK(s.mean == doctest::Approx(mean).epsilon(1e-12));
    CHECK(s.median == median);
    CHECK(s.sd == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    CHECK(*s.pearson_r == doctest::Approx(num / std::sqrt(dp * dt)).epsilon(1e-12));
}

TEST_CASE("self evaluation is optimal; empty prediction is vacuous") {
    synth::SynthConfig cfg;
    cfg.video_length_frames = 1500;
    auto world = synth::gen_world(cfg);
    auto v = synth::gen_video(world.territories[0], cfg, 0);
    auto self = evaluate_video(v.truth, v.truth, v.manifest);
    CHECK(self.frames.over_truth() == 1.0);
    CHECK(self.pecks.macro.f1 == 1.0);
    for (const auto& m : self.feeding) CHECK(m.predicted == m.truth);
    for (const auto& m : self.cooccurrence) CHECK(m.predicted == m.truth);

    auto vacuous = evaluate_video(VideoData{}, v.truth, v.manifest);
    CHECK(vacuous.frames.correct_frames == 0);
    for (const auto& [b, s] : vacuous.pecks.per_bird) CHECK(s.recall == 0.0);
    auto report = aggregate(std::span(&vacuous, 1));
    double truth_mean = 0;
    for (const auto& m : vacuous.feeding) {
        CHECK(m.predicted == 0.0);
        truth_mean += m.truth / double(vacuous.feeding.size());
    }
    for (const auto& m : vacuous.cooccurrence) CHECK(m.predicted == 0.0);
    CHECK(report.feeding_rate_errors.mean == doctest::Approx(truth_mean));
}

TEST_CASE("permuted ids: evaluation equals a naive recomputation") {
    synth::SynthConfig cfg;
    cfg.video_length_frames = 600;
    cfg.id_corruption = 0.5;
    cfg.peck_jitter_frames = 10;
    auto world = synth::gen_world(cfg);
    for (std::size_t vi = 0; vi < 4; ++vi) {
        auto v = synth::gen_video(world.territories[vi], cfg, vi);
        auto ev = evaluate_video(v.predicted, v.truth, v.manifest);

        // frames: brute force over assignments of predicted boxes to truth boxes in each frame
        std::size_t truth_frames = 0, correct = 0;
        for (long f = 0; f < v.manifest.length_frames; ++f) {
            std::vector<const Tracklet*> tp, pp;
            for (const auto& t : v.truth.tracks)
                if (t.frames.count(f)) tp.push_back(&t);
            for (const auto& t : v.predicted.tracks)
                if (t.frames.count(f)) pp.push_back(&t);
            truth_frames += tp.size();
            const std::size_t n = std::max(tp.size(), pp.size());
            std::vector<int> perm(n);
            std::iota(perm.begin(), perm.end(), 0);
            double best = -1;
            std::size_t best_correct = 0;
            do {
                double s = 0;
                std::size_t c = 0;
                for (std::size_t i = 0; i < tp.size(); ++i) {
                    if (std::size_t(perm[i]) >= pp.size()) continue;
                    double w = iou(tp[i]->frames.at(f), pp[perm[i]]->frames.at(f));
                    if (w < 0.5) continue;
                    s += w;
                    c += tp[i]->bird_id == pp[perm[i]]->bird_id;
                }
                if (s > best + 1e-12) best = s, best_correct = c;
            } while (std::next_permutation(perm.begin(), perm.end()));
            correct += best_correct;
        }
        CHECK(ev.frames.truth_frames == truth_frames);
        CHECK(ev.frames.correct_frames == correct);

        auto naive = naive_windows(v.predicted.pecks, v.truth.pecks, 25);
        for (auto& [b, s] : naive) CHECK(ev.pecks.per_bird.at(b).f1 == s.f1);

        for (const auto& m : ev.feeding) {
            auto count = [&](const std::vector<PeckEvent>& ps) {
                return double(std::count_if(ps.begin(), ps.end(), [&](auto& e) { return e.bird_id == m.bird_id; }));
            };
            CHECK(m.predicted == doctest::Approx(count(v.predicted.pecks) / (600.0 / 25 / 60)));
            CHECK(m.truth == doctest::Approx(count(v.truth.pecks) / (600.0 / 25 / 60)));
        }
    }
}

TEST_CASE("random assignment baseline is seeded") {
    synth::SynthConfig cfg;
    cfg.video_length_frames = 600;
    auto world = synth::gen_world(cfg);
    std::vector<VideoCase> cases;
    for (std::size_t i = 0; i < 3; ++i) {
        auto v = synth::gen_video(world.territories[i], cfg, i);
        cases.push_back({v.predicted, v.truth, v.manifest});
    }
    auto a = random_assignment_baseline(cases, 10, 5);
    auto b = random_assignment_baseline(cases, 10, 5);
    CHECK(a.trials == 10);
    CHECK(a.mean.prop_correct_frames == b.mean.prop_correct_frames);
    CHECK(a.mean.prop_correct_frames < 1.0);
    CHECK(report_to_json(a.mean, a) == report_to_json(b.mean, b));
}

TEST_CASE("peck ownership") {
    std::vector<Tracklet> ts = {track(1, 0, 10, "A"), track(2, 20, 30, "A"), track(3, 0, 30, "B")};
    CHECK(owning_tracklet({"A", 5}, ts) == 0u);
    CHECK(owning_tracklet({"A", 17}, ts) == 1u);
    CHECK(owning_tracklet({"B", 17}, ts) == 2u);
    CHECK(!owning_tracklet({"C", 1}, ts));
}

TEST_CASE("report tables") {
    BenchmarkReport r;
    auto lower = lower_level_csv(r, std::nullopt);
    CHECK(lower.rfind("method,prop_correct_frames,", 0) == 0);
    auto higher = higher_level_csv(r, std::nullopt);
    CHECK(higher.find("feeding_rate") != std::string::npos);
    CHECK(higher.find("NA") != std::string::npos);
}
