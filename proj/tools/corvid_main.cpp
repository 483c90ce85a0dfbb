// corvid: batch command-line front end for ring-based identification and the
// behavioural benchmark. Data goes to files/stdout, logs to stderr.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "corvid/classifier.hpp"
#include "corvid/error.hpp"
#include "corvid/identity.hpp"
#include "corvid/io.hpp"
#include "corvid/matcher.hpp"
#include "corvid/metrics.hpp"
#include "corvid/synth.hpp"
#include "corvid/tracks.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace corvid;

namespace {

struct GlobalOptions {
    std::uint64_t seed = 7;
    unsigned jobs = 1;
    double iou_min = 0.5;
    std::optional<double> pair_threshold_px;
    std::string color_table;
    std::string workdir;
    bool no_alu_check = false;
};

ColorTable active_colors(const GlobalOptions& g) {
    return g.color_table.empty() ? ColorTable::chirp_default() : ColorTable::load_csv(g.color_table);
}

ParseOptions parse_options(const GlobalOptions& g) { return {!g.no_alu_check}; }

// Runs fn(i) for i in [0, n) on `jobs` threads; the first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) failure = std::current_exception();
                next = n;
            }
        }
    };
    std::vector<std::thread> threads;
    for (unsigned t = 1; t < jobs; ++t) threads.emplace_back(worker);
    worker();
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
}

std::string toml_value(const std::string& v) {
    if (v == "true" || v == "false") return v;
    double d;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), d);
    if (ec == std::errc() && ptr == v.data() + v.size()) return v;
    return json(v).dump();
}

void snapshot_options(const CLI::App& app, std::string& out) {
    for (const CLI::Option* opt : app.get_options()) {
        if (!opt->get_configurable() || opt->get_lnames().empty()) continue;
        std::string value;
        if (opt->get_expected_min() == 0)
            value = opt->count() > 0 && opt->as<bool>() ? "true" : "false";
        else if (opt->count() > 0)
            value = opt->results().back();
        else
            value = opt->get_default_str();
        if (value.empty()) continue;
        out += opt->get_lnames().front() + "=" + toml_value(value) + "\n";
    }
}

// Global options plus the active subcommand, in a form --config reads back.
void write_snapshot(const CLI::App& app, const fs::path& path) {
    std::string out;
    snapshot_options(app, out);
    for (const CLI::App* sub : app.get_subcommands()) {
        out += "\n[" + sub->get_name() + "]\n";
        snapshot_options(*sub, out);
    }
    io::write_atomic(path, out);
}

// ---- train ----------------------------------------------------------------

struct TrainArgs {
    std::string manifest;
    std::string out = "model.json";
    double temperature = 1.0;
};

int cmd_train(const GlobalOptions& g, const TrainArgs& a, const CLI::App& root) {
    auto colors = active_colors(g);
    auto samples = load_labeled_manifest(a.manifest, colors);
    spdlog::info("event=train_start samples={} classes={}", samples.size(), colors.size());
    auto model = train(samples, colors, TrainOptions{a.temperature, {}});
    io::write_atomic(a.out, model.to_json());
    write_snapshot(root, a.out + ".run.toml");

    std::size_t correct = 0;
    for (const auto& s : samples) correct += model.predict(s.crop).argmax() == s.label;
    spdlog::info("event=train_done out={} distance_scale={} self_top1={}", a.out, model.distance_scale(),
                 double(correct) / double(samples.size()));
    return 0;
}

// ---- identify -------------------------------------------------------------

struct IdentifyArgs {
    std::string clips;
    std::string model;
    std::string rosters;
    std::string scope = "within_territory";
    std::size_t k = 3;
    std::string out = "identify_out";
    std::string split = "closed";
    bool summary = false;
};

class RosterResolver {
public:
    RosterResolver(fs::path root, const ColorTable& colors, ParseOptions options)
        : root_(std::move(root)), colors_(colors), options_(options) {}

    // Every scope present for the territory is loaded so nesting can be checked.
    const RosterSet& for_territory(const std::string& territory) {
        std::lock_guard lock(mutex_);
        auto it = cache_.find(territory);
        if (it != cache_.end()) return it->second;
        RosterSet set;
        for (auto scope : {RosterScope::WithinTerritory, RosterScope::WithNeighbours, RosterScope::All}) {
            auto name = std::string(to_string(scope)) + ".json";
            fs::path path = territory.empty() ? root_ / name : root_ / territory / name;
            if (!fs::exists(path)) path = root_ / name;
            if (!fs::exists(path)) continue;
            auto roster = shared_load(path, scope);
            switch (scope) {
                case RosterScope::WithinTerritory: set.within_territory = std::move(roster); break;
                case RosterScope::WithNeighbours: set.with_neighbours = std::move(roster); break;
                case RosterScope::All: set.all = std::move(roster); break;
            }
        }
        set.validate();
        return cache_.emplace(territory, std::move(set)).first->second;
    }

private:
    Roster shared_load(const fs::path& path, RosterScope scope) {
        auto key = path.string();
        auto it = files_.find(key);
        if (it == files_.end()) it = files_.emplace(key, load_roster(path, scope, colors_, options_)).first;
        return it->second;
    }

    fs::path root_;
    const ColorTable& colors_;
    ParseOptions options_;
    std::mutex mutex_;
    std::map<std::string, RosterSet> cache_;
    std::map<std::string, Roster> files_;
};

int cmd_identify(const GlobalOptions& g, const IdentifyArgs& a, const CLI::App& root) {
    auto colors = active_colors(g);
    const auto scope = parse_scope(a.scope);
    std::optional<PrototypeModel> model;
    if (!a.model.empty()) model = PrototypeModel::from_json(io::read_text(a.model), &colors);

    const fs::path clips_dir = a.clips;
    std::vector<fs::path> clip_files;
    for (const auto& e : fs::directory_iterator(clips_dir))
        if (e.is_regular_file() && e.path().extension() == ".jsonl") clip_files.push_back(e.path());
    std::sort(clip_files.begin(), clip_files.end());
    if (clip_files.empty()) throw Error(ErrorKind::SchemaError, "no .jsonl clips in " + clips_dir.string());

    std::map<std::string, std::string> territory_of;
    const bool single_roster = fs::is_regular_file(a.rosters);
    std::optional<RosterSet> single;
    if (single_roster) {
        auto r = load_roster(a.rosters, colors, parse_options(g));
        if (r.scope() != scope)
            throw Error(ErrorKind::SchemaError, a.rosters + " has scope " + std::string(to_string(r.scope())) +
                                                    " but --scope is " + a.scope);
        single.emplace();
        switch (scope) {
            case RosterScope::WithinTerritory: single->within_territory = std::move(r); break;
            case RosterScope::WithNeighbours: single->with_neighbours = std::move(r); break;
            case RosterScope::All: single->all = std::move(r); break;
        }
    } else if (fs::exists(clips_dir / "index.json")) {
        try {
            for (const auto& e : json::parse(io::read_text(clips_dir / "index.json")))
                territory_of[e.at("clip").get<std::string>()] = e.value("territory", "");
        } catch (const json::exception& ex) {
            throw Error(ErrorKind::SchemaError, (clips_dir / "index.json").string() + ": " + ex.what());
        }
    }
    RosterResolver resolver(a.rosters, colors, parse_options(g));
    PairingOptions pairing{g.pair_threshold_px, 0.5};

    std::vector<std::string> lines(clip_files.size());
    std::vector<std::optional<ReIdResult>> results(clip_files.size());
    parallel_for(clip_files.size(), g.jobs, [&](std::size_t i) {
        const auto& path = clip_files[i];
        auto clip = load_clip(path, colors);
        const RosterSet& rosters = single ? *single : resolver.for_territory(territory_of[clip.id]);
        auto res = identify_tracklet(clip, model ? &*model : nullptr, rosters, scope, pairing);
        lines[i] = ranking_to_json(res.ranking, clip.id, scope);
        auto truth_path = clips_dir / (clip.id + ".truth.json");
        if (a.summary && fs::exists(truth_path)) {
            auto truth = json::parse(io::read_text(truth_path));
            results[i] = ReIdResult{std::move(res.ranking), truth.at("bird_id").get<std::string>()};
        }
    });

    const fs::path out = a.out;
    std::string body;
    for (const auto& l : lines) body += l + "\n";
    io::write_atomic(out / "rankings.jsonl", body);
    if (a.summary) {
        std::vector<ReIdResult> scored;
        for (auto& r : results)
            if (r) scored.push_back(std::move(*r));
        auto row = reid_report(scored, a.split, scope);
        json s = {{"split", row.split}, {"scope", to_string(scope)}, {"top1", row.top1}, {"top3", row.top3},
                  {"top_k", topk_accuracy(scored, a.k)}, {"k", a.k}, {"n_clips", row.n_clips}};
        io::write_atomic(out / "summary.json", s.dump(1) + "\n");
        io::write_atomic(out / "reid_table.csv", reid_table_csv(std::span(&row, 1)));
        std::cout << reid_table_csv(std::span(&row, 1));
    }
    write_snapshot(root, out / "run.toml");
    spdlog::info("event=identify_done clips={} scope={} out={}", clip_files.size(), a.scope, a.out);
    return 0;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluateArgs {
    std::string pred;
    std::string truth;
    std::string out = "evaluate_out";
    bool scatter = false;
    std::size_t random_trials = 100;
    double window_s = 1.0;
};

const fs::path& require_file(const fs::path& p) {
    if (!fs::is_regular_file(p)) throw Error(ErrorKind::IoError, "missing file " + p.string());
    return p;
}

int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a, const CLI::App& root) {
    auto colors = active_colors(g);
    std::vector<std::string> video_ids;
    for (const auto& e : fs::directory_iterator(a.truth))
        if (e.is_directory() && fs::exists(e.path() / "manifest.json")) video_ids.push_back(e.path().filename());
    std::sort(video_ids.begin(), video_ids.end());
    if (video_ids.empty()) throw Error(ErrorKind::SchemaError, "no video directories with manifest.json in " + a.truth);

    std::vector<VideoCase> cases(video_ids.size());
    std::vector<VideoEvaluation> evals(video_ids.size());
    EvaluateOptions options{g.iou_min, a.window_s};
    parallel_for(video_ids.size(), g.jobs, [&](std::size_t i) {
        const fs::path t = fs::path(a.truth) / video_ids[i];
        const fs::path p = fs::path(a.pred) / video_ids[i];
        auto& c = cases[i];
        c.manifest = load_manifest(require_file(t / "manifest.json"), colors, parse_options(g));
        c.truth = {load_tracks_csv(require_file(t / "tracks.csv")), load_pecks_csv(require_file(t / "pecks.csv"))};
        c.predicted = {load_tracks_csv(require_file(p / "tracks.csv")), load_pecks_csv(require_file(p / "pecks.csv"))};
        evals[i] = evaluate_video(c.predicted, c.truth, c.manifest, options);
    });
    auto report = aggregate(evals);
    std::optional<BaselineReport> baseline;
    if (a.random_trials > 0) baseline = random_assignment_baseline(cases, a.random_trials, g.seed, options);

    const fs::path out = a.out;
    io::write_atomic(out / "report.json", report_to_json(report, baseline));
    io::write_atomic(out / "lower_level.csv", lower_level_csv(report, baseline));
    io::write_atomic(out / "higher_level.csv", higher_level_csv(report, baseline));
    if (a.scatter) {
        io::write_atomic(out / "feeding_scatter.csv", feeding_scatter_csv(evals));
        io::write_atomic(out / "cooccurrence_scatter.csv", cooccurrence_scatter_csv(evals));
    }
    write_snapshot(root, out / "run.toml");
    std::cout << lower_level_csv(report, baseline) << higher_level_csv(report, baseline);
    spdlog::info("event=evaluate_done videos={} out={}", video_ids.size(), a.out);
    return 0;
}

// ---- synth ----------------------------------------------------------------

int cmd_synth(const GlobalOptions& g, synth::SynthConfig config, const std::string& out, const CLI::App& root) {
    config.seed = g.seed;
    config.parse = parse_options(g);
    if (!g.color_table.empty()) config.colors = ColorTable::load_csv(g.color_table);
    try {
        config.validate();
    } catch (const std::invalid_argument& e) {
        throw Error(ErrorKind::SchemaError, std::string("synth config: ") + e.what());
    }
    auto summary = synth::write_dataset(config, out);
    write_snapshot(root, fs::path(out) / "run.toml");
    std::cout << "birds=" << summary.birds << " territories=" << summary.territories
              << " training_crops=" << summary.training_crops << " clips=" << summary.clips
              << " videos=" << summary.videos << "\n";
    return 0;
}

// ---- join-tracks / match-frames -------------------------------------------

int cmd_join_tracks(const std::string& in, const std::string& out, const CLI::App& root) {
    auto tracks = load_tracks_csv(in);
    auto joined = join_by_identity(tracks);
    io::write_atomic(out, tracks_to_csv(joined));
    write_snapshot(root, out + ".run.toml");
    spdlog::info("event=join_done in_tracks={} out_tracks={}", tracks.size(), joined.size());
    return 0;
}

int cmd_match_frames(const GlobalOptions& g, const std::string& pred, const std::string& truth, const std::string& out,
                     const CLI::App& root) {
    auto matches = match_frames(load_tracks_csv(pred), load_tracks_csv(truth), g.iou_min);
    io::write_atomic(out, matches_to_csv(matches));
    write_snapshot(root, out + ".run.toml");
    spdlog::info("event=match_done matches={}", matches.size());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_logger_mt("corvid");
    logger->set_pattern("ts=%Y-%m-%dT%H:%M:%S level=%l %v");
    spdlog::set_default_logger(logger);

    CLI::App app{"corvid: colour-ring re-identification and behavioural benchmark"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Re-run from a run.toml snapshot");

    GlobalOptions g;
    if (const char* wd = std::getenv("CORVID_WORKDIR")) g.workdir = wd;
    app.add_option("--seed", g.seed, "Seed for every random draw")->capture_default_str();
    app.add_option("--jobs", g.jobs, "Worker threads (results do not depend on it)")
        ->check(CLI::Range(1u, 1024u))
        ->configurable(false);
    app.add_option("--iou-min", g.iou_min, "IoU floor for frame matching")->check(CLI::Range(1e-9, 1.0))->capture_default_str();
    app.add_option("--pair-threshold-px", g.pair_threshold_px, "Ring pairing distance (default: 0.5 x median ring diagonal)")
        ->check(CLI::PositiveNumber);
    app.add_option("--color-table", g.color_table, "Color table CSV (default: built-in 12-class table)");
    app.add_option("--workdir", g.workdir, "Base directory for relative paths (env CORVID_WORKDIR)");
    app.add_flag("--no-alu-check", g.no_alu_check, "Accept combinations without exactly one aluminium ring");
    app.add_option("--log-level", [](const CLI::results_t& r) {
        spdlog::set_level(spdlog::level::from_str(r[0]));
        return true;
    }, "trace|debug|info|warn|error|off")->configurable(false);

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "Fit the prototype ring-color classifier")->configurable();
    train_cmd->add_option("--manifest", train_args.manifest, "Labeled-crop JSON-lines manifest")->required();
    train_cmd->add_option("--out", train_args.out, "Model file")->capture_default_str();
    train_cmd->add_option("--temperature", train_args.temperature)->check(CLI::PositiveNumber)->capture_default_str();

    IdentifyArgs id_args;
    auto* id_cmd = app.add_subcommand("identify", "Rank roster candidates for each clip")->configurable();
    id_cmd->add_option("--clips", id_args.clips, "Directory of clip .jsonl files")->required();
    id_cmd->add_option("--model", id_args.model, "Model file (needed for raw crops)");
    id_cmd->add_option("--rosters", id_args.rosters, "Roster file, or directory of per-territory rosters")->required();
    id_cmd->add_option("--scope", id_args.scope)
        ->check(CLI::IsMember({"within_territory", "with_neighbours", "all"}))
        ->capture_default_str();
    id_cmd->add_option("--k", id_args.k)->check(CLI::PositiveNumber)->capture_default_str();
    id_cmd->add_option("--out", id_args.out, "Output directory")->capture_default_str();
    id_cmd->add_option("--split", id_args.split, "Split label for the summary table")->capture_default_str();
    id_cmd->add_flag("--summary", id_args.summary, "Report Top-1/Top-3 from .truth.json sidecars");

    EvaluateArgs ev_args;
    auto* ev_cmd = app.add_subcommand("evaluate", "Application-level benchmark of predicted tracks and pecks")->configurable();
    ev_cmd->add_option("--pred", ev_args.pred, "Directory of per-video prediction folders")->required();
    ev_cmd->add_option("--truth", ev_args.truth, "Directory of per-video ground-truth folders")->required();
    ev_cmd->add_option("--out", ev_args.out, "Output directory")->capture_default_str();
    ev_cmd->add_flag("--scatter", ev_args.scatter, "Write per-individual and per-pair scatter CSVs");
    ev_cmd->add_option("--random-trials", ev_args.random_trials, "Random-assignment baseline trials (0 disables)")
        ->capture_default_str();
    ev_cmd->add_option("--window-s", ev_args.window_s)->check(CLI::PositiveNumber)->capture_default_str();

    synth::SynthConfig sc;
    std::string synth_out = "synth_out";
    auto* syn_cmd = app.add_subcommand("synth", "Generate a seeded synthetic dataset")->configurable();
    syn_cmd->add_option("--out", synth_out)->capture_default_str();
    syn_cmd->add_option("--n-birds", sc.n_birds)->capture_default_str();
    syn_cmd->add_option("--n-clips", sc.n_clips)->capture_default_str();
    syn_cmd->add_option("--n-videos", sc.n_videos)->capture_default_str();
    syn_cmd->add_option("--noise-sigma", sc.noise_sigma)->capture_default_str();
    syn_cmd->add_option("--drop-prob", sc.drop_prob)->capture_default_str();
    syn_cmd->add_option("--frames-per-clip", sc.frames_per_clip)->capture_default_str();
    syn_cmd->add_option("--train-per-class", sc.train_per_class)->capture_default_str();
    syn_cmd->add_option("--video-length", sc.video_length_frames)->capture_default_str();
    syn_cmd->add_option("--fps", sc.fps)->capture_default_str();
    syn_cmd->add_option("--id-corruption", sc.id_corruption)->capture_default_str();
    syn_cmd->add_option("--peck-jitter", sc.peck_jitter_frames)->capture_default_str();
    syn_cmd->add_option("--box-jitter", sc.box_jitter)->capture_default_str();
    syn_cmd->add_option("--fragment-rate", sc.fragment_rate)->capture_default_str();

    std::string join_in, join_out = "joined_tracks.csv";
    auto* join_cmd = app.add_subcommand("join-tracks", "Join same-bird tracklets by linear interpolation")->configurable();
    join_cmd->add_option("--tracks", join_in)->required();
    join_cmd->add_option("--out", join_out)->capture_default_str();

    std::string match_pred, match_truth, match_out = "matches.csv";
    auto* match_cmd = app.add_subcommand("match-frames", "Per-frame IoU matching of predicted to true tracks")->configurable();
    match_cmd->add_option("--pred", match_pred)->required();
    match_cmd->add_option("--truth", match_truth)->required();
    match_cmd->add_option("--out", match_out)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (!g.workdir.empty()) fs::current_path(g.workdir);
        if (*train_cmd) return cmd_train(g, train_args, app);
        if (*id_cmd) return cmd_identify(g, id_args, app);
        if (*ev_cmd) return cmd_evaluate(g, ev_args, app);
        if (*syn_cmd) return cmd_synth(g, sc, synth_out, app);
        if (*join_cmd) return cmd_join_tracks(join_in, join_out, app);
        if (*match_cmd) return cmd_match_frames(g, match_pred, match_truth, match_out, app);
    } catch (const Error& e) {
        spdlog::error("kind={} msg=\"{}\"", to_string(e.kind()), e.what());
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        spdlog::error("kind=IoError msg=\"{}\"", e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("kind=Internal msg=\"{}\"", e.what());
        return 1;
    }
    return 1;
}
