#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "corvid/classifier.hpp"
#include "corvid/error.hpp"
#include "corvid/identity.hpp"
#include "corvid/io.hpp"
#include "corvid/matcher.hpp"
#include "corvid/metrics.hpp"
#include "corvid/synth.hpp"
#include "corvid/tracks.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace corvid;

namespace {

py::object from_json_text(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

RosterSet load_roster_dir(const fs::path& dir, const ColorTable& colors, const ParseOptions& options) {
    RosterSet set;
    auto load = [&](RosterScope scope) -> std::optional<Roster> {
        const auto name = std::string(to_string(scope)) + ".json";
        auto path = dir / name;
        if (!fs::exists(path)) path = dir.parent_path() / name;
        if (!fs::exists(path)) return std::nullopt;
        return load_roster(path, scope, colors, options);
    };
    set.within_territory = load(RosterScope::WithinTerritory);
    set.with_neighbours = load(RosterScope::WithNeighbours);
    set.all = load(RosterScope::All);
    set.validate();
    return set;
}

}  // namespace

PYBIND11_MODULE(_corvid, m) {
    m.doc() = "Colour-ring re-identification and behavioural benchmark";

    static py::exception<Error> corvid_error(m, "CorvidError", PyExc_ValueError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            py::object err = corvid_error;
            py::object instance = err(e.what());
            instance.attr("kind") = std::string(to_string(e.kind()));
            PyErr_SetObject(corvid_error.ptr(), instance.ptr());
        }
    });

    py::class_<ColorTable>(m, "ColorTable")
        .def_static("default", &ColorTable::chirp_default, py::return_value_policy::copy)
        .def_static("load_csv", &ColorTable::load_csv, py::arg("path"))
        .def_static("parse_csv", &ColorTable::parse_csv, py::arg("text"))
        .def("to_csv", &ColorTable::to_csv)
        .def("hash_hex", &ColorTable::hash_hex)
        .def("__len__", &ColorTable::size)
        .def_property_readonly("codes", [](const ColorTable& t) {
            std::string s;
            for (const auto& c : t.classes()) s += c.code;
            return s;
        })
        .def_property_readonly("names", [](const ColorTable& t) {
            std::vector<std::string> names;
            for (const auto& c : t.classes()) names.push_back(c.display_name);
            return names;
        });

    m.def(
        "parse_combination",
        [](const std::string& code, const ColorTable* table, bool require_aluminium) {
            const auto& t = table ? *table : ColorTable::chirp_default();
            auto c = RingCombination::parse(code, t, {require_aluminium});
            std::vector<std::string> names;
            for (auto idx : c.positions()) names.push_back(idx == kAbsent ? "absent" : t[idx].display_name);
            return names;
        },
        py::arg("code"), py::arg("table") = nullptr, py::arg("require_aluminium") = true,
        "Colour names at top-left, bottom-left, top-right, bottom-right.");
    m.def("combination_space_size", &combination_space_size, py::arg("num_colors"));

    py::class_<PrototypeModel>(m, "PrototypeModel")
        .def_static(
            "load",
            [](const fs::path& path, const ColorTable* table) {
                return PrototypeModel::from_json(io::read_text(path), table);
            },
            py::arg("path"), py::arg("table") = nullptr)
        .def("save", [](const PrototypeModel& model, const fs::path& path) { io::write_atomic(path, model.to_json()); })
        .def("to_json", &PrototypeModel::to_json)
        .def_property_readonly("distance_scale", &PrototypeModel::distance_scale)
        .def_property_readonly("temperature", &PrototypeModel::temperature)
        .def(
            "predict_ppm",
            [](const PrototypeModel& model, py::bytes ppm) {
                auto probs = model.predict(RingCrop{decode_ppm(std::string(ppm)), 0, {}});
                py::dict out;
                for (std::size_t i = 0; i < probs.size(); ++i)
                    out[py::str(std::string(1, model.colors()[static_cast<ColorIndex>(i)].code))] = probs[i];
                return out;
            },
            py::arg("ppm"), "Colour probabilities for one binary PPM crop.");

    m.def(
        "train",
        [](const fs::path& manifest, const ColorTable* table, double temperature) {
            const auto& t = table ? *table : ColorTable::chirp_default();
            return train(load_labeled_manifest(manifest, t), t, TrainOptions{temperature, {}});
        },
        py::arg("manifest"), py::arg("table") = nullptr, py::arg("temperature") = 1.0);

    m.def(
        "identify",
        [](const fs::path& clip_path, const fs::path& rosters, const std::string& scope, const PrototypeModel* model,
           std::optional<double> pair_threshold_px, const ColorTable* table) {
            const auto& t = table ? *table : ColorTable::chirp_default();
            auto clip = load_clip(clip_path, t);
            const auto s = parse_scope(scope);
            RosterSet set;
            if (fs::is_directory(rosters)) {
                set = load_roster_dir(rosters, t, {});
            } else {
                auto r = load_roster(rosters, s, t);
                switch (s) {
                    case RosterScope::WithinTerritory: set.within_territory = std::move(r); break;
                    case RosterScope::WithNeighbours: set.with_neighbours = std::move(r); break;
                    case RosterScope::All: set.all = std::move(r); break;
                }
            }
            auto res = identify_tracklet(clip, model, set, s, {pair_threshold_px, 0.5});
            return from_json_text(ranking_to_json(res.ranking, clip.id, s));
        },
        py::arg("clip"), py::arg("rosters"), py::arg("scope") = "within_territory", py::arg("model") = nullptr,
        py::arg("pair_threshold_px") = std::nullopt, py::arg("table") = nullptr,
        "Rank roster candidates for one clip file; rosters is a roster file or a directory of them.");

    m.def("iou", [](std::array<double, 4> a, std::array<double, 4> b) {
        return iou({a[0], a[1], a[2], a[3]}, {b[0], b[1], b[2], b[3]});
    });
    m.def(
        "join_tracks_csv", [](const std::string& csv) { return tracks_to_csv(join_by_identity(parse_tracks_csv(csv))); },
        py::arg("csv"), "Join same-bird tracklets of a track CSV, returning CSV text.");
    m.def(
        "match_frames_csv",
        [](const std::string& pred, const std::string& truth, double iou_min) {
            return matches_to_csv(match_frames(parse_tracks_csv(pred), parse_tracks_csv(truth), iou_min));
        },
        py::arg("pred"), py::arg("truth"), py::arg("iou_min") = 0.5);

    m.def(
        "peck_window_prf",
        [](const std::vector<std::pair<std::string, long>>& pred, const std::vector<std::pair<std::string, long>>& truth,
           double fps, double window_s) {
            auto convert = [](const auto& v) {
                std::vector<PeckEvent> out;
                for (const auto& [b, f] : v) out.push_back({b, f});
                return out;
            };
            auto r = peck_window_prf(convert(pred), convert(truth), fps, window_s);
            return py::make_tuple(r.macro.precision, r.macro.recall, r.macro.f1);
        },
        py::arg("pred"), py::arg("truth"), py::arg("fps") = 25.0, py::arg("window_s") = 1.0,
        "Macro precision, recall, F1 over birds; pecks are (bird_id, frame) pairs.");
    m.def("feeding_rate", &feeding_rate, py::arg("pecks"), py::arg("video_length_frames"), py::arg("fps") = 25.0);
    m.def(
        "error_stats",
        [](const std::vector<double>& pred, const std::vector<double>& truth) {
            auto s = error_stats(pred, truth);
            py::dict d;
            d["n"] = s.n;
            d["mean"] = s.mean;
            d["median"] = s.median;
            d["sd"] = s.sd;
            d["pearson_r"] = s.pearson_r ? py::object(py::float_(*s.pearson_r)) : py::none();
            return d;
        },
        py::arg("pred"), py::arg("truth"));

    m.def(
        "evaluate",
        [](const fs::path& pred_dir, const fs::path& truth_dir, double iou_min, double window_s,
           std::size_t random_trials, std::uint64_t seed) {
            const auto& t = ColorTable::chirp_default();
            std::vector<fs::path> videos;
            for (const auto& e : fs::directory_iterator(truth_dir))
                if (e.is_directory()) videos.push_back(e.path().filename());
            std::sort(videos.begin(), videos.end());
            EvaluateOptions options{iou_min, window_s};
            std::vector<VideoCase> cases;
            std::vector<VideoEvaluation> evals;
            for (const auto& v : videos) {
                VideoCase c;
                c.manifest = load_manifest(truth_dir / v / "manifest.json", t);
                c.truth = {load_tracks_csv(truth_dir / v / "tracks.csv"), load_pecks_csv(truth_dir / v / "pecks.csv")};
                c.predicted = {load_tracks_csv(pred_dir / v / "tracks.csv"), load_pecks_csv(pred_dir / v / "pecks.csv")};
                evals.push_back(evaluate_video(c.predicted, c.truth, c.manifest, options));
                cases.push_back(std::move(c));
            }
            std::optional<BaselineReport> baseline;
            if (random_trials > 0) baseline = random_assignment_baseline(cases, random_trials, seed, options);
            return from_json_text(report_to_json(aggregate(evals), baseline));
        },
        py::arg("pred_dir"), py::arg("truth_dir"), py::arg("iou_min") = 0.5, py::arg("window_s") = 1.0,
        py::arg("random_trials") = 0, py::arg("seed") = 7);

    m.def(
        "synth",
        [](const fs::path& out, std::uint64_t seed, std::size_t n_birds, std::size_t n_clips, std::size_t n_videos,
           double noise_sigma, double drop_prob, long video_length, double id_corruption) {
            synth::SynthConfig cfg;
            cfg.seed = seed;
            cfg.n_birds = n_birds;
            cfg.n_clips = n_clips;
            cfg.n_videos = n_videos;
            cfg.noise_sigma = noise_sigma;
            cfg.drop_prob = drop_prob;
            cfg.video_length_frames = video_length;
            cfg.id_corruption = id_corruption;
            auto s = synth::write_dataset(cfg, out);
            py::dict d;
            d["birds"] = s.birds;
            d["territories"] = s.territories;
            d["training_crops"] = s.training_crops;
            d["clips"] = s.clips;
            d["videos"] = s.videos;
            return d;
        },
        py::arg("out"), py::arg("seed") = 7, py::arg("n_birds") = 60, py::arg("n_clips") = 50, py::arg("n_videos") = 12,
        py::arg("noise_sigma") = 0.0, py::arg("drop_prob") = 0.0, py::arg("video_length") = 3000,
        py::arg("id_corruption") = 0.0, "Write a seeded synthetic dataset; returns its summary.");
}
