#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "todsec/experiment.hpp"
#include "todsec/geo.hpp"

using namespace todsec;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("an empty config document means defaults everywhere") {
    const ExperimentConfig cfg = parse_experiment_config("{}", ".");
    CHECK(cfg.schema_version == 1);
    CHECK(cfg.seed == 0);
    CHECK(cfg.generator.count_left == 75);
    CHECK(cfg.generator.count_right == 78);
    CHECK(cfg.generator.count_uturn == 62);
    CHECK(cfg.models.size() == 7);
    CHECK(cfg.compare_full_sequence);
    CHECK(cfg.test_fraction == 0.2);
    CHECK(cfg.attack.n_attacked == 31);
    CHECK(cfg.attack.duration_s == 2.0);
    CHECK(cfg.attack.amplitude_deg == 90.0);
    CHECK(cfg.context.n_intersections == 12);
    CHECK_FALSE(cfg.full_train.has_value());
    CHECK_FALSE(cfg.route_file.has_value());
    CHECK_FALSE(cfg.emit_plots);
}

TEST_CASE("config fields land where they should") {
    const std::string doc = R"({
        "schema_version": 1,
        "seed": 99,
        "generator": {"count_left": 5, "count_right": 6, "count_uturn": 7, "trace_len_s": 25.0},
        "vehicle": {"n_motors": 2, "initial_speed_ms": 6.5},
        "models": ["tree", "lstm"],
        "train": {"max_epochs": 40, "learning_rate": 0.05},
        "full_train": {"max_epochs": 10},
        "window": {"padding_s": 1.5},
        "compare_full_sequence": false,
        "test_fraction": 0.25,
        "attack": {"n_attacked": 9, "duration_s": 1.0, "noise_kind": "uniform",
                   "amplitude_deg": 45.0},
        "context": {"n_intersections": 6, "flips": 2, "alerts": 1},
        "route_file": "routes/city.json",
        "emit_plots": true
    })";
    const ExperimentConfig cfg = parse_experiment_config(doc, "/srv/configs");
    CHECK(cfg.seed == 99);
    CHECK(cfg.generator.count_left == 5);
    CHECK(cfg.generator.trace_len_s == 25.0);
    CHECK(cfg.vehicle.drivetrain.n_motors == 2);
    CHECK(cfg.vehicle.initial_speed_ms == 6.5);
    REQUIRE(cfg.models.size() == 2);
    CHECK(cfg.models[0] == ml::ModelKind::Tree);
    CHECK(cfg.models[1] == ml::ModelKind::LSTM);
    CHECK(cfg.train.max_epochs == 40);
    CHECK(cfg.train.learning_rate == 0.05);
    REQUIRE(cfg.full_train.has_value());
    CHECK(cfg.full_train->max_epochs == 10);
    CHECK(cfg.full_train->learning_rate == 0.05);  // inherits the train block
    CHECK(cfg.window.padding_s == 1.5);
    CHECK_FALSE(cfg.compare_full_sequence);
    CHECK(cfg.test_fraction == 0.25);
    CHECK(cfg.attack.n_attacked == 9);
    CHECK(cfg.attack.noise_kind == NoiseKind::Uniform);
    CHECK(cfg.attack.amplitude_deg == 45.0);
    CHECK(cfg.context.flips == 2);
    REQUIRE(cfg.route_file.has_value());
    CHECK(*cfg.route_file == fs::path("/srv/configs/routes/city.json"));
    CHECK(cfg.emit_plots);
}

TEST_CASE("config parser rejects what it does not understand") {
    CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"sede": 1})", "."),
                         doctest::Contains("sede"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_experiment_config(R"({"generator": {"count_lift": 5}})", "."),
                         doctest::Contains("count_lift"), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"schema_version": 2})", "."),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"models": []})", "."), std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"models": ["cnn"]})", "."),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config(R"({"test_fraction": 0.0})", "."),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_experiment_config("{not json", "."), std::runtime_error);
}

TEST_CASE("route fixture is deterministic, spaced, and time-ordered") {
    const RoutePlan a = route_fixture(12, 5);
    const RoutePlan b = route_fixture(12, 5);
    const RoutePlan c = route_fixture(12, 6);
    REQUIRE(a.intersections.size() == 12);

    bool any_difference = false;
    for (std::size_t i = 0; i < 12; ++i) {
        CHECK(a.intersections[i].geo.lat == b.intersections[i].geo.lat);
        CHECK(a.intersections[i].eta_s == b.intersections[i].eta_s);
        any_difference |= a.intersections[i].geo.lat != c.intersections[i].geo.lat;
        if (i > 0) {
            CHECK(a.intersections[i].eta_s > a.intersections[i - 1].eta_s);
            CHECK(haversine_m(a.intersections[i].geo, a.intersections[i - 1].geo) > 500.0);
        }
    }
    CHECK(any_difference);

    // The fixture must survive the spacing invariant of the store builder.
    CHECK(build_expectation_store(a).entries.size() == 12);
}

TEST_CASE("drive log flips exactly k maneuvers and alerts a of them") {
    const ExpectationStore store = build_expectation_store(route_fixture(12, 1));

    SUBCASE("no flips, no mismatches") {
        const auto events = drive_log_with_flips(store, 0, 0, 3);
        REQUIRE(events.size() == 12);
        std::size_t flags = 0;
        for (const AnomalyVerdict& v : detect_incorrect_maneuver(events, store)) {
            flags += v.flagged ? 1 : 0;
        }
        CHECK(flags == 0);
    }

    SUBCASE("three flips, one shielded") {
        const auto events = drive_log_with_flips(store, 3, 1, 3);
        std::size_t alg1 = 0, alg3 = 0, suppressed = 0, alerts = 0;
        for (const AnomalyVerdict& v : detect_incorrect_maneuver(events, store)) {
            alg1 += v.flagged ? 1 : 0;
        }
        for (const AnomalyVerdict& v : detect_with_alert_filter(events, store)) {
            alg3 += v.flagged ? 1 : 0;
            suppressed += v.suppressed_by_alert ? 1 : 0;
        }
        for (const ObservedEvent& ev : events) alerts += ev.alert.has_value() ? 1 : 0;
        CHECK(alg1 == 3);
        CHECK(alg3 == 2);
        CHECK(suppressed == 1);
        CHECK(alerts == 1);
    }

    SUBCASE("same seed, same log; different seed, different flips") {
        const auto x = drive_log_with_flips(store, 3, 1, 3);
        const auto y = drive_log_with_flips(store, 3, 1, 3);
        const auto z = drive_log_with_flips(store, 3, 1, 4);
        bool same_xy = true, same_xz = true;
        for (std::size_t i = 0; i < x.size(); ++i) {
            same_xy &= x[i].maneuver == y[i].maneuver && x[i].alert.has_value() ==
                                                             y[i].alert.has_value();
            same_xz &= x[i].maneuver == z[i].maneuver;
        }
        CHECK(same_xy);
        CHECK_FALSE(same_xz);
    }

    SUBCASE("limits are enforced") {
        CHECK_THROWS_AS(drive_log_with_flips(store, 13, 0, 0), std::invalid_argument);
        CHECK_THROWS_AS(drive_log_with_flips(store, 2, 3, 0), std::invalid_argument);
    }
}

TEST_CASE("smoke experiment runs every stage and writes the report tree") {
    const ExperimentConfig cfg = smoke_experiment_config();
    const fs::path out = fresh_dir("todsec_exp_smoke");
    const ExperimentReport report = run_experiment(cfg, out);

    // Tree under both windowing modes.
    REQUIRE(report.clean.size() == 2);
    CHECK(report.clean[0].kind == ml::ModelKind::Tree);
    CHECK(report.clean[0].focused);
    CHECK_FALSE(report.clean[1].focused);
    for (const CleanEval& e : report.clean) {
        CHECK(e.cm.total() == 3);  // 4/4/4 at test_fraction 0.25 -> one per class
        CHECK(e.macro_f1 >= 0.0);
        CHECK(e.macro_f1 <= 1.0);
    }

    REQUIRE(report.detection.size() == 2);
    for (const DetectionRow& row : report.detection) {
        CHECK(row.kind == ml::ModelKind::Tree);
        CHECK(row.n_tested == 4);
        CHECK(row.n_detected <= row.n_tested);
    }
    CHECK(report.detection[0].placement == AttackPlacement::P1_TurnOnset);
    CHECK(report.detection[1].placement == AttackPlacement::P2_TurnMidpoint);

    CHECK(report.context.n_intersections == 12);
    CHECK(report.context.flips == 3);
    CHECK(report.context.alerts == 1);
    CHECK(report.context.alg1_flags == 3);
    CHECK(report.context.alg3_flags == 2);
    CHECK(report.context.suppressed == 1);

    // Files land where documented, and the returned bytes match the files.
    CHECK(slurp(out / "report.json") == report.report_json);
    CHECK(slurp(out / "report.txt") == report.report_text);
    CHECK(fs::exists(out / "attacks" / "p1_manifest.json"));
    CHECK(fs::exists(out / "attacks" / "p2_manifest.json"));
    CHECK(fs::exists(out / "detections" / "p1_tree.jsonl"));
    CHECK(fs::exists(out / "detections" / "p2_tree.jsonl"));
    CHECK(fs::exists(out / "context" / "verdicts.jsonl"));
    CHECK_FALSE(fs::exists(out / "plots"));

    // The JSON parses and carries the documented top-level shape.
    const nlohmann::json j = nlohmann::json::parse(report.report_json);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("assumptions").at("per_class_accuracy").get<std::string>().find("one-vs-rest") !=
          std::string::npos);
    CHECK(j.at("dataset").at("n_traces") == 12);
    CHECK(j.at("clean").contains("focused"));
    CHECK(j.at("clean").contains("full"));
    CHECK(j.at("clean").at("focused").at("tree").at("confusion").size() == 3);
    CHECK(j.at("detection").at("p1").at("tree").at("n_tested") == 4);
    CHECK(j.at("context").at("alg1_flags") == 3);

    // Text report carries the tables.
    CHECK(report.report_text.find("focused window, tree") != std::string::npos);
    CHECK(report.report_text.find("full-sequence window, tree") != std::string::npos);
    CHECK(report.report_text.find("macro-F1") != std::string::npos);
    CHECK(report.report_text.find("p1") != std::string::npos);
    CHECK(report.report_text.find("one-vs-rest") != std::string::npos);

    fs::remove_all(out);
}

TEST_CASE("the same seed reproduces the report byte for byte") {
    ExperimentConfig cfg = smoke_experiment_config();
    cfg.seed = 31337;
    const fs::path out_a = fresh_dir("todsec_exp_det_a");
    const fs::path out_b = fresh_dir("todsec_exp_det_b");
    const ExperimentReport a = run_experiment(cfg, out_a);
    const ExperimentReport b = run_experiment(cfg, out_b);
    CHECK(a.report_json == b.report_json);
    CHECK(a.report_text == b.report_text);
    CHECK(slurp(out_a / "report.json") == slurp(out_b / "report.json"));
    CHECK(slurp(out_a / "detections" / "p1_tree.jsonl") ==
          slurp(out_b / "detections" / "p1_tree.jsonl"));

    cfg.seed = 31338;
    const fs::path out_c = fresh_dir("todsec_exp_det_c");
    CHECK(run_experiment(cfg, out_c).report_json != a.report_json);

    fs::remove_all(out_a);
    fs::remove_all(out_b);
    fs::remove_all(out_c);
}

TEST_CASE("stage failures name the stage") {
    const fs::path out = fresh_dir("todsec_exp_abort");

    ExperimentConfig bad_gen = smoke_experiment_config();
    bad_gen.generator.count_left = 0;
    CHECK_THROWS_WITH_AS(run_experiment(bad_gen, out), doctest::Contains("generate stage failed"),
                         std::runtime_error);

    ExperimentConfig bad_vehicle = smoke_experiment_config();
    bad_vehicle.vehicle.substep_s = 0.0;
    CHECK_THROWS_WITH_AS(run_experiment(bad_vehicle, out),
                         doctest::Contains("simulate stage failed"), std::runtime_error);

    ExperimentConfig bad_attack = smoke_experiment_config();
    bad_attack.attack.n_attacked = 1000;  // more than the dataset holds
    CHECK_THROWS_WITH_AS(run_experiment(bad_attack, out),
                         doctest::Contains("inject stage failed"), std::runtime_error);

    ExperimentConfig bad_context = smoke_experiment_config();
    bad_context.context.flips = 99;
    CHECK_THROWS_WITH_AS(run_experiment(bad_context, out),
                         doctest::Contains("context stage failed"), std::runtime_error);

    fs::remove_all(out);
}

TEST_CASE("plots are emitted on demand") {
    ExperimentConfig cfg = smoke_experiment_config();
    cfg.emit_plots = true;
    const fs::path out = fresh_dir("todsec_exp_plots");
    run_experiment(cfg, out);
    const std::string map = slurp(out / "plots" / "route_map.svg");
    const std::string overlay = slurp(out / "plots" / "swa_overlay.svg");
    CHECK(map.rfind("<svg", 0) == 0);
    CHECK(overlay.rfind("<svg", 0) == 0);
    CHECK(overlay.find("polyline") != std::string::npos);
    fs::remove_all(out);
}
